#pragma once

#include <optional>
#include <vector>

#include "metagfn/gfn.hpp"
#include "metagfn/metadynamics.hpp"
#include "metagfn/replay_buffer.hpp"
#include "metagfn/rng.hpp"

namespace metagfn {

enum class StrategyKind { OnPolicy, Noisy, Thompson, MetaGfn };

// What happens when a stored terminal is drawn again: regenerate the
// trajectory with the current backward policy, or replay the trajectory
// recorded when the entry was first stored.
enum class ReplayVariant { AlwaysBackwardSample, ReuseInitial };

// Which branch produced a training batch (logged next to the metrics).
enum class BatchSource { OnPolicy, Exploration, Replay, Metadynamics };

const char* batch_source_name(BatchSource s);
const char* strategy_name(StrategyKind k);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::OnPolicy;
  double sigma0 = 2.0;        // Noisy: initial additive policy noise
  int n_heads = 10;           // Thompson: ensemble size
  double include_prob = 0.3;  // Thompson: per-head inclusion probability
  int freq_md = 10;           // MetaGfn: metadynamics episode cadence
  int freq_rb = 2;            // replay episode cadence (all but OnPolicy)
  ReplayVariant variant = ReplayVariant::AlwaysBackwardSample;
  // when set, MetaGfn backward-samples under scheduled policy noise with
  // this initial value (the "with noise" variant)
  std::optional<double> backward_noise_sigma0;

  // forward policy heads the model must be built with
  int n_pf_heads() const {
    return kind == StrategyKind::Thompson ? n_heads : 1;
  }
};

// Uniform head assignment followed by rollouts, one head per trajectory;
// the generating head is recorded on each trajectory.
std::vector<Trajectory> thompson_generate(const GfnModel& model, int b,
                                          Rng& rng);

// Stateful trajectory source for training. Owns the replay buffer and, for
// the MetaGfn strategy, the metadynamics walker batch with its bias grids;
// batch() mutates both according to the branch an episode lands on.
struct Explorer {
  StrategyConfig cfg;
  ReplayBuffer buffer;
  MetadParams metad;          // MetaGfn branch parameters
  std::optional<AmState> am;  // MetaGfn walkers + shared potential grids
  long replay_fallbacks = 0;  // replay episodes served by the base branch

  static Explorer make(const StrategyConfig& cfg, const Environment& env,
                       int n_walkers, const Rng& rng,
                       const std::optional<MetadParams>& metad_override =
                           std::nullopt);

  // Training batch for 1-based episode `episode` of a `total_episodes` run.
  // Branches: MetaGfn episodes divisible by freq_md advance the walkers one
  // deposit cycle and backward-sample their positions; episodes divisible by
  // freq_rb draw from the replay buffer (an empty buffer falls back to the
  // base branch and counts in replay_fallbacks); everything else is the
  // strategy's own exploration batch. Exploration batches (and metadynamics
  // terminals) are pushed to the buffer, replayed batches are not re-pushed.
  std::vector<Trajectory> batch(const GfnModel& model, long episode,
                                long total_episodes, int b, Rng& rng,
                                BatchSource* source = nullptr);
};

}  // namespace metagfn
