#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "metagfn/evaluation.hpp"
#include "metagfn/exploration.hpp"
#include "metagfn/gfn.hpp"
#include "metagfn/nn.hpp"

namespace metagfn {

struct TrainConfig {
  std::string env_name = "line";
  std::string torus_potential_file;  // synthetic surface when empty
  LossSpec loss;
  StrategyConfig strategy;
  int batch_size = 64;
  long total_batches = 100000;
  double lr0 = 1e-3;       // network group, linear decay to zero
  double logz_lr0 = 0.1;   // log Z group, same schedule
  double clip_norm = 10.0;
  long eval_every = 250;
  int eval_samples = 10000;
  long checkpoint_every = 10000;

  Environment make_env() const;
  void validate() const;
};

// one metric row, written every eval_every episodes
struct EvalPoint {
  long episode = 0;
  double loss_mean = 0.0;  // batch loss sum / batch size at that episode
  double l1_error = 0.0;   // on-policy histogram vs the target
  double wall_ms = 0.0;    // training time since the previous row
  BatchSource branch = BatchSource::OnPolicy;
};

struct TrainResult {
  std::vector<EvalPoint> series;
  GfnModel model;              // final parameters
  long replay_fallbacks = 0;
  bool finite = true;          // false = aborted on a non-finite loss
  std::string abort_reason;
};

// The training loop: per episode, draw a batch from the strategy, take one
// Adam step on the summed loss under the linear learning-rate schedule, and
// log metrics on the eval cadence. All randomness splits off `root` by
// (purpose, episode), so the metric series is a pure function of
// (config, seed). A non-empty out_dir receives checkpoints (every
// checkpoint_every episodes, plus checkpoint_final.txt always) and, on a
// non-finite loss, a diagnostic dump of the offending batch before the
// early return.
TrainResult train(const TrainConfig& cfg, const Rng& root,
                  const std::string& out_dir = "");

// header + one row per eval point; doubles at full precision except the
// wall-clock column
void write_metrics_csv(const std::vector<EvalPoint>& series, std::ostream& os);

// optimizer over every network tensor at lr0 plus log Z at logz_lr0
Adam make_optimizer(GfnModel& model, const TrainConfig& cfg);

// terminal-state draws from the current policy plus their histogram error
// against the environment target
double on_policy_l1(const GfnModel& model, int n_samples, Rng& rng);

// Versioned text checkpoint: episode, rng stream, network, log Z, optimizer
// moments; a save/load cycle is bit-exact. The loader fills caller-owned
// objects (the optimizer binds to the caller's model, so the model must
// stay where it is) and returns the stored episode.
void save_checkpoint(std::ostream& os, const GfnModel& model, const Adam& opt,
                     const Rng& rng, long episode);
long load_checkpoint(std::istream& is, const TrainConfig& cfg,
                     GfnModel& model, Adam& opt, Rng& rng);

}  // namespace metagfn
