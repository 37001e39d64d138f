#include "metagfn/exploration.hpp"

#include <stdexcept>
#include <utility>

#include "metagfn/policy.hpp"

namespace metagfn {

const char* batch_source_name(BatchSource s) {
  switch (s) {
    case BatchSource::OnPolicy: return "on_policy";
    case BatchSource::Exploration: return "exploration";
    case BatchSource::Replay: return "replay";
    case BatchSource::Metadynamics: return "metadynamics";
  }
  return "?";
}

const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::OnPolicy: return "on_policy";
    case StrategyKind::Noisy: return "noisy";
    case StrategyKind::Thompson: return "thompson";
    case StrategyKind::MetaGfn: return "metagfn";
  }
  return "?";
}

std::vector<Trajectory> thompson_generate(const GfnModel& model, int b,
                                          Rng& rng) {
  const int k = model.net.n_pf_heads;
  std::vector<int> heads(b);
  for (int& h : heads) h = rng.uniform_int(k);
  return rollout_batch(model, b, rng, 0.0, &heads);
}

namespace {

double scheduled_backward_noise(const StrategyConfig& cfg, long episode,
                                long total_episodes) {
  if (!cfg.backward_noise_sigma0) return 0.0;
  return noise_schedule(static_cast<double>(episode),
                        static_cast<double>(total_episodes),
                        *cfg.backward_noise_sigma0);
}

void push_with_trajectories(ReplayBuffer& buffer,
                            const std::vector<Trajectory>& trajs) {
  for (const Trajectory& t : trajs)
    buffer.push({t.states.back(), t.reward, t});
}

}  // namespace

Explorer Explorer::make(const StrategyConfig& cfg, const Environment& env,
                        int n_walkers, const Rng& rng,
                        const std::optional<MetadParams>& metad_override) {
  if (cfg.kind == StrategyKind::Thompson) {
    if (cfg.n_heads < 1)
      throw std::invalid_argument("Explorer: Thompson needs n_heads >= 1");
    if (!(cfg.include_prob > 0.0 && cfg.include_prob <= 1.0))
      throw std::invalid_argument("Explorer: include_prob must be in (0, 1]");
  }
  if (cfg.kind == StrategyKind::Noisy && cfg.sigma0 < 0.0)
    throw std::invalid_argument("Explorer: sigma0 must be non-negative");
  if (cfg.freq_md < 1 || cfg.freq_rb < 1)
    throw std::invalid_argument("Explorer: episode cadences must be >= 1");

  Explorer ex{cfg, ReplayBuffer(env.buffer_threshold), MetadParams{},
              std::nullopt, 0};
  if (cfg.kind == StrategyKind::MetaGfn) {
    ex.metad = metad_override ? *metad_override
                              : MetadParams::defaults_for(env.kind);
    ex.am = am_init(env, ex.metad, n_walkers, rng);
  }
  return ex;
}

std::vector<Trajectory> Explorer::batch(const GfnModel& model, long episode,
                                        long total_episodes, int b, Rng& rng,
                                        BatchSource* source) {
  BatchSource where = BatchSource::OnPolicy;
  std::vector<Trajectory> trajs;

  const bool metad_episode =
      cfg.kind == StrategyKind::MetaGfn && episode % cfg.freq_md == 0;
  const bool replay_episode = cfg.kind != StrategyKind::OnPolicy &&
                              !metad_episode && episode % cfg.freq_rb == 0;

  if (metad_episode) {
    // one deposit cycle of the walker batch, then trajectories into each
    // walker position under the current backward policy
    for (int s = 0; s < metad.stride; ++s) am_step(*am, model.env, metad);
    const std::vector<Eigen::VectorXd> terminals = walker_positions(*am);
    trajs = backward_sample_batch(
        model, terminals, rng,
        scheduled_backward_noise(cfg, episode, total_episodes));
    const bool keep = cfg.variant == ReplayVariant::ReuseInitial;
    for (std::size_t i = 0; i < terminals.size(); ++i) {
      ReplayEntry e;
      e.terminal = terminals[i];
      e.reward = model.env.reward(terminals[i]);
      if (keep) e.trajectory = trajs[i];
      buffer.push(std::move(e));
    }
    where = BatchSource::Metadynamics;
  } else if (replay_episode && !buffer.empty()) {
    const std::vector<int> picks = buffer.sample_biased(b, rng);
    const bool regenerate = cfg.kind == StrategyKind::MetaGfn &&
                            cfg.variant == ReplayVariant::AlwaysBackwardSample;
    if (regenerate) {
      std::vector<Eigen::VectorXd> terminals;
      terminals.reserve(picks.size());
      for (int i : picks) terminals.push_back(buffer.entry(i).terminal);
      trajs = backward_sample_batch(
          model, terminals, rng,
          scheduled_backward_noise(cfg, episode, total_episodes));
    } else {
      trajs.reserve(picks.size());
      for (int i : picks) trajs.push_back(buffer.entry(i).trajectory);
    }
    where = BatchSource::Replay;
  } else {
    if (replay_episode) ++replay_fallbacks;
    switch (cfg.kind) {
      case StrategyKind::Noisy: {
        const double sigma_bar =
            noise_schedule(static_cast<double>(episode),
                           static_cast<double>(total_episodes), cfg.sigma0);
        trajs = rollout_batch(model, b, rng, sigma_bar);
        push_with_trajectories(buffer, trajs);
        where = BatchSource::Exploration;
        break;
      }
      case StrategyKind::Thompson:
        trajs = thompson_generate(model, b, rng);
        push_with_trajectories(buffer, trajs);
        where = BatchSource::Exploration;
        break;
      case StrategyKind::OnPolicy:
      case StrategyKind::MetaGfn:
        trajs = rollout_batch(model, b, rng);
        where = BatchSource::OnPolicy;
        break;
    }
  }

  if (source) *source = where;
  return trajs;
}

}  // namespace metagfn
