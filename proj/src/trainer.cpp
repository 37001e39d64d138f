#include "metagfn/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace metagfn {

namespace {

// best-effort diagnostics: every value of the batch that produced a
// non-finite loss, at full precision
void dump_bad_batch(const std::string& path, const std::string& reason,
                    const GfnModel& model,
                    const std::vector<Trajectory>& batch, double loss_total) {
  std::ofstream os(path);
  if (!os) return;
  os << std::setprecision(17);
  os << reason << '\n';
  os << "loss_total " << loss_total << '\n';
  os << "log_z " << model.log_z(0, 0) << '\n';
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Trajectory& t = batch[i];
    os << "trajectory " << i << " reward " << t.reward << " log_r " << t.log_r
       << " sigma_bar " << t.sigma_bar << " head " << t.head << '\n';
    for (std::size_t s = 0; s < t.states.size(); ++s)
      os << "  state " << s << ' ' << t.states[s].transpose() << '\n';
    os << "  log_pf " << t.log_pf.transpose() << '\n';
    os << "  log_pb " << t.log_pb.transpose() << '\n';
  }
}

std::string checkpoint_path(const std::string& out_dir, long episode) {
  char name[64];
  std::snprintf(name, sizeof(name), "checkpoint_%08ld.txt", episode);
  return out_dir + "/" + name;
}

void write_checkpoint_file(const std::string& path, const GfnModel& model,
                           const Adam& opt, const Rng& rng, long episode) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("trainer: cannot write " + path);
  save_checkpoint(os, model, opt, rng, episode);
  if (!os) throw std::runtime_error("trainer: write failed for " + path);
}

}  // namespace

Environment TrainConfig::make_env() const {
  return Environment::by_name(env_name, torus_potential_file);
}

void TrainConfig::validate() const {
  if (batch_size < 1)
    throw std::invalid_argument("trainer: batch_size must be >= 1");
  if (total_batches < 0)
    throw std::invalid_argument("trainer: total_batches must be >= 0");
  if (!(lr0 > 0.0) || !(logz_lr0 > 0.0))
    throw std::invalid_argument("trainer: learning rates must be positive");
  if (!(clip_norm > 0.0))
    throw std::invalid_argument("trainer: clip_norm must be positive");
  if (eval_every < 1)
    throw std::invalid_argument("trainer: eval_every must be >= 1");
  if (eval_samples < 1)
    throw std::invalid_argument("trainer: eval_samples must be >= 1");
  if (checkpoint_every < 1)
    throw std::invalid_argument("trainer: checkpoint_every must be >= 1");
}

Adam make_optimizer(GfnModel& model, const TrainConfig& cfg) {
  std::vector<Adam::Ref> refs;
  for (Mat* t : model.net.tensors()) refs.push_back({t, cfg.lr0});
  refs.push_back({&model.log_z, cfg.logz_lr0});
  AdamHyper hyper;
  hyper.clip_norm = cfg.clip_norm;
  return Adam(std::move(refs), hyper);
}

double on_policy_l1(const GfnModel& model, int n_samples, Rng& rng) {
  const std::vector<Trajectory> rollouts = rollout_batch(model, n_samples, rng);
  std::vector<Eigen::VectorXd> terminals;
  terminals.reserve(rollouts.size());
  for (const Trajectory& t : rollouts) terminals.push_back(t.states.back());
  return l1_error(empirical_histogram(terminals, model.env),
                  target_histogram(model.env));
}

TrainResult train(const TrainConfig& cfg, const Rng& root,
                  const std::string& out_dir) {
  cfg.validate();
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  const Environment env = cfg.make_env();

  TrainResult res;
  {
    Rng init_rng = root.child("model_init");
    res.model = GfnModel::make(env, cfg.strategy.n_pf_heads(), init_rng);
  }
  GfnModel& model = res.model;
  Adam opt = make_optimizer(model, cfg);
  Explorer explorer =
      Explorer::make(cfg.strategy, env, cfg.batch_size, root.child("explorer"));

  using clock = std::chrono::steady_clock;
  auto window_start = clock::now();

  for (long j = 1; j <= cfg.total_batches; ++j) {
    const auto ep = static_cast<std::uint64_t>(j);
    Rng episode_rng = root.child("episode", ep);
    BatchSource source = BatchSource::OnPolicy;
    const std::vector<Trajectory> batch = explorer.batch(
        model, j, cfg.total_batches, cfg.batch_size, episode_rng, &source);

    LossOutput out;
    if (cfg.strategy.kind == StrategyKind::Thompson) {
      Rng loss_rng = root.child("thompson", ep);
      out = thompson_loss(model, batch, cfg.loss, cfg.strategy.include_prob,
                          loss_rng, true);
    } else {
      Rng loss_rng = root.child("dropout", ep);
      out = gfn_loss(model, batch, cfg.loss, &loss_rng, 0);
    }

    const bool stepped =
        out.finite && opt.step(out.grads, lr_schedule(j, cfg.total_batches));
    if (!out.finite || !stepped) {
      std::ostringstream why;
      why << (out.finite ? "non-finite gradient" : "non-finite loss")
          << " at episode " << j << " (" << batch_source_name(source)
          << " batch)";
      res.finite = false;
      res.abort_reason = why.str();
      res.replay_fallbacks = explorer.replay_fallbacks;
      if (!out_dir.empty())
        dump_bad_batch(out_dir + "/nonfinite_dump.txt", res.abort_reason,
                       model, batch, out.total);
      return res;
    }

    if (j % cfg.eval_every == 0) {
      const auto train_end = clock::now();
      Rng eval_rng = root.child("eval", ep);
      EvalPoint point;
      point.episode = j;
      point.loss_mean = out.total / cfg.batch_size;
      point.l1_error = on_policy_l1(model, cfg.eval_samples, eval_rng);
      point.wall_ms =
          std::chrono::duration<double, std::milli>(train_end - window_start)
              .count();
      point.branch = source;
      res.series.push_back(point);
      window_start = clock::now();  // evaluation time stays out of the windows
    }

    if (!out_dir.empty() && j % cfg.checkpoint_every == 0)
      write_checkpoint_file(checkpoint_path(out_dir, j), model, opt, root, j);
  }

  if (!out_dir.empty())
    write_checkpoint_file(out_dir + "/checkpoint_final.txt", model, opt, root,
                          cfg.total_batches);
  res.replay_fallbacks = explorer.replay_fallbacks;
  return res;
}

void write_metrics_csv(const std::vector<EvalPoint>& series,
                       std::ostream& os) {
  os << "episode,loss_mean,l1_error,wall_ms,strategy_branch\n";
  for (const EvalPoint& p : series) {
    os << p.episode << ',' << std::setprecision(17) << p.loss_mean << ','
       << p.l1_error << ',' << std::fixed << std::setprecision(3) << p.wall_ms
       << std::defaultfloat << ',' << batch_source_name(p.branch) << '\n';
  }
}

void save_checkpoint(std::ostream& os, const GfnModel& model, const Adam& opt,
                     const Rng& rng, long episode) {
  os << "metagfn-checkpoint v1\n";
  os << "env " << model.env.name << '\n';
  os << "episode " << episode << '\n';
  os << "rng ";
  rng.save(os);
  os << '\n';
  save_mlp(os, model.net);
  save_tensor(os, "log_z", model.log_z);
  opt.save(os);
}

long load_checkpoint(std::istream& is, const TrainConfig& cfg,
                     GfnModel& model, Adam& opt, Rng& rng) {
  std::string magic, version;
  is >> magic >> version;
  if (!is || magic != "metagfn-checkpoint" || version != "v1")
    throw std::runtime_error("checkpoint: unrecognized header");

  std::string key, env_name;
  is >> key >> env_name;
  if (!is || key != "env")
    throw std::runtime_error("checkpoint: expected env line");
  if (env_name != cfg.env_name)
    throw std::runtime_error("checkpoint: environment mismatch (stored " +
                             env_name + ", configured " + cfg.env_name + ")");

  long episode = 0;
  is >> key >> episode;
  if (!is || key != "episode")
    throw std::runtime_error("checkpoint: expected episode line");

  is >> key;
  if (!is || key != "rng")
    throw std::runtime_error("checkpoint: expected rng line");
  rng.load(is);

  model.env = cfg.make_env();
  model.net = load_mlp(is);
  model.log_z = load_tensor(is, "log_z");
  opt = make_optimizer(model, cfg);
  opt.load(is);
  return episode;
}

}  // namespace metagfn
