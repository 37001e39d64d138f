// metagfn: campaign runner for continuous GFlowNets with
// adapted-metadynamics exploration.
//
//   metagfn run <config>                train, one directory per repeat
//   metagfn sample-am <config>          adapted metadynamics alone
//   metagfn eval <checkpoint> <config>  histogram + L1 + mode coverage
//
// --seed/--out/--repeats/--batches override the config file. Repeat i of a
// campaign draws all of its randomness from Rng(seed).child("repeat", i).
//
// Exit codes: 2 config parse error, 3 invalid name or value, 4 non-finite
// loss abort, 5 IO failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "metagfn/config.hpp"
#include "metagfn/metadynamics.hpp"
#include "metagfn/trainer.hpp"

namespace {

using namespace metagfn;
namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

fs::path repeat_dir(const RunConfig& cfg, int repeat) {
  char name[32];
  std::snprintf(name, sizeof(name), "repeat_%03d", repeat);
  return fs::path(cfg.out_dir) / name;
}

void echo_config(const RunConfig& cfg) {
  std::ofstream os = open_out(fs::path(cfg.out_dir) / "config.txt");
  write_run_config(os, cfg);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// standard error of the mean (ddof 1); zero for a single repeat
double stderr_of(const std::vector<double>& v) {
  const auto n = static_cast<double>(v.size());
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (n - 1.0) / n);
}

void write_summary_csv(const RunConfig& cfg,
                       const std::vector<std::vector<EvalPoint>>& runs) {
  if (runs.empty() || runs.front().empty()) return;
  std::ofstream os = open_out(fs::path(cfg.out_dir) / "summary.csv");
  os << "episode,l1_mean,l1_stderr,loss_mean,loss_stderr\n"
     << std::setprecision(17);
  const std::size_t rows = runs.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> l1, loss;
    for (const auto& series : runs) {
      l1.push_back(series[r].l1_error);
      loss.push_back(series[r].loss_mean);
    }
    os << runs.front()[r].episode << ',' << mean_of(l1) << ','
       << stderr_of(l1) << ',' << mean_of(loss) << ',' << stderr_of(loss)
       << '\n';
  }
}

int do_train(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  echo_config(cfg);
  std::cout << "train: " << cfg.train.env_name << ", "
            << strategy_name(cfg.train.strategy.kind) << " strategy, "
            << cfg.train.total_batches << " batches x " << cfg.repeats
            << " repeat(s), seed " << cfg.seed << '\n';

  std::vector<std::vector<EvalPoint>> runs;
  for (int i = 0; i < cfg.repeats; ++i) {
    const fs::path dir = repeat_dir(cfg, i);
    const Rng root = Rng(cfg.seed).child("repeat", i);
    const TrainResult res = train(cfg.train, root, dir.string());

    std::ofstream metrics = open_out(dir / "metrics.csv");
    write_metrics_csv(res.series, metrics);

    if (!res.finite) {
      std::cerr << "error: repeat " << i << ": " << res.abort_reason
                << " (diagnostics in " << (dir / "nonfinite_dump.txt").string()
                << ")\n";
      return 4;
    }
    std::cout << "repeat " << i << ": ";
    if (res.series.empty())
      std::cout << "no eval rows";
    else
      std::cout << "final l1 " << res.series.back().l1_error;
    std::cout << ", replay fallbacks " << res.replay_fallbacks << '\n';
    runs.push_back(res.series);
  }
  write_summary_csv(cfg, runs);
  std::cout << "artifacts in " << cfg.out_dir << '\n';
  return 0;
}

int do_sample_am(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  echo_config(cfg);
  const Environment env = cfg.train.make_env();
  const MetadParams prm =
      cfg.metad ? *cfg.metad : MetadParams::defaults_for(env.kind);
  std::cout << "sample-am: " << env.name << ", " << cfg.am_iterations
            << " iterations x " << cfg.repeats << " repeat(s), "
            << cfg.train.batch_size << " walkers, seed " << cfg.seed << '\n';

  for (int i = 0; i < cfg.repeats; ++i) {
    const fs::path dir = repeat_dir(cfg, i);
    fs::create_directories(dir);
    const Rng root = Rng(cfg.seed).child("repeat", i);
    AmState st = am_init(env, prm, cfg.train.batch_size, root.child("am"));

    const Eigen::ArrayXd target = node_target_density(env, st.grids.layout);
    std::ofstream series = open_out(dir / "am_l1.csv");
    series << "step,l1_error\n" << std::setprecision(17);
    double l1 = density_l1(implied_density(st.grids), target, st.grids.layout);
    for (long step = 1; step <= cfg.am_iterations; ++step) {
      am_step(st, env, prm);
      if (step % cfg.train.eval_every == 0 || step == cfg.am_iterations) {
        l1 = density_l1(implied_density(st.grids), target, st.grids.layout);
        series << step << ',' << l1 << '\n';
      }
    }

    std::ofstream grids = open_out(dir / "grids_final.txt");
    dump_grids(st.grids, grids);
    std::cout << "repeat " << i << ": final l1 " << l1 << '\n';
  }
  std::cout << "artifacts in " << cfg.out_dir << '\n';
  return 0;
}

int do_eval(const RunConfig& cfg, const std::string& checkpoint_path) {
  std::ifstream in(checkpoint_path);
  if (!in) throw std::runtime_error("cannot read " + checkpoint_path);
  GfnModel model;
  Adam opt;
  Rng stored_rng(0);
  const long episode = load_checkpoint(in, cfg.train, model, opt, stored_rng);

  Rng eval_rng = Rng(cfg.seed).child("eval");
  const std::vector<Trajectory> rollouts =
      rollout_batch(model, cfg.train.eval_samples, eval_rng);
  std::vector<Eigen::VectorXd> terminals;
  terminals.reserve(rollouts.size());
  for (const Trajectory& t : rollouts) terminals.push_back(t.states.back());

  const DensityGrid hist = empirical_histogram(terminals, model.env);
  const double l1 = l1_error(hist, target_histogram(model.env));
  const std::vector<bool> covered =
      mode_coverage(hist, model.env.mode_centers, model.env.basin_radius);

  std::ostringstream report;
  report << "checkpoint " << checkpoint_path << " (episode " << episode
         << ")\n";
  report << "samples " << cfg.train.eval_samples << "\n";
  report << "l1_error " << std::setprecision(17) << l1 << "\n";
  int n_covered = 0;
  for (std::size_t k = 0; k < covered.size(); ++k) {
    report << "mode " << k << " at (";
    const Eigen::VectorXd& c = model.env.mode_centers[k];
    for (int d = 0; d < c.size(); ++d)
      report << (d ? ", " : "") << std::setprecision(6) << c[d];
    report << "): " << (covered[k] ? "covered" : "missed") << "\n";
    n_covered += covered[k] ? 1 : 0;
  }
  report << "coverage " << n_covered << "/" << covered.size() << "\n";

  fs::create_directories(cfg.out_dir);
  std::ofstream grid_os = open_out(fs::path(cfg.out_dir) / "histogram.txt");
  dump_grid_file(density_to_dump(hist), grid_os);
  std::ofstream report_os = open_out(fs::path(cfg.out_dir) / "report.txt");
  report_os << report.str();
  std::cout << report.str();
  return 0;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return parse_run_config(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "continuous GFlowNets trained with adapted-metadynamics exploration"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> repeats;
  std::optional<long> batches;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "campaign seed override");
    cmd->add_option("--out", out, "output directory override");
    cmd->add_option("--repeats", repeats, "repeat count override");
    cmd->add_option("--batches", batches, "total batch count override");
  };

  CLI::App* run_cmd =
      app.add_subcommand("run", "train a campaign from a config file");
  run_cmd->add_option("config", config_path, "config file")->required();
  add_common(run_cmd);

  CLI::App* am_cmd = app.add_subcommand(
      "sample-am", "run adapted metadynamics without training");
  am_cmd->add_option("config", config_path, "config file")->required();
  add_common(am_cmd);

  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "evaluate a checkpoint: histogram, L1, mode coverage");
  eval_cmd->add_option("checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("config", config_path, "config file")->required();
  add_common(eval_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out) cfg.out_dir = *out;
    if (repeats) cfg.repeats = *repeats;
    if (batches) cfg.train.total_batches = *batches;
    if (run_cmd->parsed()) cfg.mode = RunMode::Train;
    if (am_cmd->parsed()) cfg.mode = RunMode::SampleAm;
    if (eval_cmd->parsed()) cfg.mode = RunMode::Eval;
    cfg.validate();

    if (cfg.mode == RunMode::Train) return do_train(cfg);
    if (cfg.mode == RunMode::SampleAm) return do_sample_am(cfg);
    return do_eval(cfg, checkpoint_path);
  } catch (const ConfigParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  }
}
