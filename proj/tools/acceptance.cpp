// Acceptance gate: ten numbered criteria, one [PASS]/[FAIL] line each.
// Every check recomputes its reference independently (finite differences,
// analytic constructions, discrete-chain covariance, quadrature targets).
//
//   metagfn_acceptance            run everything
//   metagfn_acceptance --only 6,9 run a subset
//
// Exit code: the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "metagfn/config.hpp"
#include "metagfn/metadynamics.hpp"
#include "metagfn/trainer.hpp"

namespace {

using namespace metagfn;
using clock_type = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

// terminal histogram of n on-policy draws from a trained model
DensityGrid sampled_histogram(const GfnModel& model, int n, Rng& rng) {
  const std::vector<Trajectory> rollouts = rollout_batch(model, n, rng);
  std::vector<Eigen::VectorXd> terminals;
  terminals.reserve(rollouts.size());
  for (const Trajectory& t : rollouts) terminals.push_back(t.states.back());
  return empirical_histogram(terminals, model.env);
}

// summed histogram mass of the 1-d cells whose node lies in [lo, hi]
double window_mass(const DensityGrid& g, double lo, double hi) {
  double m = 0.0;
  for (int i = 0; i < g.layout.size(); ++i) {
    const double x = g.layout.node(0, i);
    if (x >= lo && x <= hi) m += g.mass[i];
  }
  return m;
}

// ---------------------------------------------------------------------------
// 1. reverse-mode gradients vs central finite differences

Outcome c1_gradients(std::ostream&) {
  const auto t0 = clock_type::now();
  struct Probe {
    int tensor, i, j;  // tensor == -1 means log Z
  };
  // bias/weight entries spread over torso, policy heads, flow head, log Z
  const std::vector<Probe> probes = {
      {7, 0, 2}, {9, 0, 2}, {4, 30, 6}, {11, 0, 0}, {-1, 0, 0}};
  const std::vector<LossKind> kinds = {LossKind::TB, LossKind::DB,
                                       LossKind::SubTB};

  double worst = 0.0;
  int cases = 0;
  for (const bool torus : {false, true}) {
    Environment env = torus ? Environment::torus() : Environment::line();
    env.torso_width = 32;  // reparameterization checks do not need capacity
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      Rng rng(1000 * (torus ? 2 : 1) + seed);
      GfnModel m = GfnModel::make(env, 1, rng);
      m.log_z(0, 0) = 0.2;
      const auto batch = rollout_batch(m, 2, rng, torus ? 0.0 : 0.4);

      for (const LossKind kind : kinds) {
        const LossSpec spec{kind, 0.9};
        const LossOutput out = gfn_loss(m, batch, spec, nullptr);
        if (!out.finite) return {false, "non-finite loss in gradient suite"};
        ++cases;

        const double eps = 1e-5;
        for (const Probe& pr : probes) {
          Mat* tensor = pr.tensor < 0 ? &m.log_z : m.net.tensors()[pr.tensor];
          const int gi = pr.tensor < 0
                             ? static_cast<int>(out.grads.size()) - 1
                             : pr.tensor;
          const double saved = (*tensor)(pr.i, pr.j);
          (*tensor)(pr.i, pr.j) = saved + eps;
          const double up = gfn_loss(m, batch, spec, nullptr).total;
          (*tensor)(pr.i, pr.j) = saved - eps;
          const double dn = gfn_loss(m, batch, spec, nullptr).total;
          (*tensor)(pr.i, pr.j) = saved;
          const double num = (up - dn) / (2.0 * eps);
          const double got = out.grads[gi](pr.i, pr.j);
          worst = std::max(worst,
                           std::abs(got - num) / std::max(1.0, std::abs(num)));
        }
      }
    }
  }
  const double dt = seconds_since(t0);
  std::ostringstream os;
  os << cases << " loss evaluations over both policy parameterizations, "
     << "max relative error " << fmt(worst, 3) << " (" << fmt(dt, 3) << " s)";
  return {worst < 1e-4 && dt < 60.0, os.str()};
}

// ---------------------------------------------------------------------------
// 2. loss zero points and subtrajectory-balance lambda limits

// flow-head evaluation at one state, plain path
double flow_at(const GfnModel& model, const Eigen::VectorXd& x, int t) {
  const Mat h =
      torso_forward(model.net, model.env.encode(x, t).transpose(), nullptr);
  return flow_forward(model.net, h)(0, 0);
}

Eigen::Vector3d step_residuals(const GfnModel& model, const Trajectory& traj) {
  Eigen::Vector4d f;
  for (int t = 0; t < 3; ++t) f[t] = flow_at(model, traj.states[t], t);
  f[3] = traj.log_r;
  Eigen::Vector3d d;
  for (int t = 0; t < 3; ++t)
    d[t] = f[t] + traj.log_pf[t] - f[t + 1] - traj.log_pb[t];
  return d;
}

// refit the flow head so the realized one-step residuals hit the targets
void fit_flow_head(GfnModel& model, const Trajectory& traj,
                   const Eigen::Vector3d& target) {
  Eigen::Vector3d f;
  f[2] = traj.log_r + traj.log_pb[2] - traj.log_pf[2] + target[2];
  f[1] = f[2] + traj.log_pb[1] - traj.log_pf[1] + target[1];
  f[0] = f[1] - traj.log_pf[0] + target[0];
  Mat h(3, model.net.width);
  for (int t = 0; t < 3; ++t)
    h.row(t) = torso_forward(
        model.net, model.env.encode(traj.states[t], t).transpose(), nullptr);
  model.net.b_flow(0, 0) = 0.0;
  model.net.w_flow = h.completeOrthogonalDecomposition().solve(Mat(f));
}

Outcome c2_zero_points(std::ostream&) {
  double worst_zero = 0.0, worst_limit = 0.0;
  for (const bool torus : {false, true}) {
    Environment env = torus ? Environment::torus() : Environment::line();
    Rng rng(501 + (torus ? 1 : 0));
    GfnModel m = GfnModel::make(env, 1, rng);
    const Trajectory traj = rollout_forward(m, rng);

    // TB: close the identity through log Z
    m.log_z(0, 0) = traj.log_r + traj.log_pb.sum() - traj.log_pf.sum();
    worst_zero = std::max(
        worst_zero, gfn_loss(m, {traj}, LossSpec{LossKind::TB}, nullptr).total);

    // DB and STB: close every one-step residual through the flow head
    fit_flow_head(m, traj, Eigen::Vector3d::Zero());
    worst_zero = std::max(
        worst_zero, gfn_loss(m, {traj}, LossSpec{LossKind::DB}, nullptr).total);
    worst_zero = std::max(
        worst_zero,
        gfn_loss(m, {traj}, LossSpec{LossKind::SubTB, 0.9}, nullptr).total);

    // lambda -> inf: the full-trajectory span dominates
    const double delta = 0.83;
    fit_flow_head(m, traj, Eigen::Vector3d(0.0, delta, 0.0));
    Eigen::Vector3d d = step_residuals(m, traj);
    const double full_span = d.sum() * d.sum();
    double got =
        gfn_loss(m, {traj}, LossSpec{LossKind::SubTB, 1e3}, nullptr).total;
    worst_limit = std::max(worst_limit, std::abs(got - full_span) / full_span);

    // lambda -> 0: the mean one-step residual dominates
    fit_flow_head(m, traj, Eigen::Vector3d(0.0, 0.0, delta));
    d = step_residuals(m, traj);
    const double mean_db = d.squaredNorm() / 3.0;
    got = gfn_loss(m, {traj}, LossSpec{LossKind::SubTB, 1e-3}, nullptr).total;
    worst_limit = std::max(worst_limit, std::abs(got - mean_db) / mean_db);
  }
  std::ostringstream os;
  os << "worst balanced-construction loss " << fmt(worst_zero, 3)
     << ", worst lambda-limit relative error " << fmt(worst_limit, 3);
  return {worst_zero < 1e-18 && worst_limit < 1e-3, os.str()};
}

// ---------------------------------------------------------------------------
// 3. Langevin chain vs its stationary covariance

// stationary covariance of the linearized chain x' = x + p dt,
// p' = -x dt + (1 - gamma dt) p + sqrt(2 gamma dt / beta) R, from the
// discrete Lyapunov identity S = A S A^T + Q
void em_quadratic_covariance(double gamma, double beta, double dt,
                             double& var_x, double& var_p) {
  Eigen::Matrix2d A;
  A << 1.0, dt, -dt, 1.0 - gamma * dt;
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  Q(1, 1) = 2.0 * gamma * dt / beta;
  auto cov = [](const Eigen::Vector3d& s) {
    Eigen::Matrix2d S;
    S << s[0], s[1], s[1], s[2];
    return S;
  };
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e[k] = 1.0;
    const Eigen::Matrix2d T = cov(e) - A * cov(e) * A.transpose();
    M(0, k) = T(0, 0);
    M(1, k) = T(0, 1);
    M(2, k) = T(1, 1);
  }
  Eigen::Vector3d q;
  q << Q(0, 0), Q(0, 1), Q(1, 1);
  const Eigen::Vector3d s = M.colPivHouseholderQr().solve(q);
  var_x = s[0];
  var_p = s[2];
}

Outcome c3_langevin(std::ostream&) {
  const auto t0 = clock_type::now();
  const Space wide = Space::box1d(-100.0, 100.0);
  LangevinParams prm;
  prm.gamma = 2.0;
  prm.beta = 1.0;
  prm.dt = 0.01;
  double ref_x, ref_p;
  em_quadratic_covariance(prm.gamma, prm.beta, prm.dt, ref_x, ref_p);

  Rng rng(777);
  WalkerState w{vec1(0.0), vec1(0.0), 0.0};
  const long burn = 20000, steps = 1000000;
  for (long i = 0; i < burn; ++i) em_step(w, vec1(-w.x[0]), prm, wide, rng);
  double mx = 0.0, mp = 0.0, m2x = 0.0, m2p = 0.0;
  for (long i = 0; i < steps; ++i) {
    em_step(w, vec1(-w.x[0]), prm, wide, rng);
    mx += w.x[0];
    mp += w.p[0];
    m2x += w.x[0] * w.x[0];
    m2p += w.p[0] * w.p[0];
  }
  const double n = static_cast<double>(steps);
  const double var_x = m2x / n - (mx / n) * (mx / n);
  const double var_p = m2p / n - (mp / n) * (mp / n);
  const double err_x = std::abs(var_x / ref_x - 1.0);
  const double err_p = std::abs(var_p / ref_p - 1.0);
  const double dt = seconds_since(t0);
  std::ostringstream os;
  os << "Var(x) " << fmt(var_x) << " vs " << fmt(ref_x) << ", Var(p) "
     << fmt(var_p) << " vs " << fmt(ref_p) << " over 1e6 steps ("
     << fmt(dt, 3) << " s)";
  return {err_x < 0.05 && err_p < 0.05 && dt < 60.0, os.str()};
}

// ---------------------------------------------------------------------------
// 4. adapted metadynamics converges on the line reward

Outcome c4_am_convergence(std::ostream& log) {
  const auto t0 = clock_type::now();
  const Environment env = Environment::line();
  const MetadParams prm = MetadParams::defaults_for(EnvKind::Line);
  std::vector<double> best;
  for (const std::uint64_t seed : {1, 2, 3}) {
    AmState st = am_init(env, prm, 64, Rng(seed));
    const Eigen::ArrayXd target = node_target_density(env, st.grids.layout);
    double min_l1 = density_l1(implied_density(st.grids), target,
                               st.grids.layout);
    long first_cross = -1;
    for (long step = 1; step <= 25000; ++step) {
      am_step(st, env, prm);
      if (step % 250 == 0) {
        const double l1 =
            density_l1(implied_density(st.grids), target, st.grids.layout);
        min_l1 = std::min(min_l1, l1);
        if (first_cross < 0 && l1 < 0.1) first_cross = step;
      }
    }
    best.push_back(min_l1);
    log << "  criterion 4, seed " << seed << ": min l1 " << fmt(min_l1)
        << (first_cross > 0
                ? ", first below 0.1 at step " + std::to_string(first_cross)
                : ", never below 0.1")
        << '\n';
  }
  const double med = median(best);
  const double dt = seconds_since(t0);
  std::ostringstream os;
  os << "median min l1 " << fmt(med) << " over 3 seeds within 2.5e4 steps ("
     << fmt(dt, 3) << " s)";
  return {med < 0.1 && dt < 300.0, os.str()};
}

// ---------------------------------------------------------------------------
// 5. the regularized KDE ratio recovers the potential under uniform deposits

Outcome c5_theorem1(std::ostream&) {
  const auto t0 = clock_type::now();
  const Environment env = Environment::line();
  MetadParams prm = MetadParams::defaults_for(EnvKind::Line);
  prm.kernel_width = 0.05;
  prm.epsilon = 1e-4;
  prm.langevin.beta = 1.0;

  PotentialGrids grids =
      PotentialGrids::make(env.space, prm.grid_spacing,
                           prm.make_kernel(env.space), prm.epsilon, 1.0);
  // deposits forced onto an even sweep of the domain: the noise-free
  // stand-in for the uniform-exploration limit
  const double lo = env.space.lower[0], hi = env.space.upper[0];
  const long n_deposits = 100000;
  for (long i = 0; i < n_deposits; ++i) {
    const Eigen::VectorXd z =
        vec1(lo + (static_cast<double>(i) + 0.5) * (hi - lo) / n_deposits);
    deposit(grids, z, env.reward(z), prm);
  }

  double worst = 0.0, worst_x = 0.0;
  int region = 0;
  for (int i = 0; i < grids.layout.size(); ++i) {
    const Eigen::VectorXd node = grids.layout.node_point(i);
    const double r = env.reward(node);
    if (r <= 0.01) continue;
    ++region;
    const double err = std::abs(grids.v_hat[i] - (-std::log(r)));
    if (err > worst) {
      worst = err;
      worst_x = node[0];
    }
  }
  const double dt = seconds_since(t0);
  std::ostringstream os;
  os << "max |v_hat + log r| " << fmt(worst) << " at x = " << fmt(worst_x)
     << " over " << region << " nodes with r > 0.01 after 1e5 deposits ("
     << fmt(dt, 3) << " s)";
  if (worst >= 0.05)
    os << "; the kernel-smoothed reward ratio carries an irreducible "
       << fmt((0.98 * 0.98 / 2.0) * (1.0 / 0.1 - 1.0 / 0.1025) -
                  0.5 * std::log(1.025),
              3)
       << " log-space bias at this frontier of the narrow x=20 peak, so the "
          "limit itself sits above the 0.05 tolerance";
  return {worst < 0.05 && dt < 60.0, os.str()};
}

// ---------------------------------------------------------------------------
// 6. line training: MetaGFN beats on-policy and reaches the distant mode

TrainConfig desk_config(const std::string& env, StrategyKind kind, long B) {
  TrainConfig cfg;
  cfg.env_name = env;
  cfg.strategy.kind = kind;
  cfg.total_batches = B;
  return cfg;  // batch 64, TB loss, paper learning rates, eval every 250
}

Outcome c6_line_training(std::ostream& log) {
  int better = 0, mg_mass_ok = 0, op_mass_low = 0;
  for (const std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const TrainResult mg =
        train(desk_config("line", StrategyKind::MetaGfn, 20000), Rng(seed));
    const TrainResult op =
        train(desk_config("line", StrategyKind::OnPolicy, 20000), Rng(seed));
    if (!mg.finite || !op.finite)
      return {false, "non-finite loss at seed " + std::to_string(seed)};

    Rng mass_rng_mg = Rng(seed).child("mass-mg");
    Rng mass_rng_op = Rng(seed).child("mass-op");
    const double mg_l1 = mg.series.back().l1_error;
    const double op_l1 = op.series.back().l1_error;
    const double mg_mass =
        window_mass(sampled_histogram(mg.model, 10000, mass_rng_mg), 18, 22);
    const double op_mass =
        window_mass(sampled_histogram(op.model, 10000, mass_rng_op), 18, 22);

    better += mg_l1 < op_l1 ? 1 : 0;
    mg_mass_ok += std::abs(mg_mass - 0.25) <= 0.10 ? 1 : 0;
    op_mass_low += op_mass < 0.05 ? 1 : 0;
    log << "  criterion 6, seed " << seed << ": l1 " << fmt(mg_l1) << " vs "
        << fmt(op_l1) << ", mass[18,22] " << fmt(mg_mass) << " vs "
        << fmt(op_mass) << '\n';
  }
  std::ostringstream os;
  os << "metagfn below on-policy in " << better << "/5, mass 0.25+-0.10 in "
     << mg_mass_ok << "/5, on-policy mass < 0.05 in " << op_mass_low << "/5";
  return {better >= 4 && mg_mass_ok >= 4 && op_mass_low >= 4, os.str()};
}

// ---------------------------------------------------------------------------
// 7. grid training: MetaGFN converges faster at episode 2000

double l1_at_episode(const TrainResult& res, long episode) {
  for (const EvalPoint& p : res.series)
    if (p.episode == episode) return p.l1_error;
  return std::nan("");
}

Outcome c7_grid_training(std::ostream& log) {
  std::vector<double> mg_l1, op_l1;
  for (const std::uint64_t seed : {1, 2, 3}) {
    const TrainResult mg =
        train(desk_config("grid", StrategyKind::MetaGfn, 5000), Rng(seed));
    const TrainResult op =
        train(desk_config("grid", StrategyKind::OnPolicy, 5000), Rng(seed));
    if (!mg.finite || !op.finite)
      return {false, "non-finite loss at seed " + std::to_string(seed)};
    mg_l1.push_back(l1_at_episode(mg, 2000));
    op_l1.push_back(l1_at_episode(op, 2000));
    log << "  criterion 7, seed " << seed << ": l1 at 2000 "
        << fmt(mg_l1.back()) << " vs " << fmt(op_l1.back()) << '\n';
  }
  const double mg_med = median(mg_l1), op_med = median(op_l1);
  std::ostringstream os;
  os << "median l1 at episode 2000: metagfn " << fmt(mg_med)
     << " vs on-policy " << fmt(op_med);
  return {mg_med < op_med, os.str()};
}

// ---------------------------------------------------------------------------
// 8. replay-buffer stratification frequencies

Outcome c8_stratification(std::ostream&) {
  ReplayBuffer buffer(0.0);
  for (int i = 1; i <= 10; ++i)
    buffer.push({vec1(i), static_cast<double>(i), Trajectory{}});

  Rng rng(77);
  std::vector<long> counts(10, 0);
  const long draws = 100000;
  for (long i = 0; i < draws; ++i)
    for (const int pick : buffer.sample_biased(2, rng)) ++counts[pick];

  // top stratum = 3 highest rewards (entries 7..9), half the picks spread
  // over it: expected frequency 1/6 each of the 2e5 returned indices
  double worst = 0.0;
  for (int i = 7; i < 10; ++i) {
    const double freq =
        static_cast<double>(counts[i]) / static_cast<double>(2 * draws);
    worst = std::max(worst, std::abs(freq - 1.0 / 6.0));
  }
  std::ostringstream os;
  os << "max |top-entry frequency - 1/6| = " << fmt(worst, 3)
     << " over 1e5 stratified draws";
  return {worst <= 0.01, os.str()};
}

// ---------------------------------------------------------------------------
// 9. torus training covers the deepest basins

Outcome c9_torus_modes(std::ostream& log) {
  int seeds_ok = 0;
  for (const std::uint64_t seed : {1, 2, 3}) {
    const TrainResult res =
        train(desk_config("torus", StrategyKind::MetaGfn, 20000), Rng(seed));
    if (!res.finite)
      return {false, "non-finite loss at seed " + std::to_string(seed)};
    Rng rng = Rng(seed).child("coverage");
    const DensityGrid hist = sampled_histogram(res.model, 10000, rng);
    const std::vector<bool> covered = mode_coverage(
        hist, res.model.env.mode_centers, res.model.env.basin_radius);
    int deepest4 = 0, total = 0;
    for (std::size_t k = 0; k < covered.size(); ++k) {
      total += covered[k] ? 1 : 0;
      if (k < 4) deepest4 += covered[k] ? 1 : 0;
    }
    seeds_ok += deepest4 == 4 ? 1 : 0;
    log << "  criterion 9, seed " << seed << ": " << deepest4
        << "/4 deepest basins, " << total << "/" << covered.size()
        << " overall, final l1 " << fmt(res.series.back().l1_error) << '\n';
  }
  std::ostringstream os;
  os << "all 4 deepest basins covered in " << seeds_ok << "/3 seeds";
  return {seeds_ok >= 2, os.str()};
}

// ---------------------------------------------------------------------------
// 10. bit-identical metric series on rerun

std::string csv_without_wall_clock(const std::vector<EvalPoint>& series) {
  std::ostringstream full;
  write_metrics_csv(series, full);
  std::istringstream in(full.str());
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    int idx = 0;
    while (std::getline(row, field, ',')) {
      if (idx != 3) out << (idx ? "," : "") << field;
      ++idx;
    }
    out << '\n';
  }
  return out.str();
}

Outcome c10_determinism(std::ostream&) {
  TrainConfig cfg = desk_config("line", StrategyKind::MetaGfn, 400);
  cfg.batch_size = 16;
  cfg.eval_every = 100;
  cfg.eval_samples = 500;

  const TrainResult a = train(cfg, Rng(42));
  const TrainResult b = train(cfg, Rng(42));
  const std::string csv_a = csv_without_wall_clock(a.series);
  const std::string csv_b = csv_without_wall_clock(b.series);
  std::ostringstream os;
  os << "two 400-batch runs, " << a.series.size()
     << " metric rows each, csv bytes "
     << (csv_a == csv_b ? "identical" : "DIFFER")
     << " outside the wall-clock column";
  return {!a.series.empty() && csv_a == csv_b, os.str()};
}

struct Criterion {
  int id;
  const char* label;
  Outcome (*run)(std::ostream&);
};

const std::vector<Criterion> kCriteria = {
    {1, "loss gradients match finite differences", c1_gradients},
    {2, "loss zero points and lambda limits", c2_zero_points},
    {3, "Langevin chain matches its stationary covariance", c3_langevin},
    {4, "adapted metadynamics converges on the line reward", c4_am_convergence},
    {5, "uniform-deposit KDE ratio recovers the potential", c5_theorem1},
    {6, "line training: MetaGFN beats on-policy, finds x=20", c6_line_training},
    {7, "grid training: MetaGFN converges faster", c7_grid_training},
    {8, "replay-buffer stratification frequencies", c8_stratification},
    {9, "torus training covers the deepest basins", c9_torus_modes},
    {10, "metric series rerun bit-identically", c10_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance gate"};
  std::vector<int> only;
  app.add_option("--only", only, "criteria to run (default: all)")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  int failures = 0, ran = 0;
  const auto t0 = clock_type::now();
  for (const Criterion& c : kCriteria) {
    if (!only.empty() &&
        std::find(only.begin(), only.end(), c.id) == only.end())
      continue;
    ++ran;
    const auto ct0 = clock_type::now();
    Outcome out;
    try {
      out = c.run(std::cout);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failures += out.pass ? 0 : 1;
    std::cout << (out.pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id
              << ": " << c.label << " -- " << out.detail << " ["
              << fmt(seconds_since(ct0), 3) << " s]" << std::endl;
  }
  std::cout << (ran - failures) << "/" << ran << " criteria passed in "
            << fmt(seconds_since(t0) / 60.0, 3) << " min" << std::endl;
  return failures;
}
