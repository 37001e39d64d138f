#include <cmath>
#include <vector>

#include "doctest.h"
#include "metagfn/environment.hpp"
#include "metagfn/gfn.hpp"
#include "metagfn/rng.hpp"

using namespace metagfn;

namespace {

GfnModel line_model(std::uint64_t seed, int heads = 1) {
  Rng rng(seed);
  return GfnModel::make(Environment::line(), heads, rng);
}

GfnModel torus_model(std::uint64_t seed) {
  Rng rng(seed);
  return GfnModel::make(Environment::torus(), 1, rng);
}

double stored_tb_residual(const GfnModel& model, const Trajectory& traj) {
  return model.log_z(0, 0) + traj.log_pf.sum() - traj.log_pb.sum() -
         traj.log_r;
}

// flow-head evaluation along a trajectory's states, plain path
double flow_at(const GfnModel& model, const Eigen::VectorXd& x, int t) {
  const Mat h =
      torso_forward(model.net, model.env.encode(x, t).transpose(), nullptr);
  return flow_forward(model.net, h)(0, 0);
}

// realized one-step balance residuals, with the terminal flow pinned to the
// clipped log-reward
Eigen::Vector3d step_residuals(const GfnModel& model, const Trajectory& traj) {
  Eigen::Vector4d f;
  for (int t = 0; t < 3; ++t) f[t] = flow_at(model, traj.states[t], t);
  f[3] = traj.log_r;
  Eigen::Vector3d d;
  for (int t = 0; t < 3; ++t)
    d[t] = f[t] + traj.log_pf[t] - f[t + 1] - traj.log_pb[t];
  return d;
}

double oracle_subtb(const Eigen::Vector3d& d, double lambda) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 3; ++i) {
    double span = 0.0;
    for (int j = i + 1; j <= 3; ++j) {
      span += d[j - 1];
      const double w = std::pow(lambda, j - i);
      num += w * span * span;
      den += w;
    }
  }
  return num / den;
}

// refit the flow head (bias zero) so the realized one-step residuals equal
// the requested targets on one trajectory
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
  model.net.w_flow =
      h.completeOrthogonalDecomposition().solve(Mat(f));
}

}  // namespace

TEST_CASE("model construction matches the environment") {
  const GfnModel m = line_model(3, 2);
  CHECK(m.net.in_dim == 5);
  CHECK(m.net.width == 256);
  CHECK(m.net.pf_dim == 9);
  CHECK(m.net.pb_dim == 9);
  CHECK(m.net.n_pf_heads == 2);
  CHECK(m.log_z.rows() == 1);
  CHECK(m.log_z(0, 0) == 0.0);

  const GfnModel t = torus_model(3);
  CHECK(t.net.in_dim == 8);
  CHECK(t.net.width == 512);
  CHECK(t.net.pf_dim == 15);

  const GfnModel m2 = line_model(3, 2);
  CHECK((m.net.w1 - m2.net.w1).norm() == 0.0);  // same seed, same weights
}

TEST_CASE("forward rollouts: shapes, source, Dirac back-step, rewards") {
  const GfnModel m = line_model(17);
  Rng rng(900);
  const auto batch = rollout_batch(m, 8, rng);
  REQUIRE(batch.size() == 8);
  for (const Trajectory& traj : batch) {
    REQUIRE(traj.states.size() == 4);
    CHECK((traj.states[0] - m.env.source).norm() == 0.0);
    CHECK(traj.log_pb[0] == 0.0);
    CHECK(traj.log_pf.allFinite());
    CHECK(traj.log_pb.allFinite());
    CHECK(traj.reward == m.env.reward(traj.states[3]));
    CHECK(traj.log_r == m.env.log_reward(traj.states[3]));
    CHECK(traj.log_r >= kLogRewardClip);
    CHECK(traj.sigma_bar == 0.0);
    CHECK(traj.head == 0);
  }

  // same seed reproduces the batch exactly; a different seed does not
  Rng rng2(900), rng3(901);
  const auto again = rollout_batch(m, 8, rng2);
  const auto other = rollout_batch(m, 8, rng3);
  for (int r = 0; r < 8; ++r) {
    CHECK((batch[r].states[3] - again[r].states[3]).norm() == 0.0);
    CHECK((batch[r].log_pf - again[r].log_pf).norm() == 0.0);
  }
  CHECK((batch[0].states[3] - other[0].states[3]).norm() != 0.0);
}

TEST_CASE("stored rollout densities are the noised policy densities") {
  const GfnModel m = line_model(23);
  Rng rng(41);
  const double sb = 0.7;
  const auto batch = rollout_batch(m, 3, rng, sb);
  for (const Trajectory& traj : batch) {
    CHECK(traj.sigma_bar == sb);
    for (int t = 0; t < 3; ++t) {
      const MixtureParams pf = forward_policy(m, traj.states[t], t, 0, sb);
      const Eigen::VectorXd delta =
          m.env.space.displacement(traj.states[t], traj.states[t + 1]);
      CHECK(traj.log_pf[t] ==
            doctest::Approx(log_density(m.env.policy_kind, pf, delta))
                .epsilon(1e-9));
      if (t > 0) {
        const MixtureParams pb =
            backward_policy(m, traj.states[t + 1], t + 1, sb);
        const Eigen::VectorXd bdelta =
            m.env.space.displacement(traj.states[t + 1], traj.states[t]);
        CHECK(traj.log_pb[t] ==
              doctest::Approx(log_density(m.env.policy_kind, pb, bdelta))
                  .epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("per-trajectory forward heads steer the rollout") {
  const GfnModel m = line_model(5, 3);
  Rng rng(7);
  const std::vector<int> heads = {0, 1, 2, 1};
  const auto batch = rollout_batch(m, 4, rng, 0.0, &heads);
  for (int r = 0; r < 4; ++r) CHECK(batch[r].head == heads[r]);

  Rng bad_rng(7);
  const std::vector<int> bad = {0, 3, 0, 0};
  CHECK_THROWS_AS(rollout_batch(m, 4, bad_rng, 0.0, &bad),
                  std::invalid_argument);
}

TEST_CASE("backward sampling pins the terminal and the source exactly") {
  for (const bool torus : {false, true}) {
    const GfnModel m = torus ? torus_model(12) : line_model(12);
    Rng rng(88);
    std::vector<Eigen::VectorXd> terminals;
    Rng trng(5);
    for (int i = 0; i < 5; ++i)
      terminals.push_back(m.env.source +
                          trng.normal_vec(m.env.space.dim()));
    if (!torus)
      for (auto& x : terminals) x = x.cwiseMax(2.0).cwiseMin(20.0);
    const auto batch = backward_sample_batch(m, terminals, rng);
    for (int r = 0; r < 5; ++r) {
      REQUIRE(batch[r].states.size() == 4);
      CHECK((batch[r].states[3] - terminals[r]).norm() == 0.0);  // exact
      CHECK((batch[r].states[0] - m.env.source).norm() == 0.0);
      CHECK(batch[r].log_pb[0] == 0.0);
      CHECK(batch[r].log_pf.allFinite());
      CHECK(batch[r].reward == m.env.reward(terminals[r]));
    }

    Rng rng2(88);
    const auto again = backward_sample_batch(m, terminals, rng2);
    CHECK((batch[2].states[1] - again[2].states[1]).norm() == 0.0);
  }
}

TEST_CASE("balance residual is a function of the realized path") {
  const GfnModel m = line_model(31);
  Rng rng(3);
  const Trajectory fwd = rollout_forward(m, rng);
  CHECK(tb_residual(m, fwd) ==
        doctest::Approx(stored_tb_residual(m, fwd)).epsilon(1e-10));

  // a backward-sampled path obeys the same identity: the residual assembled
  // from its stored densities equals the recomputed one
  Eigen::VectorXd terminal(1);
  terminal << 2.3;
  const Trajectory bwd = backward_sample(m, terminal, rng);
  CHECK(tb_residual(m, bwd) ==
        doctest::Approx(stored_tb_residual(m, bwd)).epsilon(1e-10));
}

TEST_CASE("residual shift invariance: moving mass between logZ and the "
          "forward densities") {
  const GfnModel m = line_model(47);
  Rng rng(11);
  const Trajectory traj = rollout_forward(m, rng);
  const double base = stored_tb_residual(m, traj);
  Rng crng(13);
  for (int i = 0; i < 50; ++i) {
    const double c = crng.uniform(-5.0, 5.0);
    GfnModel shifted = m;
    shifted.log_z(0, 0) -= 3.0 * c;
    Trajectory tshift = traj;
    tshift.log_pf.array() += c;
    CHECK(std::abs(stored_tb_residual(shifted, tshift) - base) < 1e-12);
  }
}

TEST_CASE("trajectory-balance loss vanishes when logZ closes the identity") {
  for (const bool torus : {false, true}) {
    GfnModel m = torus ? torus_model(101) : line_model(101);
    Rng rng(55);
    const Trajectory traj = rollout_forward(m, rng);
    m.log_z(0, 0) = traj.log_r + traj.log_pb.sum() - traj.log_pf.sum();
    const LossOutput out = gfn_loss(m, {traj}, LossSpec{LossKind::TB}, nullptr);
    CHECK(out.finite);
    CHECK(out.total < 1e-18);
  }
}

TEST_CASE("trajectory-balance loss equals the summed squared residuals") {
  GfnModel m = line_model(61);
  m.log_z(0, 0) = 0.4;
  Rng rng(21);
  const auto batch = rollout_batch(m, 6, rng, 0.3);
  double expect = 0.0;
  for (const Trajectory& traj : batch) {
    const double r = tb_residual(m, traj);
    expect += r * r;
  }
  const LossOutput out = gfn_loss(m, batch, LossSpec{LossKind::TB}, nullptr);
  CHECK(out.finite);
  CHECK(out.total == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("detailed-balance loss: oracle equality and zero point") {
  GfnModel m = line_model(71);
  Rng rng(31);
  const Trajectory traj = rollout_forward(m, rng);

  // random flow head: the loss matches the independently assembled residuals
  const Eigen::Vector3d d = step_residuals(m, traj);
  const double expect = d.squaredNorm();
  const LossOutput out = gfn_loss(m, {traj}, LossSpec{LossKind::DB}, nullptr);
  CHECK(out.finite);
  CHECK(out.total == doctest::Approx(expect).epsilon(1e-9));

  // refit the flow head so every one-step residual closes
  fit_flow_head(m, traj, Eigen::Vector3d::Zero());
  const LossOutput closed =
      gfn_loss(m, {traj}, LossSpec{LossKind::DB}, nullptr);
  CHECK(closed.total < 1e-18);
}

TEST_CASE("subtrajectory-balance loss: oracle equality, zero point, limits") {
  GfnModel m = line_model(83);
  Rng rng(91);
  const Trajectory traj = rollout_forward(m, rng);

  SUBCASE("matches the span-weighted oracle for assorted lambda") {
    const Eigen::Vector3d d = step_residuals(m, traj);
    for (const double la : {1e-3, 0.5, 0.9, 1.0, 1e3}) {
      const LossOutput out =
          gfn_loss(m, {traj}, LossSpec{LossKind::SubTB, la}, nullptr);
      CHECK(out.finite);
      CHECK(out.total == doctest::Approx(oracle_subtb(d, la)).epsilon(1e-9));
    }
  }

  SUBCASE("vanishes when all one-step residuals close") {
    fit_flow_head(m, traj, Eigen::Vector3d::Zero());
    const LossOutput out =
        gfn_loss(m, {traj}, LossSpec{LossKind::SubTB, 0.9}, nullptr);
    CHECK(out.total < 1e-18);
  }

  SUBCASE("large lambda is dominated by the full-trajectory span") {
    // leave only a middle-step residual so the shorter spans carry nothing
    // extra and the lambda^3 term dominates the comparison
    const double delta = 0.83;
    fit_flow_head(m, traj, Eigen::Vector3d(0.0, delta, 0.0));
    const Eigen::Vector3d d = step_residuals(m, traj);
    const double full_span = d.sum() * d.sum();
    const LossOutput out =
        gfn_loss(m, {traj}, LossSpec{LossKind::SubTB, 1e3}, nullptr);
    CHECK(std::abs(out.total - full_span) < 1e-3 * full_span);
  }

  SUBCASE("small lambda approaches the mean one-step loss") {
    const double delta = 0.83;
    fit_flow_head(m, traj, Eigen::Vector3d(0.0, 0.0, delta));
    const Eigen::Vector3d d = step_residuals(m, traj);
    const double mean_db = d.squaredNorm() / 3.0;
    const LossOutput out =
        gfn_loss(m, {traj}, LossSpec{LossKind::SubTB, 1e-3}, nullptr);
    CHECK(std::abs(out.total - mean_db) < 1e-3 * mean_db);
  }
}

TEST_CASE("loss gradients match central differences") {
  for (const bool torus : {false, true}) {
    GfnModel m = torus ? torus_model(5) : line_model(5);
    m.log_z(0, 0) = 0.2;
    Rng rng(14);
    const auto batch = rollout_batch(m, 3, rng, torus ? 0.0 : 0.4);

    const std::vector<LossKind> kinds =
        torus ? std::vector<LossKind>{LossKind::TB}
              : std::vector<LossKind>{LossKind::TB, LossKind::DB,
                                      LossKind::SubTB};
    for (const LossKind kind : kinds) {
      const LossSpec spec{kind, 0.9};
      const LossOutput out = gfn_loss(m, batch, spec, nullptr);
      REQUIRE(out.finite);

      auto value = [&]() { return gfn_loss(m, batch, spec, nullptr).total; };

      // a few entries spread across torso, heads, flow, and logZ
      struct Probe {
        int tensor, i, j;  // tensor == -1 means logZ
      };
      const std::vector<Probe> probes = {
          {0, 1, 3}, {2, 7, 20}, {5, 0, 11}, {6, 9, 4},
          {7, 0, 2}, {8, 30, 6}, {9, 0, 5},  {10, 12, 0},
          {11, 0, 0}, {-1, 0, 0}};
      const double eps = 1e-5;
      for (const Probe& pr : probes) {
        Mat* tensor =
            pr.tensor < 0 ? &m.log_z : m.net.tensors()[pr.tensor];
        const int gi = pr.tensor < 0
                           ? static_cast<int>(out.grads.size()) - 1
                           : pr.tensor;
        const double saved = (*tensor)(pr.i, pr.j);
        (*tensor)(pr.i, pr.j) = saved + eps;
        const double up = value();
        (*tensor)(pr.i, pr.j) = saved - eps;
        const double dn = value();
        (*tensor)(pr.i, pr.j) = saved;
        const double num = (up - dn) / (2.0 * eps);
        const double got = out.grads[gi](pr.i, pr.j);
        CHECK(std::abs(got - num) <=
              1e-4 * std::max(1.0, std::abs(num)));
      }
    }
  }
}

TEST_CASE("train-mode dropout is reproducible and changes the loss") {
  GfnModel m = line_model(9);
  Rng rng(2);
  const auto batch = rollout_batch(m, 4, rng);
  const LossSpec spec{LossKind::TB};

  Rng d1(77), d2(77), d3(78);
  const double a = gfn_loss(m, batch, spec, &d1).total;
  const double b = gfn_loss(m, batch, spec, &d2).total;
  const double c = gfn_loss(m, batch, spec, &d3).total;
  const double e = gfn_loss(m, batch, spec, nullptr).total;
  CHECK(a == b);  // same mask stream, same loss
  CHECK(a != c);
  CHECK(a != e);

  // gradients under fixed masks still match finite differences
  Rng dg(77);
  const LossOutput out = gfn_loss(m, batch, spec, &dg);
  REQUIRE(out.finite);
  const double eps = 1e-5;
  Mat* tensor = m.net.tensors()[0];
  const double saved = (*tensor)(2, 5);
  (*tensor)(2, 5) = saved + eps;
  Rng du(77);
  const double up = gfn_loss(m, batch, spec, &du).total;
  (*tensor)(2, 5) = saved - eps;
  Rng dd(77);
  const double dn = gfn_loss(m, batch, spec, &dd).total;
  (*tensor)(2, 5) = saved;
  const double num = (up - dn) / (2.0 * eps);
  CHECK(std::abs(out.grads[0](2, 5) - num) <=
        1e-4 * std::max(1.0, std::abs(num)));
}

TEST_CASE("ensemble loss: inclusion coins, reductions, edge cases") {
  GfnModel m = line_model(19, 4);
  Rng rng(33);
  std::vector<int> heads = {0, 1, 2, 3, 1, 2};
  const auto batch = rollout_batch(m, 6, rng, 0.0, &heads);
  const LossSpec spec{LossKind::TB};

  SUBCASE("p = 1 sums every head's loss over the whole batch") {
    Rng coin(4);
    const LossOutput all = thompson_loss(m, batch, spec, 1.0, coin, false);
    double expect = 0.0;
    std::vector<Mat> gsum;
    for (int k = 0; k < 4; ++k) {
      const LossOutput one = gfn_loss(m, batch, spec, nullptr, k);
      expect += one.total;
      if (gsum.empty())
        gsum = one.grads;
      else
        for (size_t i = 0; i < gsum.size(); ++i) gsum[i] += one.grads[i];
    }
    CHECK(all.finite);
    CHECK(all.total == doctest::Approx(expect).epsilon(1e-9));
    // torso and logZ gradients accumulate across heads
    CHECK((all.grads[0] - gsum[0]).norm() <= 1e-9 * (1.0 + gsum[0].norm()));
    CHECK((all.grads.back() - gsum.back()).norm() <=
          1e-9 * (1.0 + gsum.back().norm()));
  }

  SUBCASE("a single-head ensemble at p = 1 is the plain loss") {
    GfnModel one_head = line_model(19, 1);
    Rng r2(1);
    const auto b2 = rollout_batch(one_head, 3, r2);
    Rng coin(4);
    const LossOutput via_ensemble =
        thompson_loss(one_head, b2, spec, 1.0, coin, false);
    const LossOutput direct = gfn_loss(one_head, b2, spec, nullptr, 0);
    CHECK(via_ensemble.total ==
          doctest::Approx(direct.total).epsilon(1e-12));
  }

  SUBCASE("all coins false yields a zero loss and zero gradients") {
    Rng coin(4);
    const LossOutput none = thompson_loss(m, batch, spec, 1e-300, coin, false);
    CHECK(none.finite);
    CHECK(none.total == 0.0);
    REQUIRE(none.grads.size() == m.net.tensors().size() + 1);
    for (size_t i = 0; i < none.grads.size(); ++i) {
      CHECK(none.grads[i].norm() == 0.0);
      if (i < m.net.tensors().size()) {
        CHECK(none.grads[i].rows() == m.net.tensors()[i]->rows());
        CHECK(none.grads[i].cols() == m.net.tensors()[i]->cols());
      }
    }
  }

  SUBCASE("coin stream is deterministic in the seed") {
    Rng c1(5), c2(5);
    const double a = thompson_loss(m, batch, spec, 0.3, c1, false).total;
    const double b = thompson_loss(m, batch, spec, 0.3, c2, false).total;
    CHECK(a == b);
  }

  SUBCASE("invalid inclusion probabilities are rejected") {
    Rng coin(4);
    CHECK_THROWS_AS(thompson_loss(m, batch, spec, 0.0, coin, false),
                    std::invalid_argument);
    CHECK_THROWS_AS(thompson_loss(m, batch, spec, 1.5, coin, false),
                    std::invalid_argument);
  }
}

TEST_CASE("malformed inputs are rejected") {
  const GfnModel m = line_model(1);
  Rng rng(1);
  CHECK_THROWS_AS(gfn_loss(m, {}, LossSpec{}, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(rollout_batch(m, 0, rng), std::invalid_argument);

  Trajectory stub;
  stub.states = {m.env.source, m.env.source};  // too short
  stub.log_pf = Eigen::VectorXd::Zero(3);
  stub.log_pb = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(gfn_loss(m, {stub}, LossSpec{}, nullptr),
                  std::invalid_argument);

  Rng rng2(1);
  const auto batch = rollout_batch(m, 2, rng2);
  CHECK_THROWS_AS(gfn_loss(m, batch, LossSpec{}, nullptr, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      gfn_loss(m, batch, LossSpec{LossKind::SubTB, 0.0}, nullptr),
      std::invalid_argument);
  CHECK_THROWS_AS(backward_sample_batch(m, {}, rng2), std::invalid_argument);
}
