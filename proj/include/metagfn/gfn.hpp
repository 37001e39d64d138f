#pragma once

#include <vector>

#include "metagfn/environment.hpp"
#include "metagfn/graph.hpp"
#include "metagfn/nn.hpp"
#include "metagfn/policy.hpp"
#include "metagfn/rng.hpp"

namespace metagfn {

// A source-to-sink path with the log-densities realized along it. The first
// backward transition is a Dirac jump to the source and contributes
// log_pb[0] = 0. sigma_bar and head record how the trajectory was generated
// so a loss can be recomputed under the same behavior policy.
struct Trajectory {
  std::vector<Eigen::VectorXd> states;  // horizon + 1
  Eigen::VectorXd log_pf;               // horizon
  Eigen::VectorXd log_pb;               // horizon, [0] == 0
  double reward = 0.0;
  double log_r = 0.0;  // clipped
  double sigma_bar = 0.0;
  int head = 0;
};

struct GfnModel {
  Environment env;
  Mlp net;
  Mat log_z;  // 1x1, learned total flow in log space

  static GfnModel make(const Environment& env, int n_pf_heads, Rng& rng);
};

// mixture parameters of a head at one state (plain path, evaluation mode)
MixtureParams forward_policy(const GfnModel& model, const Eigen::VectorXd& x,
                             int t, int head, double sigma_bar);
MixtureParams backward_policy(const GfnModel& model, const Eigen::VectorXd& x,
                              int t, double sigma_bar);

// Forward rollouts from the source. Densities are recorded under the noised
// policies actually used for sampling. heads, when given, assigns a forward
// head per trajectory.
std::vector<Trajectory> rollout_batch(const GfnModel& model, int b, Rng& rng,
                                      double sigma_bar = 0.0,
                                      const std::vector<int>* heads = nullptr);
Trajectory rollout_forward(const GfnModel& model, Rng& rng,
                           double sigma_bar = 0.0, int head = 0);

// Backward generation from fixed terminal states; the first state is forced
// to the source. log_pf/log_pb are head-0 evaluations along the realized
// path, under the sigma_bar-noised policies when sigma_bar > 0.
std::vector<Trajectory> backward_sample_batch(
    const GfnModel& model, const std::vector<Eigen::VectorXd>& terminals,
    Rng& rng, double sigma_bar = 0.0);
Trajectory backward_sample(const GfnModel& model,
                           const Eigen::VectorXd& terminal, Rng& rng,
                           double sigma_bar = 0.0);

// the trajectory-balance residual log Z + sum log_pf - log r - sum log_pb,
// recomputed from the current model in evaluation mode
double tb_residual(const GfnModel& model, const Trajectory& traj);

enum class LossKind { TB, DB, SubTB };

struct LossSpec {
  LossKind kind = LossKind::TB;
  double lambda = 0.9;  // SubTB geometric weight
};

struct LossOutput {
  double total = 0.0;             // summed over the batch
  std::vector<Mat> grads;         // Mlp::tensors() order, then log_z
  bool finite = true;
};

// Batch loss with gradients. A non-null dropout_rng turns on train-mode
// dropout with masks drawn from it (re-seed the same child to replay a
// batch exactly); null runs the network in evaluation mode.
LossOutput gfn_loss(const GfnModel& model, const std::vector<Trajectory>& batch,
                    const LossSpec& spec, Rng* dropout_rng, int head = 0);

// Ensemble update: every (trajectory, head) pair is included with
// probability p; the returned loss sums the included pairs' losses, with
// forward densities recomputed per head. Coins are drawn trajectory-major.
LossOutput thompson_loss(const GfnModel& model,
                         const std::vector<Trajectory>& batch,
                         const LossSpec& spec, double p, Rng& rng,
                         bool train_mode = true);

}  // namespace metagfn
