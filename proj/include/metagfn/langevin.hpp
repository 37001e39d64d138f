#pragma once

#include <Eigen/Dense>

#include "metagfn/rng.hpp"
#include "metagfn/space.hpp"

namespace metagfn {

struct LangevinParams {
  double gamma = 1.0;  // friction
  double beta = 1.0;   // inverse temperature
  double dt = 0.01;
  Eigen::VectorXd mass;  // per-dimension, empty means unit mass

  void validate(int dim) const;
};

struct WalkerState {
  Eigen::VectorXd x, p;
  double t = 0.0;
};

// One Euler-Maruyama step of underdamped Langevin dynamics:
//   x' = x + (p/m) dt
//   p' = p + F dt - gamma (p/m) dt + sqrt(2 gamma dt / beta) R
// followed by wrapping (torus) or reflection (box). The explicit-noise
// variant takes R directly so exact updates can be verified.
void em_step_with_noise(WalkerState& w, const Eigen::VectorXd& force,
                        const LangevinParams& params, const Space& space,
                        const Eigen::VectorXd& noise);

void em_step(WalkerState& w, const Eigen::VectorXd& force,
             const LangevinParams& params, const Space& space, Rng& rng);

}  // namespace metagfn
