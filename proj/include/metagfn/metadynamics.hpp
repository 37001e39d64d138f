#pragma once

#include <vector>

#include "metagfn/environment.hpp"
#include "metagfn/grids.hpp"
#include "metagfn/langevin.hpp"
#include "metagfn/rng.hpp"

namespace metagfn {

struct MetadParams {
  LangevinParams langevin;
  int stride = 2;             // deposit every `stride` timesteps
  double bias_height = 0.15;  // w
  double epsilon = 1e-3;
  double kernel_width = 0.1;  // sigma (box) or kappa (torus), isotropic
  double grid_spacing = 0.01;

  static MetadParams defaults_for(EnvKind kind);
  Kernel make_kernel(const Space& cv_space) const;
};

// Shared KDE/bias grids plus a batch of walkers, each with its own stream.
struct AmState {
  PotentialGrids grids;
  std::vector<WalkerState> walkers;
  std::vector<Rng> walker_rngs;
  long step_count = 0;
};

AmState am_init(const Environment& env, const MetadParams& prm, int n_walkers,
                const Rng& rng);

// One kernel deposit at z: n_hat += K, r_hat += reward K, v_bias +=
// stride*dt*w K, and v_hat refreshed from the updated KDEs.
void deposit(PotentialGrids& grids, const Eigen::VectorXd& z, double reward,
             const MetadParams& prm);

// One timestep for every walker: deposits (on stride boundaries, all walkers
// into the shared grids), then forces -grad(v_hat + v_bias) at each walker,
// then Langevin propagation.
void am_step(AmState& st, const Environment& env, const MetadParams& prm);

std::vector<Eigen::VectorXd> walker_positions(const AmState& st);

// exp(-beta v_hat) normalized to integrate to 1 over the grid (trapezoid
// rule on boxes, periodic Riemann sum on the torus); returns density values
// at the nodes
Eigen::ArrayXd implied_density(const PotentialGrids& grids);

// the reward on the same node grid, normalized the same way
Eigen::ArrayXd node_target_density(const Environment& env,
                                   const GridLayout& layout);

// half the quadrature of |p - q| for two node-value densities on one layout
double density_l1(const Eigen::ArrayXd& p, const Eigen::ArrayXd& q,
                  const GridLayout& layout);

}  // namespace metagfn
