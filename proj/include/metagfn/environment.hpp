#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "metagfn/grids.hpp"
#include "metagfn/policy.hpp"
#include "metagfn/space.hpp"

namespace metagfn {

enum class EnvKind { Line, Grid, Torus };

// A benchmark environment: reward density over the terminal manifold, source
// state, 3-step horizon, the identity collective-variable map, and the
// per-environment network/policy settings.
struct Environment {
  EnvKind kind = EnvKind::Line;
  std::string name = "line";
  Space space;
  Eigen::VectorXd source;
  int horizon = 3;
  PolicyKind policy_kind = PolicyKind::Gauss1D;
  int torso_width = 256;
  double buffer_threshold = 1e-3;
  double quad_spacing = 0.01;

  // reward modes, ordered by decreasing mass, with the basin radius used by
  // mode-coverage checks
  std::vector<Eigen::VectorXd> mode_centers;
  double basin_radius = 1.0;

  // torus only: tabulated potential, r = exp(-reward_beta * V) with V read by
  // periodic multilinear interpolation
  GridLayout v_layout;
  Eigen::ArrayXd v_values;
  double reward_beta = 0.4009;

  static Environment line();
  static Environment grid2d();
  static Environment torus(const std::string& potential_file = "");
  static Environment by_name(const std::string& name,
                             const std::string& torus_potential_file = "");

  double reward(const Eigen::VectorXd& x) const;
  double log_reward(const Eigen::VectorXd& x) const;  // clipped below at -10

  // collective variables are the identity map in every environment
  Eigen::VectorXd cv(const Eigen::VectorXd& x) const { return x; }

  // network input: raw coordinates (angles as cos/sin pairs) plus a one-hot
  // of the step index
  int encoded_dim() const;
  Eigen::VectorXd encode(const Eigen::VectorXd& x, int t) const;
};

inline constexpr double kLogRewardClip = -10.0;

double line_reward(double x);
double grid_reward(double x, double y);

// six-well potential on the 2-torus mimicking a dipeptide free-energy
// surface; minima ordered P_par, alpha_R, C5, alpha_prime, alpha_L, alpha_D
Eigen::ArrayXd synthetic_torus_potential(const GridLayout& layout, double beta);
std::vector<Eigen::VectorXd> synthetic_torus_minima();

}  // namespace metagfn
