#pragma once

#include <Eigen/Dense>

namespace metagfn {

enum class SpaceKind { BoundedBox, Torus };

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// maps an angle into the canonical interval [-pi, pi)
double wrap_angle(double a);

// State-space descriptor: a Euclidean box with reflecting walls or a k-torus
// with period 2*pi per dimension (canonical coordinates in [-pi, pi)).
struct Space {
  SpaceKind kind = SpaceKind::BoundedBox;
  Eigen::VectorXd lower, upper;

  static Space box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  static Space box1d(double lo, double hi);
  static Space torus(int dim);

  int dim() const { return static_cast<int>(lower.size()); }

  // canonicalize: modular reduction on the torus, identity on a box
  Eigen::VectorXd wrap(const Eigen::VectorXd& x) const;

  // mirror out-of-box coordinates about the violated wall and negate the
  // matching momentum component; boxes only
  void reflect(Eigen::VectorXd& x, Eigen::VectorXd& p) const;

  // b - a, taken along the shortest signed arc per dimension on the torus
  Eigen::VectorXd displacement(const Eigen::VectorXd& a,
                               const Eigen::VectorXd& b) const;

  bool contains(const Eigen::VectorXd& x) const;
};

}  // namespace metagfn
