#include "metagfn/space.hpp"

#include <cmath>
#include <stdexcept>

namespace metagfn {

double wrap_angle(double a) {
  return a - kTwoPi * std::floor((a + kPi) / kTwoPi);
}

Space Space::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  if (lo.size() != hi.size())
    throw std::invalid_argument("Space::box: bound dimensions differ");
  for (int i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i]))
      throw std::invalid_argument("Space::box: lower must be below upper");
  Space s;
  s.kind = SpaceKind::BoundedBox;
  s.lower = std::move(lo);
  s.upper = std::move(hi);
  return s;
}

Space Space::box1d(double lo, double hi) {
  Eigen::VectorXd l(1), h(1);
  l[0] = lo;
  h[0] = hi;
  return box(std::move(l), std::move(h));
}

Space Space::torus(int dim) {
  if (dim <= 0) throw std::invalid_argument("Space::torus: dim must be positive");
  Space s;
  s.kind = SpaceKind::Torus;
  s.lower = Eigen::VectorXd::Constant(dim, -kPi);
  s.upper = Eigen::VectorXd::Constant(dim, kPi);
  return s;
}

Eigen::VectorXd Space::wrap(const Eigen::VectorXd& x) const {
  if (x.size() != dim())
    throw std::invalid_argument("Space::wrap: dimension mismatch");
  if (kind == SpaceKind::BoundedBox) return x;
  Eigen::VectorXd y(x.size());
  for (int i = 0; i < x.size(); ++i) y[i] = wrap_angle(x[i]);
  return y;
}

void Space::reflect(Eigen::VectorXd& x, Eigen::VectorXd& p) const {
  if (kind != SpaceKind::BoundedBox)
    throw std::invalid_argument("Space::reflect: only defined on boxes");
  if (x.size() != dim() || p.size() != dim())
    throw std::invalid_argument("Space::reflect: dimension mismatch");
  for (int i = 0; i < x.size(); ++i) {
    const double lo = lower[i], hi = upper[i], width = hi - lo;
    if (x[i] < lo) {
      if (lo - x[i] >= width)
        throw std::runtime_error("Space::reflect: overshoot exceeds box width");
      x[i] = 2.0 * lo - x[i];
      p[i] = -p[i];
    } else if (x[i] > hi) {
      if (x[i] - hi >= width)
        throw std::runtime_error("Space::reflect: overshoot exceeds box width");
      x[i] = 2.0 * hi - x[i];
      p[i] = -p[i];
    }
  }
}

Eigen::VectorXd Space::displacement(const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& b) const {
  if (a.size() != dim() || b.size() != dim())
    throw std::invalid_argument("Space::displacement: dimension mismatch");
  Eigen::VectorXd d = b - a;
  if (kind == SpaceKind::Torus)
    for (int i = 0; i < d.size(); ++i) d[i] = wrap_angle(d[i]);
  return d;
}

bool Space::contains(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) return false;
  for (int i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  return true;
}

}  // namespace metagfn
