#include "metagfn/environment.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace metagfn {

namespace {

double normal_pdf(double x, double mu, double variance) {
  const double d = x - mu;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(kTwoPi * variance);
}

Eigen::VectorXd point2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

struct TorusWell {
  double phi, psi, amplitude;
};

// depths chosen so the normalized well masses fall off roughly as
// 34/25/20/15/4/1 percent
const TorusWell kWells[6] = {
    {-1.2, 2.68, 1.00},   // P_par
    {-1.2, -0.5, 0.75},   // alpha_R
    {-2.6, 2.8, 0.60},    // C5
    {-2.6, -0.7, 0.45},   // alpha_prime
    {1.0, 0.5, 0.12},     // alpha_L
    {1.0, -2.2, 0.03},    // alpha_D
};
constexpr double kWellConcentration = 8.0;
constexpr double kMixFloor = 1e-6;

}  // namespace

double line_reward(double x) {
  if (x < -5.0 || x > 23.0) return 0.0;
  return normal_pdf(x, -2.0, 1.0) + normal_pdf(x, -2.0, 0.4) +
         normal_pdf(x, 2.0, 0.6) + normal_pdf(x, 20.0, 0.1);
}

double grid_reward(double x, double y) {
  if (x < -15.0 || x > 15.0 || y < -15.0 || y > 15.0) return 0.0;
  double r = 0.0;
  for (const double cx : {-7.0, 7.0})
    for (const double cy : {-7.0, 7.0}) {
      const double dx = x - cx, dy = y - cy;
      r += std::exp(-(dx * dx + dy * dy) / 4.0) / (kTwoPi * 2.0);
    }
  return r;
}

Eigen::ArrayXd synthetic_torus_potential(const GridLayout& layout, double beta) {
  if (layout.space.kind != SpaceKind::Torus || layout.dim() != 2)
    throw std::invalid_argument("synthetic_torus_potential: needs a 2-torus layout");
  Eigen::ArrayXd v(layout.size());
  for (int flat = 0; flat < layout.size(); ++flat) {
    const Eigen::VectorXd z = layout.node_point(flat);
    double mix = kMixFloor;
    for (const TorusWell& w : kWells) {
      mix += w.amplitude *
             std::exp(kWellConcentration * (std::cos(z[0] - w.phi) - 1.0) +
                      kWellConcentration * (std::cos(z[1] - w.psi) - 1.0));
    }
    v[flat] = -std::log(mix) / beta;
  }
  return v;
}

std::vector<Eigen::VectorXd> synthetic_torus_minima() {
  std::vector<Eigen::VectorXd> m;
  for (const TorusWell& w : kWells) m.push_back(point2(w.phi, w.psi));
  return m;
}

Environment Environment::line() {
  Environment e;
  e.kind = EnvKind::Line;
  e.name = "line";
  e.space = Space::box1d(-5.0, 23.0);
  e.source = Eigen::VectorXd::Zero(1);
  e.policy_kind = PolicyKind::Gauss1D;
  e.torso_width = 256;
  e.buffer_threshold = 1e-3;
  e.quad_spacing = 0.01;
  for (const double c : {-2.0, 2.0, 20.0}) {
    Eigen::VectorXd v(1);
    v << c;
    e.mode_centers.push_back(v);
  }
  e.basin_radius = 1.0;
  return e;
}

Environment Environment::grid2d() {
  Environment e;
  e.kind = EnvKind::Grid;
  e.name = "grid";
  e.space = Space::box(point2(-15.0, -15.0), point2(15.0, 15.0));
  e.source = Eigen::VectorXd::Zero(2);
  e.policy_kind = PolicyKind::Gauss2D;
  e.torso_width = 512;
  e.buffer_threshold = 1e-4;
  e.quad_spacing = 0.075;
  for (const double cx : {-7.0, 7.0})
    for (const double cy : {-7.0, 7.0}) e.mode_centers.push_back(point2(cx, cy));
  e.basin_radius = 2.0;
  return e;
}

Environment Environment::torus(const std::string& potential_file) {
  Environment e;
  e.kind = EnvKind::Torus;
  e.name = "torus";
  e.space = Space::torus(2);
  e.source = point2(-1.2, 2.68);
  e.policy_kind = PolicyKind::VonMises2D;
  e.torso_width = 512;
  e.buffer_threshold = 1e-10;
  e.quad_spacing = 0.1;
  e.reward_beta = 0.4009;
  e.basin_radius = 0.4;

  if (potential_file.empty()) {
    e.v_layout = GridLayout::make(e.space, e.quad_spacing);
    e.v_values = synthetic_torus_potential(e.v_layout, e.reward_beta);
    e.mode_centers = synthetic_torus_minima();
    return e;
  }

  std::ifstream in(potential_file);
  if (!in) throw std::runtime_error("torus potential file not readable: " + potential_file);
  GridDump d = load_grid_file(in);
  if (d.layout.space.kind != SpaceKind::Torus || d.layout.dim() != 2)
    throw std::runtime_error("torus potential file must hold a 2-torus grid");
  auto it = d.sections.find("v_hat");
  if (it == d.sections.end() && d.sections.size() == 1) it = d.sections.begin();
  if (it == d.sections.end())
    throw std::runtime_error("torus potential file needs a v_hat section");
  e.v_layout = d.layout;
  e.v_values = it->second;

  // modes = local minima of the tabulated potential, deepest first
  std::vector<std::pair<double, int>> minima;
  const int n0 = e.v_layout.shape[0], n1 = e.v_layout.shape[1];
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      const double c = e.v_values[i * n1 + j];
      const double nb[4] = {e.v_values[((i + 1) % n0) * n1 + j],
                            e.v_values[((i + n0 - 1) % n0) * n1 + j],
                            e.v_values[i * n1 + (j + 1) % n1],
                            e.v_values[i * n1 + (j + n1 - 1) % n1]};
      if (c < nb[0] && c < nb[1] && c < nb[2] && c < nb[3])
        minima.emplace_back(c, i * n1 + j);
    }
  std::sort(minima.begin(), minima.end());
  for (const auto& [v, flat] : minima)
    e.mode_centers.push_back(e.v_layout.node_point(flat));
  return e;
}

Environment Environment::by_name(const std::string& name,
                                 const std::string& torus_potential_file) {
  if (name == "line") return line();
  if (name == "grid") return grid2d();
  if (name == "torus") return torus(torus_potential_file);
  throw std::invalid_argument("unknown environment '" + name +
                              "' (expected one of: line, grid, torus)");
}

double Environment::reward(const Eigen::VectorXd& x) const {
  switch (kind) {
    case EnvKind::Line:
      return line_reward(x[0]);
    case EnvKind::Grid:
      return grid_reward(x[0], x[1]);
    case EnvKind::Torus: {
      const double v = interpolate(v_values, v_layout, space.wrap(x));
      return std::exp(-reward_beta * v);
    }
  }
  throw std::logic_error("unknown environment kind");
}

double Environment::log_reward(const Eigen::VectorXd& x) const {
  const double r = reward(x);
  if (r <= 0.0) return kLogRewardClip;
  return std::max(std::log(r), kLogRewardClip);
}

int Environment::encoded_dim() const {
  const int coord = kind == EnvKind::Torus ? 4 : space.dim();
  return coord + horizon + 1;
}

Eigen::VectorXd Environment::encode(const Eigen::VectorXd& x, int t) const {
  if (t < 0 || t > horizon)
    throw std::invalid_argument("encode: step index out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(encoded_dim());
  if (kind == EnvKind::Torus) {
    v[0] = std::cos(x[0]);
    v[1] = std::sin(x[0]);
    v[2] = std::cos(x[1]);
    v[3] = std::sin(x[1]);
    v[4 + t] = 1.0;
  } else {
    v.head(space.dim()) = x;
    v[space.dim() + t] = 1.0;
  }
  return v;
}

}  // namespace metagfn
