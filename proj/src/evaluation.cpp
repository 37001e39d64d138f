#include "metagfn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metagfn {

namespace {

// flat index of the cell containing x (C order, last dimension fastest)
int cell_index(const GridLayout& layout, const Eigen::VectorXd& x) {
  const Eigen::VectorXd xc = layout.space.wrap(x);
  int flat = 0;
  for (int d = 0; d < layout.dim(); ++d) {
    int i = static_cast<int>(
        std::floor((xc[d] - layout.space.lower[d]) / layout.spacing[d]));
    if (layout.space.kind == SpaceKind::Torus)
      i = ((i % layout.shape[d]) + layout.shape[d]) % layout.shape[d];
    else
      i = std::clamp(i, 0, layout.shape[d] - 1);
    flat = flat * layout.shape[d] + i;
  }
  return flat;
}

void check_same_layout(const GridLayout& a, const GridLayout& b) {
  if (!a.same_layout(b))
    throw std::invalid_argument("density grids live on different layouts");
}

}  // namespace

GridLayout eval_layout(const Environment& env) {
  return GridLayout::make(env.space, env.quad_spacing);
}

DensityGrid empirical_histogram(const std::vector<Eigen::VectorXd>& samples,
                                const Environment& env) {
  if (samples.empty())
    throw std::invalid_argument("empirical_histogram: no samples");
  DensityGrid g{eval_layout(env), {}};
  g.mass = Eigen::ArrayXd::Zero(g.layout.size());
  for (const Eigen::VectorXd& x : samples) g.mass[cell_index(g.layout, x)] += 1.0;
  g.mass /= static_cast<double>(samples.size());
  return g;
}

DensityGrid target_histogram(const Environment& env) {
  DensityGrid g{eval_layout(env), {}};
  g.mass.resize(g.layout.size());
  for (int flat = 0; flat < g.layout.size(); ++flat)
    g.mass[flat] = env.reward(g.layout.node_point(flat));
  g.mass /= g.mass.sum();
  return g;
}

double l1_error(const DensityGrid& p, const DensityGrid& q) {
  check_same_layout(p.layout, q.layout);
  return 0.5 * (p.mass - q.mass).abs().sum();
}

std::vector<bool> mode_coverage(const DensityGrid& hist,
                                const std::vector<Eigen::VectorXd>& centers,
                                double basin_radius) {
  const GridLayout& layout = hist.layout;
  const int dim = layout.dim();
  const bool periodic = layout.space.kind == SpaceKind::Torus;

  // strides of the C-order flat index
  std::vector<int> stride(dim, 1);
  for (int d = dim - 2; d >= 0; --d) stride[d] = stride[d + 1] * layout.shape[d + 1];

  const auto is_local_max = [&](int flat) {
    std::vector<int> idx(dim);
    int rem = flat;
    for (int d = dim - 1; d >= 0; --d) {
      idx[d] = rem % layout.shape[d];
      rem /= layout.shape[d];
    }
    for (int d = 0; d < dim; ++d) {
      for (const int step : {-1, 1}) {
        int j = idx[d] + step;
        if (periodic)
          j = (j + layout.shape[d]) % layout.shape[d];
        else if (j < 0 || j >= layout.shape[d])
          continue;
        const int other = flat + (j - idx[d]) * stride[d];
        if (!(hist.mass[flat] > hist.mass[other])) return false;
      }
    }
    return true;
  };

  std::vector<bool> covered;
  covered.reserve(centers.size());
  for (const Eigen::VectorXd& c : centers) {
    bool hit = false;
    bool basin_nonempty = false;
    for (int flat = 0; flat < layout.size(); ++flat) {
      const Eigen::VectorXd node = layout.node_point(flat);
      if (layout.space.displacement(c, node).norm() > basin_radius) continue;
      basin_nonempty = true;
      if (is_local_max(flat)) {
        hit = true;
        break;
      }
    }
    if (!basin_nonempty)
      throw std::invalid_argument("mode_coverage: basin contains no cell");
    covered.push_back(hit);
  }
  return covered;
}

GridDump density_to_dump(const DensityGrid& g) {
  GridDump d;
  d.layout = g.layout;
  // the format always carries a kernel line; a histogram has none, so write
  // a unit placeholder of the kind the space expects
  d.kernel.kind = g.layout.space.kind == SpaceKind::Torus
                      ? KernelKind::VonMises
                      : KernelKind::Gaussian;
  d.kernel.width = Eigen::VectorXd::Ones(g.layout.dim());
  d.sections["mass"] = g.mass;
  return d;
}

DensityGrid density_from_dump(const GridDump& d) {
  const auto it = d.sections.find("mass");
  if (it == d.sections.end())
    throw std::invalid_argument("density_from_dump: no mass section");
  return {d.layout, it->second};
}

}  // namespace metagfn
