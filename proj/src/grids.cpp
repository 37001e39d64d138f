#include "metagfn/grids.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace metagfn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error("grid dump: " + what);
}

std::string kernel_name(KernelKind k) {
  return k == KernelKind::Gaussian ? "gaussian" : "vonmises";
}

}  // namespace

GridLayout GridLayout::make(const Space& space, double target_spacing) {
  if (!(target_spacing > 0.0))
    throw std::invalid_argument("GridLayout: spacing must be positive");
  GridLayout g;
  g.space = space;
  const int d = space.dim();
  g.shape.resize(d);
  g.spacing.resize(d);
  for (int i = 0; i < d; ++i) {
    const double extent = space.upper[i] - space.lower[i];
    if (space.kind == SpaceKind::Torus) {
      const int n = std::max(3, static_cast<int>(std::lround(kTwoPi / target_spacing)));
      g.shape[i] = n;
      g.spacing[i] = kTwoPi / n;
    } else {
      const int cells = std::max(1, static_cast<int>(std::lround(extent / target_spacing)));
      g.shape[i] = cells + 1;
      g.spacing[i] = extent / cells;
    }
  }
  return g;
}

int GridLayout::size() const {
  int n = 1;
  for (int s : shape) n *= s;
  return n;
}

Eigen::VectorXd GridLayout::node_point(int flat) const {
  Eigen::VectorXd p(dim());
  for (int d = dim() - 1; d >= 0; --d) {
    p[d] = node(d, flat % shape[d]);
    flat /= shape[d];
  }
  return p;
}

bool GridLayout::same_layout(const GridLayout& other) const {
  return space.kind == other.space.kind && shape == other.shape &&
         space.lower == other.space.lower && space.upper == other.space.upper;
}

Eigen::ArrayXd kernel_eval(const GridLayout& layout, const Kernel& kernel,
                           const Eigen::VectorXd& z) {
  const int d = layout.dim();
  if (z.size() != d) throw std::invalid_argument("kernel_eval: dimension mismatch");
  if (kernel.width.size() != d)
    throw std::invalid_argument("kernel_eval: kernel width dimension mismatch");

  // separable: per-dimension profiles, combined as an outer product
  std::vector<Eigen::ArrayXd> prof(d);
  for (int k = 0; k < d; ++k) {
    Eigen::ArrayXd v(layout.shape[k]);
    for (int i = 0; i < layout.shape[k]; ++i) {
      const double delta = layout.node(k, i) - z[k];
      if (kernel.kind == KernelKind::Gaussian) {
        const double u = delta / kernel.width[k];
        v[i] = std::exp(-0.5 * u * u);
      } else {
        v[i] = std::exp(kernel.width[k] * (std::cos(delta) - 1.0));
      }
    }
    prof[k] = std::move(v);
  }

  if (d == 1) return prof[0];
  if (d == 2) {
    // column-major storage of prof1 * prof0^T lays out exactly the row-major
    // flat order flat = i0 * shape[1] + i1
    Eigen::MatrixXd outer = prof[1].matrix() * prof[0].matrix().transpose();
    return Eigen::Map<Eigen::ArrayXd>(outer.data(), outer.size());
  }
  Eigen::ArrayXd out(layout.size());
  for (int flat = 0; flat < layout.size(); ++flat) {
    int rem = flat;
    double p = 1.0;
    for (int k = d - 1; k >= 0; --k) {
      p *= prof[k][rem % layout.shape[k]];
      rem /= layout.shape[k];
    }
    out[flat] = p;
  }
  return out;
}

namespace {

// locate z along dimension d: base node index, fraction, and the neighbor
// index (periodic on torus)
struct AxisPos {
  int i0, i1;
  double frac;
};

AxisPos axis_pos(const GridLayout& layout, int d, double zd) {
  const int n = layout.shape[d];
  const double h = layout.spacing[d];
  if (layout.space.kind == SpaceKind::Torus) {
    const double u = (wrap_angle(zd) - layout.space.lower[d]) / h;
    int i0 = static_cast<int>(std::floor(u));
    double frac = u - i0;
    if (i0 >= n) {
      i0 = 0;
      frac = 0.0;
    }
    return {i0, (i0 + 1) % n, frac};
  }
  const double lo = layout.space.lower[d], hi = layout.space.upper[d];
  const double slack = 1e-9 * (hi - lo);
  if (zd < lo - slack || zd > hi + slack)
    throw std::runtime_error("grid read outside box bounds");
  double u = (std::min(std::max(zd, lo), hi) - lo) / h;
  int i0 = static_cast<int>(std::floor(u));
  if (i0 > n - 2) i0 = n - 2;
  return {i0, i0 + 1, u - i0};
}

}  // namespace

double interpolate(const Eigen::ArrayXd& values, const GridLayout& layout,
                   const Eigen::VectorXd& z) {
  const int d = layout.dim();
  if (z.size() != d) throw std::invalid_argument("interpolate: dimension mismatch");
  if (values.size() != layout.size())
    throw std::invalid_argument("interpolate: grid size mismatch");

  std::vector<AxisPos> pos(d);
  for (int k = 0; k < d; ++k) pos[k] = axis_pos(layout, k, z[k]);

  double acc = 0.0;
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    int flat = 0;
    for (int k = 0; k < d; ++k) {
      const bool hi = (c >> k) & 1;
      w *= hi ? pos[k].frac : 1.0 - pos[k].frac;
      flat = flat * layout.shape[k] + (hi ? pos[k].i1 : pos[k].i0);
    }
    if (w != 0.0) acc += w * values[flat];
  }
  return acc;
}

Eigen::VectorXd grad_on_grid(const Eigen::ArrayXd& values,
                             const GridLayout& layout,
                             const Eigen::VectorXd& z) {
  const int d = layout.dim();
  if (z.size() != d) throw std::invalid_argument("grad_on_grid: dimension mismatch");
  Eigen::VectorXd g(d);
  for (int k = 0; k < d; ++k) {
    const double h = layout.spacing[k];
    Eigen::VectorXd zp = z, zm = z;
    zp[k] += h;
    zm[k] -= h;
    if (layout.space.kind == SpaceKind::Torus) {
      g[k] = (interpolate(values, layout, zp) - interpolate(values, layout, zm)) /
             (2.0 * h);
      continue;
    }
    const double lo = layout.space.lower[k], hi = layout.space.upper[k];
    const bool can_up = zp[k] <= hi, can_down = zm[k] >= lo;
    if (can_up && can_down) {
      g[k] = (interpolate(values, layout, zp) - interpolate(values, layout, zm)) /
             (2.0 * h);
    } else if (can_up) {
      g[k] = (interpolate(values, layout, zp) - interpolate(values, layout, z)) / h;
    } else {
      g[k] = (interpolate(values, layout, z) - interpolate(values, layout, zm)) / h;
    }
  }
  return g;
}

PotentialGrids PotentialGrids::make(const Space& space, double target_spacing,
                                    Kernel kernel, double epsilon, double beta) {
  if (!(epsilon > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("PotentialGrids: epsilon and beta must be positive");
  if (space.kind == SpaceKind::Torus && kernel.kind != KernelKind::VonMises)
    throw std::invalid_argument("PotentialGrids: torus grids need a von Mises kernel");
  if (space.kind == SpaceKind::BoundedBox && kernel.kind != KernelKind::Gaussian)
    throw std::invalid_argument("PotentialGrids: box grids need a Gaussian kernel");
  PotentialGrids g;
  g.layout = GridLayout::make(space, target_spacing);
  g.kernel = std::move(kernel);
  g.epsilon = epsilon;
  g.beta = beta;
  const int n = g.layout.size();
  g.n_hat = Eigen::ArrayXd::Zero(n);
  g.r_hat = Eigen::ArrayXd::Zero(n);
  g.v_bias = Eigen::ArrayXd::Zero(n);
  g.recompute_v_hat();
  return g;
}

void PotentialGrids::recompute_v_hat() {
  v_hat = -(1.0 / beta) * (r_hat / (n_hat + epsilon) + epsilon).log();
}

void dump_grid_file(const GridDump& d, std::ostream& os) {
  const GridLayout& L = d.layout;
  os << "metagfn-grids 1\n";
  os << "space " << (L.space.kind == SpaceKind::Torus ? "torus" : "box") << "\n";
  os << "dim " << L.dim() << "\n";
  os << std::setprecision(17);
  os << "shape";
  for (int s : L.shape) os << ' ' << s;
  os << "\nlower";
  for (int i = 0; i < L.dim(); ++i) os << ' ' << L.space.lower[i];
  os << "\nupper";
  for (int i = 0; i < L.dim(); ++i) os << ' ' << L.space.upper[i];
  os << "\nspacing";
  for (int i = 0; i < L.dim(); ++i) os << ' ' << L.spacing[i];
  os << "\nkernel " << kernel_name(d.kernel.kind);
  os << "\nwidth";
  for (int i = 0; i < d.kernel.width.size(); ++i) os << ' ' << d.kernel.width[i];
  os << "\nepsilon " << d.epsilon << "\nbeta " << d.beta << "\n";
  for (const auto& [name, values] : d.sections) {
    require(values.size() == L.size(), "section size mismatch on dump");
    os << "section " << name << "\n";
    for (int i = 0; i < values.size(); ++i) os << values[i] << "\n";
  }
  os << "end\n";
  if (!os) throw std::runtime_error("grid dump: write failure");
}

GridDump load_grid_file(std::istream& is) {
  GridDump d;
  std::string word;
  int version = 0;
  require(static_cast<bool>(is >> word) && word == "metagfn-grids", "bad magic");
  require(static_cast<bool>(is >> version) && version == 1, "unsupported version");

  std::string kind;
  int dim = 0;
  require(static_cast<bool>(is >> word) && word == "space" && (is >> kind),
          "missing space kind");
  require(static_cast<bool>(is >> word) && word == "dim" && (is >> dim) && dim >= 1,
          "missing dim");

  GridLayout L;
  L.shape.resize(dim);
  L.spacing.resize(dim);
  Eigen::VectorXd lower(dim), upper(dim);
  require(static_cast<bool>(is >> word) && word == "shape", "missing shape");
  for (int i = 0; i < dim; ++i) require(static_cast<bool>(is >> L.shape[i]), "bad shape");
  require(static_cast<bool>(is >> word) && word == "lower", "missing lower");
  for (int i = 0; i < dim; ++i) require(static_cast<bool>(is >> lower[i]), "bad lower");
  require(static_cast<bool>(is >> word) && word == "upper", "missing upper");
  for (int i = 0; i < dim; ++i) require(static_cast<bool>(is >> upper[i]), "bad upper");
  require(static_cast<bool>(is >> word) && word == "spacing", "missing spacing");
  for (int i = 0; i < dim; ++i) require(static_cast<bool>(is >> L.spacing[i]), "bad spacing");

  if (kind == "torus") {
    L.space = Space::torus(dim);
  } else {
    require(kind == "box", "unknown space kind");
    L.space = Space::box(lower, upper);
  }

  std::string kname;
  require(static_cast<bool>(is >> word) && word == "kernel" && (is >> kname),
          "missing kernel");
  require(kname == "gaussian" || kname == "vonmises", "unknown kernel");
  d.kernel.kind = kname == "gaussian" ? KernelKind::Gaussian : KernelKind::VonMises;
  d.kernel.width.resize(dim);
  require(static_cast<bool>(is >> word) && word == "width", "missing width");
  for (int i = 0; i < dim; ++i)
    require(static_cast<bool>(is >> d.kernel.width[i]), "bad width");
  require(static_cast<bool>(is >> word) && word == "epsilon" && (is >> d.epsilon),
          "missing epsilon");
  require(static_cast<bool>(is >> word) && word == "beta" && (is >> d.beta),
          "missing beta");

  d.layout = L;
  const int n = L.size();
  while (is >> word) {
    if (word == "end") return d;
    require(word == "section", "expected section");
    std::string name;
    require(static_cast<bool>(is >> name), "missing section name");
    Eigen::ArrayXd values(n);
    for (int i = 0; i < n; ++i)
      require(static_cast<bool>(is >> values[i]), "short section " + name);
    d.sections[name] = std::move(values);
  }
  require(false, "missing end marker");
  return d;
}

void dump_grids(const PotentialGrids& g, std::ostream& os) {
  GridDump d;
  d.layout = g.layout;
  d.kernel = g.kernel;
  d.epsilon = g.epsilon;
  d.beta = g.beta;
  d.sections["n_hat"] = g.n_hat;
  d.sections["r_hat"] = g.r_hat;
  d.sections["v_hat"] = g.v_hat;
  d.sections["v_bias"] = g.v_bias;
  dump_grid_file(d, os);
}

PotentialGrids load_grids(std::istream& is) {
  GridDump d = load_grid_file(is);
  PotentialGrids g;
  g.layout = d.layout;
  g.kernel = d.kernel;
  g.epsilon = d.epsilon;
  g.beta = d.beta;
  for (const char* name : {"n_hat", "r_hat", "v_hat", "v_bias"})
    require(d.sections.count(name) == 1, std::string("missing section ") + name);
  g.n_hat = d.sections["n_hat"];
  g.r_hat = d.sections["r_hat"];
  g.v_hat = d.sections["v_hat"];
  g.v_bias = d.sections["v_bias"];
  return g;
}

}  // namespace metagfn
