#include "metagfn/metadynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace metagfn {

MetadParams MetadParams::defaults_for(EnvKind kind) {
  MetadParams p;
  switch (kind) {
    case EnvKind::Line:
      p.langevin = {2.0, 1.0, 0.05, {}};
      p.stride = 2;
      p.bias_height = 0.15;
      p.epsilon = 1e-3;
      p.kernel_width = 0.1;
      p.grid_spacing = 0.01;
      break;
    case EnvKind::Grid:
      p.langevin = {2.0, 1.0, 0.35, {}};
      p.stride = 3;
      p.bias_height = 0.10;
      p.epsilon = 1e-3;
      p.kernel_width = 2.0;
      p.grid_spacing = 0.075;
      break;
    case EnvKind::Torus:
      p.langevin = {0.1, 0.4009, 0.01, {}};
      p.stride = 2;
      p.bias_height = 1e-5;
      p.epsilon = 1e-6;
      p.kernel_width = 10.0;
      p.grid_spacing = 0.1;
      break;
  }
  return p;
}

Kernel MetadParams::make_kernel(const Space& cv_space) const {
  Kernel k;
  k.kind = cv_space.kind == SpaceKind::Torus ? KernelKind::VonMises
                                             : KernelKind::Gaussian;
  k.width = Eigen::VectorXd::Constant(cv_space.dim(), kernel_width);
  return k;
}

AmState am_init(const Environment& env, const MetadParams& prm, int n_walkers,
                const Rng& rng) {
  if (n_walkers <= 0)
    throw std::invalid_argument("am_init: need at least one walker");
  AmState st;
  st.grids = PotentialGrids::make(env.space, prm.grid_spacing,
                                  prm.make_kernel(env.space), prm.epsilon,
                                  prm.langevin.beta);
  const int d = env.space.dim();
  Rng init = rng.child("am_init");
  for (int w = 0; w < n_walkers; ++w) {
    WalkerState walker;
    walker.x.resize(d);
    walker.p.resize(d);
    switch (env.kind) {
      case EnvKind::Line:
        walker.x[0] = init.normal();
        walker.p[0] = std::sqrt(0.5) * init.normal();
        break;
      case EnvKind::Grid:
        walker.x = init.normal_vec(d);
        walker.p.setZero();
        break;
      case EnvKind::Torus:
        walker.x = env.source + std::sqrt(0.1) * init.normal_vec(d);
        walker.x = env.space.wrap(walker.x);
        walker.p = std::sqrt(0.05) * init.normal_vec(d);
        break;
    }
    if (env.space.kind == SpaceKind::BoundedBox) {
      Eigen::VectorXd p_keep = walker.p;
      env.space.reflect(walker.x, p_keep);
      walker.p = p_keep;
    }
    st.walkers.push_back(std::move(walker));
    st.walker_rngs.push_back(rng.child("am_walker", static_cast<std::uint64_t>(w)));
  }
  return st;
}

void deposit(PotentialGrids& grids, const Eigen::VectorXd& z, double reward,
             const MetadParams& prm) {
  if (reward < 0.0) throw std::invalid_argument("deposit: negative reward");
  const Eigen::ArrayXd k = kernel_eval(grids.layout, grids.kernel, z);
  grids.n_hat += k;
  grids.r_hat += reward * k;
  grids.recompute_v_hat();
  grids.v_bias += (prm.stride * prm.langevin.dt * prm.bias_height) * k;
}

void am_step(AmState& st, const Environment& env, const MetadParams& prm) {
  ++st.step_count;
  if (st.step_count % prm.stride == 0) {
    for (const WalkerState& w : st.walkers)
      deposit(st.grids, env.cv(w.x), env.reward(w.x), prm);
  }

  const int n = static_cast<int>(st.walkers.size());
  std::vector<Eigen::VectorXd> forces(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd z = env.cv(st.walkers[i].x);
    forces[i] = -(grad_on_grid(st.grids.v_hat, st.grids.layout, z) +
                  grad_on_grid(st.grids.v_bias, st.grids.layout, z));
  }
  for (int i = 0; i < n; ++i)
    em_step(st.walkers[i], forces[i], prm.langevin, env.space, st.walker_rngs[i]);
}

std::vector<Eigen::VectorXd> walker_positions(const AmState& st) {
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(st.walkers.size());
  for (const WalkerState& w : st.walkers) xs.push_back(w.x);
  return xs;
}

namespace {

// per-node quadrature weights including the cell volume: trapezoid rule on
// boxes, uniform cells on the torus
Eigen::ArrayXd quadrature_weights(const GridLayout& layout) {
  double cell = 1.0;
  for (int d = 0; d < layout.dim(); ++d) cell *= layout.spacing[d];
  Eigen::ArrayXd w = Eigen::ArrayXd::Constant(layout.size(), cell);
  if (layout.space.kind == SpaceKind::Torus) return w;
  for (int flat = 0; flat < layout.size(); ++flat) {
    int rem = flat;
    for (int d = layout.dim() - 1; d >= 0; --d) {
      const int i = rem % layout.shape[d];
      rem /= layout.shape[d];
      if (i == 0 || i == layout.shape[d] - 1) w[flat] *= 0.5;
    }
  }
  return w;
}

Eigen::ArrayXd normalize_values(Eigen::ArrayXd values, const GridLayout& layout) {
  const double total = (values * quadrature_weights(layout)).sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::runtime_error("density normalization: degenerate values");
  return values / total;
}

}  // namespace

Eigen::ArrayXd implied_density(const PotentialGrids& grids) {
  return normalize_values((-grids.beta * grids.v_hat).exp(), grids.layout);
}

Eigen::ArrayXd node_target_density(const Environment& env,
                                   const GridLayout& layout) {
  Eigen::ArrayXd r(layout.size());
  for (int i = 0; i < layout.size(); ++i)
    r[i] = env.reward(layout.node_point(i));
  return normalize_values(std::move(r), layout);
}

double density_l1(const Eigen::ArrayXd& p, const Eigen::ArrayXd& q,
                  const GridLayout& layout) {
  if (p.size() != q.size() || p.size() != layout.size())
    throw std::invalid_argument("density_l1: grid mismatch");
  return 0.5 * ((p - q).abs() * quadrature_weights(layout)).sum();
}

}  // namespace metagfn
