#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "metagfn/space.hpp"

namespace metagfn {

enum class KernelKind { Gaussian, VonMises };

struct Kernel {
  KernelKind kind = KernelKind::Gaussian;
  Eigen::VectorXd width;  // sigma per dim (Gaussian) or kappa per dim (VonMises)
};

// Regular node grid over a box or torus. Box grids include both bounds,
// spacing = extent/(nodes-1); torus grids tile the period, spacing = 2pi/nodes
// with no duplicate seam node.
struct GridLayout {
  Space space;
  std::vector<int> shape;
  Eigen::VectorXd spacing;

  static GridLayout make(const Space& space, double target_spacing);

  int dim() const { return static_cast<int>(shape.size()); }
  int size() const;
  double node(int d, int i) const { return space.lower[d] + i * spacing[d]; }
  Eigen::VectorXd node_point(int flat) const;
  bool same_layout(const GridLayout& other) const;
};

// Kernel profile evaluated at every grid node for a center z:
//   Gaussian: exp(-1/2 sum_d ((node_d - z_d)/sigma_d)^2)
//   VonMises: exp(sum_d kappa_d (cos(node_d - z_d) - 1))
// Peak value is exactly 1 at z.
Eigen::ArrayXd kernel_eval(const GridLayout& layout, const Kernel& kernel,
                           const Eigen::VectorXd& z);

// multilinear interpolation; periodic across the seam on torus layouts,
// error outside the bounds of a box layout
double interpolate(const Eigen::ArrayXd& values, const GridLayout& layout,
                   const Eigen::VectorXd& z);

// per-dimension finite difference of the interpolated surface with step =
// grid spacing; central in the interior, one-sided at box edges
Eigen::VectorXd grad_on_grid(const Eigen::ArrayXd& values,
                             const GridLayout& layout,
                             const Eigen::VectorXd& z);

// The four KDE/bias grids of adapted metadynamics plus their metadata.
// v_hat is always the regularized potential -(1/beta) log(r_hat/(n_hat +
// epsilon) + epsilon) of the current KDEs.
struct PotentialGrids {
  GridLayout layout;
  Kernel kernel;
  double epsilon = 1e-3;
  double beta = 1.0;
  Eigen::ArrayXd n_hat, r_hat, v_hat, v_bias;

  static PotentialGrids make(const Space& space, double target_spacing,
                             Kernel kernel, double epsilon, double beta);
  void recompute_v_hat();
};

// Text dump: header (kind, shape, bounds, spacing, kernel, epsilon, beta)
// followed by named value sections, one node per line at full double
// precision, so a dump/load cycle is bit-exact. External potential tables
// use the same format with a single section.
struct GridDump {
  GridLayout layout;
  Kernel kernel;
  double epsilon = 1e-3;
  double beta = 1.0;
  std::map<std::string, Eigen::ArrayXd> sections;
};

void dump_grid_file(const GridDump& d, std::ostream& os);
GridDump load_grid_file(std::istream& is);

void dump_grids(const PotentialGrids& g, std::ostream& os);
PotentialGrids load_grids(std::istream& is);

}  // namespace metagfn
