#pragma once

#include <vector>

#include <Eigen/Dense>

#include "metagfn/environment.hpp"
#include "metagfn/grids.hpp"

namespace metagfn {

// A normalized mass vector over the nodes of an evaluation grid; node i owns
// the half-open cell [node_i, node_i + spacing_i) along every dimension.
struct DensityGrid {
  GridLayout layout;
  Eigen::ArrayXd mass;  // non-negative, sums to 1
};

// the evaluation grid of an environment: its state space at quad_spacing
GridLayout eval_layout(const Environment& env);

// Bin terminal samples on the evaluation grid: floor cell indexing, clamped
// into range on boxes and wrapped on the torus (so the two sides of the
// periodic seam land in adjacent cells), normalized by the sample count.
// Throws on an empty sample set.
DensityGrid empirical_histogram(const std::vector<Eigen::VectorXd>& samples,
                                const Environment& env);

// the reward evaluated at the grid nodes, normalized into a mass vector
DensityGrid target_histogram(const Environment& env);

// half the summed absolute mass difference, in [0, 1]; layouts must match
double l1_error(const DensityGrid& p, const DensityGrid& q);

// One flag per center: set when the histogram has a strict-local-maximum
// cell (strictly above every axis neighbor; neighbors wrap on the torus)
// within basin_radius of that center. Throws when a basin contains no cell.
std::vector<bool> mode_coverage(const DensityGrid& hist,
                                const std::vector<Eigen::VectorXd>& centers,
                                double basin_radius);

// single-section ("mass") grid-dump round trip
GridDump density_to_dump(const DensityGrid& g);
DensityGrid density_from_dump(const GridDump& d);

}  // namespace metagfn
