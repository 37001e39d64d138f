#pragma once

#include <Eigen/Dense>

#include "metagfn/rng.hpp"
#include "metagfn/space.hpp"

namespace metagfn {

// Mixture families used as transition kernels: 3 Gaussians on the line,
// 4 diagonal bivariate Gaussians on the plane, 3 products of univariate
// von Mises on the 2-torus.
enum class PolicyKind { Gauss1D, Gauss2D, VonMises2D };

int policy_components(PolicyKind kind);  // 3 / 4 / 3
int policy_point_dim(PolicyKind kind);   // 1 / 2 / 2
int policy_raw_dim(PolicyKind kind);     // 9 / 24 / 15

struct MixtureParams {
  Eigen::MatrixXd mean;     // components x point_dim
  Eigen::MatrixXd scale;    // sigma (Gauss) or kappa (VonMises), same shape
  Eigen::VectorXd weights;  // simplex over components
};

// Raw head output -> mixture parameters. Means and scales are squashed into
// fixed ranges (sigmoid for Gaussian means/sigmas and for ln kappa,
// 2*arctan for angular means); weights go through softmax.
// Raw layout: [means][scales][weight logits], components varying fastest
// inside each block; the 2-D Gaussian scale block carries 3 slots per
// component of which the third is unused.
MixtureParams head_to_mixture(PolicyKind kind, const Eigen::VectorXd& raw);

// Additive exploration noise: sigma' = sigma + sigma_bar for Gaussians;
// kappa' = (kappa^(-1/2) + sigma_bar)^(-2) for von Mises.
MixtureParams apply_noise(PolicyKind kind, MixtureParams pol, double sigma_bar);

// log of the normalized mixture density at x (an offset vector; angles for
// the von Mises kind)
double log_density(PolicyKind kind, const MixtureParams& pol,
                   const Eigen::VectorXd& x);

// ancestral sampling: categorical component, then the component distribution;
// von Mises via Best-Fisher rejection, result canonical in [-pi, pi)
Eigen::VectorXd sample(PolicyKind kind, const MixtureParams& pol, Rng& rng);

double sample_von_mises(double mu, double kappa, Rng& rng);

// exploration noise level at batch j of B: an exponential decay that reaches
// exactly zero at j = B/2 and stays there
double noise_schedule(double j, double total_batches, double sigma0);

double log_bessel_i0(double kappa);

// squash ranges per kind
double policy_mu_lo(PolicyKind kind);
double policy_mu_hi(PolicyKind kind);
double policy_sigma_lo(PolicyKind kind);
double policy_sigma_hi(PolicyKind kind);
inline constexpr double kLnKappaHi = 5.0;

}  // namespace metagfn
