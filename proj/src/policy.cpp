#include "metagfn/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace metagfn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

int policy_components(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Gauss1D: return 3;
    case PolicyKind::Gauss2D: return 4;
    case PolicyKind::VonMises2D: return 3;
  }
  throw std::logic_error("unknown policy kind");
}

int policy_point_dim(PolicyKind kind) {
  return kind == PolicyKind::Gauss1D ? 1 : 2;
}

int policy_raw_dim(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Gauss1D: return 9;
    case PolicyKind::Gauss2D: return 24;
    case PolicyKind::VonMises2D: return 15;
  }
  throw std::logic_error("unknown policy kind");
}

double policy_mu_lo(PolicyKind kind) {
  return kind == PolicyKind::Gauss1D ? -14.0 : -15.0;
}
double policy_mu_hi(PolicyKind kind) {
  return kind == PolicyKind::Gauss1D ? 14.0 : 15.0;
}
double policy_sigma_lo(PolicyKind) { return 0.1; }
double policy_sigma_hi(PolicyKind kind) {
  return kind == PolicyKind::Gauss1D ? 1.0 : 7.0;
}

MixtureParams head_to_mixture(PolicyKind kind, const Eigen::VectorXd& raw) {
  if (raw.size() != policy_raw_dim(kind))
    throw std::invalid_argument("head_to_mixture: wrong raw length");
  const int K = policy_components(kind);
  const int d = policy_point_dim(kind);
  MixtureParams p;
  p.mean.resize(K, d);
  p.scale.resize(K, d);
  p.weights.resize(K);

  if (kind == PolicyKind::VonMises2D) {
    // [6 means][6 ln-kappa slots][3 logits]
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < d; ++j) {
        p.mean(k, j) = 2.0 * std::atan(raw[k * d + j]);
        p.scale(k, j) = std::exp(kLnKappaHi * sigmoid(raw[K * d + k * d + j]));
      }
    Eigen::VectorXd logits = raw.segment(2 * K * d, K);
    p.weights = (logits.array() - logsumexp(logits)).exp();
    return p;
  }

  const double mu_lo = policy_mu_lo(kind), mu_hi = policy_mu_hi(kind);
  const double s_lo = policy_sigma_lo(kind), s_hi = policy_sigma_hi(kind);
  // the 2-D scale block has one dead slot per component
  const int s_slots = kind == PolicyKind::Gauss2D ? 3 : d;
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < d; ++j) {
      p.mean(k, j) = mu_lo + (mu_hi - mu_lo) * sigmoid(raw[k * d + j]);
      p.scale(k, j) =
          s_lo + (s_hi - s_lo) * sigmoid(raw[K * d + k * s_slots + j]);
    }
  Eigen::VectorXd logits = raw.segment(K * d + K * s_slots, K);
  p.weights = (logits.array() - logsumexp(logits)).exp();
  return p;
}

MixtureParams apply_noise(PolicyKind kind, MixtureParams pol, double sigma_bar) {
  if (sigma_bar < 0.0)
    throw std::invalid_argument("apply_noise: sigma_bar must be >= 0");
  if (sigma_bar == 0.0) return pol;
  if (kind == PolicyKind::VonMises2D) {
    pol.scale = (pol.scale.array().pow(-0.5) + sigma_bar).pow(-2.0);
  } else {
    pol.scale.array() += sigma_bar;
  }
  return pol;
}

double log_bessel_i0(double kappa) {
  return std::log(std::cyl_bessel_i(0.0, kappa));
}

double log_density(PolicyKind kind, const MixtureParams& pol,
                   const Eigen::VectorXd& x) {
  const int K = static_cast<int>(pol.weights.size());
  const int d = policy_point_dim(kind);
  if (x.size() != d) throw std::invalid_argument("log_density: dimension mismatch");
  constexpr double kLog2Pi = 1.8378770664093453;
  Eigen::VectorXd terms(K);
  for (int k = 0; k < K; ++k) {
    double lp = std::log(pol.weights[k]);
    for (int j = 0; j < d; ++j) {
      if (kind == PolicyKind::VonMises2D) {
        const double kap = pol.scale(k, j);
        lp += kap * std::cos(x[j] - pol.mean(k, j)) - kLog2Pi - log_bessel_i0(kap);
      } else {
        const double s = pol.scale(k, j);
        const double u = (x[j] - pol.mean(k, j)) / s;
        lp += -0.5 * u * u - 0.5 * kLog2Pi - std::log(s);
      }
    }
    terms[k] = lp;
  }
  return logsumexp(terms);
}

double sample_von_mises(double mu, double kappa, Rng& rng) {
  if (!(kappa > 0.0))
    throw std::invalid_argument("sample_von_mises: kappa must be positive");
  // Best-Fisher (1979) rejection sampler
  const double a = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double b = (a - std::sqrt(2.0 * a)) / (2.0 * kappa);
  const double r = (1.0 + b * b) / (2.0 * b);
  for (;;) {
    const double u1 = rng.uniform();
    const double zc = std::cos(kPi * u1);
    const double f = (1.0 + r * zc) / (r + zc);
    const double c = kappa * (r - f);
    const double u2 = rng.uniform();
    if (c * (2.0 - c) - u2 > 0.0 ||
        (u2 > 0.0 && std::log(c / u2) + 1.0 - c >= 0.0)) {
      const double u3 = rng.uniform();
      const double theta = (u3 < 0.5 ? -1.0 : 1.0) * std::acos(f);
      return wrap_angle(mu + theta);
    }
  }
}

Eigen::VectorXd sample(PolicyKind kind, const MixtureParams& pol, Rng& rng) {
  const int k = rng.categorical(pol.weights);
  const int d = policy_point_dim(kind);
  Eigen::VectorXd x(d);
  for (int j = 0; j < d; ++j) {
    if (kind == PolicyKind::VonMises2D) {
      x[j] = sample_von_mises(pol.mean(k, j), pol.scale(k, j), rng);
    } else {
      x[j] = pol.mean(k, j) + pol.scale(k, j) * rng.normal();
    }
  }
  return x;
}

double noise_schedule(double j, double total_batches, double sigma0) {
  constexpr double kE = 2.71828182845904523536;
  if (j >= total_batches / 2.0) return 0.0;
  return sigma0 *
         (std::exp(-4.0 * kE * j / total_batches) - std::exp(-2.0 * kE));
}

}  // namespace metagfn
