#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

namespace metagfn {

// Seeded randomness with deterministic stream splitting. Every consumer
// (walker, episode, trajectory, ...) derives its own child stream from
// (seed, tag), so the draw order of one consumer never perturbs another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  Rng child(std::uint64_t tag) const { return Rng(mix(seed_, tag)); }
  Rng child(std::string_view tag) const { return child(fnv1a(tag)); }
  Rng child(std::string_view tag, std::uint64_t index) const {
    return Rng(mix(mix(seed_, fnv1a(tag)), index));
  }

  std::uint64_t bits() { return engine_(); }

  // uniform on [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (portable across platforms, unlike
  // std::normal_distribution)
  double normal() {
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  Eigen::VectorXd normal_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // uniform integer in [0, n), rejection sampled so all values are equally
  // likely
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t r = bits();
    while (r >= limit) r = bits();
    return static_cast<int>(r % un);
  }

  // index draw from normalized weights by CDF inversion
  int categorical(const Eigen::VectorXd& weights) {
    const double u = uniform();
    double acc = 0.0;
    for (int i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return static_cast<int>(weights.size()) - 1;
  }

  std::uint64_t seed() const { return seed_; }

  void save(std::ostream& os) const { os << seed_ << ' ' << engine_; }
  void load(std::istream& is) { is >> seed_ >> engine_; }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace metagfn
