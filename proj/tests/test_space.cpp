#include <doctest.h>

#include <cmath>

#include "metagfn/rng.hpp"
#include "metagfn/space.hpp"

using namespace metagfn;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

// modular reduction done the slow way, as an independent reference
double wrap_reference(double a) {
  double y = std::fmod(a + kPi, kTwoPi);
  if (y < 0) y += kTwoPi;
  return y - kPi;
}

}  // namespace

TEST_CASE("torus wrap canonicalizes into [-pi, pi)") {
  const Space t2 = Space::torus(2);
  const Eigen::VectorXd w = t2.wrap(vec2(3.5, 0.0));
  CHECK(w[0] == doctest::Approx(3.5 - kTwoPi).epsilon(1e-12));
  CHECK(w[0] == doctest::Approx(wrap_reference(3.5)).epsilon(1e-14));
  CHECK(w[1] == 0.0);

  CHECK(t2.wrap(vec2(0.0, 0.0)) == vec2(0.0, 0.0));

  const Space line = Space::box1d(-5.0, 23.0);
  CHECK(line.wrap(vec1(7.0))[0] == 7.0);
}

TEST_CASE("wrap is idempotent and agrees with reference on random angles") {
  const Space t1 = Space::torus(1);
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const Eigen::VectorXd w = t1.wrap(vec1(a));
    CHECK(w[0] >= -kPi);
    CHECK(w[0] < kPi);
    CHECK(w[0] == doctest::Approx(wrap_reference(a)).epsilon(1e-12));
    CHECK(t1.wrap(w)[0] == w[0]);
  }
}

TEST_CASE("box reflection mirrors position and negates momentum") {
  const Space line = Space::box1d(-5.0, 23.0);

  Eigen::VectorXd x = vec1(-5.1), p = vec1(-0.3);
  line.reflect(x, p);
  CHECK(x[0] == doctest::Approx(-4.9).epsilon(1e-15));
  CHECK(p[0] == doctest::Approx(0.3).epsilon(1e-15));

  x = vec1(10.0);
  p = vec1(1.0);
  line.reflect(x, p);
  CHECK(x[0] == 10.0);
  CHECK(p[0] == 1.0);

  x = vec1(23.4);
  p = vec1(0.2);
  line.reflect(x, p);
  CHECK(x[0] == doctest::Approx(22.6).epsilon(1e-15));
  CHECK(p[0] == doctest::Approx(-0.2).epsilon(1e-15));
}

TEST_CASE("reflection preserves momentum magnitude and rejects overshoot") {
  const Space box = Space::box(vec2(-1.0, -1.0), vec2(1.0, 1.0));
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd x = vec2(rng.uniform(-2.9, 2.9), rng.uniform(-2.9, 2.9));
    Eigen::VectorXd p = vec2(rng.normal(), rng.normal());
    const Eigen::VectorXd p0 = p;
    Eigen::VectorXd x_in = x;
    box.reflect(x_in, p);
    CHECK(box.contains(x_in));
    CHECK(p.cwiseAbs().isApprox(p0.cwiseAbs(), 1e-15));
    CHECK(p.squaredNorm() == doctest::Approx(p0.squaredNorm()).epsilon(1e-14));
  }

  Eigen::VectorXd far = vec2(3.5, 0.0), p = vec2(0.0, 0.0);
  CHECK_THROWS_AS(box.reflect(far, p), std::runtime_error);

  const Space t1 = Space::torus(1);
  Eigen::VectorXd xt = vec1(0.0), pt = vec1(0.0);
  CHECK_THROWS_AS(t1.reflect(xt, pt), std::invalid_argument);
}

TEST_CASE("displacement takes the short way across the torus seam") {
  const Space t1 = Space::torus(1);
  const double d = t1.displacement(vec1(3.0), vec1(-3.0))[0];
  CHECK(d == doctest::Approx(kTwoPi - 6.0).epsilon(1e-12));
  CHECK(d == doctest::Approx(0.2832).epsilon(1e-3));

  const Space line = Space::box1d(-10.0, 10.0);
  CHECK(line.displacement(vec1(2.0), vec1(5.0))[0] == 3.0);
  CHECK(t1.displacement(vec1(0.5), vec1(0.5))[0] == 0.0);
}

TEST_CASE("displacement antisymmetry and torus bound") {
  const Space t2 = Space::torus(2);
  const Space box = Space::box(vec2(-5.0, -5.0), vec2(5.0, 5.0));
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd a = t2.wrap(vec2(rng.uniform(-9, 9), rng.uniform(-9, 9)));
    const Eigen::VectorXd b = t2.wrap(vec2(rng.uniform(-9, 9), rng.uniform(-9, 9)));
    const Eigen::VectorXd dab = t2.displacement(a, b);
    const Eigen::VectorXd dba = t2.displacement(b, a);
    CHECK(dab.cwiseAbs().maxCoeff() <= kPi);
    CHECK((dab + dba).cwiseAbs().maxCoeff() < 1e-12);

    const Eigen::VectorXd u = vec2(rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Eigen::VectorXd v = vec2(rng.uniform(-5, 5), rng.uniform(-5, 5));
    CHECK(box.displacement(u, v) == Eigen::VectorXd(v - u));
    CHECK((box.displacement(u, v) + box.displacement(v, u)).norm() == 0.0);
  }
}

TEST_CASE("space constructors validate their arguments") {
  CHECK_THROWS_AS(Space::box1d(2.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(Space::torus(0), std::invalid_argument);
  const Space t2 = Space::torus(2);
  CHECK_THROWS_AS(t2.wrap(vec1(0.0)), std::invalid_argument);
  CHECK_THROWS_AS(t2.displacement(vec1(0.0), vec2(0, 0)), std::invalid_argument);
}
