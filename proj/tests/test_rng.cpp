#include <doctest.h>

#include <cmath>
#include <sstream>

#include "metagfn/rng.hpp"

using namespace metagfn;

TEST_CASE("rng streams are deterministic and children are independent") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.bits() == b.bits());

  Rng parent(5);
  Rng c1 = parent.child("walker", 0);
  Rng c2 = parent.child("walker", 1);
  Rng c3 = parent.child("episode", 0);
  CHECK(c1.seed() != c2.seed());
  CHECK(c1.seed() != c3.seed());

  // child derivation does not consume parent state
  Rng p2(5);
  p2.child("walker", 0);
  Rng q2(5);
  CHECK(p2.bits() == q2.bits());
}

TEST_CASE("uniform and normal have the expected moments") {
  Rng rng(2024);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(su2 / n - 0.25 == doctest::Approx(1.0 / 12).epsilon(0.03));
  CHECK(sn / n == doctest::Approx(0.0).scale(1).epsilon(0.01));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform_int and categorical hit the right frequencies") {
  Rng rng(31);
  int counts[5] = {0, 0, 0, 0, 0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(5)];
  for (int c : counts) CHECK(static_cast<double>(c) / n == doctest::Approx(0.2).epsilon(0.05));

  Eigen::VectorXd w(3);
  w << 0.5, 0.3, 0.2;
  int cc[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) ++cc[rng.categorical(w)];
  CHECK(static_cast<double>(cc[0]) / n == doctest::Approx(0.5).epsilon(0.03));
  CHECK(static_cast<double>(cc[1]) / n == doctest::Approx(0.3).epsilon(0.03));
  CHECK(static_cast<double>(cc[2]) / n == doctest::Approx(0.2).epsilon(0.03));

  Eigen::VectorXd degenerate(3);
  degenerate << 0.0, 1.0, 0.0;
  for (int i = 0; i < 100; ++i) CHECK(rng.categorical(degenerate) == 1);

  CHECK_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

TEST_CASE("rng state round-trips through a stream") {
  Rng a(777);
  for (int i = 0; i < 37; ++i) a.bits();
  std::stringstream ss;
  a.save(ss);
  Rng b(0);
  b.load(ss);
  for (int i = 0; i < 100; ++i) CHECK(a.bits() == b.bits());
}
