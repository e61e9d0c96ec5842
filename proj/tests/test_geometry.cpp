#include <doctest.h>

#include <cmath>
#include <random>

#include "levy/errors.hpp"
#include "levy/geometry.hpp"
#include "oracles.hpp"

using namespace levy;

namespace {

Mat diag(std::initializer_list<double> d) {
  Vec v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v[i++] = x;
  return v.asDiagonal();
}

Mat random_spd(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Mat B(d, d);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = n(rng);
  return B * B.transpose() + 0.3 * Mat::Identity(d, d);
}

}  // namespace

TEST_CASE("escape sets from a spectrum") {
  SUBCASE("isotropic case collapses both sets") {
    const Spectrum s{{2, 2}, {1, 1}, 1, 2.0};
    const auto w = build_escape_sets(s);
    CHECK(w.sgd.A.isApprox(2.0 * Mat::Identity(2, 2)));
    CHECK(w.adam.A.isApprox(2.0 * Mat::Identity(2, 2)));
    CHECK(w.sgd.c == 2.0);
    Vec y(2);
    y << 1.0, 0.0;
    CHECK(w.sgd.contains(y));
    y << 0.7, 0.7;
    CHECK_FALSE(w.adam.contains(y));
  }
  SUBCASE("zero noise gives an empty SGD set") {
    const Spectrum s{{2, 1}, {0, 0}, 1, 1.0};
    const auto w = build_escape_sets(s);
    Vec y(2);
    y << 1e9, -1e9;
    CHECK_FALSE(w.sgd.contains(y));
    CHECK_THROWS_AS(radon_measure(w.sgd, 1.5), DegenerateError);
  }
  SUBCASE("entrywise product lambda * sigma^2") {
    const Spectrum s{{4, 1}, {2, 0.5}, 1, 1.0};
    CHECK(build_escape_sets(s).sgd.A.isApprox(diag({16, 0.25})));
  }
  SUBCASE("batch size scales the threshold") {
    const Spectrum s{{4, 1}, {2, 0.5}, 3, 0.5};
    CHECK(build_escape_sets(s).adam.c == doctest::Approx(4.5));
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS((Spectrum{{1, 2}, {1, 1}, 1, 1.0}.validate()), DomainError);
    CHECK_THROWS_AS((Spectrum{{2, 1}, {1}, 1, 1.0}.validate()), DimensionError);
    CHECK_THROWS_AS((Spectrum{{2, 1}, {1, 1}, 0, 1.0}.validate()), DomainError);
  }
}

TEST_CASE("radon measure closed form in one dimension") {
  const QuadraticEscapeSet w{Mat::Identity(1, 1), 4.0};  // |y| >= 2
  const auto m = radon_measure(w, 1.0);
  CHECK(m.exact);
  CHECK(m.value == doctest::Approx(1.0).epsilon(1e-15));
  const QuadraticEscapeSet w4{Mat::Identity(1, 1), 16.0};
  CHECK(radon_measure(w4, 1.3).value ==
        doctest::Approx(std::pow(2.0, -1.3) * radon_measure(w, 1.3).value).epsilon(1e-14));
  // Direct integral of 2 y^{-1-alpha} over [b, inf).
  const double direct = 2.0 * oracle::simpson([](double s) { return std::pow(2.0 * std::exp(s), -1.7); }, 0, 40, 4000);
  CHECK(radon_measure(w, 1.7).value == doctest::Approx(direct).epsilon(1e-8));
  CHECK(normalized_radon_measure(w, 1.7).value == doctest::Approx(std::pow(2.0, -1.7)).epsilon(1e-14));
}

TEST_CASE("sphere sampling matches grid quadrature") {
  SUBCASE("diag(4, 1), alpha 1.5") {
    const QuadraticEscapeSet w{diag({4, 1}), 1.0};
    const double grid = oracle::grid_radon_measure(w.A, w.c, 1.5);
    const auto m = radon_measure(w, 1.5, 1000000, 3, 4);
    CHECK(m.directions == 1000000);
    CHECK(m.std_error > 0.0);
    CHECK(std::abs(m.value / grid - 1.0) < 0.01);
  }
  SUBCASE("random SPD in d = 3") {
    const QuadraticEscapeSet w{random_spd(3, 8), 2.0};
    const double grid = oracle::grid_radon_measure(w.A, w.c, 1.2);
    CHECK(std::abs(radon_measure(w, 1.2, 1000000, 4, 4).value / grid - 1.0) < 0.01);
  }
}

TEST_CASE("homogeneity and invariances of the sampled measure") {
  const QuadraticEscapeSet w{random_spd(2, 1), 1.0};
  const QuadraticEscapeSet w3{w.A, 3.0};
  // Same directions, so the identity holds to rounding.
  const auto a = radon_measure(w, 1.5, 200000, 9);
  const auto b = radon_measure(w3, 1.5, 200000, 9);
  CHECK(b.value == doctest::Approx(std::pow(3.0, -0.75) * a.value).epsilon(1e-12));
  // Independent directions: within 3 sigma.
  const auto c = radon_measure(w3, 1.5, 200000, 10);
  CHECK(std::abs(c.value - std::pow(3.0, -0.75) * a.value) < 3.0 * std::hypot(c.std_error, a.std_error));

  SUBCASE("rotation invariance") {
    const QuadraticEscapeSet iso{diag({3, 1, 0.5}), 1.0};
    const Mat R = random_rotation(3, 17);
    const QuadraticEscapeSet rot{R * iso.A * R.transpose(), 1.0};
    const auto x = radon_measure(iso, 1.4, 400000, 1);
    const auto y = radon_measure(rot, 1.4, 400000, 2);
    CHECK(std::abs(x.value - y.value) < 3.0 * std::hypot(x.std_error, y.std_error));
  }
  SUBCASE("thread count does not change the estimate") {
    const auto t1 = radon_measure(w, 1.5, 300000, 4, 1);
    const auto t8 = radon_measure(w, 1.5, 300000, 4, 8);
    CHECK(t1.value == t8.value);
    CHECK(t1.std_error == t8.std_error);
  }
  SUBCASE("identity matrix gives the unit tail mass") {
    const QuadraticEscapeSet unit{Mat::Identity(4, 4), 1.0};
    CHECK(radon_measure(unit, 1.5, 1000).value == doctest::Approx(unit_tail_mass(4, 1.5)).epsilon(1e-12));
    CHECK(sphere_area(2) == doctest::Approx(2 * oracle::kPi));
    CHECK(sphere_area(3) == doctest::Approx(4 * oracle::kPi));
  }
}

TEST_CASE("ellipsoid volume") {
  CHECK(ellipsoid_volume(Mat::Identity(2, 2), 1.0) == doctest::Approx(oracle::kPi));
  CHECK(ellipsoid_volume(diag({4, 1}), 1.0) == doctest::Approx(oracle::kPi / 2));
  const double v = ellipsoid_volume(diag({1, 4, 9}), 1.0);
  CHECK(v == doctest::Approx(4 * oracle::kPi / 3 / 6));
  Vec d(3);
  d << 1, 4, 9;
  const double mc = oracle::hit_or_miss_volume(d, 1.0, 10000000, 21);
  CHECK(std::abs(v / mc - 1.0) < 0.005);
  CHECK_THROWS_AS(ellipsoid_volume(diag({1, 0}), 1.0), DegenerateError);
}

TEST_CASE("measure comparison") {
  SUBCASE("identity Hessian with unit noise gives ratio 1") {
    const Spectrum s{{1, 1, 1}, {1, 1, 1}, 1, 1.0};
    const auto r = compare_measures(s, 1.5, 100000);
    CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("scaling the noise by k multiplies m_sgd by k^alpha") {
    const Spectrum s{{10, 1, 0.1}, {3, 0.3, 0.03}, 1, 1.0};
    Spectrum s2 = s;
    for (auto& x : s2.sigmas) x *= 2.0;
    const auto a = compare_measures(s, 1.5, 200000, 5);
    const auto b = compare_measures(s2, 1.5, 200000, 5);
    CHECK(b.m_sgd.value == doctest::Approx(std::pow(2.0, 1.5) * a.m_sgd.value).epsilon(1e-12));
    CHECK(b.m_adam.value == a.m_adam.value);
    CHECK(a.predicted_exit_ratio == doctest::Approx(1.0 / a.ratio));
    CHECK(a.volume_sgd.has_value());
  }
  SUBCASE("quoted Adam volume expression") {
    const Spectrum s{{4, 1}, {1, 1}, 1, 1.0};
    // zeta = (2/2) (pi)^1 / Gamma(1) = pi; times prod(lambda) = 4.
    CHECK(quoted_adam_volume(s) == doctest::Approx(4 * oracle::kPi));
    const auto r = compare_measures(s, 1.5, 1000);
    CHECK(r.volume_adam == doctest::Approx(oracle::kPi / 2));
    CHECK(r.volume_formula_mismatch);
    // With prod(lambda) = 1 in d = 3 the two expressions coincide.
    CHECK_FALSE(compare_measures({{10, 1, 0.1}, {1, 1, 1}, 1, 1.0}, 1.5, 1000).volume_formula_mismatch);
  }
}

TEST_CASE("spectrum escape config") {
  const Spectrum s{{10, 0.1}, {3, 0.3}, 1, 1.0};
  const auto c = spectrum_escape_config(s, 1.5, 0.05, 2.0, 0.01, 10, 100, 7);
  CHECK_NOTHROW(c.validate());
  CHECK(c.landscape->dim() == 2);
  REQUIRE(c.v0.has_value());
  CHECK((*c.v0)[0] == doctest::Approx(9.0));
  CHECK((*c.v0)[1] == doctest::Approx(0.09));
  CHECK(c.optimizer.freeze_v);
}
