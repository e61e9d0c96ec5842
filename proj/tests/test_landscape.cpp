#include <doctest.h>

#include <cmath>
#include <random>

#include "levy/errors.hpp"
#include "levy/landscape.hpp"
#include "oracles.hpp"

using namespace levy;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

void check_gradient(const Landscape& f, const std::vector<Vec>& points) {
  for (const auto& p : points) {
    const auto e = eval(f, p);
    const Vec fd = oracle::fd_gradient([&](const Vec& x) { return f.value(x); }, p, 1e-5);
    const double scale = std::max(1.0, e.gradient.lpNorm<Eigen::Infinity>());
    CHECK((e.gradient - fd).lpNorm<Eigen::Infinity>() / scale < 1e-6);
  }
}

}  // namespace

TEST_CASE("eval examples") {
  const DoubleWell1D big(150);
  auto e = eval(big, v1(1.0));
  CHECK(e.value == 0.0);
  CHECK(e.gradient[0] == 0.0);

  const DoubleWell1D dw(4);
  e = eval(dw, v1(0.5));
  CHECK(e.value == doctest::Approx(0.25));
  CHECK(e.gradient[0] == doctest::Approx(1.0));

  const auto q = QuadraticBasin::from_eigenvalues({2, 8}, 0.0, 10.0);
  e = eval(q, v2(1, 1));
  CHECK(e.value == doctest::Approx(5.0));
  CHECK(e.gradient[0] == doctest::Approx(2.0));
  CHECK(e.gradient[1] == doctest::Approx(8.0));

  CHECK_THROWS_AS(eval(q, v1(1.0)), DimensionError);
}

TEST_CASE("crossover") {
  CHECK(crossover(DoubleWell1D(4)) == doctest::Approx(2.0 / 3.0));
  CHECK(crossover(DoubleWell1D(1)) == doctest::Approx(0.5));
  const double root =
      oracle::bisect([](double x) { return x * x - 150.0 * (x - 1) * (x - 1); }, 0.5, 0.999);
  CHECK(crossover(DoubleWell1D(150)) == doctest::Approx(root).epsilon(1e-12));
  CHECK(crossover(DoubleWell1D(150)) == doctest::Approx(0.9245).epsilon(1e-4));
  CHECK_THROWS_AS(DoubleWell1D(0.0), DomainError);
}

TEST_CASE("double well properties") {
  const DoubleWell1D dw(150);
  CHECK(dw.value(0.0) == 0.0);
  CHECK(dw.value(1.0) == 0.0);
  CHECK(dw.mu() == 300.0);
  CHECK(dw.ell() == 300.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 1000; ++i) CHECK(dw.value(u(rng)) >= 0.0);
  // Exact tie goes to the x = 1 branch.
  const DoubleWell1D one(1.0);
  CHECK(one.gradient(0.5) == doctest::Approx(2.0 * (0.5 - 1.0)));
  const auto basin = dw.right_basin();
  CHECK(basin->lo() == doctest::Approx(crossover(dw)));
  CHECK(basin->hi() == doctest::Approx(2.0 - crossover(dw)));
}

TEST_CASE("gradients match finite differences") {
  std::mt19937_64 rng(7);
  SUBCASE("double well, away from the kink") {
    const DoubleWell1D dw(150);
    const auto basin = dw.right_basin();
    std::uniform_real_distribution<double> u(basin->lo() + 1e-3, basin->hi());
    std::vector<Vec> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(v1(u(rng)));
    check_gradient(dw, pts);
  }
  SUBCASE("rotated quadratic") {
    const auto q = QuadraticBasin::from_eigenvalues({5, 2, 0.5}, 1.0, 3.0, 42);
    std::normal_distribution<double> n;
    std::vector<Vec> pts;
    for (int i = 0; i < 100; ++i) {
      Vec p(3);
      for (auto& x : p) x = 0.3 * n(rng);
      pts.push_back(p);
    }
    check_gradient(q, pts);
    CHECK(q.mu() == doctest::Approx(0.5));
    CHECK(q.ell() == doctest::Approx(5.0));
    CHECK(q.h_f_star() == doctest::Approx(4.0));
  }
}

TEST_CASE("quadratic basin validation") {
  Mat H(2, 2);
  H << 1, 2, 2, 1;  // indefinite
  CHECK_THROWS_AS(QuadraticBasin(H, Vec::Zero(2), 0, 1), DomainError);
  H << 1, 0.5, 0.4, 1;  // not symmetric
  CHECK_THROWS_AS(QuadraticBasin(H, Vec::Zero(2), 0, 1), DomainError);
  CHECK_THROWS_AS(QuadraticBasin::from_eigenvalues({1, 1}, 1.0, 1.0), DomainError);
}

TEST_CASE("inner basin membership") {
  BasinSpec spec{std::make_shared<IntervalBasin>(-1.0, 1.0), 1.0, 0.01};
  CHECK(in_inner_basin(spec, v1(0.5)));
  CHECK_FALSE(in_inner_basin(spec, v1(0.995)));
  CHECK_FALSE(in_inner_basin(spec, v1(1.5)));

  const auto q = QuadraticBasin::from_eigenvalues({2, 8}, 0.0, 1.0);
  BasinSpec qs{q.basin(), 2.0, 0.1};
  CHECK(in_inner_basin(qs, q.minimizer()));

  const DoubleWell1D dw(150);
  BasinSpec ds{dw.right_basin(), 2.0, 0.01};
  CHECK_FALSE(in_inner_basin(ds, v1(0.5)));
  CHECK(in_inner_basin(ds, v1(1.0)));
}

TEST_CASE("ellipsoid boundary distance along the ray") {
  const auto q = QuadraticBasin::from_eigenvalues({2, 8}, 0.0, 1.0);  // y^T H y < 2
  const auto b = q.basin();
  // Semi-axes 1 and 0.5.
  CHECK(b->boundary_distance(v2(0.25, 0)) == doctest::Approx(0.75));
  CHECK(b->boundary_distance(v2(0, 0.25)) == doctest::Approx(0.25));
  CHECK(b->boundary_distance(v2(0, 0)) == doctest::Approx(0.5));
  CHECK(b->boundary_distance(v2(2, 0)) == 0.0);
}

TEST_CASE("inner set grows with gamma when eps < 1") {
  const auto q = QuadraticBasin::from_eigenvalues({3, 1}, 0.0, 1.0, 5);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 2000; ++i) {
    const Vec p = v2(u(rng), u(rng));
    const bool small = in_inner_basin({q.basin(), 1.0, 0.2}, p);
    const bool large = in_inner_basin({q.basin(), 2.0, 0.2}, p);
    if (small) CHECK(large);
  }
}

TEST_CASE("random rotation is orthogonal and seeded") {
  const Mat R = random_rotation(4, 1);
  CHECK((R.transpose() * R - Mat::Identity(4, 4)).norm() < 1e-12);
  CHECK(R.isApprox(random_rotation(4, 1)));
  CHECK_FALSE(R.isApprox(random_rotation(4, 2)));
}
