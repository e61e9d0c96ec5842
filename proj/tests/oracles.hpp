#pragma once

// Independent reference computations used by the tests. None of these call
// into the library's numerical routines.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

/// Composite Simpson rule on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// P(|X| > x) for X with characteristic function exp(-|sigma w|^alpha),
/// by inverting the characteristic function:
///   P(|X| <= x) = (2/pi) int_0^inf sin(w x)/w exp(-(sigma w)^alpha) dw.
inline double sas_two_sided_tail(double alpha, double x, double sigma = 1.0) {
  // exp(-(sigma w)^alpha) < 1e-17 beyond w_max.
  const double w_max = std::pow(40.0, 1.0 / alpha) / sigma;
  const int panels = static_cast<int>(std::max(2.0e5, 400.0 * x * w_max));
  auto f = [&](double w) {
    const double sinc = w == 0.0 ? x : std::sin(w * x) / w;
    return sinc * std::exp(-std::pow(sigma * w, alpha));
  };
  return 1.0 - 2.0 / kPi * simpson(f, 0.0, w_max, panels);
}

/// Brute-force integral of |y|^{-(d+alpha)} over {y : y^T A y >= c} for
/// d in {2, 3}: midpoint grid over the angles, Simpson in log-radius.
inline double grid_radon_measure(const Eigen::MatrixXd& A, double c, double alpha, int angular = 600) {
  const auto d = A.rows();
  auto radial = [&](const Eigen::VectorXd& u) {
    const double q = u.dot(A * u);
    if (q <= 0.0) return 0.0;
    const double r0 = std::sqrt(c / q);
    // int_{r0}^{inf} r^{-(d+alpha)} r^{d-1} dr with r = r0 e^s, s in [0, 60].
    auto g = [&](double s) { return std::pow(r0 * std::exp(s), -alpha); };
    return simpson(g, 0.0, 60.0 / alpha, 300);
  };
  double total = 0.0;
  if (d == 2) {
    const double dphi = 2.0 * kPi / angular;
    Eigen::VectorXd u(2);
    for (int i = 0; i < angular; ++i) {
      const double phi = (i + 0.5) * dphi;
      u << std::cos(phi), std::sin(phi);
      total += radial(u) * dphi;
    }
  } else if (d == 3) {
    const int nt = angular / 2, np = angular;
    const double dt = kPi / nt, dp = 2.0 * kPi / np;
    Eigen::VectorXd u(3);
    for (int i = 0; i < nt; ++i) {
      const double th = (i + 0.5) * dt;
      for (int j = 0; j < np; ++j) {
        const double ph = (j + 0.5) * dp;
        u << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
        total += radial(u) * std::sin(th) * dt * dp;
      }
    }
  }
  return total;
}

/// Hit-or-miss Monte Carlo volume of {y : y^T A y < c} for diagonal A,
/// sampling the bounding box.
inline double hit_or_miss_volume(const Eigen::VectorXd& diag, double c, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const auto d = diag.size();
  Eigen::VectorXd half(d);
  double box = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    half[i] = std::sqrt(c / diag[i]);
    box *= 2.0 * half[i];
  }
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double q = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double y = half[i] * unif(rng);
      q += diag[i] * y * y;
    }
    if (q < c) ++hits;
  }
  return box * static_cast<double>(hits) / static_cast<double>(n);
}

/// Central finite-difference gradient.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    y[i] = x[i] + step;
    const double fp = f(y);
    y[i] = x[i] - step;
    const double fm = f(y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Root of g on [lo, hi] by bisection (g(lo), g(hi) of opposite sign).
inline double bisect(const std::function<double(double)>& g, double lo, double hi) {
  double glo = g(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Adam as usually written, iterated k times with a constant gradient.
inline double adam_constant_gradient(double theta, double g, double eta, double b1, double b2, double eps, int k) {
  double m = 0.0, v = 0.0;
  for (int t = 1; t <= k; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    theta -= eta * mh / (std::sqrt(vh) + eps);
  }
  return theta;
}

/// i.i.d. Exponential(rate) sample from the standard library.
inline std::vector<double> exponential_sample(double rate, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> e(rate);
  std::vector<double> x(n);
  for (auto& v : x) v = e(rng);
  return x;
}

/// Chambers-Mallows-Stuck draw written out independently of the library.
inline double cms(double alpha, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kPi / 2, kPi / 2);
  std::exponential_distribution<double> e(1.0);
  const double v = u(rng), w = e(rng);
  if (alpha == 1.0) return std::tan(v);
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
}

/// Mean first-exit time of x' = -mu x + eps dL from (-b + margin, b - margin),
/// Euler steps of size h, increments h^{1/alpha} * scale * SaS(1).
inline double direct_mean_exit_1d(double alpha, double eps, double mu, double b, double margin, double h,
                                  double scale, std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double inc = std::pow(h, 1.0 / alpha) * scale;
  double total = 0.0;
  for (std::size_t n = 0; n < trials; ++n) {
    double x = 0.0;
    std::size_t k = 0;
    do {
      x += -h * mu * x + eps * inc * cms(alpha, rng);
      ++k;
    } while (std::abs(x) < b - margin);
    total += static_cast<double>(k) * h;
  }
  return total / static_cast<double>(trials);
}

}  // namespace oracle
