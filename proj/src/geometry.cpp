#include "levy/geometry.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "levy/errors.hpp"
#include "levy/parallel.hpp"
#include "levy/rng.hpp"

namespace levy {

namespace {

constexpr double kPi = std::numbers::pi;

Vec to_vec(const std::vector<double>& x) {
  Vec v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  return v;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (0, 2]");
}

}  // namespace

void Spectrum::validate() const {
  const auto d = lambdas.size();
  if (d == 0) throw DimensionError("spectrum: empty");
  if (sigmas.size() != d) throw DimensionError("spectrum: lambdas and sigmas differ in length");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(lambdas[i] > 0.0)) throw DomainError("spectrum: Hessian eigenvalues must be positive");
    if (!(sigmas[i] >= 0.0)) throw DomainError("spectrum: noise singular values must be nonnegative");
    if (i > 0 && (lambdas[i] > lambdas[i - 1] || sigmas[i] > sigmas[i - 1]))
      throw DomainError("spectrum: values must be in descending order");
  }
  if (batch_size == 0) throw DomainError("spectrum: batch size must be positive");
  if (!(h_f_star > 0.0)) throw DomainError("spectrum: h_f* must be positive");
  if (misalignment != 0.0 && d < 2) throw DomainError("spectrum: misalignment needs d >= 2");
}

Mat Spectrum::basis() const {
  const auto n = static_cast<Eigen::Index>(dim());
  return rotation_seed ? random_rotation(dim(), *rotation_seed) : Mat(Mat::Identity(n, n));
}

Mat Spectrum::hessian() const {
  validate();
  const Mat R = basis();
  Mat H = R * to_vec(lambdas).asDiagonal() * R.transpose();
  return 0.5 * (H + H.transpose());
}

Mat Spectrum::noise_matrix() const {
  validate();
  Mat R = basis();
  if (misalignment != 0.0) {
    const auto n = static_cast<Eigen::Index>(dim());
    Mat G = Mat::Identity(n, n);
    G(0, 0) = G(1, 1) = std::cos(misalignment);
    G(0, 1) = -std::sin(misalignment);
    G(1, 0) = std::sin(misalignment);
    R = R * G;
  }
  Mat S = R * to_vec(sigmas).asDiagonal() * R.transpose();
  return 0.5 * (S + S.transpose());
}

EscapeSets build_escape_sets(const Spectrum& spec) {
  const Mat H = spec.hessian();
  const Mat Sb = spec.noise_matrix();
  const double S = static_cast<double>(spec.batch_size);
  EscapeSets w;
  w.sgd.A = Sb * H * Sb;
  w.sgd.A = 0.5 * (w.sgd.A + w.sgd.A.transpose());
  w.sgd.c = S * S * spec.h_f_star;
  w.adam.A = H;
  w.adam.c = S * S * spec.h_f_star;
  return w;
}

double sphere_area(std::size_t d) {
  if (d == 0) throw DimensionError("sphere_area: d must be positive");
  const double h = 0.5 * static_cast<double>(d);
  return 2.0 * std::pow(kPi, h) / std::tgamma(h);
}

double unit_tail_mass(std::size_t d, double alpha) {
  check_alpha(alpha);
  return sphere_area(d) / alpha;
}

MeasureEstimate radon_measure(const QuadraticEscapeSet& W, double alpha, std::size_t directions,
                              std::uint64_t seed, std::size_t threads) {
  check_alpha(alpha);
  const auto d = static_cast<std::size_t>(W.A.rows());
  if (d == 0 || W.A.rows() != W.A.cols()) throw DimensionError("radon_measure: A must be square");
  if (!(W.c > 0.0)) throw DomainError("radon_measure: threshold c must be positive");
  if (W.A.isZero(0.0)) throw DegenerateError("radon_measure: A is the zero matrix");
  const double half = alpha / 2.0;

  MeasureEstimate est;
  if (d == 1) {
    const double a = W.A(0, 0);
    if (a < 0.0) throw DomainError("radon_measure: A must be positive semidefinite");
    est.value = 2.0 / alpha * std::pow(a / W.c, half);
    est.exact = true;
    return est;
  }
  if (directions < 2) throw SizeError("radon_measure: need at least two directions");

  // Fixed-size blocks, one substream each, so the result ignores `threads`.
  constexpr std::size_t kBlock = 1 << 14;
  const std::size_t blocks = (directions + kBlock - 1) / kBlock;
  std::vector<double> sums(blocks), sq(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    auto rng = make_stream(seed, b);
    std::normal_distribution<double> normal;
    Vec u(static_cast<Eigen::Index>(d));
    CompensatedSum s, s2;
    const std::size_t end = std::min(directions, (b + 1) * kBlock);
    for (std::size_t k = b * kBlock; k < end; ++k) {
      double n2 = 0.0;
      do {
        for (auto& x : u) x = normal(rng);
        n2 = u.squaredNorm();
      } while (n2 == 0.0);
      const double q = u.dot(W.A * u) / n2;
      if (q < -1e-12 * W.A.norm()) throw DomainError("radon_measure: A must be positive semidefinite");
      const double f = std::pow(std::max(q, 0.0) / W.c, half);
      s.add(f);
      s2.add(f * f);
    }
    sums[b] = s.value();
    sq[b] = s2.value();
  });
  CompensatedSum total, total_sq;
  for (std::size_t b = 0; b < blocks; ++b) {
    total.add(sums[b]);
    total_sq.add(sq[b]);
  }
  const double n = static_cast<double>(directions);
  const double mean = total.value() / n;
  const double var = std::max(0.0, (total_sq.value() / n - mean * mean) * n / (n - 1.0));
  const double k = sphere_area(d) / alpha;
  est.value = k * mean;
  est.std_error = k * std::sqrt(var / n);
  est.directions = directions;
  return est;
}

MeasureEstimate normalized_radon_measure(const QuadraticEscapeSet& W, double alpha, std::size_t directions,
                                         std::uint64_t seed, std::size_t threads) {
  MeasureEstimate est = radon_measure(W, alpha, directions, seed, threads);
  const double k = unit_tail_mass(static_cast<std::size_t>(W.A.rows()), alpha);
  est.value /= k;
  est.std_error /= k;
  return est;
}

double ellipsoid_volume(const Mat& A, double c) {
  if (A.rows() == 0 || A.rows() != A.cols()) throw DimensionError("ellipsoid_volume: A must be square");
  if (!(c > 0.0)) throw DomainError("ellipsoid_volume: c must be positive");
  Eigen::LLT<Mat> llt(0.5 * (A + A.transpose()));
  if (llt.info() != Eigen::Success) throw DegenerateError("ellipsoid_volume: A is not positive definite");
  const Mat L = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) log_det += 2.0 * std::log(L(i, i));
  const double d = static_cast<double>(A.rows());
  const double log_unit = 0.5 * d * std::log(kPi) - std::lgamma(0.5 * d + 1.0);
  return std::exp(log_unit + 0.5 * d * std::log(c) - 0.5 * log_det);
}

double quoted_adam_volume(const Spectrum& spec) {
  spec.validate();
  const double d = static_cast<double>(spec.dim());
  const double S = static_cast<double>(spec.batch_size);
  const double zeta = 2.0 / d * std::pow(kPi * S / spec.h_f_star, d / 2.0) / std::tgamma(d / 2.0);
  double prod = 1.0;
  for (double l : spec.lambdas) prod *= l;
  return zeta * prod;
}

MeasureComparison compare_measures(const Spectrum& spec, double alpha, std::size_t directions,
                                   std::uint64_t seed, std::size_t threads) {
  const EscapeSets w = build_escape_sets(spec);
  MeasureComparison r;
  r.m_sgd = radon_measure(w.sgd, alpha, directions, seed, threads);
  r.m_adam = radon_measure(w.adam, alpha, directions, seed, threads);
  r.ratio = r.m_sgd.value / r.m_adam.value;
  r.predicted_exit_ratio = r.m_adam.value / r.m_sgd.value;
  try {
    r.volume_sgd = ellipsoid_volume(w.sgd.A, w.sgd.c);
  } catch (const DegenerateError&) {
    r.volume_sgd.reset();
  }
  r.volume_adam = ellipsoid_volume(w.adam.A, w.adam.c);
  r.quoted_volume_adam = quoted_adam_volume(spec);
  r.volume_formula_mismatch = std::abs(r.quoted_volume_adam - r.volume_adam) > 1e-9 * r.volume_adam;
  return r;
}

EscapeConfig spectrum_escape_config(const Spectrum& spec, double alpha, double eps, double gamma,
                                    double step_h, std::size_t trials, std::size_t max_steps,
                                    std::uint64_t base_seed) {
  spec.validate();
  const Mat H = spec.hessian();
  const Mat Sb = spec.noise_matrix();
  const double S = static_cast<double>(spec.batch_size);
  auto basin = std::make_shared<const QuadraticBasin>(H, Vec::Zero(H.rows()), 0.0, spec.h_f_star / 2.0);

  EscapeConfig cfg;
  cfg.landscape = basin;
  cfg.basin.region = basin->basin();
  cfg.basin.eps = eps;
  cfg.basin.gamma = gamma;
  cfg.optimizer.kind = OptimizerKind::Sgd;
  cfg.optimizer.alpha = alpha;
  cfg.optimizer.noise_amplitude = eps;
  cfg.optimizer.step_h = step_h;
  cfg.optimizer.noise_cov = NoiseCovariance::dense(Sb / S);
  if (alpha < 2.0) cfg.optimizer.noise_scale = NoiseScale::LevyMeasure;
  cfg.optimizer.freeze_v = true;
  cfg.optimizer.eps_adam = 1e-8;
  cfg.theta0 = Vec::Zero(H.rows());
  cfg.v0 = Sb.diagonal().array().square().matrix();
  cfg.trials = trials;
  cfg.max_steps = max_steps;
  cfg.base_seed = base_seed;
  return cfg;
}

}  // namespace levy
