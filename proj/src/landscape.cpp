#include "levy/landscape.hpp"

#include <cmath>
#include <random>

#include "levy/errors.hpp"
#include "levy/rng.hpp"

namespace levy {

namespace {

void check_dim(const Vec& theta, std::size_t d, const char* who) {
  if (static_cast<std::size_t>(theta.size()) != d)
    throw DimensionError(std::string(who) + ": expected " + std::to_string(d) + " entries, got " +
                         std::to_string(theta.size()));
}

void check_spd(const Mat& H, double& lo, double& hi) {
  if (H.rows() == 0 || H.rows() != H.cols()) throw DimensionError("matrix must be square and nonempty");
  if (!H.isApprox(H.transpose(), 1e-12)) throw DomainError("matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  lo = es.eigenvalues().minCoeff();
  hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw DomainError("matrix must be positive definite");
}

}  // namespace

Evaluation eval(const Landscape& f, const Vec& theta) {
  check_dim(theta, f.dim(), "eval");
  Evaluation e;
  e.value = f.value(theta);
  e.gradient.resize(static_cast<Eigen::Index>(f.dim()));
  f.gradient(theta, e.gradient);
  return e;
}

IntervalBasin::IntervalBasin(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!(lo < hi)) throw DomainError("interval basin needs lo < hi");
}

bool IntervalBasin::contains(const Vec& theta) const {
  check_dim(theta, 1, "IntervalBasin");
  return theta[0] > lo_ && theta[0] < hi_;
}

double IntervalBasin::boundary_distance(const Vec& theta) const {
  if (!contains(theta)) return 0.0;
  return std::min(theta[0] - lo_, hi_ - theta[0]);
}

EllipsoidBasin::EllipsoidBasin(Mat H, Vec center, double level)
    : H_(std::move(H)), center_(std::move(center)), level_(level) {
  double lo = 0.0;
  check_spd(H_, lo, lambda_max_);
  if (H_.rows() != center_.size()) throw DimensionError("ellipsoid: H and center disagree");
  if (!(level_ > 0.0)) throw DomainError("ellipsoid level must be positive");
}

bool EllipsoidBasin::contains(const Vec& theta) const {
  check_dim(theta, dim(), "EllipsoidBasin");
  const Vec y = theta - center_;
  return y.dot(H_ * y) < level_;
}

double EllipsoidBasin::boundary_distance(const Vec& theta) const {
  check_dim(theta, dim(), "EllipsoidBasin");
  const Vec y = theta - center_;
  const double q = y.dot(H_ * y);
  if (q >= level_) return 0.0;
  if (q <= 0.0) return std::sqrt(level_ / lambda_max_);
  const double s = std::sqrt(q / level_);
  return y.norm() * (1.0 / s - 1.0);
}

QuadraticBasin::QuadraticBasin(Mat H, Vec center, double f_star, double height)
    : H_(std::move(H)), center_(std::move(center)), f_star_(f_star), height_(height) {
  check_spd(H_, mu_, ell_);
  if (H_.rows() != center_.size()) throw DimensionError("quadratic: H and center disagree");
  if (!(height_ > f_star_)) throw DomainError("quadratic: height must exceed f_star");
}

QuadraticBasin QuadraticBasin::from_eigenvalues(const std::vector<double>& lambdas, double f_star,
                                                double height,
                                                std::optional<std::uint64_t> rotation_seed) {
  const auto d = lambdas.size();
  if (d == 0) throw DimensionError("quadratic: need at least one eigenvalue");
  Vec l(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) l[static_cast<Eigen::Index>(i)] = lambdas[i];
  Mat H = l.asDiagonal();
  if (rotation_seed) {
    const Mat R = random_rotation(d, *rotation_seed);
    H = R * H * R.transpose();
    H = 0.5 * (H + H.transpose());
  }
  return QuadraticBasin(std::move(H), Vec::Zero(static_cast<Eigen::Index>(d)), f_star, height);
}

double QuadraticBasin::value(const Vec& theta) const {
  const Vec y = theta - center_;
  return f_star_ + 0.5 * y.dot(H_ * y);
}

void QuadraticBasin::gradient(const Vec& theta, Vec& out) const {
  out.noalias() = H_ * (theta - center_);
}

std::shared_ptr<const EllipsoidBasin> QuadraticBasin::basin() const {
  return std::make_shared<const EllipsoidBasin>(H_, center_, h_f_star());
}

DoubleWell1D::DoubleWell1D(double a) : a_(a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("double well: a must be positive");
}

double DoubleWell1D::value(double x) const {
  return std::min(x * x, a_ * (x - 1.0) * (x - 1.0));
}

double DoubleWell1D::gradient(double x) const {
  // Exact ties go to the x = 1 branch.
  return x * x < a_ * (x - 1.0) * (x - 1.0) ? 2.0 * x : 2.0 * a_ * (x - 1.0);
}

double DoubleWell1D::value(const Vec& theta) const { return value(theta[0]); }

void DoubleWell1D::gradient(const Vec& theta, Vec& out) const { out[0] = gradient(theta[0]); }

std::shared_ptr<const IntervalBasin> DoubleWell1D::right_basin() const {
  const double xc = crossover(*this);
  return std::make_shared<const IntervalBasin>(xc, 2.0 - xc);
}

double crossover(const DoubleWell1D& dw) {
  const double s = std::sqrt(dw.a());
  return s / (s + 1.0);
}

void BasinSpec::validate() const {
  if (!region) throw DomainError("basin spec: missing region");
  if (!(gamma > 0.0)) throw DomainError("basin spec: gamma must be positive");
  if (!(eps > 0.0)) throw DomainError("basin spec: eps must be positive");
}

double BasinSpec::margin() const { return std::pow(eps, gamma); }

bool in_inner_basin(const BasinSpec& spec, const Vec& theta, double margin_factor) {
  const double dist = spec.region->boundary_distance(theta);
  return dist > 0.0 && dist >= margin_factor * spec.margin();
}

Mat random_rotation(std::size_t d, std::uint64_t seed) {
  auto rng = make_stream(seed, 0x524F54ULL);
  std::normal_distribution<double> normal;
  const auto n = static_cast<Eigen::Index>(d);
  Mat g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace levy
