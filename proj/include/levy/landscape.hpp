#pragma once

// Objective functions with exact gradients, and the basins used to define
// exit events.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace levy {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Landscape {
 public:
  virtual ~Landscape() = default;

  virtual std::size_t dim() const = 0;
  virtual double value(const Vec& theta) const = 0;
  /// Writes the gradient into `out`, which must already have dim() entries.
  virtual void gradient(const Vec& theta, Vec& out) const = 0;
  virtual Vec minimizer() const = 0;
  virtual double mu() const = 0;   ///< local strong convexity in the basin
  virtual double ell() const = 0;  ///< smoothness in the basin
  virtual std::string kind() const = 0;

  double min_value() const { return value(minimizer()); }
};

struct Evaluation {
  double value = 0.0;
  Vec gradient;
};

/// Value and gradient; throws DimensionError on a size mismatch.
Evaluation eval(const Landscape& f, const Vec& theta);

/// Region used for exit detection.
class Basin {
 public:
  virtual ~Basin() = default;
  virtual std::size_t dim() const = 0;
  virtual bool contains(const Vec& theta) const = 0;
  /// Distance from an interior point to the boundary; 0 outside.
  virtual double boundary_distance(const Vec& theta) const = 0;
};

/// Open interval (lo, hi) in one dimension.
class IntervalBasin final : public Basin {
 public:
  IntervalBasin(double lo, double hi);
  std::size_t dim() const override { return 1; }
  bool contains(const Vec& theta) const override;
  double boundary_distance(const Vec& theta) const override;
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_, hi_;
};

/// {y : (y - center)^T H (y - center) <= level}. The boundary distance is
/// measured along the ray from the center through y.
class EllipsoidBasin final : public Basin {
 public:
  EllipsoidBasin(Mat H, Vec center, double level);
  std::size_t dim() const override { return static_cast<std::size_t>(center_.size()); }
  bool contains(const Vec& theta) const override;
  double boundary_distance(const Vec& theta) const override;
  const Mat& H() const { return H_; }
  const Vec& center() const { return center_; }
  double level() const { return level_; }

 private:
  Mat H_;
  Vec center_;
  double level_;
  double lambda_max_;
};

/// f(y) = f* + (1/2)(y - c)^T H (y - c), basin cut at f = height.
class QuadraticBasin final : public Landscape {
 public:
  QuadraticBasin(Mat H, Vec center, double f_star, double height);

  /// H = R diag(lambdas) R^T with R a seeded random rotation (identity when
  /// no seed is given), centered at the origin.
  static QuadraticBasin from_eigenvalues(const std::vector<double>& lambdas, double f_star,
                                         double height,
                                         std::optional<std::uint64_t> rotation_seed = {});

  std::size_t dim() const override { return static_cast<std::size_t>(center_.size()); }
  double value(const Vec& theta) const override;
  void gradient(const Vec& theta, Vec& out) const override;
  Vec minimizer() const override { return center_; }
  double mu() const override { return mu_; }
  double ell() const override { return ell_; }
  std::string kind() const override { return "quadratic"; }

  const Mat& H() const { return H_; }
  double f_star() const { return f_star_; }
  double height() const { return height_; }
  double h_f_star() const { return 2.0 * (height_ - f_star_); }
  /// The level-set basin {f <= height}.
  std::shared_ptr<const EllipsoidBasin> basin() const;

 private:
  Mat H_;
  Vec center_;
  double f_star_, height_;
  double mu_, ell_;
};

/// f(x) = min(x^2, a (x - 1)^2). The minimizer reported is x = 1, whose
/// basin the escape experiments start in.
class DoubleWell1D final : public Landscape {
 public:
  explicit DoubleWell1D(double a);

  std::size_t dim() const override { return 1; }
  double value(const Vec& theta) const override;
  void gradient(const Vec& theta, Vec& out) const override;
  Vec minimizer() const override { return Vec::Constant(1, 1.0); }
  double mu() const override { return 2.0 * a_; }
  double ell() const override { return 2.0 * a_; }
  std::string kind() const override { return "double_well"; }

  double a() const { return a_; }
  double value(double x) const;
  double gradient(double x) const;
  /// Basin of x = 1 cut by the level set through the crossover:
  /// (x_c, 2 - x_c).
  std::shared_ptr<const IntervalBasin> right_basin() const;

 private:
  double a_;
};

/// Point in (0, 1) where x^2 = a (x - 1)^2.
double crossover(const DoubleWell1D& dw);

struct BasinSpec {
  std::shared_ptr<const Basin> region;
  double gamma = 1.0;
  double eps = 0.1;

  void validate() const;
  double margin() const;  ///< eps^gamma
};

/// theta in the basin with boundary distance >= margin * margin_factor.
bool in_inner_basin(const BasinSpec& spec, const Vec& theta, double margin_factor = 1.0);

/// Haar-random rotation, deterministic in the seed.
Mat random_rotation(std::size_t d, std::uint64_t seed);

}  // namespace levy
