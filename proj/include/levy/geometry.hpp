#pragma once

// Escaping sets of quadratic basins, their alpha-stable tail measure, and
// ellipsoid volumes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "levy/escape.hpp"
#include "levy/landscape.hpp"

namespace levy {

struct Spectrum {
  std::vector<double> lambdas;  ///< Hessian eigenvalues, descending, > 0
  std::vector<double> sigmas;   ///< noise singular values, descending, >= 0
  std::size_t batch_size = 1;
  double h_f_star = 1.0;
  std::optional<std::uint64_t> rotation_seed;  ///< shared eigenbasis; axis-aligned when empty
  double misalignment = 0.0;  ///< angle (radians) of the noise basis against H in the first plane

  void validate() const;
  std::size_t dim() const { return lambdas.size(); }
  Mat basis() const;
  Mat hessian() const;
  /// The gradient-noise matrix Sigma-bar.
  Mat noise_matrix() const;
};

/// W = {y : y^T A y >= c}.
struct QuadraticEscapeSet {
  Mat A;
  double c = 1.0;

  bool contains(const Vec& y) const { return y.dot(A * y) >= c; }
};

struct EscapeSets {
  QuadraticEscapeSet sgd;   ///< A = Sigma H Sigma, c = S^2 h_f*
  QuadraticEscapeSet adam;  ///< A = H,             c = S^2 h_f*
};

EscapeSets build_escape_sets(const Spectrum& spec);

struct MeasureEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t directions = 0;  ///< 0 for the closed-form path
  bool exact = false;
};

/// m(W) = integral over W of |y|^{-(d+alpha)} dy
///      = (1/alpha) integral over S^{d-1} of (u^T A u / c)^{alpha/2} du.
/// Closed form in d = 1; otherwise Monte Carlo over `directions` uniform
/// unit vectors (normalized Gaussians from `seed`), with standard error.
MeasureEstimate radon_measure(const QuadraticEscapeSet& W, double alpha, std::size_t directions = 1000000,
                              std::uint64_t seed = 0, std::size_t threads = 1);

/// Area of the unit sphere S^{d-1}.
double sphere_area(std::size_t d);

/// m of the complement of the unit ball: |S^{d-1}| / alpha.
double unit_tail_mass(std::size_t d, double alpha);

/// m(W) divided by unit_tail_mass, i.e. the limit nu(uW)/nu(|y| > u) as
/// u grows. This is the rate the exit-time law uses: in one dimension
/// {|y| >= b} gets b^{-alpha}.
MeasureEstimate normalized_radon_measure(const QuadraticEscapeSet& W, double alpha,
                                         std::size_t directions = 1000000, std::uint64_t seed = 0,
                                         std::size_t threads = 1);

/// Volume of {y : y^T A y < c}; throws DegenerateError for singular A.
double ellipsoid_volume(const Mat& A, double c);

/// The expression zeta * prod(lambda_i) quoted for V(W_adam^c), with
/// zeta = (2/d) (pi S / h_f*)^{d/2} / Gamma(d/2). Reported next to the
/// standard volume, which scales like prod(lambda_i)^{-1/2} instead.
double quoted_adam_volume(const Spectrum& spec);

struct MeasureComparison {
  MeasureEstimate m_sgd;
  MeasureEstimate m_adam;
  double ratio = 0.0;                 ///< m_sgd / m_adam
  double predicted_exit_ratio = 0.0;  ///< m_adam / m_sgd = E[Gamma_sgd] / E[Gamma_adam]
  std::optional<double> volume_sgd;   ///< volume of W_sgd^c (empty when singular)
  double volume_adam = 0.0;           ///< volume of W_adam^c
  double quoted_volume_adam = 0.0;
  bool volume_formula_mismatch = false;
};

/// Both measures use the same directions, so the ratio is exact in the
/// isotropic case.
MeasureComparison compare_measures(const Spectrum& spec, double alpha, std::size_t directions = 1000000,
                                   std::uint64_t seed = 0, std::size_t threads = 1);

/// Escape experiment matching the two escaping sets: quadratic basin with
/// Hessian H and h_f* from `spec`, noise matrix Sigma-bar / S for every
/// optimizer, and Adam's second moment frozen at diag(Sigma-bar)^2 so that
/// Q^{-1} Sigma is close to I / S.
EscapeConfig spectrum_escape_config(const Spectrum& spec, double alpha, double eps, double gamma,
                                    double step_h, std::size_t trials, std::size_t max_steps,
                                    std::uint64_t base_seed);

}  // namespace levy
