#pragma once

// Symmetric alpha-stable (SaS) laws: sampling, characteristic-function
// checks, tail-index estimation and the big/small jump split of the
// driving Levy process.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "levy/rng.hpp"

namespace levy {

/// SaS law with characteristic function exp(-(sigma |w|)^alpha).
struct StableLaw {
  double alpha = 2.0;
  double sigma = 1.0;

  void validate() const;
};

/// Chambers-Mallows-Stuck transform for a unit-scale SaS variate.
/// `angle` lies in (-pi/2, pi/2) and `exp_draw` > 0 is an Exp(1) draw.
/// Odd in `angle`: negating the angle negates the sample.
double sas_transform(double alpha, double angle, double exp_draw);

/// One SaS(1) draw.
double draw_sas(double alpha, Rng& rng);

/// Fills `out` with i.i.d. SaS(1) draws times `scale`.
void fill_sas(double alpha, double scale, std::span<double> out, Rng& rng);

/// n i.i.d. draws from `law`, deterministic in `seed`.
std::vector<double> sample_sas(const StableLaw& law, std::size_t n, std::uint64_t seed);

/// Real part of the empirical characteristic function, (1/n) sum cos(w x).
/// Throws DomainError when the imaginary part exceeds 5/sqrt(n), i.e. the
/// sample is visibly asymmetric.
double empirical_char_fn(std::span<const double> samples, double omega);

/// exp(-(sigma |w|)^alpha).
double stable_char_fn(const StableLaw& law, double omega);

/// Block size used when the caller does not choose one: floor(sqrt(K)).
std::size_t default_group_size(std::size_t sample_count);

/// Grouped log-moment tail-index estimator. Uses the first k1*k2 samples,
/// split into k1 consecutive blocks of k2:
///   1/alpha = [mean_i log|block sum_i| - mean_j log|x_j|] / log k2,
/// clipped to (0, 2].
double estimate_tail_index(std::span<const double> samples, std::size_t k1, std::size_t k2);

/// Same estimator with k2 = floor(sqrt(K)) and k1 = K / k2.
double estimate_tail_index(std::span<const double> samples);

/// Scale sigma for which SaS(sigma) has Levy density |y|^{-1-alpha}
/// (alpha < 2). Multiplying SaS(1) draws by it turns the unit-scale law into
/// the process whose big-jump intensity is (2/alpha) r^{-alpha}.
double levy_measure_scale(double alpha);

/// Intensity (2/alpha) eps^{alpha delta} of jumps with |y| >= eps^{-delta}.
double jump_intensity(double alpha, double eps, double delta);

struct JumpDecompositionConfig {
  double eps = 0.1;    ///< noise amplitude, in (0, 1)
  double delta = 0.5;  ///< threshold exponent, in (0, 1]

  void validate() const;
  double threshold() const;  ///< eps^{-delta}
};

struct JumpEvents {
  double step_h = 1.0;
  double threshold = 0.0;
  std::vector<double> times;          ///< event times, (index + 1) * h
  std::vector<double> sizes;          ///< signed jump values, |size| >= threshold
  std::vector<std::size_t> indices;   ///< step index of each event
  std::vector<double> small_series;   ///< input with events replaced by 0

  /// small_series with the events added back; equals the input bit for bit.
  std::vector<double> reassemble() const;
};

/// Splits per-step increments at the threshold. |x| equal to the threshold
/// counts as a big jump.
JumpEvents decompose_jumps(std::span<const double> increments, double step_h,
                           const JumpDecompositionConfig& cfg);
JumpEvents decompose_jumps(std::span<const double> increments, double step_h, double threshold);

/// Kolmogorov-Smirnov distance between `samples` and Exponential(rate).
double ks_exponential(std::vector<double> samples, double rate);

/// Asymptotic KS critical value at significance `level` (Stephens' form).
double ks_critical_value(std::size_t n, double level);

struct ExponentialTestReport {
  std::size_t n = 0;          ///< number of inter-event intervals
  double alpha = 0.01;        ///< significance level
  double mean = 0.0;          ///< empirical mean interval
  double expected_mean = 0.0; ///< 1/psi
  double statistic = 0.0;     ///< KS distance
  double threshold = 0.0;     ///< KS critical value
  bool pass = false;
};

/// Tests the inter-event times t_k - t_{k-1} (t_0 = 0) against
/// Exponential(psi). Needs at least 30 events and psi > 0.
ExponentialTestReport interjump_time_test(const JumpEvents& events, double psi,
                                          double level = 0.01);

}  // namespace levy
