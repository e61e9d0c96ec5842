#pragma once

// Euler integrators for the Levy-driven SDEs of SGD, Adam and SGD with
// momentum, their noise-free flows, and the discrete reference updates.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "levy/landscape.hpp"
#include "levy/rng.hpp"

namespace levy {

enum class OptimizerKind { Sgd, Adam, Sgdm };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer_kind(const std::string& s);

/// How a unit-scale SaS(1) draw is turned into the driving process.
enum class NoiseScale {
  Unit,         ///< increments h^{1/alpha} SaS(1)
  LevyMeasure,  ///< additionally scaled so the Levy density is |y|^{-1-alpha}
};

/// Constant noise covariance Sigma.
class NoiseCovariance {
 public:
  static NoiseCovariance identity();
  static NoiseCovariance diagonal(Vec diag);
  static NoiseCovariance dense(Mat m);

  bool is_identity() const { return kind_ == Kind::Identity; }
  /// out = Sigma * x. `out` and `x` must not alias.
  void apply(const Vec& x, Vec& out) const;
  /// Sigma as a dense d x d matrix.
  Mat matrix(std::size_t d) const;
  void check_dim(std::size_t d) const;
  NoiseCovariance scaled(double k) const;

 private:
  enum class Kind { Identity, Diagonal, Dense };
  Kind kind_ = Kind::Identity;
  double scale_ = 1.0;
  Vec diag_;
  Mat dense_;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double eta = 1e-2;
  double alpha = 1.5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  double step_h = 1e-2;
  NoiseCovariance noise_cov = NoiseCovariance::identity();
  /// Overrides eta^{(alpha-1)/alpha}; required when alpha <= 1.
  std::optional<double> noise_amplitude;
  NoiseScale noise_scale = NoiseScale::Unit;
  /// Weight of an SaS proxy added to the gradient that drives v (Adam).
  double v_noise_factor = 0.0;
  /// Hold v at its initial value (Adam with a fixed preconditioner).
  bool freeze_v = false;

  void validate() const;
  /// Amplitude epsilon multiplying Sigma dL.
  double eps_noise() const;
  /// Per-coordinate multiplier of an SaS(1) draw giving one step's increment.
  double increment_scale() const;
  /// Throws DomainError unless beta1 <= beta2 <= 2 beta1.
  void check_adam_beta_ordering() const;
};

struct SdeState {
  Vec theta;
  Vec m;  ///< empty for SGD
  Vec v;  ///< empty unless Adam
  double t = 0.0;

  /// State at rest: m = 0, v = `v0` (or 0) as the optimizer requires.
  static SdeState at_rest(const Vec& theta, OptimizerKind kind, std::optional<Vec> v0 = {});
};

/// 1 / (1 - exp(-beta t)).
double bias_correction(double beta, double t);

/// Thrown when a gradient or iterate stops being finite.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, SdeState last)
      : std::runtime_error(what), last_finite_(std::move(last)) {}
  const SdeState& last_finite() const { return last_finite_; }

 private:
  SdeState last_finite_;
};

/// One Euler step at a time, in place, without allocation after construction.
class LevyIntegrator {
 public:
  LevyIntegrator(const Landscape& f, OptimizerConfig cfg);

  const OptimizerConfig& config() const { return cfg_; }
  std::size_t dim() const { return d_; }

  /// Advances `s` by step_h with the given per-step increment dL (already
  /// time-scaled). Pass a zero vector for the noise-free flow.
  void step(SdeState& s, const Vec& dL);
  /// Draws dL from `rng` and steps.
  void step(SdeState& s, Rng& rng);
  void step_noise_free(SdeState& s);

  /// Fresh increment into `dL`.
  void draw_increment(Rng& rng, Vec& dL) const;

  void check_state(const SdeState& s) const;

 private:
  const Landscape& f_;
  OptimizerConfig cfg_;
  std::size_t d_;
  double eps_;
  double inc_scale_;
  Vec grad_, noise_, dL_, zero_;
  Vec theta_new_, m_new_, v_new_;
};

/// Functional form of one step.
SdeState levy_step(const SdeState& s, const Landscape& f, const OptimizerConfig& cfg,
                   const Vec& noise_increment);

struct StopRule {
  std::size_t max_steps = 1000;
  std::function<bool(const SdeState&)> exit;  ///< optional; checked on every state
};

struct Trajectory {
  std::vector<SdeState> states;  ///< recorded every `stride` steps, plus the final state
  bool exited = false;
  std::size_t exit_step = 0;
  std::size_t steps = 0;
};

/// Repeats levy_step with noise from the seeded stream. The exit predicate is
/// checked on the initial state too, so an immediately true predicate yields
/// one state and exit_step 0.
Trajectory integrate(const SdeState& s0, const Landscape& f, const OptimizerConfig& cfg,
                     const StopRule& stop, std::uint64_t seed, std::size_t stride = 1);

struct FlowRateReport {
  std::optional<double> observed_rate;   ///< empty when L(0) = 0
  std::optional<double> predicted_rate;  ///< SGD: 2 mu; Adam: the Lyapunov-theorem rate
  std::vector<std::pair<double, double>> lyapunov_series;  ///< (t, L(t))
  double tau = 0.0;    ///< Adam: min ||m|| / ||grad F|| after warm-up
  double v_max = 0.0;  ///< Adam: max sqrt(omega_t v)
  bool monotone = true;
};

/// Lyapunov value of a noise-free state (SGD: F - F*; Adam and SGDM add the
/// momentum energy (1/2)||m||^2_{s^{-1}}).
double lyapunov_value(const SdeState& s, const Landscape& f, const OptimizerConfig& cfg);

/// Noise-free flow up to time T; fits log L(t) by least squares over points
/// with L > 1e-10 L(0).
std::pair<Trajectory, FlowRateReport> deterministic_flow(const SdeState& s0, const Landscape& f,
                                                         OptimizerConfig cfg, double T,
                                                         std::size_t stride = 1);

/// State of the discrete algorithms; `k` counts completed steps.
struct DiscreteState {
  Vec theta;
  Vec m;
  Vec v;
  std::size_t k = 0;

  static DiscreteState zeros(const Vec& theta);
};

/// theta <- theta - eta g for SGD; the bias-corrected Adam and SGDM updates
/// otherwise. Uses eta, beta1, beta2, eps_adam from `cfg`.
DiscreteState discrete_reference_step(const DiscreteState& s, const Vec& g,
                                      const OptimizerConfig& cfg);

/// CSV `t,theta_0..[,m_*][,v_*]` with 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

}  // namespace levy
