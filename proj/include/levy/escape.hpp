#pragma once

// First-exit Monte Carlo for the Levy-driven optimizer SDEs.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "levy/dynamics.hpp"
#include "levy/landscape.hpp"

namespace levy {

struct EscapeConfig {
  std::shared_ptr<const Landscape> landscape;
  BasinSpec basin;
  OptimizerConfig optimizer;
  Vec theta0;
  std::optional<Vec> v0;  ///< initial second moment (Adam)
  std::size_t trials = 1000;
  std::size_t max_steps = 2000;
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;

  /// Throws DomainError unless theta0 lies in the inner basin with twice
  /// the margin.
  void validate() const;
};

struct ExitRecord {
  std::size_t trial = 0;
  bool exited = false;
  std::size_t exit_step = 0;  ///< 0 when the trial never exited
  double exit_time = 0.0;
};

struct EscapeStats {
  std::size_t trials = 0;
  std::size_t exits = 0;
  double escape_prob = 0.0;
  double escape_prob_ci95 = 0.0;               ///< normal-approximation half width
  std::optional<double> mean_exit_steps;       ///< over exiting trials only
  std::optional<double> mean_exit_time;        ///< mean_exit_steps * step_h
  std::optional<double> mean_exit_steps_ci95;  ///< half width
  std::vector<ExitRecord> records;             ///< ordered by trial index
};

/// Trial i uses seed base_seed + i; results do not depend on `threads`.
EscapeStats run_escape_experiment(const EscapeConfig& cfg);

/// Aggregates per-trial records.
EscapeStats summarize(std::vector<ExitRecord> records, double step_h);

/// alpha / (2 m_W eps^alpha): the mean exit time implied by an exponential
/// exit law with rate m_W (2/alpha) eps^alpha.
double predicted_mean_exit(double m_W, double alpha, double eps);

struct CalibrationResult {
  double noise_scale = 1.0;  ///< multiplier applied to Sigma
  EscapeStats stats;         ///< run at the chosen scale
  std::size_t iterations = 0;
};

/// Bisects (geometrically) a multiplier k on Sigma until the basin of `cfg`
/// reaches escape probability 1 with mean exit steps close to `target_mean`.
/// More noise is needed while the probability is below 1 or the mean is
/// above the target.
CalibrationResult calibrate_noise_scale(const EscapeConfig& cfg, double target_mean, double lo = 1e-2,
                                        double hi = 1e5, std::size_t iterations = 24);

struct SweepPoint {
  double eps = 0.0;
  EscapeStats stats;
  bool used = false;
};

struct SweepReport {
  std::vector<SweepPoint> points;
  std::vector<std::string> warnings;
  double slope = 0.0;  ///< d log E[Gamma] / d log eps
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Runs the template at each eps (overriding the noise amplitude and the
/// basin margin) and regresses log mean exit time on log eps. Points with
/// fewer than `min_exits` exits are dropped with a warning.
SweepReport scaling_sweep(const EscapeConfig& tmpl, const std::vector<double>& eps_list,
                          std::size_t min_exits = 100);

struct ComparisonReport {
  std::map<OptimizerKind, EscapeStats> stats;
  /// mean exit time of SGD divided by that of Adam (when both exist)
  std::optional<double> sgd_over_adam;
  std::optional<double> sgd_over_sgdm;
};

/// Runs the same basin, horizon, trials and seeds for every optimizer kind in
/// `kinds`, so every kind sees identical SaS(1) streams.
ComparisonReport compare_optimizers(const EscapeConfig& tmpl, const std::vector<OptimizerKind>& kinds);

}  // namespace levy
