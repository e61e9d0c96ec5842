#pragma once

// Desk-scale gradient-noise probe: a two-layer ReLU classifier with
// hand-written backprop, minibatch noise capture, tail-index tracking, and
// the Adam assumption monitors.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "levy/dynamics.hpp"
#include "levy/landscape.hpp"

namespace levy {

/// logits = W2 relu(W1 x + b1) + b2. Parameters are stored flat as
/// [W1 (row-major, d_hidden x d_in), b1, W2 (row-major, d_classes x d_hidden), b2].
struct MlpModel {
  std::size_t d_in = 20;
  std::size_t d_hidden = 32;
  std::size_t d_classes = 3;
  Vec params;

  static std::size_t param_count(std::size_t d_in, std::size_t d_hidden, std::size_t d_classes);
  /// He-style Gaussian initialization, zero biases.
  static MlpModel init(std::size_t d_in, std::size_t d_hidden, std::size_t d_classes, std::uint64_t seed);
  std::size_t size() const { return param_count(d_in, d_hidden, d_classes); }
  void validate() const;
  void validate_shape() const;
};

struct SyntheticDataset {
  Mat features;              ///< n x d_in
  std::vector<int> labels;   ///< in [0, classes)
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  /// `classes` Gaussian blobs with unit-norm random means times `separation`
  /// and isotropic spread `spread`; labels cycle through the classes.
  static SyntheticDataset blobs(std::size_t n, std::size_t d_in, std::size_t classes, double spread,
                                double separation, std::uint64_t seed);
  void validate(const MlpModel& model) const;
};

/// Mean softmax cross-entropy over `indices` (all samples when empty).
double loss(const MlpModel& model, const SyntheticDataset& data, std::span<const std::size_t> indices = {});
double loss_at(const Vec& params, const MlpModel& shape, const SyntheticDataset& data);

/// Mean per-sample gradient over the whole dataset.
Vec full_gradient(const MlpModel& model, const SyntheticDataset& data);

/// Mean per-sample gradient over `batch`; throws SizeError for an index out
/// of range or an empty batch.
Vec minibatch_gradient(const MlpModel& model, const SyntheticDataset& data, std::span<const std::size_t> batch);

struct NoiseRecord {
  std::size_t step = 0;
  std::optional<double> alpha_hat;  ///< empty when the window is not full or the noise vanishes
  double noise_l2 = 0.0;
  Vec noise;                        ///< u_t = full gradient - minibatch gradient
};

/// Per-coordinate median-absolute-deviation standardization of a window of
/// noise vectors, pooled time-major; coordinates with zero MAD and exact
/// zeros are dropped. Empty when fewer than 4 values survive.
std::optional<double> pooled_tail_index(std::span<const Vec> window);

/// Same, also returning the pooled sample.
std::vector<double> pool_standardized(std::span<const Vec> window);

struct NoiseProbeConfig {
  OptimizerConfig optimizer;       ///< kind, eta, beta1, beta2, eps_adam of the discrete steps
  std::size_t steps = 3000;
  std::size_t batch_size = 32;
  std::size_t window = 20;         ///< noise vectors pooled per estimate
  std::size_t record_stride = 10;  ///< capture u_t every this many steps
  std::uint64_t seed = 0;
  /// Replace u_t by i.i.d. SaS(1) draws with this index (estimator plumbing check).
  std::optional<double> injected_alpha;
  bool keep_noise = false;         ///< store u_t in each record
};

/// Trains with discrete_reference_step on random minibatches and records the
/// gradient noise every record_stride steps (step 0 included).
std::vector<NoiseRecord> noise_trajectory(const MlpModel& model0, const SyntheticDataset& data,
                                          const NoiseProbeConfig& cfg);

struct AveragingComparison {
  std::optional<double> alpha_raw;
  std::optional<double> alpha_avg;
  std::size_t window = 0;
};

/// Tail index of the last `window` raw noise vectors against that of the
/// bias-corrected exponential average (1-b)/(1-b^t) sum b^{t-i} u_i over
/// the whole sequence.
AveragingComparison averaging_tail_comparison(std::span<const Vec> noise, double beta1, std::size_t window);

struct AssumptionRow {
  double t = 0.0;
  std::optional<double> rho;
  std::optional<double> tau_m;
  std::optional<double> tau;
  double v_min = 0.0;
  double v_max = 0.0;
};

struct AssumptionReport {
  std::vector<AssumptionRow> rows;
};

/// Monitors for a noisy Adam run and its noise-free companion recorded at
/// the same times:
///   rho_t  = (10/t) int_0^t <grad F/(1+F), mu_s Q_s^{-1} m_s> ds  (trapezoid, noisy run)
///   tau_m' = ||m_t - m^_t|| / ||int_0^t (m_s - m^_s) ds||
///   tau'   = ||m^_t|| / ||grad F(theta^_t)||
///   v_min, v_max = running extrema of sqrt(v_{t,i}) on the noisy run.
/// Denominators below 1e-12 give an empty entry.
AssumptionReport assumption_monitors(const Trajectory& noisy, const Trajectory& flow, const Landscape& f,
                                     const OptimizerConfig& cfg);

/// Integrates both runs from theta0 at rest (every step recorded) and
/// evaluates the monitors.
AssumptionReport run_assumption_monitors(const Landscape& f, const OptimizerConfig& cfg, const Vec& theta0,
                                         std::size_t steps, std::uint64_t seed);

}  // namespace levy
