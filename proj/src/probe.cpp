#include "levy/probe.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "levy/errors.hpp"
#include "levy/rng.hpp"
#include "levy/stable.hpp"

namespace levy {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Layout {
  Eigen::Index w1, b1, w2, b2;
};

Layout layout(const MlpModel& m) {
  const auto di = static_cast<Eigen::Index>(m.d_in), dh = static_cast<Eigen::Index>(m.d_hidden);
  const auto dc = static_cast<Eigen::Index>(m.d_classes);
  return {0, dh * di, dh * di + dh, dh * di + dh + dc * dh};
}

// Loss and (optionally) gradient summed over the rows selected by `idx`.
double loss_and_grad(const MlpModel& m, const Vec& params, const SyntheticDataset& data,
                     std::span<const std::size_t> idx, Vec* grad) {
  const auto di = static_cast<Eigen::Index>(m.d_in), dh = static_cast<Eigen::Index>(m.d_hidden);
  const auto dc = static_cast<Eigen::Index>(m.d_classes);
  const Layout L = layout(m);
  Eigen::Map<const RowMat> W1(params.data() + L.w1, dh, di);
  Eigen::Map<const Vec> b1(params.data() + L.b1, dh);
  Eigen::Map<const RowMat> W2(params.data() + L.w2, dc, dh);
  Eigen::Map<const Vec> b2(params.data() + L.b2, dc);

  const auto n = static_cast<Eigen::Index>(idx.empty() ? data.size() : idx.size());
  Mat X(n, di);
  for (Eigen::Index r = 0; r < n; ++r)
    X.row(r) = data.features.row(static_cast<Eigen::Index>(idx.empty() ? r : idx[static_cast<std::size_t>(r)]));
  auto label = [&](Eigen::Index r) {
    return data.labels[idx.empty() ? static_cast<std::size_t>(r) : idx[static_cast<std::size_t>(r)]];
  };

  Mat Z1 = X * W1.transpose();
  Z1.rowwise() += b1.transpose();
  const Mat A1 = Z1.cwiseMax(0.0);
  Mat Z2 = A1 * W2.transpose();
  Z2.rowwise() += b2.transpose();

  double total = 0.0;
  Mat D2(n, dc);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double zmax = Z2.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (Z2.row(r).array() - zmax).exp().matrix();
    const double s = e.sum();
    const int y = label(r);
    total += std::log(s) + zmax - Z2(r, y);
    D2.row(r) = e / s;
    D2(r, y) -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(n);
  if (grad) {
    grad->setZero(params.size());
    const Mat D1 = (D2 * W2).cwiseProduct((Z1.array() > 0.0).cast<double>().matrix());
    Eigen::Map<RowMat>(grad->data() + L.w1, dh, di) = inv * (D1.transpose() * X);
    Eigen::Map<Vec>(grad->data() + L.b1, dh) = inv * D1.colwise().sum().transpose();
    Eigen::Map<RowMat>(grad->data() + L.w2, dc, dh) = inv * (D2.transpose() * A1);
    Eigen::Map<Vec>(grad->data() + L.b2, dc) = inv * D2.colwise().sum().transpose();
  }
  return total * inv;
}

double median_inplace(std::vector<double>& x) {
  const auto mid = x.begin() + static_cast<std::ptrdiff_t>(x.size() / 2);
  std::nth_element(x.begin(), mid, x.end());
  double m = *mid;
  if (x.size() % 2 == 0) m = 0.5 * (m + *std::max_element(x.begin(), mid));
  return m;
}

}  // namespace

std::size_t MlpModel::param_count(std::size_t d_in, std::size_t d_hidden, std::size_t d_classes) {
  return d_in * d_hidden + d_hidden + d_hidden * d_classes + d_classes;
}

MlpModel MlpModel::init(std::size_t d_in, std::size_t d_hidden, std::size_t d_classes, std::uint64_t seed) {
  MlpModel m;
  m.d_in = d_in;
  m.d_hidden = d_hidden;
  m.d_classes = d_classes;
  m.validate_shape();
  m.params = Vec::Zero(static_cast<Eigen::Index>(m.size()));
  auto rng = make_stream(seed, 0x4D4C50ULL);
  std::normal_distribution<double> normal;
  const Layout L = layout(m);
  const double s1 = std::sqrt(2.0 / static_cast<double>(d_in));
  const double s2 = std::sqrt(2.0 / static_cast<double>(d_hidden));
  for (Eigen::Index i = L.w1; i < L.b1; ++i) m.params[i] = s1 * normal(rng);
  for (Eigen::Index i = L.w2; i < L.b2; ++i) m.params[i] = s2 * normal(rng);
  return m;
}

void MlpModel::validate_shape() const {
  if (d_in == 0 || d_hidden == 0 || d_classes < 2)
    throw DomainError("mlp: need d_in, d_hidden >= 1 and at least 2 classes");
}

void MlpModel::validate() const {
  validate_shape();
  if (static_cast<std::size_t>(params.size()) != size())
    throw DimensionError("mlp: parameter vector has " + std::to_string(params.size()) + " entries, expected " +
                         std::to_string(size()));
}

SyntheticDataset SyntheticDataset::blobs(std::size_t n, std::size_t d_in, std::size_t classes, double spread,
                                         double separation, std::uint64_t seed) {
  if (n == 0 || d_in == 0 || classes < 2) throw DomainError("blobs: need n, d_in >= 1 and >= 2 classes");
  if (!(spread > 0.0)) throw DomainError("blobs: spread must be positive");
  auto rng = make_stream(seed, 0x424C4FULL);
  std::normal_distribution<double> normal;
  const auto d = static_cast<Eigen::Index>(d_in);
  Mat means(static_cast<Eigen::Index>(classes), d);
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    for (Eigen::Index j = 0; j < d; ++j) means(c, j) = normal(rng);
    means.row(c) *= separation / means.row(c).norm();
  }
  SyntheticDataset ds;
  ds.classes = classes;
  ds.features.resize(static_cast<Eigen::Index>(n), d);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(i % classes);
    ds.labels[i] = static_cast<int>(c);
    for (Eigen::Index j = 0; j < d; ++j)
      ds.features(static_cast<Eigen::Index>(i), j) = means(c, j) + spread * normal(rng);
  }
  return ds;
}

void SyntheticDataset::validate(const MlpModel& model) const {
  model.validate();
  if (labels.empty()) throw SizeError("dataset is empty");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw DimensionError("dataset: feature rows and labels differ");
  if (static_cast<std::size_t>(features.cols()) != model.d_in)
    throw DimensionError("dataset: feature width does not match the model input");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= model.d_classes) throw DomainError("dataset: label out of range");
}

double loss(const MlpModel& model, const SyntheticDataset& data, std::span<const std::size_t> indices) {
  data.validate(model);
  for (auto i : indices)
    if (i >= data.size()) throw SizeError("loss: sample index out of range");
  return loss_and_grad(model, model.params, data, indices, nullptr);
}

double loss_at(const Vec& params, const MlpModel& shape, const SyntheticDataset& data) {
  MlpModel m = shape;
  m.params = params;
  return loss(m, data);
}

Vec full_gradient(const MlpModel& model, const SyntheticDataset& data) {
  data.validate(model);
  Vec g;
  loss_and_grad(model, model.params, data, {}, &g);
  return g;
}

Vec minibatch_gradient(const MlpModel& model, const SyntheticDataset& data, std::span<const std::size_t> batch) {
  data.validate(model);
  if (batch.empty()) throw SizeError("minibatch_gradient: empty batch");
  for (auto i : batch)
    if (i >= data.size())
      throw SizeError("minibatch_gradient: index " + std::to_string(i) + " out of range for " +
                      std::to_string(data.size()) + " samples");
  Vec g;
  loss_and_grad(model, model.params, data, batch, &g);
  return g;
}

std::vector<double> pool_standardized(std::span<const Vec> window) {
  std::vector<double> pooled;
  if (window.empty()) return pooled;
  const auto d = window.front().size();
  std::vector<double> scale(static_cast<std::size_t>(d), 0.0);
  std::vector<double> col(window.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    for (std::size_t t = 0; t < window.size(); ++t) {
      if (window[t].size() != d) throw DimensionError("noise window vectors differ in length");
      col[t] = window[t][j];
    }
    const double med = median_inplace(col);
    for (auto& x : col) x = std::abs(x - med);
    scale[static_cast<std::size_t>(j)] = median_inplace(col);
  }
  pooled.reserve(window.size() * static_cast<std::size_t>(d));
  for (const auto& u : window)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double s = scale[static_cast<std::size_t>(j)];
      if (s > 0.0 && u[j] != 0.0) pooled.push_back(u[j] / s);
    }
  return pooled;
}

std::optional<double> pooled_tail_index(std::span<const Vec> window) {
  const std::vector<double> pooled = pool_standardized(window);
  if (pooled.size() < 4) return std::nullopt;
  return estimate_tail_index(pooled);
}

std::vector<NoiseRecord> noise_trajectory(const MlpModel& model0, const SyntheticDataset& data,
                                          const NoiseProbeConfig& cfg) {
  data.validate(model0);
  if (cfg.batch_size == 0 || cfg.batch_size > data.size())
    throw SizeError("noise probe: batch size must lie in [1, n]");
  if (cfg.window == 0 || cfg.record_stride == 0) throw DomainError("noise probe: window and stride must be >= 1");
  if (cfg.window * model0.size() < 4) throw SizeError("noise probe: window too small for the estimator");
  if (cfg.injected_alpha && !(*cfg.injected_alpha > 0.0 && *cfg.injected_alpha <= 2.0))
    throw DomainError("noise probe: injected alpha must lie in (0, 2]");

  auto rng = make_stream(cfg.seed, 0x50524FULL);
  auto noise_rng = make_stream(cfg.seed, 0x494E4AULL);
  MlpModel model = model0;
  DiscreteState ds = DiscreteState::zeros(model.params);
  std::vector<std::size_t> perm(data.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::deque<Vec> window;
  std::vector<NoiseRecord> out;

  for (std::size_t k = 0; k < cfg.steps; ++k) {
    // Partial Fisher-Yates: the first batch_size entries form the batch.
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, perm.size() - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    const std::span<const std::size_t> batch(perm.data(), cfg.batch_size);
    model.params = ds.theta;
    // A batch covering every sample is the full gradient; summing in
    // permuted order would leave rounding-level noise.
    const Vec g = cfg.batch_size == data.size() ? full_gradient(model, data) : minibatch_gradient(model, data, batch);

    if (k % cfg.record_stride == 0) {
      NoiseRecord rec;
      rec.step = k;
      Vec u;
      if (cfg.injected_alpha) {
        u.resize(g.size());
        for (auto& x : u) x = draw_sas(*cfg.injected_alpha, noise_rng);
      } else {
        u = full_gradient(model, data) - g;
      }
      rec.noise_l2 = u.norm();
      window.push_back(u);
      if (window.size() > cfg.window) window.pop_front();
      if (window.size() == cfg.window) {
        const std::vector<Vec> w(window.begin(), window.end());
        rec.alpha_hat = pooled_tail_index(w);
      }
      if (cfg.keep_noise) rec.noise = std::move(u);
      out.push_back(std::move(rec));
    }
    ds = discrete_reference_step(ds, g, cfg.optimizer);
  }
  return out;
}

AveragingComparison averaging_tail_comparison(std::span<const Vec> noise, double beta1, std::size_t window) {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DomainError("averaging: beta1 must lie in [0, 1)");
  if (window == 0 || noise.size() < window) throw SizeError("averaging: need at least `window` noise vectors");
  std::vector<Vec> avg;
  avg.reserve(noise.size());
  Vec a = Vec::Zero(noise.front().size());
  double bt = 1.0;
  for (const auto& u : noise) {
    a = beta1 * a + (1.0 - beta1) * u;
    bt *= beta1;
    avg.push_back(a / (1.0 - bt));
  }
  AveragingComparison r;
  r.window = window;
  r.alpha_raw = pooled_tail_index(noise.subspan(noise.size() - window));
  r.alpha_avg = pooled_tail_index(std::span<const Vec>(avg).subspan(avg.size() - window));
  return r;
}

AssumptionReport assumption_monitors(const Trajectory& noisy, const Trajectory& flow, const Landscape& f,
                                     const OptimizerConfig& cfg) {
  if (noisy.states.size() != flow.states.size() || noisy.states.empty())
    throw SizeError("monitors: runs must be recorded at the same, nonempty set of times");
  if (cfg.kind == OptimizerKind::Sgd) throw DomainError("monitors: need a momentum optimizer");
  constexpr double kTiny = 1e-12;
  const auto d = static_cast<Eigen::Index>(f.dim());
  Vec g(d), gh(d);
  Vec int_dm = Vec::Zero(d);
  Vec prev_dm = Vec::Zero(d);
  double int_rho = 0.0, prev_integrand = 0.0, prev_t = 0.0;
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;

  AssumptionReport rep;
  rep.rows.reserve(noisy.states.size());
  for (std::size_t i = 0; i < noisy.states.size(); ++i) {
    const SdeState& s = noisy.states[i];
    const SdeState& sh = flow.states[i];
    if (std::abs(s.t - sh.t) > 1e-9 * std::max(1.0, s.t)) throw DomainError("monitors: record times differ");
    f.gradient(s.theta, g);
    const double F = f.value(s.theta);

    double integrand = 0.0;
    if (s.t > 0.0) {
      const double mu = bias_correction(cfg.beta1, s.t);
      for (Eigen::Index j = 0; j < d; ++j) {
        double q = 1.0;
        if (cfg.kind == OptimizerKind::Adam)
          q = std::sqrt(bias_correction(cfg.beta2, s.t) * s.v[j]) + cfg.eps_adam;
        integrand += g[j] / (1.0 + F) * mu * s.m[j] / q;
      }
    }
    const Vec dm = s.m - sh.m;
    if (i > 0) {
      const double dt = s.t - prev_t;
      int_rho += 0.5 * dt * (integrand + prev_integrand);
      int_dm += 0.5 * dt * (dm + prev_dm);
    }

    AssumptionRow row;
    row.t = s.t;
    if (s.t > 0.0) row.rho = 10.0 / s.t * int_rho;
    const double den_m = int_dm.norm();
    if (den_m >= kTiny) row.tau_m = dm.norm() / den_m;
    f.gradient(sh.theta, gh);
    const double den_t = gh.norm();
    if (den_t >= kTiny) row.tau = sh.m.norm() / den_t;
    if (cfg.kind == OptimizerKind::Adam) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double r = std::sqrt(std::max(0.0, s.v[j]));
        vmin = std::min(vmin, r);
        vmax = std::max(vmax, r);
      }
    } else {
      vmin = vmax = 1.0;
    }
    row.v_min = vmin;
    row.v_max = vmax;
    rep.rows.push_back(std::move(row));

    prev_t = s.t;
    prev_integrand = integrand;
    prev_dm = dm;
  }
  return rep;
}

AssumptionReport run_assumption_monitors(const Landscape& f, const OptimizerConfig& cfg, const Vec& theta0,
                                         std::size_t steps, std::uint64_t seed) {
  if (steps == 0) throw DomainError("monitors: need at least one step");
  const SdeState s0 = SdeState::at_rest(theta0, cfg.kind);
  const Trajectory noisy = integrate(s0, f, cfg, StopRule{steps, {}}, seed, 1);
  const auto flow = deterministic_flow(s0, f, cfg, static_cast<double>(steps) * cfg.step_h, 1);
  return assumption_monitors(noisy, flow.first, f, cfg);
}

}  // namespace levy
