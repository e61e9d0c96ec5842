#include "levy/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "levy/errors.hpp"
#include "levy/report.hpp"
#include "levy/stable.hpp"

namespace levy {

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Sgdm: return "sgdm";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgdm") return OptimizerKind::Sgdm;
  throw DomainError("unknown optimizer '" + s + "' (expected sgd, adam or sgdm)");
}

NoiseCovariance NoiseCovariance::identity() { return {}; }

NoiseCovariance NoiseCovariance::diagonal(Vec diag) {
  if ((diag.array() < 0.0).any()) throw DomainError("noise covariance: negative diagonal entry");
  NoiseCovariance c;
  c.kind_ = Kind::Diagonal;
  c.diag_ = std::move(diag);
  return c;
}

NoiseCovariance NoiseCovariance::dense(Mat m) {
  if (m.rows() != m.cols()) throw DimensionError("noise covariance must be square");
  NoiseCovariance c;
  c.kind_ = Kind::Dense;
  c.dense_ = std::move(m);
  return c;
}

void NoiseCovariance::apply(const Vec& x, Vec& out) const {
  switch (kind_) {
    case Kind::Identity: out = scale_ * x; break;
    case Kind::Diagonal: out = scale_ * diag_.cwiseProduct(x); break;
    case Kind::Dense: out.noalias() = scale_ * (dense_ * x); break;
  }
}

Mat NoiseCovariance::matrix(std::size_t d) const {
  check_dim(d);
  const auto n = static_cast<Eigen::Index>(d);
  switch (kind_) {
    case Kind::Identity: return scale_ * Mat::Identity(n, n);
    case Kind::Diagonal: return scale_ * Mat(diag_.asDiagonal());
    case Kind::Dense: return scale_ * dense_;
  }
  return {};
}

void NoiseCovariance::check_dim(std::size_t d) const {
  const auto n = static_cast<Eigen::Index>(d);
  if ((kind_ == Kind::Diagonal && diag_.size() != n) || (kind_ == Kind::Dense && dense_.rows() != n))
    throw DimensionError("noise covariance does not match dimension " + std::to_string(d));
}

NoiseCovariance NoiseCovariance::scaled(double k) const {
  NoiseCovariance c = *this;
  c.scale_ *= k;
  return c;
}

void OptimizerConfig::validate() const {
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (0, 2]");
  if (!(step_h > 0.0) || !std::isfinite(step_h)) throw DomainError("step_h must be positive");
  if (kind != OptimizerKind::Sgd) {
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw DomainError("beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw DomainError("beta2 must lie in (0, 1)");
    if (step_h * std::max(beta1, beta2) > 1.0)
      throw DomainError("step_h * beta must not exceed 1 (keeps v nonnegative)");
  }
  if (kind == OptimizerKind::Adam && !(eps_adam > 0.0)) throw DomainError("eps_adam must be positive");
  if (noise_amplitude) {
    if (!(*noise_amplitude >= 0.0) || !std::isfinite(*noise_amplitude))
      throw DomainError("noise amplitude must be finite and nonnegative");
  } else if (alpha <= 1.0) {
    throw DomainError("eta^((alpha-1)/alpha) is degenerate for alpha <= 1; set the noise amplitude");
  }
  if (noise_scale == NoiseScale::LevyMeasure && alpha == 2.0)
    throw DomainError("Levy-measure noise scaling needs alpha < 2");
  if (v_noise_factor < 0.0) throw DomainError("v noise factor must be nonnegative");
}

double OptimizerConfig::eps_noise() const {
  if (noise_amplitude) return *noise_amplitude;
  if (alpha <= 1.0) throw DomainError("eta^((alpha-1)/alpha) is degenerate for alpha <= 1");
  return std::pow(eta, (alpha - 1.0) / alpha);
}

double OptimizerConfig::increment_scale() const {
  double s = std::pow(step_h, 1.0 / alpha);
  if (noise_scale == NoiseScale::LevyMeasure) s *= levy_measure_scale(alpha);
  return s;
}

void OptimizerConfig::check_adam_beta_ordering() const {
  if (!(beta1 <= beta2 && beta2 <= 2.0 * beta1))
    throw DomainError("Adam monitors need beta1 <= beta2 <= 2 beta1");
}

SdeState SdeState::at_rest(const Vec& theta, OptimizerKind kind, std::optional<Vec> v0) {
  SdeState s;
  s.theta = theta;
  if (kind != OptimizerKind::Sgd) s.m = Vec::Zero(theta.size());
  if (kind == OptimizerKind::Adam) {
    s.v = v0 ? *v0 : Vec::Zero(theta.size());
    if (s.v.size() != theta.size()) throw DimensionError("v0 does not match theta");
    if ((s.v.array() < 0.0).any()) throw DomainError("v0 must be nonnegative");
  }
  return s;
}

double bias_correction(double beta, double t) {
  if (!(t > 0.0)) throw DomainError("bias correction needs t > 0");
  return 1.0 / (-std::expm1(-beta * t));
}

LevyIntegrator::LevyIntegrator(const Landscape& f, OptimizerConfig cfg)
    : f_(f), cfg_(std::move(cfg)), d_(f.dim()) {
  cfg_.validate();
  cfg_.noise_cov.check_dim(d_);
  eps_ = cfg_.eps_noise();
  inc_scale_ = cfg_.increment_scale();
  const auto n = static_cast<Eigen::Index>(d_);
  grad_.resize(n);
  noise_.resize(n);
  dL_.resize(n);
  zero_ = Vec::Zero(n);
  theta_new_.resize(n);
  m_new_.resize(n);
  v_new_.resize(n);
}

void LevyIntegrator::check_state(const SdeState& s) const {
  const auto n = static_cast<Eigen::Index>(d_);
  if (s.theta.size() != n) throw DimensionError("state theta has the wrong dimension");
  if (cfg_.kind != OptimizerKind::Sgd && s.m.size() != n)
    throw DimensionError("momentum state missing or wrong size");
  if (cfg_.kind == OptimizerKind::Adam && s.v.size() != n)
    throw DimensionError("second-moment state missing or wrong size");
}

void LevyIntegrator::draw_increment(Rng& rng, Vec& dL) const {
  for (Eigen::Index i = 0; i < dL.size(); ++i) dL[i] = inc_scale_ * draw_sas(cfg_.alpha, rng);
}

void LevyIntegrator::step(SdeState& s, Rng& rng) {
  draw_increment(rng, dL_);
  step(s, dL_);
}

void LevyIntegrator::step_noise_free(SdeState& s) { step(s, zero_); }

void LevyIntegrator::step(SdeState& s, const Vec& dL) {
  const double h = cfg_.step_h;
  f_.gradient(s.theta, grad_);
  if (!grad_.allFinite()) throw DivergedError("non-finite gradient at t=" + std::to_string(s.t), s);
  const bool noisy = eps_ != 0.0;
  if (noisy) cfg_.noise_cov.apply(dL, noise_);

  const double t_new = s.t + h;
  switch (cfg_.kind) {
    case OptimizerKind::Sgd:
      theta_new_ = s.theta - h * grad_;
      if (noisy) theta_new_ += eps_ * noise_;
      break;
    case OptimizerKind::Sgdm: {
      m_new_ = s.m + (h * cfg_.beta1) * (grad_ - s.m);
      const double mu = bias_correction(cfg_.beta1, t_new);
      theta_new_ = s.theta - (h * mu) * m_new_;
      if (noisy) theta_new_ += eps_ * noise_;
      break;
    }
    case OptimizerKind::Adam: {
      m_new_ = s.m + (h * cfg_.beta1) * (grad_ - s.m);
      if (cfg_.freeze_v) {
        v_new_ = s.v;
      } else if (cfg_.v_noise_factor > 0.0) {
        // Gradient seen by v carries an SaS(1) proxy of the minibatch noise.
        const double k = cfg_.v_noise_factor / inc_scale_;
        v_new_ = s.v + (h * cfg_.beta2) * ((grad_ + k * dL).array().square().matrix() - s.v);
      } else {
        v_new_ = s.v + (h * cfg_.beta2) * (grad_.array().square().matrix() - s.v);
      }
      const double mu = bias_correction(cfg_.beta1, t_new);
      const double omega = bias_correction(cfg_.beta2, t_new);
      const auto q = ((omega * v_new_).array().sqrt() + cfg_.eps_adam);
      theta_new_.array() = s.theta.array() - (h * mu) * m_new_.array() / q;
      if (noisy) theta_new_.array() += eps_ * noise_.array() / q;
      break;
    }
  }
  if (!theta_new_.allFinite())
    throw DivergedError("iterate left the finite range at t=" + std::to_string(t_new), s);
  s.theta.swap(theta_new_);
  if (cfg_.kind != OptimizerKind::Sgd) s.m.swap(m_new_);
  if (cfg_.kind == OptimizerKind::Adam) s.v.swap(v_new_);
  s.t = t_new;
}

SdeState levy_step(const SdeState& s, const Landscape& f, const OptimizerConfig& cfg,
                   const Vec& noise_increment) {
  LevyIntegrator integ(f, cfg);
  integ.check_state(s);
  if (static_cast<std::size_t>(noise_increment.size()) != f.dim())
    throw DimensionError("noise increment has the wrong dimension");
  SdeState out = s;
  integ.step(out, noise_increment);
  return out;
}

Trajectory integrate(const SdeState& s0, const Landscape& f, const OptimizerConfig& cfg,
                     const StopRule& stop, std::uint64_t seed, std::size_t stride) {
  if (stride == 0) throw DomainError("recording stride must be at least 1");
  LevyIntegrator integ(f, cfg);
  integ.check_state(s0);
  auto rng = make_stream(seed);
  Trajectory tr;
  SdeState s = s0;
  tr.states.push_back(s);
  if (stop.exit && stop.exit(s)) {
    tr.exited = true;
    return tr;
  }
  for (std::size_t k = 1; k <= stop.max_steps; ++k) {
    integ.step(s, rng);
    tr.steps = k;
    const bool out = stop.exit && stop.exit(s);
    if (out || k % stride == 0 || k == stop.max_steps) tr.states.push_back(s);
    if (out) {
      tr.exited = true;
      tr.exit_step = k;
      break;
    }
  }
  return tr;
}

double lyapunov_value(const SdeState& s, const Landscape& f, const OptimizerConfig& cfg) {
  double L = f.value(s.theta) - f.min_value();
  if (cfg.kind == OptimizerKind::Sgd || s.m.size() == 0 || s.m.isZero(0.0)) return L;
  const double mu = bias_correction(cfg.beta1, s.t);
  for (Eigen::Index i = 0; i < s.m.size(); ++i) {
    double q = 1.0;
    if (cfg.kind == OptimizerKind::Adam)
      q = std::sqrt(bias_correction(cfg.beta2, s.t) * s.v[i]) + cfg.eps_adam;
    const double si = cfg.beta1 / mu * q;
    L += 0.5 * s.m[i] * s.m[i] / si;
  }
  return L;
}

std::pair<Trajectory, FlowRateReport> deterministic_flow(const SdeState& s0, const Landscape& f,
                                                         OptimizerConfig cfg, double T,
                                                         std::size_t stride) {
  if (!(T > 0.0)) throw DomainError("flow horizon T must be positive");
  if (stride == 0) throw DomainError("recording stride must be at least 1");
  cfg.noise_amplitude = 0.0;
  LevyIntegrator integ(f, cfg);
  integ.check_state(s0);
  const auto steps = static_cast<std::size_t>(std::ceil(T / cfg.step_h - 1e-9));

  Trajectory tr;
  FlowRateReport rep;
  SdeState s = s0;
  Vec g(static_cast<Eigen::Index>(f.dim()));
  double tau = std::numeric_limits<double>::infinity();
  const double warmup = cfg.kind == OptimizerKind::Sgd ? 0.0 : 1.0 / cfg.beta1;

  auto observe = [&](const SdeState& st, bool record) {
    const double L = lyapunov_value(st, f, cfg);
    if (record) {
      tr.states.push_back(st);
      rep.lyapunov_series.emplace_back(st.t, L);
    }
    if (cfg.kind == OptimizerKind::Adam && st.t > 0.0) {
      const double omega = bias_correction(cfg.beta2, st.t);
      rep.v_max = std::max(rep.v_max, std::sqrt(omega * st.v.maxCoeff()));
    }
    if (cfg.kind != OptimizerKind::Sgd && st.t >= warmup) {
      f.gradient(st.theta, g);
      const double gn = g.norm();
      if (gn > 1e-12) tau = std::min(tau, st.m.norm() / gn);
    }
    return L;
  };

  double prev = observe(s, true);
  for (std::size_t k = 1; k <= steps; ++k) {
    integ.step_noise_free(s);
    tr.steps = k;
    const double L = observe(s, k % stride == 0 || k == steps);
    // Allow rounding-level increases only.
    if (L > prev + 1e-13 * std::abs(prev) + 1e-300) rep.monotone = false;
    prev = L;
  }

  const double L0 = rep.lyapunov_series.front().second;
  if (L0 > 0.0) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t n = 0;
    for (const auto& [t, L] : rep.lyapunov_series) {
      if (!(L > 1e-10 * L0)) continue;
      const double y = std::log(L);
      st += t;
      sy += y;
      stt += t * t;
      sty += t * y;
      ++n;
    }
    const double den = static_cast<double>(n) * stt - st * st;
    if (n >= 2 && den > 0.0) rep.observed_rate = -(static_cast<double>(n) * sty - st * sy) / den;
  }

  rep.tau = std::isfinite(tau) ? tau : 0.0;
  switch (cfg.kind) {
    case OptimizerKind::Sgd: rep.predicted_rate = 2.0 * f.mu(); break;
    case OptimizerKind::Adam: {
      const double mu = f.mu();
      rep.predicted_rate = 2.0 * mu * rep.tau / (cfg.beta1 * (rep.v_max + cfg.eps_adam) + mu * rep.tau) *
                           (cfg.beta1 - cfg.beta2 / 4.0);
      break;
    }
    case OptimizerKind::Sgdm: break;
  }
  return {std::move(tr), std::move(rep)};
}

DiscreteState DiscreteState::zeros(const Vec& theta) {
  DiscreteState s;
  s.theta = theta;
  s.m = Vec::Zero(theta.size());
  s.v = Vec::Zero(theta.size());
  return s;
}

DiscreteState discrete_reference_step(const DiscreteState& s, const Vec& g, const OptimizerConfig& cfg) {
  if (g.size() != s.theta.size()) throw DimensionError("gradient has the wrong dimension");
  DiscreteState out = s;
  out.k = s.k + 1;
  const double k = static_cast<double>(out.k);
  switch (cfg.kind) {
    case OptimizerKind::Sgd:
      out.theta = s.theta - cfg.eta * g;
      break;
    case OptimizerKind::Adam: {
      out.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * g;
      out.v = cfg.beta2 * s.v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
      const double c1 = 1.0 - std::pow(cfg.beta1, k);
      const double c2 = 1.0 - std::pow(cfg.beta2, k);
      out.theta.array() = s.theta.array() -
                          cfg.eta * (out.m.array() / c1) / ((out.v.array() / c2).sqrt() + cfg.eps_adam);
      break;
    }
    case OptimizerKind::Sgdm: {
      out.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * g;
      out.theta = s.theta - cfg.eta / (1.0 - std::pow(cfg.beta1, k)) * out.m;
      break;
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  if (tr.states.empty()) return;
  const auto& first = tr.states.front();
  std::vector<std::string> cells{"t"};
  for (Eigen::Index i = 0; i < first.theta.size(); ++i) cells.push_back("theta_" + std::to_string(i));
  for (Eigen::Index i = 0; i < first.m.size(); ++i) cells.push_back("m_" + std::to_string(i));
  for (Eigen::Index i = 0; i < first.v.size(); ++i) cells.push_back("v_" + std::to_string(i));
  write_csv_row(os, cells);
  for (const auto& s : tr.states) {
    cells.clear();
    cells.push_back(format_double(s.t));
    for (double x : s.theta) cells.push_back(format_double(x));
    for (double x : s.m) cells.push_back(format_double(x));
    for (double x : s.v) cells.push_back(format_double(x));
    write_csv_row(os, cells);
  }
}

}  // namespace levy
