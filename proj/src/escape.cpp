#include "levy/escape.hpp"

#include <cmath>

#include "levy/errors.hpp"
#include "levy/parallel.hpp"

namespace levy {

void EscapeConfig::validate() const {
  if (!landscape) throw DomainError("escape: missing landscape");
  basin.validate();
  optimizer.validate();
  if (trials == 0) throw DomainError("escape: need at least one trial");
  if (static_cast<std::size_t>(theta0.size()) != landscape->dim())
    throw DimensionError("escape: theta0 does not match the landscape dimension");
  if (basin.region->dim() != landscape->dim())
    throw DimensionError("escape: basin does not match the landscape dimension");
  if (!in_inner_basin(basin, theta0, 2.0))
    throw DomainError("escape: theta0 must lie in the basin at distance >= 2 eps^gamma from the boundary");
}

EscapeStats summarize(std::vector<ExitRecord> records, double step_h) {
  EscapeStats st;
  st.trials = records.size();
  CompensatedSum sum, sum_sq;
  for (auto& r : records) {
    r.exit_time = r.exited ? static_cast<double>(r.exit_step) * step_h : 0.0;
    if (!r.exited) continue;
    ++st.exits;
    const auto k = static_cast<double>(r.exit_step);
    sum.add(k);
    sum_sq.add(k * k);
  }
  const double n = static_cast<double>(st.trials);
  if (st.trials > 0) {
    st.escape_prob = static_cast<double>(st.exits) / n;
    st.escape_prob_ci95 = 1.96 * std::sqrt(st.escape_prob * (1.0 - st.escape_prob) / n);
  }
  if (st.exits > 0) {
    const double e = static_cast<double>(st.exits);
    const double mean = sum.value() / e;
    st.mean_exit_steps = mean;
    st.mean_exit_time = mean * step_h;
    if (st.exits > 1) {
      const double var = std::max(0.0, (sum_sq.value() - e * mean * mean) / (e - 1.0));
      st.mean_exit_steps_ci95 = 1.96 * std::sqrt(var / e);
    }
  }
  st.records = std::move(records);
  return st;
}

EscapeStats run_escape_experiment(const EscapeConfig& cfg) {
  cfg.validate();
  std::vector<ExitRecord> records(cfg.trials);
  const double h = cfg.optimizer.step_h;
  parallel_for(cfg.trials, cfg.threads, [&](std::size_t i) {
    LevyIntegrator integ(*cfg.landscape, cfg.optimizer);
    auto rng = make_stream(cfg.base_seed + i);
    SdeState s = SdeState::at_rest(cfg.theta0, cfg.optimizer.kind, cfg.v0);
    ExitRecord r;
    r.trial = i;
    for (std::size_t k = 1; k <= cfg.max_steps; ++k) {
      integ.step(s, rng);
      if (!in_inner_basin(cfg.basin, s.theta)) {
        r.exited = true;
        r.exit_step = k;
        r.exit_time = static_cast<double>(k) * h;
        break;
      }
    }
    records[i] = r;
  });
  return summarize(std::move(records), h);
}

double predicted_mean_exit(double m_W, double alpha, double eps) {
  if (!(m_W > 0.0) || !std::isfinite(m_W)) throw DomainError("predicted_mean_exit: m_W must be positive");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("predicted_mean_exit: alpha must lie in (0, 2]");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("predicted_mean_exit: eps must lie in (0, 1)");
  return alpha / (2.0 * m_W * std::pow(eps, alpha));
}

CalibrationResult calibrate_noise_scale(const EscapeConfig& cfg, double target_mean, double lo,
                                        double hi, std::size_t iterations) {
  if (!(target_mean > 0.0)) throw DomainError("calibration target must be positive");
  if (!(lo > 0.0 && hi > lo)) throw DomainError("calibration bracket must satisfy 0 < lo < hi");
  const NoiseCovariance base = cfg.optimizer.noise_cov;
  auto run_at = [&](double k) {
    EscapeConfig c = cfg;
    c.optimizer.noise_cov = base.scaled(k);
    return run_escape_experiment(c);
  };
  CalibrationResult res;
  for (std::size_t it = 0; it < iterations; ++it) {
    const double mid = std::sqrt(lo * hi);
    const EscapeStats st = run_at(mid);
    const bool too_quiet = st.escape_prob < 1.0 || !st.mean_exit_steps || *st.mean_exit_steps > target_mean;
    (too_quiet ? lo : hi) = mid;
    res.iterations = it + 1;
  }
  res.noise_scale = std::sqrt(lo * hi);
  res.stats = run_at(res.noise_scale);
  return res;
}

SweepReport scaling_sweep(const EscapeConfig& tmpl, const std::vector<double>& eps_list,
                          std::size_t min_exits) {
  if (eps_list.size() < 4) throw SizeError("scaling sweep: need at least 4 eps values");
  double lo = eps_list.front(), hi = eps_list.front();
  for (double e : eps_list) {
    if (!(e > 0.0 && e < 1.0)) throw DomainError("scaling sweep: eps values must lie in (0, 1)");
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  if (hi < 10.0 * lo * (1.0 - 1e-12)) throw DomainError("scaling sweep: eps values must span a decade");

  SweepReport rep;
  for (double e : eps_list) {
    EscapeConfig c = tmpl;
    c.optimizer.noise_amplitude = e;
    c.basin.eps = e;
    SweepPoint p;
    p.eps = e;
    p.stats = run_escape_experiment(c);
    p.used = p.stats.exits >= min_exits;
    if (!p.used)
      rep.warnings.push_back("eps=" + std::to_string(e) + ": only " + std::to_string(p.stats.exits) +
                             " exits (< " + std::to_string(min_exits) + "), point dropped");
    rep.points.push_back(std::move(p));
  }

  std::vector<double> xs, ys;
  for (const auto& p : rep.points) {
    if (!p.used) continue;
    xs.push_back(std::log(p.eps));
    ys.push_back(std::log(*p.stats.mean_exit_time));
  }
  if (xs.size() < 2) throw SizeError("scaling sweep: fewer than two usable eps values");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  rep.slope = sxy / sxx;
  rep.intercept = my - rep.slope * mx;
  rep.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return rep;
}

ComparisonReport compare_optimizers(const EscapeConfig& tmpl, const std::vector<OptimizerKind>& kinds) {
  if (kinds.empty()) throw DomainError("compare: no optimizers given");
  ComparisonReport rep;
  for (OptimizerKind k : kinds) {
    EscapeConfig c = tmpl;
    c.optimizer.kind = k;
    if (k != OptimizerKind::Adam) c.v0.reset();
    rep.stats[k] = run_escape_experiment(c);
  }
  auto ratio = [&](OptimizerKind a, OptimizerKind b) -> std::optional<double> {
    const auto ia = rep.stats.find(a), ib = rep.stats.find(b);
    if (ia == rep.stats.end() || ib == rep.stats.end()) return {};
    if (!ia->second.mean_exit_time || !ib->second.mean_exit_time) return {};
    return *ia->second.mean_exit_time / *ib->second.mean_exit_time;
  };
  rep.sgd_over_adam = ratio(OptimizerKind::Sgd, OptimizerKind::Adam);
  rep.sgd_over_sgdm = ratio(OptimizerKind::Sgd, OptimizerKind::Sgdm);
  return rep;
}

}  // namespace levy
