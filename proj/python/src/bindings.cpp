// Python bindings: a keyword-argument view of the library.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "levy/dynamics.hpp"
#include "levy/errors.hpp"
#include "levy/escape.hpp"
#include "levy/geometry.hpp"
#include "levy/landscape.hpp"
#include "levy/probe.hpp"
#include "levy/report.hpp"
#include "levy/stable.hpp"

namespace py = pybind11;
using namespace levy;
using namespace pybind11::literals;

namespace {

std::shared_ptr<const Landscape> make_landscape(const std::string& kind, const std::vector<double>& lambdas, double a,
                                                double height, std::optional<std::uint64_t> rotation_seed) {
  if (kind == "double_well") return std::make_shared<DoubleWell1D>(a);
  if (kind == "quadratic")
    return std::make_shared<QuadraticBasin>(QuadraticBasin::from_eigenvalues(lambdas, 0.0, height, rotation_seed));
  throw DomainError("unknown landscape '" + kind + "'");
}

OptimizerConfig make_optimizer(const std::string& kind, double alpha, double eta, double step_h,
                               std::optional<double> noise_amplitude, const std::string& noise_scale, double sigma,
                               double beta1, double beta2) {
  OptimizerConfig c;
  c.kind = parse_optimizer_kind(kind);
  c.alpha = alpha;
  c.eta = eta;
  c.step_h = step_h;
  c.noise_amplitude = noise_amplitude;
  if (noise_scale == "levy")
    c.noise_scale = NoiseScale::LevyMeasure;
  else if (noise_scale != "unit")
    throw DomainError("noise_scale must be 'unit' or 'levy'");
  c.noise_cov = NoiseCovariance::identity().scaled(sigma);
  c.beta1 = beta1;
  c.beta2 = beta2;
  c.validate();
  return c;
}

py::dict stats_dict(const EscapeStats& s) {
  std::vector<std::size_t> steps;
  std::vector<bool> exited;
  for (const auto& r : s.records) {
    steps.push_back(r.exit_step);
    exited.push_back(r.exited);
  }
  return py::dict("trials"_a = s.trials, "exits"_a = s.exits, "escape_prob"_a = s.escape_prob,
                  "escape_prob_ci95"_a = s.escape_prob_ci95, "mean_exit_steps"_a = s.mean_exit_steps,
                  "mean_exit_time"_a = s.mean_exit_time, "mean_exit_steps_ci95"_a = s.mean_exit_steps_ci95,
                  "exit_steps"_a = steps, "exited"_a = exited);
}

py::dict measure_dict(const MeasureEstimate& m) {
  return py::dict("value"_a = m.value, "std_error"_a = m.std_error, "directions"_a = m.directions,
                  "exact"_a = m.exact);
}

EscapeConfig escape_config(const std::string& landscape, const std::vector<double>& lambdas, double a, double height,
                           const std::string& optimizer, double alpha, double eta, double step_h,
                           std::optional<double> noise_amplitude, const std::string& noise_scale, double sigma,
                           double gamma, std::optional<double> eps, std::optional<Vec> theta0, std::size_t trials,
                           std::size_t max_steps, std::uint64_t seed, std::size_t threads) {
  EscapeConfig c;
  c.landscape = make_landscape(landscape, lambdas, a, height, std::nullopt);
  c.optimizer = make_optimizer(optimizer, alpha, eta, step_h, noise_amplitude, noise_scale, sigma, 0.9, 0.999);
  if (const auto* dw = dynamic_cast<const DoubleWell1D*>(c.landscape.get()))
    c.basin.region = dw->right_basin();
  else
    c.basin.region = dynamic_cast<const QuadraticBasin&>(*c.landscape).basin();
  c.basin.gamma = gamma;
  c.basin.eps = eps ? *eps : c.optimizer.eps_noise();
  c.theta0 = theta0 ? *theta0 : c.landscape->minimizer();
  if (c.optimizer.kind == OptimizerKind::Adam) c.v0 = Vec::Zero(c.theta0.size());
  c.trials = trials;
  c.max_steps = max_steps;
  c.base_seed = seed;
  c.threads = threads;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Heavy-tailed SDE models of SGD and Adam: sampling, escape times, escaping-set geometry";
  m.attr("__version__") = tool_version();

  py::register_exception<DivergedError>(m, "DivergedError", PyExc_RuntimeError);

  m.def(
      "sample_sas",
      [](double alpha, std::size_t n, std::uint64_t seed, double sigma) {
        const auto x = sample_sas(StableLaw{alpha, sigma}, n, seed);
        return py::array_t<double>(static_cast<py::ssize_t>(x.size()), x.data());
      },
      "alpha"_a, "n"_a, "seed"_a = 0, "sigma"_a = 1.0, "Symmetric alpha-stable draws, reproducible per seed.");

  m.def(
      "estimate_tail_index",
      [](const std::vector<double>& x, std::optional<std::size_t> k1, std::optional<std::size_t> k2) {
        if (!k1 && !k2) return estimate_tail_index(x);
        const std::size_t g2 = k2 ? *k2 : default_group_size(x.size());
        const std::size_t g1 = k1 ? *k1 : x.size() / g2;
        return estimate_tail_index(x, g1, g2);
      },
      "samples"_a, "k1"_a = py::none(), "k2"_a = py::none(), "Grouped log-moment tail-index estimate.");

  m.def("stable_char_fn", [](double alpha, double sigma, double omega) {
    return stable_char_fn(StableLaw{alpha, sigma}, omega);
  }, "alpha"_a, "sigma"_a, "omega"_a);
  m.def("levy_measure_scale", &levy_measure_scale, "alpha"_a);
  m.def("jump_intensity", &jump_intensity, "alpha"_a, "eps"_a, "delta"_a);
  m.def("ks_exponential", &ks_exponential, "samples"_a, "rate"_a);
  m.def("ks_critical_value", &ks_critical_value, "n"_a, "level"_a = 0.01);

  m.def(
      "decompose_jumps",
      [](const std::vector<double>& increments, double step_h, double threshold, std::optional<double> psi) {
        const auto ev = decompose_jumps(increments, step_h, threshold);
        py::dict d("times"_a = ev.times, "sizes"_a = ev.sizes, "indices"_a = ev.indices,
                   "small_series"_a = ev.small_series, "threshold"_a = ev.threshold);
        if (psi) {
          const auto t = interjump_time_test(ev, *psi);
          d["test"] = py::dict("n"_a = t.n, "mean"_a = t.mean, "expected_mean"_a = t.expected_mean,
                               "statistic"_a = t.statistic, "threshold"_a = t.threshold, "pass"_a = t.pass);
        }
        return d;
      },
      "increments"_a, "step_h"_a, "threshold"_a, "psi"_a = py::none(),
      "Split increments at a threshold; with psi, also test inter-jump times against Exponential(psi).");

  m.def(
      "escape",
      [](const std::string& landscape, const std::vector<double>& lambdas, double a, double height,
         const std::string& optimizer, double alpha, double eta, double step_h, std::optional<double> noise_amplitude,
         const std::string& noise_scale, double sigma, double gamma, std::optional<double> eps,
         std::optional<Vec> theta0, std::size_t trials, std::size_t max_steps, std::uint64_t seed,
         std::size_t threads) {
        const auto c = escape_config(landscape, lambdas, a, height, optimizer, alpha, eta, step_h, noise_amplitude,
                                     noise_scale, sigma, gamma, eps, theta0, trials, max_steps, seed, threads);
        EscapeStats st;
        {
          py::gil_scoped_release nogil;
          st = run_escape_experiment(c);
        }
        return stats_dict(st);
      },
      "landscape"_a = "quadratic", "lambdas"_a = std::vector<double>{1.0}, "a"_a = 150.0, "height"_a = 0.5,
      "optimizer"_a = "sgd", "alpha"_a = 1.5, "eta"_a = 1e-2, "step_h"_a = 1e-2, "noise_amplitude"_a = py::none(),
      "noise_scale"_a = "unit", "sigma"_a = 1.0, "gamma"_a = 2.0, "eps"_a = py::none(), "theta0"_a = py::none(),
      "trials"_a = 1000, "max_steps"_a = 2000, "seed"_a = 0, "threads"_a = 1,
      "First-exit Monte Carlo from the basin of a quadratic or double-well landscape.");

  m.def(
      "scaling_sweep",
      [](const std::vector<double>& eps_list, const std::vector<double>& lambdas, double height, double alpha,
         double step_h, std::size_t trials, std::size_t max_steps, std::uint64_t seed, std::size_t threads,
         std::size_t min_exits) {
        const double e0 = eps_list.empty() ? 0.1 : eps_list.front();
        const auto c = escape_config("quadratic", lambdas, 0.0, height, "sgd", alpha, 1e-2, step_h, e0, "levy", 1.0,
                                     2.0, e0, std::nullopt, trials, max_steps, seed, threads);
        SweepReport r;
        {
          py::gil_scoped_release nogil;
          r = scaling_sweep(c, eps_list, min_exits);
        }
        py::list pts;
        for (const auto& p : r.points) {
          auto d = stats_dict(p.stats);
          d["eps"] = p.eps;
          d["used"] = p.used;
          pts.append(d);
        }
        return py::dict("points"_a = pts, "slope"_a = r.slope, "intercept"_a = r.intercept,
                        "r_squared"_a = r.r_squared, "warnings"_a = r.warnings);
      },
      "eps_list"_a, "lambdas"_a = std::vector<double>{10.0}, "height"_a = 5.0, "alpha"_a = 1.5, "step_h"_a = 1e-3,
      "trials"_a = 2000, "max_steps"_a = 2000000, "seed"_a = 0, "threads"_a = 1, "min_exits"_a = 100,
      "Mean exit time of SGD with Levy-measure noise against eps, with a log-log fit.");

  m.def("predicted_mean_exit", &predicted_mean_exit, "m_W"_a, "alpha"_a, "eps"_a);

  m.def(
      "radon_measure",
      [](const Mat& A, double c, double alpha, std::size_t directions, std::uint64_t seed, std::size_t threads,
         bool normalized) {
        const QuadraticEscapeSet w{A, c};
        return measure_dict(normalized ? normalized_radon_measure(w, alpha, directions, seed, threads)
                                       : radon_measure(w, alpha, directions, seed, threads));
      },
      "A"_a, "c"_a, "alpha"_a, "directions"_a = 1000000, "seed"_a = 0, "threads"_a = 1, "normalized"_a = false,
      "Measure of {y : y^T A y >= c} under |y|^-(d+alpha) dy.");

  m.def("ellipsoid_volume", &ellipsoid_volume, "A"_a, "c"_a);

  m.def(
      "compare_measures",
      [](const std::vector<double>& lambdas, const std::vector<double>& sigmas, double alpha, std::size_t batch_size,
         double h_f_star, std::size_t directions, std::uint64_t seed, std::size_t threads) {
        const Spectrum s{lambdas, sigmas, batch_size, h_f_star};
        s.validate();
        const auto r = compare_measures(s, alpha, directions, seed, threads);
        return py::dict("m_sgd"_a = measure_dict(r.m_sgd), "m_adam"_a = measure_dict(r.m_adam), "ratio"_a = r.ratio,
                        "predicted_exit_ratio"_a = r.predicted_exit_ratio, "volume_sgd"_a = r.volume_sgd,
                        "volume_adam"_a = r.volume_adam, "quoted_volume_adam"_a = r.quoted_volume_adam,
                        "volume_formula_mismatch"_a = r.volume_formula_mismatch);
      },
      "lambdas"_a, "sigmas"_a, "alpha"_a = 1.5, "batch_size"_a = 1, "h_f_star"_a = 1.0, "directions"_a = 1000000,
      "seed"_a = 0, "threads"_a = 1, "Escaping-set measures of SGD and Adam for a Hessian/noise spectrum.");

  m.def(
      "flow",
      [](const std::vector<double>& lambdas, const Vec& theta0, const std::string& optimizer, double step_h, double T,
         double beta1, double beta2) {
        const auto f = make_landscape("quadratic", lambdas, 0.0, 1e300, std::nullopt);
        const auto cfg = make_optimizer(optimizer, 1.5, 1e-2, step_h, 0.0, "unit", 1.0, beta1, beta2);
        const auto [tr, rep] = deterministic_flow(SdeState::at_rest(theta0, cfg.kind), *f, cfg, T, 1);
        std::vector<double> t, lyap;
        for (const auto& [ti, li] : rep.lyapunov_series) {
          t.push_back(ti);
          lyap.push_back(li);
        }
        return py::dict("observed_rate"_a = rep.observed_rate, "predicted_rate"_a = rep.predicted_rate,
                        "monotone"_a = rep.monotone, "t"_a = t, "lyapunov"_a = lyap,
                        "theta"_a = tr.states.back().theta);
      },
      "lambdas"_a, "theta0"_a, "optimizer"_a = "sgd", "step_h"_a = 1e-3, "T"_a = 5.0, "beta1"_a = 0.9,
      "beta2"_a = 0.999, "Noise-free flow on a quadratic and the decay rate of its Lyapunov function.");

  m.def(
      "noise_probe",
      [](std::size_t steps, std::size_t batch_size, double eta, std::optional<double> injected_alpha,
         std::size_t n_samples, std::size_t d_in, std::size_t d_hidden, std::size_t classes, std::uint64_t seed) {
        const auto data = SyntheticDataset::blobs(n_samples, d_in, classes, 1.0, 3.0, seed);
        const auto m0 = MlpModel::init(d_in, d_hidden, classes, seed);
        NoiseProbeConfig cfg;
        cfg.optimizer.eta = eta;
        cfg.steps = steps;
        cfg.batch_size = batch_size;
        cfg.injected_alpha = injected_alpha;
        cfg.seed = seed;
        std::vector<NoiseRecord> recs;
        {
          py::gil_scoped_release nogil;
          recs = noise_trajectory(m0, data, cfg);
        }
        std::vector<std::size_t> step;
        std::vector<std::optional<double>> alpha_hat;
        std::vector<double> l2;
        for (const auto& r : recs) {
          step.push_back(r.step);
          alpha_hat.push_back(r.alpha_hat);
          l2.push_back(r.noise_l2);
        }
        return py::dict("step"_a = step, "alpha_hat"_a = alpha_hat, "noise_l2"_a = l2);
      },
      "steps"_a = 3000, "batch_size"_a = 1, "eta"_a = 0.05, "injected_alpha"_a = py::none(), "n_samples"_a = 2000,
      "d_in"_a = 20, "d_hidden"_a = 32, "classes"_a = 3, "seed"_a = 0,
      "Tail index of minibatch gradient noise along an SGD run of a small MLP.");
}
