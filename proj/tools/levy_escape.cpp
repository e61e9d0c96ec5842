// levy_escape: command-line driver for the library.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "levy/dynamics.hpp"
#include "levy/errors.hpp"
#include "levy/escape.hpp"
#include "levy/geometry.hpp"
#include "levy/probe.hpp"
#include "levy/report.hpp"
#include "levy/stable.hpp"

using namespace levy;

namespace {

constexpr int kUsageError = 2;
constexpr int kDiverged = 3;

struct Common {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string json_path;  // empty: stdout
};

struct LandscapeOpts {
  std::string kind = "quadratic";
  double a = 150.0;
  std::vector<double> lambdas{1.0};
  std::optional<std::uint64_t> rotation_seed;
  double height = 0.5;
  double f_star = 0.0;
};

struct OptimizerOpts {
  std::string kind = "sgd";
  double alpha = 1.5;
  double eta = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  double step_h = 1e-2;
  std::optional<double> noise_amplitude;
  std::string noise_scale = "unit";
  double sigma = 1.0;
  double v_noise_factor = 0.0;
};

struct EscapeOpts {
  std::vector<double> a_list;  // double-well basins evaluated in order
  double gamma = 2.0;
  std::optional<double> eps;
  std::vector<double> theta0;
  std::size_t trials = 1000;
  std::size_t max_steps = 2000;
  std::optional<double> calibrate_target;
  std::string csv_path;
};

struct SpectrumOpts {
  std::vector<double> lambdas{10.0, 0.1};
  std::vector<double> sigmas{3.0, 0.3};
  std::size_t batch_size = 1;
  double h_f_star = 1.0;
  std::optional<std::uint64_t> rotation_seed;
  double misalignment = 0.0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Base seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads")
      ->envname("LEVY_ESCAPE_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--json", c.json_path, "Write the JSON summary here instead of stdout");
}

void add_landscape(CLI::App* sub, LandscapeOpts& l) {
  sub->add_option("--landscape", l.kind, "double_well or quadratic")
      ->check(CLI::IsMember({"double_well", "quadratic"}))
      ->capture_default_str();
  sub->add_option("--a", l.a, "Double-well steepness")->capture_default_str();
  sub->add_option("--lambdas", l.lambdas, "Quadratic Hessian eigenvalues")->capture_default_str();
  sub->add_option("--rotation-seed", l.rotation_seed, "Seed of the quadratic's eigenbasis");
  sub->add_option("--height", l.height, "Quadratic basin cut level")->capture_default_str();
  sub->add_option("--f-star", l.f_star, "Quadratic minimum value")->capture_default_str();
}

void add_optimizer(CLI::App* sub, OptimizerOpts& o) {
  sub->add_option("--optimizer", o.kind, "sgd, adam or sgdm")
      ->check(CLI::IsMember({"sgd", "adam", "sgdm"}))
      ->capture_default_str();
  sub->add_option("--alpha", o.alpha, "Tail index of the driving noise")->capture_default_str();
  sub->add_option("--eta", o.eta, "Learning rate")->capture_default_str();
  sub->add_option("--beta1", o.beta1)->capture_default_str();
  sub->add_option("--beta2", o.beta2)->capture_default_str();
  sub->add_option("--eps-adam", o.eps_adam)->capture_default_str();
  sub->add_option("--step-h", o.step_h, "Euler step")->capture_default_str();
  sub->add_option("--noise-amplitude", o.noise_amplitude, "Overrides eta^((alpha-1)/alpha)");
  sub->add_option("--noise-scale", o.noise_scale, "unit or levy")
      ->check(CLI::IsMember({"unit", "levy"}))
      ->capture_default_str();
  sub->add_option("--sigma", o.sigma, "Isotropic noise covariance multiplier")->capture_default_str();
  sub->add_option("--v-noise-factor", o.v_noise_factor)->capture_default_str();
}

void add_spectrum(CLI::App* sub, SpectrumOpts& s) {
  sub->add_option("--lambdas", s.lambdas, "Hessian eigenvalues, descending")->capture_default_str();
  sub->add_option("--sigmas", s.sigmas, "Noise singular values, descending")->capture_default_str();
  sub->add_option("--batch-size", s.batch_size)->capture_default_str();
  sub->add_option("--h-f-star", s.h_f_star)->capture_default_str();
  sub->add_option("--rotation-seed", s.rotation_seed);
  sub->add_option("--misalignment", s.misalignment)->capture_default_str();
}

std::shared_ptr<const Landscape> make_landscape(const LandscapeOpts& l, double a) {
  if (l.kind == "double_well") return std::make_shared<DoubleWell1D>(a);
  return std::make_shared<QuadraticBasin>(
      QuadraticBasin::from_eigenvalues(l.lambdas, l.f_star, l.height, l.rotation_seed));
}

std::shared_ptr<const Basin> basin_of(const Landscape& f) {
  if (const auto* dw = dynamic_cast<const DoubleWell1D*>(&f)) return dw->right_basin();
  return dynamic_cast<const QuadraticBasin&>(f).basin();
}

OptimizerConfig make_optimizer(const OptimizerOpts& o) {
  OptimizerConfig c;
  c.kind = parse_optimizer_kind(o.kind);
  c.alpha = o.alpha;
  c.eta = o.eta;
  c.beta1 = o.beta1;
  c.beta2 = o.beta2;
  c.eps_adam = o.eps_adam;
  c.step_h = o.step_h;
  c.noise_amplitude = o.noise_amplitude;
  c.noise_scale = o.noise_scale == "levy" ? NoiseScale::LevyMeasure : NoiseScale::Unit;
  c.noise_cov = NoiseCovariance::identity().scaled(o.sigma);
  c.v_noise_factor = o.v_noise_factor;
  c.validate();
  return c;
}

Vec to_vec(const std::vector<double>& x) { return Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size())); }

Spectrum make_spectrum(const SpectrumOpts& s) {
  Spectrum sp{s.lambdas, s.sigmas, s.batch_size, s.h_f_star, s.rotation_seed, s.misalignment};
  sp.validate();
  return sp;
}

EscapeConfig make_escape(const LandscapeOpts& l, double a, const OptimizerOpts& o, const EscapeOpts& e,
                         const Common& c) {
  EscapeConfig cfg;
  cfg.landscape = make_landscape(l, a);
  cfg.optimizer = make_optimizer(o);
  cfg.basin.region = basin_of(*cfg.landscape);
  cfg.basin.gamma = e.gamma;
  cfg.basin.eps = e.eps ? *e.eps : cfg.optimizer.eps_noise();
  cfg.theta0 = e.theta0.empty() ? cfg.landscape->minimizer() : to_vec(e.theta0);
  if (cfg.optimizer.kind == OptimizerKind::Adam) cfg.v0 = Vec::Zero(cfg.theta0.size());
  cfg.trials = e.trials;
  cfg.max_steps = e.max_steps;
  cfg.base_seed = c.seed;
  cfg.threads = c.threads;
  return cfg;
}

Json stats_json(const EscapeStats& s) {
  Json j;
  j["trials"] = s.trials;
  j["exits"] = s.exits;
  j["escape_prob"] = s.escape_prob;
  j["escape_prob_ci95"] = s.escape_prob_ci95;
  j["mean_exit_steps"] = to_json(s.mean_exit_steps);
  j["mean_exit_time"] = to_json(s.mean_exit_time);
  j["ci95"] = to_json(s.mean_exit_steps_ci95);
  return j;
}

void write_records_csv(std::ostream& os, const EscapeStats& s, const std::string& label) {
  for (const auto& r : s.records) {
    std::vector<std::string> row;
    if (!label.empty()) row.push_back(label);
    row.insert(row.end(), {std::to_string(r.trial), r.exited ? "1" : "0", std::to_string(r.exit_step),
                           format_double(r.exit_time)});
    write_csv_row(os, row);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot open " + path + " for writing");
  return f;
}

Json measure_json(const MeasureEstimate& m) {
  return Json{{"value", finite_or_null(m.value)},
              {"std_error", finite_or_null(m.std_error)},
              {"directions", m.directions},
              {"exact", m.exact}};
}

// Every option of the subcommand, as given or defaulted.
Json config_echo(const CLI::App* sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help" || opt->get_lnames().front() == "config")
      continue;
    const std::string name = opt->get_lnames().front();
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (r.size() == 1 && opt->get_items_expected_max() <= 1)
        j[name] = r.front();
      else
        j[name] = r;
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    } else {
      j[name] = nullptr;
    }
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Levy-driven SGD/Adam escape experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file with [subcommand] sections");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Common common;
  LandscapeOpts land;
  OptimizerOpts opt;
  EscapeOpts esc;
  SpectrumOpts spec;

  // sample
  auto* sample = app.add_subcommand("sample", "Draw SaS variates");
  StableLaw law{1.5, 1.0};
  std::size_t n = 1000000;
  std::string output;
  sample->add_option("--alpha", law.alpha)->capture_default_str();
  sample->add_option("--sigma", law.sigma)->capture_default_str();
  sample->add_option("--n", n)->capture_default_str();
  sample->add_option("--output", output, "File for the samples (one per line)");
  add_common(sample, common);

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Tail index of a sample file");
  std::string input;
  std::optional<std::size_t> k1, k2;
  estimate->add_option("--input", input, "One value per line")->required();
  estimate->add_option("--k1", k1);
  estimate->add_option("--k2", k2);
  add_common(estimate, common);

  // escape
  auto* escape = app.add_subcommand("escape", "First-exit Monte Carlo");
  add_landscape(escape, land);
  add_optimizer(escape, opt);
  escape->add_option("--basins", esc.a_list, "Double-well a values, evaluated in order");
  escape->add_option("--gamma", esc.gamma)->capture_default_str();
  escape->add_option("--eps", esc.eps, "Basin margin parameter (default: the noise amplitude)");
  escape->add_option("--theta0", esc.theta0);
  escape->add_option("--trials", esc.trials)->capture_default_str();
  escape->add_option("--max-steps", esc.max_steps)->capture_default_str();
  escape->add_option("--calibrate-target", esc.calibrate_target,
                     "Scale the noise on the first basin to this mean exit step count");
  escape->add_option("--csv", esc.csv_path, "Per-trial records");
  add_common(escape, common);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Mean exit time against eps");
  std::vector<double> eps_list{0.02, 0.05, 0.1, 0.2};
  std::size_t min_exits = 100;
  add_landscape(sweep, land);
  add_optimizer(sweep, opt);
  sweep->add_option("--eps-list", eps_list)->capture_default_str();
  sweep->add_option("--min-exits", min_exits)->capture_default_str();
  sweep->add_option("--gamma", esc.gamma)->capture_default_str();
  sweep->add_option("--theta0", esc.theta0);
  sweep->add_option("--trials", esc.trials)->capture_default_str();
  sweep->add_option("--max-steps", esc.max_steps)->capture_default_str();
  sweep->add_option("--csv", esc.csv_path, "Per-trial records, labelled by eps");
  add_common(sweep, common);

  // geometry
  auto* geometry = app.add_subcommand("geometry", "Escaping-set measures and volumes");
  double g_alpha = 1.5;
  std::size_t directions = 1000000;
  add_spectrum(geometry, spec);
  geometry->add_option("--alpha", g_alpha)->capture_default_str();
  geometry->add_option("--directions", directions)->capture_default_str();
  add_common(geometry, common);

  // compare
  auto* compare = app.add_subcommand("compare", "Geometry prediction against simulated exits");
  double c_eps = 0.05;
  std::vector<std::string> kinds{"sgd", "adam", "sgdm"};
  add_spectrum(compare, spec);
  compare->add_option("--alpha", g_alpha)->capture_default_str();
  compare->add_option("--directions", directions)->capture_default_str();
  compare->add_option("--eps", c_eps)->capture_default_str();
  compare->add_option("--gamma", esc.gamma)->capture_default_str();
  compare->add_option("--step-h", opt.step_h)->capture_default_str();
  compare->add_option("--trials", esc.trials)->capture_default_str();
  compare->add_option("--max-steps", esc.max_steps)->capture_default_str();
  compare->add_option("--optimizers", kinds)->capture_default_str();
  compare->add_option("--csv", esc.csv_path, "Per-trial records, labelled by optimizer");
  add_common(compare, common);

  // probe
  auto* probe = app.add_subcommand("probe", "Gradient-noise probe and Adam monitors");
  std::string mode = "noise";
  std::size_t n_samples = 2000, d_in = 20, d_hidden = 32, classes = 3;
  double spread = 1.0, separation = 3.0;
  NoiseProbeConfig pcfg;
  std::optional<double> injected;
  std::size_t monitor_steps = 2000;
  probe->add_option("--mode", mode, "noise or monitors")->check(CLI::IsMember({"noise", "monitors"}))
      ->capture_default_str();
  probe->add_option("--n-samples", n_samples)->capture_default_str();
  probe->add_option("--d-in", d_in)->capture_default_str();
  probe->add_option("--d-hidden", d_hidden)->capture_default_str();
  probe->add_option("--classes", classes)->capture_default_str();
  probe->add_option("--spread", spread)->capture_default_str();
  probe->add_option("--separation", separation)->capture_default_str();
  probe->add_option("--steps", pcfg.steps)->capture_default_str();
  probe->add_option("--batch-size", pcfg.batch_size)->capture_default_str();
  probe->add_option("--window", pcfg.window)->capture_default_str();
  probe->add_option("--record-stride", pcfg.record_stride)->capture_default_str();
  probe->add_option("--injected-alpha", injected);
  probe->add_option("--monitor-steps", monitor_steps)->capture_default_str();
  probe->add_option("--theta0", esc.theta0);
  probe->add_option("--csv", esc.csv_path, "NoiseRecord or AssumptionReport rows");
  add_landscape(probe, land);
  add_optimizer(probe, opt);
  add_common(probe, common);

  // flow
  auto* flow = app.add_subcommand("flow", "Noise-free flow and its Lyapunov decay");
  double horizon = 5.0;
  std::size_t stride = 1;
  add_landscape(flow, land);
  add_optimizer(flow, opt);
  flow->add_option("--T", horizon, "Flow horizon")->capture_default_str();
  flow->add_option("--stride", stride)->capture_default_str();
  flow->add_option("--theta0", esc.theta0);
  flow->add_option("--csv", esc.csv_path, "Trajectory dump");
  add_common(flow, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  const auto t0 = std::chrono::steady_clock::now();
  CLI::App* sub = app.get_subcommands().front();
  Json out;
  out["tool_version"] = tool_version();
  out["command"] = sub->get_name();
  out["config_echo"] = config_echo(sub);
  out["seed"] = common.seed;
  Json result;

  try {
    if (sub == sample) {
      law.validate();
      if (n == 0) throw SizeError("--n must be positive");
      const auto x = sample_sas(law, n, common.seed);
      if (!output.empty()) {
        auto f = open_out(output);
        for (double v : x) f << format_double(v) << '\n';
      }
      Json cf = Json::array();
      for (double w : {0.5, 1.0, 2.0})
        cf.push_back({{"omega", w}, {"empirical", empirical_char_fn(x, w)}, {"theory", stable_char_fn(law, w)}});
      result["n"] = n;
      result["char_fn"] = cf;
      result["output"] = output.empty() ? Json(nullptr) : Json(output);
    } else if (sub == estimate) {
      std::ifstream f(input);
      if (!f) throw DomainError("cannot read " + input);
      std::vector<double> x;
      for (std::string line; std::getline(f, line);) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        ls.imbue(std::locale::classic());
        double v;
        if (!(ls >> v)) throw DomainError("not a number: " + line);
        x.push_back(v);
      }
      if (x.empty()) throw SizeError("input file holds no samples");
      const std::size_t g2 = k2 ? *k2 : default_group_size(x.size());
      const std::size_t g1 = k1 ? *k1 : (g2 ? x.size() / g2 : 0);
      result["n"] = x.size();
      result["k1"] = g1;
      result["k2"] = g2;
      result["alpha_hat"] = estimate_tail_index(x, g1, g2);
    } else if (sub == escape) {
      std::vector<double> as = esc.a_list;
      if (as.empty()) as.push_back(land.a);
      if (land.kind != "double_well" && as.size() > 1) throw DomainError("--basins needs --landscape double_well");
      std::ofstream csv;
      if (!esc.csv_path.empty()) {
        csv = open_out(esc.csv_path);
        write_csv_row(csv, {"basin", "trial", "exited", "exit_step", "exit_time"});
      }
      double scale = 1.0;
      if (esc.calibrate_target) {
        const auto cal = calibrate_noise_scale(make_escape(land, as.front(), opt, esc, common), *esc.calibrate_target);
        scale = cal.noise_scale;
        result["calibration"] = {{"basin", as.front()}, {"target_mean", *esc.calibrate_target},
                                 {"noise_scale", scale}, {"iterations", cal.iterations}};
      }
      Json basins = Json::array();
      for (double a : as) {
        auto cfg = make_escape(land, a, opt, esc, common);
        cfg.optimizer.noise_cov = cfg.optimizer.noise_cov.scaled(scale);
        const auto st = run_escape_experiment(cfg);
        Json b = stats_json(st);
        if (land.kind == "double_well") b["a"] = a;
        basins.push_back(b);
        if (csv.is_open()) write_records_csv(csv, st, land.kind == "double_well" ? format_double(a) : "0");
      }
      result["basins"] = basins;
      if (basins.size() == 1) {
        for (const auto& [k, v] : basins.front().items()) result[k] = v;
      }
    } else if (sub == sweep) {
      auto tmpl = make_escape(land, land.a, opt, esc, common);
      tmpl.optimizer.noise_amplitude = eps_list.empty() ? 0.1 : eps_list.front();
      const auto rep = scaling_sweep(tmpl, eps_list, min_exits);
      Json pts = Json::array();
      std::ofstream csv;
      if (!esc.csv_path.empty()) {
        csv = open_out(esc.csv_path);
        write_csv_row(csv, {"eps", "trial", "exited", "exit_step", "exit_time"});
      }
      for (const auto& p : rep.points) {
        Json j = stats_json(p.stats);
        j["eps"] = p.eps;
        j["used"] = p.used;
        pts.push_back(j);
        if (csv.is_open()) write_records_csv(csv, p.stats, format_double(p.eps));
      }
      result["points"] = pts;
      result["slope"] = rep.slope;
      result["intercept"] = rep.intercept;
      result["r_squared"] = rep.r_squared;
      result["theory_slope"] = -opt.alpha;
      result["warnings"] = rep.warnings;
    } else if (sub == geometry || sub == compare) {
      const auto sp = make_spectrum(spec);
      const auto cmp = compare_measures(sp, g_alpha, directions, common.seed, common.threads);
      const auto sets = build_escape_sets(sp);
      Json g;
      g["m_sgd"] = measure_json(cmp.m_sgd);
      g["m_adam"] = measure_json(cmp.m_adam);
      g["ratio"] = finite_or_null(cmp.ratio);
      g["predicted_exit_ratio"] = finite_or_null(cmp.predicted_exit_ratio);
      g["normalized_m_sgd"] = measure_json(normalized_radon_measure(sets.sgd, g_alpha, directions, common.seed, common.threads));
      g["normalized_m_adam"] = measure_json(normalized_radon_measure(sets.adam, g_alpha, directions, common.seed, common.threads));
      g["volume_sgd"] = to_json(cmp.volume_sgd);
      g["volume_adam"] = finite_or_null(cmp.volume_adam);
      g["quoted_volume_adam"] = finite_or_null(cmp.quoted_volume_adam);
      g["volume_formula_mismatch"] = cmp.volume_formula_mismatch;
      result["geometry"] = g;
      if (sub == compare) {
        auto cfg = spectrum_escape_config(sp, g_alpha, c_eps, esc.gamma, opt.step_h, esc.trials, esc.max_steps,
                                          common.seed);
        cfg.threads = common.threads;
        std::vector<OptimizerKind> ks;
        for (const auto& k : kinds) ks.push_back(parse_optimizer_kind(k));
        const auto rep = compare_optimizers(cfg, ks);
        std::ofstream csv;
        if (!esc.csv_path.empty()) {
          csv = open_out(esc.csv_path);
          write_csv_row(csv, {"optimizer", "trial", "exited", "exit_step", "exit_time"});
        }
        Json sim;
        for (const auto& [k, st] : rep.stats) {
          sim[to_string(k)] = stats_json(st);
          if (csv.is_open()) write_records_csv(csv, st, to_string(k));
        }
        result["simulation"] = sim;
        result["sgd_over_adam"] = to_json(rep.sgd_over_adam);
        result["sgd_over_sgdm"] = to_json(rep.sgd_over_sgdm);
        result["common_random_numbers"] = true;
        if (rep.sgd_over_adam)
          result["sign_agrees"] = (std::log(cmp.ratio) > 0) == (*rep.sgd_over_adam < 1.0);
      }
    } else if (sub == probe) {
      if (mode == "noise") {
        const auto data = SyntheticDataset::blobs(n_samples, d_in, classes, spread, separation, common.seed);
        const auto m0 = MlpModel::init(d_in, d_hidden, classes, common.seed);
        pcfg.optimizer = make_optimizer(opt);
        pcfg.seed = common.seed;
        pcfg.injected_alpha = injected;
        pcfg.keep_noise = true;
        const auto recs = noise_trajectory(m0, data, pcfg);
        std::ofstream csv;
        if (!esc.csv_path.empty()) {
          csv = open_out(esc.csv_path);
          write_csv_row(csv, {"step", "alpha_hat", "noise_l2"});
          for (const auto& r : recs)
            write_csv_row(csv, {std::to_string(r.step), format_optional(r.alpha_hat), format_double(r.noise_l2)});
        }
        std::size_t est = 0, heavy = 0;
        std::optional<double> lo, hi;
        std::vector<Vec> noise;
        for (const auto& r : recs) {
          noise.push_back(r.noise);
          if (!r.alpha_hat) continue;
          ++est;
          if (*r.alpha_hat < 2.0) ++heavy;
          lo = lo ? std::min(*lo, *r.alpha_hat) : *r.alpha_hat;
          hi = hi ? std::max(*hi, *r.alpha_hat) : *r.alpha_hat;
        }
        result["records"] = recs.size();
        result["estimates"] = est;
        result["below_two"] = heavy;
        result["alpha_hat_min"] = to_json(lo);
        result["alpha_hat_max"] = to_json(hi);
        result["final_loss"] = loss_at(m0.params, m0, data);
        if (noise.size() >= pcfg.window) {
          const auto avg = averaging_tail_comparison(noise, opt.beta1, pcfg.window);
          result["averaging"] = {{"alpha_raw", to_json(avg.alpha_raw)},
                                 {"alpha_avg", to_json(avg.alpha_avg)},
                                 {"window", avg.window},
                                 {"beta1", opt.beta1}};
        }
      } else {
        auto f = make_landscape(land, land.a);
        const auto cfg = make_optimizer(opt);
        const Vec x0 = esc.theta0.empty() ? Vec(f->minimizer().array() + 1.0) : to_vec(esc.theta0);
        const auto rep = run_assumption_monitors(*f, cfg, x0, monitor_steps, common.seed);
        std::ofstream csv;
        if (!esc.csv_path.empty()) {
          csv = open_out(esc.csv_path);
          write_csv_row(csv, {"t", "rho", "tau_m", "tau", "v_min", "v_max"});
          for (const auto& r : rep.rows)
            write_csv_row(csv, {format_double(r.t), format_optional(r.rho), format_optional(r.tau_m),
                                format_optional(r.tau), format_double(r.v_min), format_double(r.v_max)});
        }
        std::optional<double> rho_min;
        for (const auto& r : rep.rows)
          if (r.rho) rho_min = rho_min ? std::min(*rho_min, *r.rho) : *r.rho;
        result["rows"] = rep.rows.size();
        result["rho_min"] = to_json(rho_min);
        result["v_min"] = rep.rows.empty() ? Json(nullptr) : finite_or_null(rep.rows.back().v_min);
        result["v_max"] = rep.rows.empty() ? Json(nullptr) : finite_or_null(rep.rows.back().v_max);
      }
    } else if (sub == flow) {
      auto f = make_landscape(land, land.a);
      const auto cfg = make_optimizer(opt);
      const Vec x0 = esc.theta0.empty() ? Vec(f->minimizer().array() + 1.0) : to_vec(esc.theta0);
      const auto [tr, rep] = deterministic_flow(SdeState::at_rest(x0, cfg.kind), *f, cfg, horizon, stride);
      if (!esc.csv_path.empty()) {
        auto csv = open_out(esc.csv_path);
        write_trajectory_csv(csv, tr);
      }
      result["observed_rate"] = to_json(rep.observed_rate);
      result["predicted_rate"] = to_json(rep.predicted_rate);
      result["monotone"] = rep.monotone;
      result["tau"] = rep.tau;
      result["v_max"] = rep.v_max;
      result["steps"] = tr.steps;
      result["final_lyapunov"] = rep.lyapunov_series.back().second;
    }
  } catch (const DivergedError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::invalid_argument& e) {  // DomainError, DimensionError
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::length_error& e) {  // SizeError
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::domain_error& e) {  // DegenerateError
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }

  out["result"] = result;
  out["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string text = out.dump(2) + "\n";
  if (common.json_path.empty()) {
    std::cout << text;
  } else {
    auto f = open_out(common.json_path);
    f << text;
  }
  return 0;
}
