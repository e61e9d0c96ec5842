#include "levy/stable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "levy/errors.hpp"
#include "levy/parallel.hpp"

namespace levy {

namespace {

constexpr double kPi = std::numbers::pi;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0))
    throw DomainError("alpha must lie in (0, 2], got " + std::to_string(alpha));
}

}  // namespace

void StableLaw::validate() const {
  check_alpha(alpha);
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError("sigma must be positive, got " + std::to_string(sigma));
}

double sas_transform(double alpha, double angle, double exp_draw) {
  if (alpha == 1.0) return std::tan(angle);
  if (alpha == 2.0) return 2.0 * std::sin(angle) * std::sqrt(exp_draw);
  const double a = alpha * angle;
  const double cos_v = std::cos(angle);
  return std::sin(a) / std::pow(cos_v, 1.0 / alpha) *
         std::pow(std::cos(angle - a) / exp_draw, (1.0 - alpha) / alpha);
}

double draw_sas(double alpha, Rng& rng) {
  const double angle = kPi * (uniform_open(rng) - 0.5);
  const double w = -std::log(uniform_open(rng));
  return sas_transform(alpha, angle, w);
}

void fill_sas(double alpha, double scale, std::span<double> out, Rng& rng) {
  for (double& x : out) x = scale * draw_sas(alpha, rng);
}

std::vector<double> sample_sas(const StableLaw& law, std::size_t n, std::uint64_t seed) {
  law.validate();
  if (n == 0) throw SizeError("sample_sas: n must be at least 1");
  std::vector<double> out(n);
  auto rng = make_stream(seed);
  fill_sas(law.alpha, law.sigma, out, rng);
  return out;
}

double empirical_char_fn(std::span<const double> samples, double omega) {
  if (samples.empty()) throw SizeError("empirical_char_fn: empty sample");
  CompensatedSum re, im;
  for (double x : samples) {
    re.add(std::cos(omega * x));
    im.add(std::sin(omega * x));
  }
  const double n = static_cast<double>(samples.size());
  const double imag = im.value() / n;
  if (std::abs(imag) >= 5.0 / std::sqrt(n))
    throw DomainError("empirical_char_fn: imaginary part " + std::to_string(imag) +
                      " too large for a symmetric law");
  return re.value() / n;
}

double stable_char_fn(const StableLaw& law, double omega) {
  law.validate();
  return std::exp(-std::pow(law.sigma * std::abs(omega), law.alpha));
}

std::size_t default_group_size(std::size_t sample_count) {
  return static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(sample_count))));
}

double estimate_tail_index(std::span<const double> samples, std::size_t k1, std::size_t k2) {
  if (k2 < 2) throw SizeError("estimate_tail_index: group size k2 must be >= 2");
  if (k1 < 1) throw SizeError("estimate_tail_index: need at least one group");
  if (samples.size() < k1 * k2)
    throw SizeError("estimate_tail_index: need k1*k2 = " + std::to_string(k1 * k2) +
                    " samples, got " + std::to_string(samples.size()));
  CompensatedSum log_blocks, log_points;
  for (std::size_t i = 0; i < k1; ++i) {
    double block = 0.0;
    for (std::size_t j = 0; j < k2; ++j) {
      const double x = samples[i * k2 + j];
      if (!std::isfinite(x) || x == 0.0)
        throw DomainError("estimate_tail_index: samples must be finite and nonzero");
      block += x;
      log_points.add(std::log(std::abs(x)));
    }
    log_blocks.add(std::log(std::abs(block)));
  }
  const double k = static_cast<double>(k1 * k2);
  const double inv_alpha =
      (log_blocks.value() / static_cast<double>(k1) - log_points.value() / k) /
      std::log(static_cast<double>(k2));
  if (inv_alpha <= 0.5) return 2.0;
  return 1.0 / inv_alpha;
}

double estimate_tail_index(std::span<const double> samples) {
  const std::size_t k2 = default_group_size(samples.size());
  if (k2 < 2) throw SizeError("estimate_tail_index: need at least 4 samples");
  return estimate_tail_index(samples, samples.size() / k2, k2);
}

double levy_measure_scale(double alpha) {
  check_alpha(alpha);
  if (alpha == 2.0) throw DomainError("levy_measure_scale: the Gaussian law has no jumps");
  // Levy density c |y|^{-1-alpha} of SaS(1): c = Gamma(1+alpha) sin(pi alpha/2) / pi.
  const double c = std::tgamma(1.0 + alpha) * std::sin(kPi * alpha / 2.0) / kPi;
  return std::pow(1.0 / c, 1.0 / alpha);
}

double jump_intensity(double alpha, double eps, double delta) {
  check_alpha(alpha);
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("jump_intensity: eps must lie in (0, 1)");
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("jump_intensity: delta must lie in (0, 1]");
  return 2.0 / alpha * std::pow(eps, alpha * delta);
}

void JumpDecompositionConfig::validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("jump decomposition: eps must lie in (0, 1)");
  if (!(delta > 0.0 && delta <= 1.0))
    throw DomainError("jump decomposition: delta must lie in (0, 1]");
}

double JumpDecompositionConfig::threshold() const { return std::pow(eps, -delta); }

std::vector<double> JumpEvents::reassemble() const {
  std::vector<double> out = small_series;
  for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = sizes[k];
  return out;
}

JumpEvents decompose_jumps(std::span<const double> increments, double step_h,
                           const JumpDecompositionConfig& cfg) {
  cfg.validate();
  return decompose_jumps(increments, step_h, cfg.threshold());
}

JumpEvents decompose_jumps(std::span<const double> increments, double step_h, double threshold) {
  if (increments.empty()) throw SizeError("decompose_jumps: empty increment series");
  if (!(step_h > 0.0)) throw DomainError("decompose_jumps: step must be positive");
  if (!(threshold > 0.0)) throw DomainError("decompose_jumps: threshold must be positive");
  JumpEvents ev;
  ev.step_h = step_h;
  ev.threshold = threshold;
  ev.small_series.assign(increments.begin(), increments.end());
  for (std::size_t i = 0; i < increments.size(); ++i) {
    if (std::abs(increments[i]) >= threshold) {
      ev.indices.push_back(i);
      ev.sizes.push_back(increments[i]);
      ev.times.push_back(static_cast<double>(i + 1) * step_h);
      ev.small_series[i] = 0.0;
    }
  }
  return ev;
}

double ks_exponential(std::vector<double> samples, double rate) {
  if (samples.empty()) throw SizeError("ks_exponential: empty sample");
  if (!(rate > 0.0)) throw DomainError("ks_exponential: rate must be positive");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = 1.0 - std::exp(-rate * std::max(samples[i], 0.0));
    d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
  }
  return d;
}

double ks_critical_value(std::size_t n, double level) {
  if (n == 0) throw SizeError("ks_critical_value: n must be positive");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("ks_critical_value: level in (0, 1)");
  const double c = std::sqrt(-0.5 * std::log(level / 2.0));
  const double rn = std::sqrt(static_cast<double>(n));
  return c / (rn + 0.12 + 0.11 / rn);
}

ExponentialTestReport interjump_time_test(const JumpEvents& events, double psi, double level) {
  if (!(psi > 0.0) || !std::isfinite(psi))
    throw DomainError("interjump_time_test: intensity must be positive");
  if (events.times.size() < 30)
    throw SizeError("interjump_time_test: need at least 30 events, got " +
                    std::to_string(events.times.size()));
  std::vector<double> gaps(events.times.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    gaps[k] = events.times[k] - prev;
    prev = events.times[k];
  }
  ExponentialTestReport r;
  r.n = gaps.size();
  r.alpha = level;
  CompensatedSum s;
  for (double g : gaps) s.add(g);
  r.mean = s.value() / static_cast<double>(r.n);
  r.expected_mean = 1.0 / psi;
  r.statistic = ks_exponential(std::move(gaps), psi);
  r.threshold = ks_critical_value(r.n, level);
  r.pass = r.statistic < r.threshold;
  return r;
}

}  // namespace levy
