#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "levy/errors.hpp"
#include "levy/probe.hpp"
#include "levy/stable.hpp"
#include "oracles.hpp"

using namespace levy;

namespace {

double max_rel_fd_error(const MlpModel& m, const SyntheticDataset& data) {
  const Vec g = full_gradient(m, data);
  const Vec fd = oracle::fd_gradient([&](const Vec& p) { return loss_at(p, m, data); }, m.params, 1e-6);
  return (g - fd).lpNorm<Eigen::Infinity>() / std::max(1e-3, fd.lpNorm<Eigen::Infinity>());
}

}  // namespace

TEST_CASE("parameter layout") {
  CHECK(MlpModel::param_count(20, 32, 3) == 20 * 32 + 32 + 32 * 3 + 3);
  auto m = MlpModel::init(4, 5, 3, 1);
  CHECK(static_cast<std::size_t>(m.params.size()) == m.size());
  m.params.conservativeResize(3);
  CHECK_THROWS_AS(m.validate(), DimensionError);
  CHECK_THROWS_AS(MlpModel::init(4, 5, 1, 1), DomainError);
}

TEST_CASE("backprop matches finite differences") {
  const auto data = SyntheticDataset::blobs(60, 6, 3, 1.0, 2.0, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = MlpModel::init(6, 8, 3, 100 + seed);
    CHECK(max_rel_fd_error(m, data) < 1e-5);
  }
}

TEST_CASE("gradient identities") {
  const auto data = SyntheticDataset::blobs(64, 5, 3, 1.0, 2.0, 4);
  const auto m = MlpModel::init(5, 7, 3, 2);
  const Vec full = full_gradient(m, data);

  SUBCASE("duplicated dataset") {
    SyntheticDataset twice = data;
    twice.features.conservativeResize(128, Eigen::NoChange);
    twice.features.bottomRows(64) = data.features;
    twice.labels.insert(twice.labels.end(), data.labels.begin(), data.labels.end());
    CHECK((full_gradient(m, twice) - full).norm() < 1e-12 * std::max(1.0, full.norm()));
  }
  SUBCASE("full index set and singletons") {
    std::vector<std::size_t> all(64);
    std::iota(all.begin(), all.end(), 0);
    CHECK((minibatch_gradient(m, data, all) - full).norm() < 1e-12);
    Vec acc = Vec::Zero(full.size());
    for (std::size_t i = 0; i < 64; ++i) acc += minibatch_gradient(m, data, std::span(&all[i], 1));
    CHECK((acc / 64.0 - full).norm() < 1e-12);
  }
  SUBCASE("disjoint batches average to the full gradient") {
    std::vector<std::size_t> perm(64);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
    Vec acc = Vec::Zero(full.size());
    for (std::size_t b = 0; b < 4; ++b) acc += minibatch_gradient(m, data, std::span(perm).subspan(b * 16, 16));
    CHECK((acc / 4.0 - full).norm() < 1e-12);
  }
  SUBCASE("random batch differs from the full gradient") {
    std::vector<std::size_t> b{1, 5, 9, 13, 2, 40, 33, 17};
    CHECK((minibatch_gradient(m, data, b) - full).norm() > 1e-6);
  }
  SUBCASE("bad index") {
    std::vector<std::size_t> b{0, 64};
    CHECK_THROWS_AS(minibatch_gradient(m, data, b), SizeError);
  }
}

TEST_CASE("zero weights on label-symmetric data give a zero output-bias gradient") {
  SyntheticDataset data;
  data.classes = 2;
  data.features.resize(4, 2);
  data.features << 1, 0, -1, 0, 0, 1, 0, -1;
  data.labels = {0, 1, 0, 1};
  MlpModel m;
  m.d_in = 2;
  m.d_hidden = 3;
  m.d_classes = 2;
  m.params = Vec::Zero(static_cast<Eigen::Index>(m.size()));
  const Vec g = full_gradient(m, data);
  CHECK(g.tail(2).norm() < 1e-15);
}

TEST_CASE("noise trajectory") {
  const auto data = SyntheticDataset::blobs(2000, 20, 3, 1.0, 3.0, 0);
  const auto m0 = MlpModel::init(20, 32, 3, 0);
  NoiseProbeConfig cfg;
  cfg.optimizer.eta = 0.05;
  cfg.steps = 400;

  SUBCASE("injected SaS(1.3) is recovered") {
    cfg.injected_alpha = 1.3;
    const auto recs = noise_trajectory(m0, data, cfg);
    std::size_t n = 0;
    for (const auto& r : recs)
      if (r.alpha_hat) {
        ++n;
        CHECK(*r.alpha_hat >= 1.2);
        CHECK(*r.alpha_hat <= 1.4);
      }
    CHECK(n >= 2);
  }
  SUBCASE("full batch has no noise") {
    cfg.batch_size = data.size();
    cfg.steps = 250;
    for (const auto& r : noise_trajectory(m0, data, cfg)) {
      CHECK_FALSE(r.alpha_hat.has_value());
      CHECK(r.noise_l2 < 1e-12);
    }
  }
  SUBCASE("determinism") {
    cfg.steps = 250;
    cfg.keep_noise = true;
    const auto a = noise_trajectory(m0, data, cfg);
    const auto b = noise_trajectory(m0, data, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].noise == b[i].noise);
      CHECK(a[i].alpha_hat == b[i].alpha_hat);
    }
  }
  SUBCASE("batch size larger than the dataset") {
    cfg.batch_size = 5000;
    CHECK_THROWS_AS(noise_trajectory(m0, data, cfg), SizeError);
  }
}

TEST_CASE("pooled estimator on synthetic data") {
  std::vector<Vec> window;
  auto rng = make_stream(3);
  for (int t = 0; t < 50; ++t) {
    Vec u(300);
    for (auto& x : u) x = (1.0 + 0.01 * static_cast<double>(t % 7)) * draw_sas(1.6, rng);
    window.push_back(u);
  }
  const auto a = pooled_tail_index(window);
  REQUIRE(a);
  CHECK(std::abs(*a - 1.6) <= 0.1);
  CHECK_FALSE(pooled_tail_index(std::vector<Vec>(3, Vec::Zero(2))).has_value());
}

TEST_CASE("averaging comparison") {
  std::vector<Vec> noise;
  auto rng = make_stream(4);
  for (int t = 0; t < 2400; ++t) {
    Vec u(1200);
    for (auto& x : u) x = draw_sas(1.4, rng);
    noise.push_back(u);
  }
  // Averaged coordinates are autocorrelated in time. With as many
  // coordinates as window steps, each estimator block (sqrt(W * d) values,
  // time-major) holds a single time step.
  const auto r = averaging_tail_comparison(noise, 0.9, 1200);
  REQUIRE(r.alpha_raw);
  REQUIRE(r.alpha_avg);
  CHECK(std::abs(*r.alpha_raw - *r.alpha_avg) <= 0.1);
  const auto z = averaging_tail_comparison(noise, 0.0, 1200);
  CHECK(*z.alpha_raw == *z.alpha_avg);
  CHECK_THROWS_AS(averaging_tail_comparison(noise, 0.9, 2401), SizeError);
}

TEST_CASE("assumption monitors") {
  const auto f = QuadraticBasin::from_eigenvalues({2.0, 0.5}, 0.0, 10.0, 3);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::Adam;
  cfg.step_h = 0.01;
  cfg.alpha = 1.5;
  cfg.noise_amplitude = 0.0;
  Vec x0(2);
  x0 << 1.0, -1.0;

  SUBCASE("noise-free Adam on a quadratic") {
    const auto rep = run_assumption_monitors(f, cfg, x0, 2000, 0);
    REQUIRE(rep.rows.size() == 2001);
    for (const auto& r : rep.rows) {
      if (r.rho) CHECK(*r.rho >= 0.0);
      CHECK(std::isfinite(r.v_min));
      CHECK(std::isfinite(r.v_max));
      CHECK(r.v_min <= r.v_max);
    }
  }
  SUBCASE("start at the minimizer") {
    const auto rep = run_assumption_monitors(f, cfg, Vec::Zero(2), 100, 0);
    for (const auto& r : rep.rows) {
      CHECK((!r.rho || *r.rho == 0.0));
      CHECK_FALSE(r.tau.has_value());
      CHECK_FALSE(r.tau_m.has_value());
    }
  }
  SUBCASE("SGD is rejected") {
    cfg.kind = OptimizerKind::Sgd;
    CHECK_THROWS_AS(run_assumption_monitors(f, cfg, x0, 10, 0), DomainError);
  }
}
