#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "lmboot/arfima.hpp"
#include "lmboot/error.hpp"
#include "lmboot/pfsb.hpp"
#include "oracles.hpp"

using namespace lmboot;

namespace {

std::vector<double> arfima_path(double d, double phi, std::size_t T, std::uint64_t seed) {
  ArfimaParams p;
  p.d = d;
  p.phi = phi;
  return simulate_gaussian(p, T, RngStream(seed));
}

BiasTarget constant_target(double c) {
  BiasTarget t;
  t.estimate = [c](std::span<const double>) { return c; };
  t.upsilon = upsilon(EstimatorSpec{});
  t.N = 77;
  t.P = 0;
  return t;
}

PfsbConfig config_with(std::size_t B, std::uint64_t seed) {
  PfsbConfig c;
  c.B = B;
  c.stream = RngStream(seed);
  return c;
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

}  // namespace

TEST_CASE("mode names") {
  CHECK(parse_innovation_mode("parametric") == InnovationMode::kParametric);
  CHECK(parse_innovation_mode("NonParametric") == InnovationMode::kNonparametric);
  CHECK(to_string(InnovationMode::kNonparametric) == "nonparametric");
  CHECK_THROWS_AS(parse_innovation_mode("block"), Error);
}

TEST_CASE("sieve fit reuses the pre-filtered series") {
  const auto y = arfima_path(0.3, 0.5, 500, 1);
  const auto model = fit_sieve(y, 0.3, PfsbConfig{});
  CHECK(model.filtered == apply_frac_filter(y, 0.3));
  CHECK(model.fit.order() >= 1);
  CHECK(model.fit.order() <= max_sieve_order(500));
  CHECK(model.inverse.d == -0.3);
  const auto aic = aic_curve(burg_sweep(model.filtered, max_sieve_order(500)), 500);
  CHECK(model.fit.order() == static_cast<std::size_t>(std::min_element(aic.begin(), aic.end()) - aic.begin()) + 1);
}

TEST_CASE("d_f = 0 is the plain sieve bootstrap") {
  const auto y = arfima_path(0.0, 0.6, 300, 2);
  const auto model = fit_sieve(y, 0.0, PfsbConfig{});
  CHECK(model.filtered == y);
  const RngStream s(77);
  const auto draw = pfsb_draw(model, InnovationMode::kParametric, s);

  // Rebuild the draw by hand: tau first, then the innovations, then the AR path.
  auto eng = s.engine();
  const std::size_t h = model.fit.order();
  std::uniform_int_distribution<std::size_t> pick_tau(h, 300);
  const std::size_t tau = pick_tau(eng);
  std::vector<double> init(y.begin() + static_cast<std::ptrdiff_t>(tau - h), y.begin() + static_cast<std::ptrdiff_t>(tau));
  std::normal_distribution<double> z;
  std::vector<double> e(300);
  for (auto& v : e) v = model.residuals.scale * z(eng);
  CHECK(draw == simulate_ar_path(model.fit, e, init));
}

TEST_CASE("h = 0 parametric draws are filtered scaled noise") {
  SieveModel model;
  model.d_f = 0.35;
  model.filtered.assign(2000, 0.0);
  model.fit = ArFit{};
  model.residuals.scale = 1.7;
  model.residuals.standardized.assign(2000, 0.0);
  model.inverse = frac_diff_coeffs(-0.35, 2000);
  const auto y = pfsb_draw(model, InnovationMode::kParametric, RngStream(5));
  const auto w = apply_frac_filter(y, 0.35);
  double m = mean(w);
  double v = 0.0;
  for (double x : w) v += (x - m) * (x - m);
  v /= 2000.0;
  CHECK(std::abs(v / (1.7 * 1.7) - 1.0) < 0.1);
}

TEST_CASE("nonparametric draws resample the standardized residuals") {
  const auto y = arfima_path(0.2, 0.3, 400, 3);
  auto model = fit_sieve(y, 0.2, PfsbConfig{});
  // With only two distinct residual values every innovation is one of them.
  for (std::size_t t = 0; t < model.residuals.standardized.size(); ++t) {
    model.residuals.standardized[t] = t % 2 == 0 ? 1.0 : -1.0;
  }
  const auto yb = pfsb_draw(model, InnovationMode::kNonparametric, RngStream(9));
  const auto wb = apply_frac_filter(yb, 0.2);
  const std::size_t h = model.fit.order();
  for (std::size_t t = h; t < wb.size(); ++t) {
    double e = wb[t];
    for (std::size_t j = 1; j <= h; ++j) e += model.fit.phi[j] * wb[t - j];
    CHECK(std::abs(std::abs(e) - model.residuals.scale) < 1e-8);
  }
}

TEST_CASE("draws are deterministic in the stream") {
  const auto y = arfima_path(0.2, 0.3, 300, 4);
  const auto model = fit_sieve(y, 0.2, PfsbConfig{});
  for (auto mode : {InnovationMode::kParametric, InnovationMode::kNonparametric}) {
    CHECK(pfsb_draw(model, mode, RngStream(1)) == pfsb_draw(model, mode, RngStream(1)));
    CHECK(pfsb_draw(model, mode, RngStream(1)) != pfsb_draw(model, mode, RngStream(2)));
  }
}

TEST_CASE("constant estimator gives the plug-in bias") {
  const auto y = arfima_path(0.1, 0.3, 200, 6);
  const auto out = bias_correct(y, 0.25, 0.2, constant_target(0.4), config_with(50, 1));
  CHECK(out.bias_hat == doctest::Approx(0.4 - 0.2).epsilon(1e-14));
  CHECK(out.d_tilde == doctest::Approx(0.25 - 0.4 + 0.2).epsilon(1e-14));
  REQUIRE(out.hpd);
  CHECK(out.hpd->lo == doctest::Approx(0.25));
  CHECK(out.hpd->hi == doctest::Approx(0.25));
}

TEST_CASE("bias identities on a real estimator") {
  const auto y = arfima_path(0.2, 0.6, 500, 7);
  EstimatorSpec spec;
  spec.P = 1;
  const auto out = bias_correct(y, spec, config_with(200, 3));
  CHECK(out.d_hat == estimate(y, spec).d_hat);
  CHECK(out.d_f == out.d_hat);
  CHECK(std::abs(out.bias_hat - (mean(out.draws) - out.d_f)) <= 1e-12);
  CHECK(out.d_tilde + out.bias_hat == out.d_hat);
  REQUIRE(out.hpd);
  CHECK(out.hpd->lo <= out.hpd->hi);
  CHECK(out.resampled == 0);
}

TEST_CASE("bias estimate does not depend on the thread count") {
  const auto y = arfima_path(0.3, 0.3, 500, 8);
  EstimatorSpec spec;
  spec.family = Family::kSplw;
  auto c1 = config_with(64, 11);
  auto c4 = c1;
  c4.threads = 4;
  const auto a = bias_correct(y, spec, c1);
  const auto b = bias_correct(y, spec, c4);
  CHECK(a.draws == b.draws);
  CHECK(a.bias_hat == b.bias_hat);
}

TEST_CASE("independent runs agree within the sampling bound") {
  const auto y = arfima_path(0.0, 0.6, 500, 10);
  EstimatorSpec spec;
  const auto a = bias_correct(y, spec, config_with(2000, 100));
  const auto b = bias_correct(y, spec, config_with(2000, 200));
  double v = 0.0;
  const double m = mean(a.draws);
  for (double x : a.draws) v += (x - m) * (x - m);
  const double sd = std::sqrt(v / 1999.0);
  CHECK(std::abs(a.bias_hat - b.bias_hat) <= 4.0 * sd / std::sqrt(2000.0));
  // phi = 0.6 inflates LPR(0) upward; the bootstrap sees it.
  CHECK(a.bias_hat > 0.0);
}

TEST_CASE("a failed draw is resampled once, a second failure aborts") {
  const auto y = arfima_path(0.1, 0.3, 200, 12);
  std::atomic<int> calls{0};
  BiasTarget flaky = constant_target(0.1);
  flaky.estimate = [&calls](std::span<const double>) {
    if (calls.fetch_add(1) == 3) fail(ErrorKind::kNonConvergence, "stub failure");
    return 0.1;
  };
  const auto out = bias_correct(y, 0.1, 0.1, flaky, config_with(20, 1));
  CHECK(out.resampled == 1);
  CHECK(out.draws.size() == 20);

  BiasTarget broken = constant_target(0.1);
  broken.estimate = [](std::span<const double>) -> double { fail(ErrorKind::kNonConvergence, "always"); };
  try {
    bias_correct(y, 0.1, 0.1, broken, config_with(20, 1));
    FAIL("expected abort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNonConvergence);
  }
  CHECK_THROWS_AS(bias_correct(y, 0.1, 0.1, constant_target(0.0), config_with(1, 1)), Error);
}

TEST_CASE("stopping thresholds") {
  const double ups = upsilon(EstimatorSpec{});
  const auto t0 = stopping_thresholds(0, 77, 1000.0, ups, 0);
  CHECK(t0.p == 0.95);
  CHECK(ups * ups / 77.0 == doctest::Approx(0.005341).epsilon(1e-3));
  CHECK(t0.tau1 == doctest::Approx(0.00459).epsilon(0.01));
  // Direct evaluation of z_{0.525} sqrt(base + base / B).
  const double base = ups * ups / 77.0;
  CHECK(t0.tau1 == doctest::Approx(0.06270677794 * std::sqrt(base * 1.001)).epsilon(1e-8));
  CHECK(t0.tau2 == doctest::Approx(0.06270677794 * std::sqrt(base * (1.0 + 1.001))).epsilon(1e-8));

  CHECK(stop_probability(1, 0) == 0.9);
  CHECK(stop_probability(2, 0) == doctest::Approx(0.05));
  CHECK(stop_probability(3, 0) == doctest::Approx(0.025));
  CHECK(stop_probability(0, 1) == 0.9);
  CHECK(stop_probability(1, 2) == doctest::Approx(0.05));
  CHECK(stop_probability(2, 1) == doctest::Approx(0.025));

  // Var(d^(1)) = (2B + 1) base / B.
  const auto t1 = stopping_thresholds(1, 77, 500.0, ups, 0);
  const double z1 = 0.12566134685507416;  // z_{0.55}, p_1 = 0.9
  CHECK(t1.tau1 == doctest::Approx(z1 * std::sqrt((2.0 * 500 + 1) * base / 500 + base / 500)).epsilon(1e-10));
  CHECK(t1.tau2 == doctest::Approx(z1 * std::sqrt(base * (1.0 + 1.0 * (1.0 + 1.0 / 500)))).epsilon(1e-10));
  const auto tinf = stopping_thresholds(1, 77, std::numeric_limits<double>::infinity(), ups, 0);
  CHECK(tinf.tau1 == doctest::Approx(z1 * ups * std::sqrt(2.0 / 77.0)).epsilon(1e-12));
  const auto t3 = stopping_thresholds(3, 77, 1000.0, ups, 1);
  CHECK(t3.p == doctest::Approx(0.0125));
}

TEST_CASE("one pass with infinite tolerances equals the one-shot correction") {
  const auto y = arfima_path(0.2, 0.6, 500, 13);
  EstimatorSpec spec;
  spec.P = 1;
  const auto cfg = config_with(100, 21);
  IterateOptions opt;
  opt.max_iter = 1;
  opt.threshold_scale = std::numeric_limits<double>::infinity();
  const auto trace = iterate_bias_correct(y, spec, cfg, opt);
  const auto once = bias_correct(y, spec, cfg);
  CHECK(trace.final == once.d_tilde);
  CHECK(trace.first.draws == once.draws);
  CHECK(trace.reason == StopReason::kRule1);
  CHECK(trace.records.size() == 1);
  CHECK(trace.bba(1) == once.d_tilde);
}

TEST_CASE("zero bootstrap bias stops at k = 0") {
  const auto y = arfima_path(0.2, 0.3, 300, 14);
  const auto trace = iterate_bias_correct(y, 0.3, constant_target(0.3), config_with(20, 1));
  CHECK(trace.reason == StopReason::kRule1);
  CHECK(trace.stop_iteration == 0);
  CHECK(trace.final == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("an update leaving the window returns the current iterate") {
  const auto y = arfima_path(0.2, 0.3, 300, 15);
  // Constant c gives d^(1) = 2 d^(0) - c = 1.6.
  const auto trace = iterate_bias_correct(y, 0.9, constant_target(0.2), config_with(20, 1));
  CHECK(trace.reason == StopReason::kDeterministic);
  CHECK(trace.final == 0.9);
  CHECK(trace.iterates == std::vector<double>{0.9});
  IterateOptions low;
  const auto below = iterate_bias_correct(y, -0.6, constant_target(0.5), config_with(20, 1), low);
  CHECK(below.reason == StopReason::kDeterministic);
  CHECK(below.final == -0.6);
}

TEST_CASE("iteration cap and the current-iterate stop convention") {
  const auto y = arfima_path(0.2, 0.3, 300, 16);
  // Constant c = 0 doubles d each pass: d = 0.01, 0.02, 0.04, ... never converges.
  IterateOptions opt;
  opt.max_iter = 3;
  opt.threshold_scale = 0.0;
  const auto trace = iterate_bias_correct(y, 0.01, constant_target(0.0), config_with(20, 1), opt);
  CHECK(trace.reason == StopReason::kMaxIter);
  CHECK(trace.final == doctest::Approx(0.08));
  CHECK(trace.records.size() == 3);

  opt.threshold_scale = std::numeric_limits<double>::infinity();
  opt.on_stop = StopEstimate::kCurrent;
  const auto cur = iterate_bias_correct(y, 0.01, constant_target(0.0), config_with(20, 1), opt);
  CHECK(cur.final == 0.01);
  opt.on_stop = StopEstimate::kUpdated;
  opt.min_iterations = 3;
  const auto longer = iterate_bias_correct(y, 0.01, constant_target(0.0), config_with(20, 1), opt);
  CHECK(longer.final == doctest::Approx(0.02));
  CHECK(longer.bba(3) == doctest::Approx(0.08));
  CHECK(longer.bba(7) == doctest::Approx(0.08));
}

TEST_CASE("trace records reproduce the stop reason") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto y = arfima_path(0.1, 0.6, 500, 40 + seed);
    EstimatorSpec spec;
    spec.family = seed % 2 ? Family::kSplw : Family::kLpr;
    spec.P = seed % 3;
    const auto trace = iterate_bias_correct(y, spec, config_with(60, seed));
    REQUIRE(!trace.records.empty());
    CHECK(trace.reason != StopReason::kNone);
    const auto& last = trace.records[trace.stop_iteration];
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
      const auto& r = trace.records[k];
      CHECK(r.d_next == r.d_current - r.bias);
      CHECK(r.criterion1 == std::abs(r.d_next - r.d_current));
      const auto th = stopping_thresholds(k, spec_bandwidth(spec, 500), 60.0, upsilon(spec), spec.P);
      CHECK(r.tau1 == th.tau1);
      CHECK(r.tau2 == th.tau2);
      if (k < trace.stop_iteration) CHECK((r.criterion1 > r.tau1 && r.criterion2 > r.tau2));
    }
    switch (trace.reason) {
      case StopReason::kRule1: CHECK(last.criterion1 <= last.tau1); break;
      case StopReason::kRule2: CHECK((last.criterion1 > last.tau1 && last.criterion2 <= last.tau2)); break;
      case StopReason::kMaxIter: CHECK(trace.stop_iteration + 1 == 10); break;
      default: break;
    }
  }
}

TEST_CASE("HPD interval on simple draws") {
  const std::vector<double> same(50, 0.3);
  const auto flat = hpd_interval(same, 0.1, 0.025, 0.025);
  CHECK(flat.lo == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(flat.length() == 0.0);

  std::vector<double> ramp(100);
  std::iota(ramp.begin(), ramp.end(), 1.0);
  const auto iv = hpd_interval(ramp, 0.0, 0.025, 0.025);
  const auto ref = oracle::hpd(ramp, 0.0, 0.025, 0.025);
  CHECK(iv.lo == ref.lo);
  CHECK(iv.hi == ref.hi);
  // Every 95-point window of 1..100 has width 94; the leftmost wins.
  CHECK(iv.length() == 94.0);
  CHECK(iv.hi == doctest::Approx(50.5 - 1.0));

  CHECK_THROWS_AS(hpd_interval(std::vector<double>(9, 1.0), 0.0, 0.025, 0.025), Error);
  CHECK_THROWS_AS(hpd_interval(ramp, 0.0, 0.5, 0.5), Error);
}

TEST_CASE("HPD sort-and-scan equals the exhaustive window search") {
  std::mt19937_64 eng(2718);
  std::uniform_int_distribution<std::size_t> size(10, 1000);
  std::gamma_distribution<double> skewed(2.0, 0.1);
  std::normal_distribution<double> normal(0.2, 0.1);
  std::uniform_real_distribution<double> alpha(0.0, 0.1);
  for (int set = 0; set < 200; ++set) {
    const std::size_t B = size(eng);
    std::vector<double> draws(B);
    for (auto& x : draws) x = set % 2 ? skewed(eng) : normal(eng);
    const double aL = set % 3 ? 0.025 : alpha(eng);
    const double aU = set % 3 ? 0.025 : alpha(eng);
    const auto iv = hpd_interval(draws, 0.3, aL, aU);
    const auto ref = oracle::hpd(draws, 0.3, aL, aU);
    CHECK(iv.lo == ref.lo);
    CHECK(iv.hi == ref.hi);
  }
}
