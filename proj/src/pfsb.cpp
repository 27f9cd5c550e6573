#include "lmboot/pfsb.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "lmboot/error.hpp"
#include "lmboot/parallel.hpp"

namespace lmboot {
namespace {

std::string lower(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

RngStream iteration_stream(const RngStream& base, std::size_t k) {
  return k == 0 ? base : base.fork(RngStream::Tag::kIteration, k);
}

bool in_window(double d) { return d >= kIterateLower && d < kIterateUpper; }

}  // namespace

std::string to_string(InnovationMode mode) {
  return mode == InnovationMode::kParametric ? "parametric" : "nonparametric";
}

InnovationMode parse_innovation_mode(const std::string& text) {
  const auto t = lower(text);
  if (t == "parametric") return InnovationMode::kParametric;
  if (t == "nonparametric") return InnovationMode::kNonparametric;
  fail(ErrorKind::kInvalidParameter, "unknown bootstrap mode '" + text + "'");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kNone: return "none";
    case StopReason::kRule1: return "rule1";
    case StopReason::kRule2: return "rule2";
    case StopReason::kDeterministic: return "deterministic";
    case StopReason::kMaxIter: return "max-iter";
  }
  return "none";
}

SieveModel fit_sieve(std::span<const double> y, double d_f, const PfsbConfig& config) {
  const std::size_t T = y.size();
  if (!std::isfinite(d_f)) fail(ErrorKind::kInvalidParameter, "pre-filter value must be finite");
  SieveModel model;
  model.d_f = d_f;
  model.filtered = apply_frac_filter(y, d_f);
  std::size_t h_max = config.h_max == 0 ? max_sieve_order(T) : config.h_max;
  h_max = std::min(h_max, (T - 1) / 2);
  auto fits = burg_sweep(model.filtered, h_max);
  const auto aic = aic_curve(fits, T);
  const auto best = static_cast<std::size_t>(std::min_element(aic.begin(), aic.end()) - aic.begin());
  model.fit = std::move(fits[best]);
  model.residuals = ar_residuals(model.filtered, model.fit);
  model.inverse = frac_diff_coeffs(-d_f, T);
  return model;
}

std::vector<double> pfsb_draw(const SieveModel& model, InnovationMode mode, const RngStream& stream) {
  const std::size_t T = model.filtered.size();
  const std::size_t h = model.fit.order();
  auto engine = stream.engine();

  std::vector<double> init(h);
  if (h > 0) {
    // tau is uniform on {h, ..., T} (1-based); the block is w^f(tau-h+1..tau).
    std::uniform_int_distribution<std::size_t> pick_tau(h, T);
    const std::size_t tau = pick_tau(engine);
    std::copy_n(model.filtered.begin() + static_cast<std::ptrdiff_t>(tau - h), h, init.begin());
  }

  std::vector<double> innovations(T);
  const double scale = model.residuals.scale;
  if (mode == InnovationMode::kParametric) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& e : innovations) e = scale * normal(engine);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, T - 1);
    const auto& pool = model.residuals.standardized;
    for (auto& e : innovations) e = scale * pool[pick(engine)];
  }

  std::vector<double> path(T);
  simulate_ar_path_into(model.fit, innovations, init, path);
  return apply_frac_filter(path, model.inverse);
}

BiasTarget make_target(const EstimatorSpec& spec, std::size_t T) {
  spec.validate();
  BiasTarget target;
  target.estimate = [spec](std::span<const double> y) { return estimate(y, spec).d_hat; };
  target.upsilon = upsilon(spec);
  target.N = spec_bandwidth(spec, T);
  target.P = spec.P;
  return target;
}

Interval hpd_interval(std::span<const double> draws, double d_hat, double alpha_lower,
                      double alpha_upper) {
  const std::size_t B = draws.size();
  if (B < 10) fail(ErrorKind::kInvalidParameter, "HPD interval needs at least 10 draws");
  if (!(alpha_lower >= 0.0 && alpha_upper >= 0.0 && alpha_lower + alpha_upper < 1.0)) {
    fail(ErrorKind::kInvalidParameter, "tail masses must be nonnegative and sum below 1");
  }
  const double mass = (1.0 - alpha_lower - alpha_upper) * static_cast<double>(B);
  // Guard against 0.95 * 1000 landing a hair above 950.
  const auto m = static_cast<std::size_t>(std::ceil(mass - 1e-9));
  if (m > B || m == 0) fail(ErrorKind::kInvalidParameter, "HPD window size out of range");

  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(B);
  std::vector<double> s(B);
  for (std::size_t b = 0; b < B; ++b) s[b] = draws[b] - mean;
  std::sort(s.begin(), s.end());

  std::size_t best = 0;
  double width = s[m - 1] - s[0];
  for (std::size_t i = 1; i + m <= B; ++i) {
    const double w = s[i + m - 1] - s[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return Interval{d_hat - s[best + m - 1], d_hat - s[best]};
}

BootstrapOutcome bias_correct(std::span<const double> y, double d_hat, double d_f,
                              const BiasTarget& target, const PfsbConfig& config) {
  if (config.B < 2) fail(ErrorKind::kInvalidParameter, "at least two bootstrap draws are required");
  if (!target.estimate) fail(ErrorKind::kInvalidParameter, "bias target has no estimator");
  const SieveModel model = fit_sieve(y, d_f, config);

  BootstrapOutcome out;
  out.d_hat = d_hat;
  out.d_f = d_f;
  out.sieve_order = model.fit.order();
  out.draws.resize(config.B);
  std::vector<unsigned char> retried(config.B, 0);

  parallel_for(config.B, config.threads, [&](std::size_t b) {
    const RngStream stream = config.stream.fork(RngStream::Tag::kDraw, b);
    try {
      out.draws[b] = target.estimate(pfsb_draw(model, config.mode, stream));
      return;
    } catch (const Error&) {
      retried[b] = 1;
    }
    try {
      const RngStream again = config.stream.fork(RngStream::Tag::kRetry, b);
      out.draws[b] = target.estimate(pfsb_draw(model, config.mode, again));
    } catch (const Error& e) {
      fail(ErrorKind::kNonConvergence,
           "bootstrap draw " + std::to_string(b) + " failed twice: " + e.what());
    }
  });

  out.resampled = static_cast<std::size_t>(std::count(retried.begin(), retried.end(), 1));
  const double mean =
      std::accumulate(out.draws.begin(), out.draws.end(), 0.0) / static_cast<double>(config.B);
  out.bias_hat = mean - d_f;
  out.d_tilde = d_hat - out.bias_hat;
  if (config.B >= 10) {
    out.hpd = hpd_interval(out.draws, d_hat, config.alpha_lower, config.alpha_upper);
  }
  return out;
}

BootstrapOutcome bias_correct(std::span<const double> y, const EstimatorSpec& spec, double d_f,
                              const PfsbConfig& config) {
  const double d_hat = estimate(y, spec).d_hat;
  return bias_correct(y, d_hat, d_f, make_target(spec, y.size()), config);
}

BootstrapOutcome bias_correct(std::span<const double> y, const EstimatorSpec& spec,
                              const PfsbConfig& config) {
  const double d_hat = estimate(y, spec).d_hat;
  return bias_correct(y, d_hat, d_hat, make_target(spec, y.size()), config);
}

double stop_probability(std::size_t k, std::size_t P) {
  if (P == 0) {
    if (k == 0) return 0.95;
    if (k == 1) return 0.9;
    return 0.1 * std::ldexp(1.0, 1 - static_cast<int>(k));
  }
  if (k == 0) return 0.9;
  return 0.1 * std::ldexp(1.0, -static_cast<int>(k));
}

StopThresholds stopping_thresholds(std::size_t k, std::size_t N, double B, double upsilon,
                                   std::size_t P) {
  if (N == 0 || !(B > 0.0) || !(upsilon > 0.0)) {
    fail(ErrorKind::kInvalidParameter, "stopping thresholds need N > 0, B > 0, upsilon > 0");
  }
  const double base = upsilon * upsilon / static_cast<double>(N);
  const double inner = base / B;  // zero when B is infinite
  double var = base;
  for (std::size_t i = 1; i <= k; ++i) var = 2.0 * var + inner;

  StopThresholds out;
  out.p = stop_probability(k, P);
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 1.0 - out.p / 2.0);
  out.tau1 = z * std::sqrt(var + inner);
  // Criterion 2 uses 2^(k-1); k = 0 takes its first-iteration value 2^0.
  const double doubling = std::ldexp(1.0, static_cast<int>(std::max<std::size_t>(k, 1)) - 1);
  out.tau2 = z * std::sqrt(base * (1.0 + doubling * (1.0 + 1.0 / B)));
  return out;
}

double IterationTrace::bba(std::size_t K) const {
  if (iterates.empty()) fail(ErrorKind::kInvalidParameter, "empty iteration trace");
  return iterates[std::min(K, iterates.size() - 1)];
}

IterationTrace iterate_bias_correct(std::span<const double> y, double d_hat, const BiasTarget& target,
                                    const PfsbConfig& config, const IterateOptions& options) {
  if (options.max_iter < 1) fail(ErrorKind::kInvalidParameter, "max_iter must be at least 1");
  const std::size_t passes = std::max(options.max_iter, options.min_iterations);

  IterationTrace trace;
  trace.iterates.push_back(d_hat);
  bool stopped = false;
  for (std::size_t k = 0; k < passes; ++k) {
    const double d_k = trace.iterates[k];
    PfsbConfig pass_config = config;
    pass_config.stream = iteration_stream(config.stream, k);
    BootstrapOutcome pass = bias_correct(y, d_k, d_k, target, pass_config);

    IterationRecord rec;
    rec.k = k;
    rec.d_current = d_k;
    rec.bias = pass.bias_hat;
    rec.d_next = d_k - pass.bias_hat;
    rec.sieve_order = pass.sieve_order;
    const auto th = stopping_thresholds(k, target.N, static_cast<double>(config.B), target.upsilon, target.P);
    rec.tau1 = th.tau1 * options.threshold_scale;
    rec.tau2 = th.tau2 * options.threshold_scale;
    rec.criterion1 = std::abs(rec.d_next - d_k);
    rec.criterion2 = std::abs(trace.iterates.front() - d_k - pass.bias_hat);
    if (k == 0) trace.first = std::move(pass);
    trace.records.push_back(rec);

    if (!in_window(rec.d_next)) {
      if (!stopped) {
        trace.reason = StopReason::kDeterministic;
        trace.stop_iteration = k;
        trace.final = d_k;
        stopped = true;
      }
      break;
    }
    trace.iterates.push_back(rec.d_next);

    if (!stopped) {
      const bool go_on = rec.criterion1 > rec.tau1 && rec.criterion2 > rec.tau2;
      if (!go_on) {
        trace.reason = rec.criterion1 > rec.tau1 ? StopReason::kRule2 : StopReason::kRule1;
        trace.stop_iteration = k;
        trace.final = options.on_stop == StopEstimate::kUpdated ? rec.d_next : d_k;
        stopped = true;
      } else if (k + 1 == options.max_iter) {
        trace.reason = StopReason::kMaxIter;
        trace.stop_iteration = k;
        trace.final = rec.d_next;
        stopped = true;
      }
    }
    if (stopped && k + 1 >= options.min_iterations) break;
  }
  return trace;
}

IterationTrace iterate_bias_correct(std::span<const double> y, const EstimatorSpec& spec,
                                    const PfsbConfig& config, const IterateOptions& options) {
  const double d_hat = estimate(y, spec).d_hat;
  return iterate_bias_correct(y, d_hat, make_target(spec, y.size()), config, options);
}

}  // namespace lmboot
