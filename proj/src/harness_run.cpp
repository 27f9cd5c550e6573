#include <boost/math/distributions/normal.hpp>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "lmboot/error.hpp"
#include "lmboot/harness.hpp"
#include "lmboot/parallel.hpp"

namespace lmboot {
namespace {

/// Bootstrap work shared by every entry of one (family, P) pair.
struct Group {
  EstimatorEntry raw;
  std::size_t passes = 0;
  bool ssr = false;
  bool ok = false;
  double d_hat = 0.0;
  std::optional<IterationTrace> trace;
};

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

std::size_t bootstrap_stream_index(const EstimatorEntry& entry) {
  return static_cast<std::size_t>(entry.family) * 16 + entry.P;
}

double EstimatorSummary::get(const std::string& name) const {
  for (const auto& s : stats) {
    if (s.name == name) return s.value;
  }
  fail(ErrorKind::kInvalidParameter, "statistic '" + name + "' not recorded for " + entry.label());
}

bool EstimatorSummary::has(const std::string& name) const {
  for (const auto& s : stats) {
    if (s.name == name) return true;
  }
  return false;
}

std::vector<ReplicationValue> run_replication(const McDesign& design, const Cell& cell, std::size_t r,
                                              const GaussianSimulator& simulator,
                                              const RunOptions& options) {
  const RngStream rep = replication_stream(design.seed, cell.index, r);
  std::vector<ReplicationValue> out(design.estimators.size());
  std::vector<double> y;
  try {
    y = simulator.draw(rep.fork(RngStream::Tag::kSimulation, 0));
  } catch (const Error&) {
    return out;
  }

  std::map<std::size_t, Group> groups;
  for (const auto& e : design.estimators) {
    if (e.mle) continue;
    auto& g = groups[bootstrap_stream_index(e)];
    g.raw = e;
    g.raw.correction = Correction::kNone;
    g.raw.K = 0;
    if (e.correction == Correction::kNone && design.hpd) g.passes = std::max<std::size_t>(g.passes, 1);
    if (e.correction == Correction::kBba) g.passes = std::max(g.passes, e.K);
    if (e.correction == Correction::kSsr) g.ssr = true;
  }

  for (auto& [key, g] : groups) {
    const EstimatorSpec spec = design.spec_for(g.raw);
    BiasTarget target;
    try {
      if (options.estimator_override) {
        const auto& fn = options.estimator_override;
        const EstimatorEntry raw = g.raw;
        target.estimate = [&fn, raw, cell](std::span<const double> s) { return fn(s, raw, cell); };
        target.upsilon = upsilon(spec);
        target.N = spec_bandwidth(spec, cell.T);
        target.P = spec.P;
      } else {
        target = make_target(spec, cell.T);
      }
      g.d_hat = target.estimate(y);
      g.ok = true;
    } catch (const Error&) {
      continue;
    }
    if (g.passes == 0 && !g.ssr) continue;

    PfsbConfig config;
    config.mode = design.mode;
    config.B = design.B;
    config.stream = rep.fork(RngStream::Tag::kEstimator, key);
    config.threads = 1;
    config.alpha_lower = design.alpha_lower;
    config.alpha_upper = design.alpha_upper;
    IterateOptions it;
    it.on_stop = design.on_stop;
    if (g.ssr) {
      it.max_iter = design.max_iter;
      it.min_iterations = g.passes;
    } else {
      it.max_iter = 1;
      it.min_iterations = g.passes;
      it.threshold_scale = std::numeric_limits<double>::infinity();
    }
    try {
      g.trace = iterate_bias_correct(y, g.d_hat, target, config, it);
    } catch (const Error&) {
    }
  }

  const double z = boost::math::quantile(boost::math::normal_distribution<double>(),
                                         1.0 - (design.alpha_lower + design.alpha_upper) / 2.0);
  for (std::size_t i = 0; i < design.estimators.size(); ++i) {
    const auto& e = design.estimators[i];
    auto& v = out[i];
    if (e.mle) {
      try {
        v.estimate = options.estimator_override ? options.estimator_override(y, e, cell)
                                                : mle_fit(y, design.mle).d;
        v.ok = true;
      } catch (const Error&) {
      }
      continue;
    }
    const Group& g = groups.at(bootstrap_stream_index(e));
    if (!g.ok) continue;
    switch (e.correction) {
      case Correction::kNone: {
        v.estimate = g.d_hat;
        const double half = z * asymptotic_sd(design.spec_for(e), spec_bandwidth(design.spec_for(e), cell.T));
        v.has_asymptotic = true;
        v.asymptotic = Interval{g.d_hat - half, g.d_hat + half};
        if (design.hpd) {
          if (!g.trace || !g.trace->first.hpd) continue;
          v.has_hpd = true;
          v.hpd = *g.trace->first.hpd;
        }
        v.ok = true;
        break;
      }
      case Correction::kBba:
        if (!g.trace) continue;
        v.estimate = g.trace->bba(e.K);
        v.ok = true;
        break;
      case Correction::kSsr:
        if (!g.trace) continue;
        v.estimate = g.trace->final;
        v.reason = g.trace->reason;
        v.iterations = g.trace->stop_iteration + 1;
        v.ok = true;
        break;
    }
  }
  return out;
}

McResults run_design(const McDesign& design, const RunOptions& options) {
  design.validate();
  const std::size_t cells = design.cell_count();
  const std::size_t R = design.R;

  std::vector<std::optional<GaussianSimulator>> simulators(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const Cell cell = design.cell(c);
    ArfimaParams params;
    params.d = cell.d;
    params.phi = cell.phi;
    params.law = design.law;
    simulators[c].emplace(params, cell.T);
  }

  std::vector<std::vector<ReplicationValue>> values(cells * R);
  std::vector<double> seconds(cells * R, 0.0);
  parallel_for(cells * R, options.threads, [&](std::size_t task) {
    const std::size_t c = task / R;
    const auto start = std::chrono::steady_clock::now();
    values[task] = run_replication(design, design.cell(c), task % R, *simulators[c], options);
    seconds[task] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  McResults results;
  results.design = design;
  for (std::size_t c = 0; c < cells; ++c) {
    McCellResult cell_result;
    cell_result.cell = design.cell(c);
    const double d = cell_result.cell.d;
    for (std::size_t r = 0; r < R; ++r) cell_result.wall_seconds += seconds[c * R + r];

    for (std::size_t i = 0; i < design.estimators.size(); ++i) {
      const auto& e = design.estimators[i];
      EstimatorSummary s;
      s.entry = e;
      std::vector<double> err;
      std::vector<double> err_kept;
      std::size_t hpd_hits = 0;
      std::size_t asy_hits = 0;
      double hpd_len = 0.0;
      double asy_len = 0.0;
      std::size_t det = 0;
      std::size_t cap = 0;
      double iters = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        const auto& v = values[c * R + r][i];
        if (!v.ok) {
          ++s.failures;
          continue;
        }
        err.push_back(v.estimate - d);
        if (v.has_hpd) {
          hpd_hits += v.hpd.contains(d) ? 1 : 0;
          hpd_len += v.hpd.length();
        }
        if (v.has_asymptotic) {
          asy_hits += v.asymptotic.contains(d) ? 1 : 0;
          asy_len += v.asymptotic.length();
        }
        if (e.correction == Correction::kSsr) {
          if (v.reason == StopReason::kDeterministic) {
            ++det;
          } else {
            err_kept.push_back(v.estimate - d);
          }
          if (v.reason == StopReason::kMaxIter) ++cap;
          iters += static_cast<double>(v.iterations);
        }
      }
      s.R_effective = err.size();
      if (!err.empty()) {
        const double n = static_cast<double>(err.size());
        std::vector<double> sq(err.size());
        for (std::size_t k = 0; k < err.size(); ++k) sq[k] = err[k] * err[k];
        s.stats.push_back({"bias", mean_of(err)});
        s.stats.push_back({"mse", mean_of(sq)});
        if (!e.mle && e.correction == Correction::kNone) {
          if (design.hpd) {
            s.stats.push_back({"hpd_coverage", static_cast<double>(hpd_hits) / n});
            s.stats.push_back({"hpd_length", hpd_len / n});
          }
          s.stats.push_back({"asy_coverage", static_cast<double>(asy_hits) / n});
          s.stats.push_back({"asy_length", asy_len / n});
        }
        if (e.correction == Correction::kSsr) {
          s.stats.push_back({"det_stops", static_cast<double>(det)});
          s.stats.push_back({"maxiter_stops", static_cast<double>(cap)});
          s.stats.push_back({"mean_iterations", iters / n});
          if (!err_kept.empty()) {
            std::vector<double> sq_kept(err_kept.size());
            for (std::size_t k = 0; k < err_kept.size(); ++k) sq_kept[k] = err_kept[k] * err_kept[k];
            s.stats.push_back({"bias_excl_det", mean_of(err_kept)});
            s.stats.push_back({"mse_excl_det", mean_of(sq_kept)});
          }
        }
      }
      s.stats.push_back({"failures", static_cast<double>(s.failures)});
      cell_result.estimators.push_back(std::move(s));
    }
    results.cells.push_back(std::move(cell_result));
  }
  return results;
}

}  // namespace lmboot
