#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmboot/arsieve.hpp"
#include "lmboot/estimators.hpp"
#include "lmboot/fracdiff.hpp"
#include "lmboot/rng.hpp"

namespace lmboot {

/// How bootstrap innovations are generated: scaled standard normal deviates,
/// or scaled draws with replacement from the standardized sieve residuals.
enum class InnovationMode { kParametric, kNonparametric };

std::string to_string(InnovationMode mode);
InnovationMode parse_innovation_mode(const std::string& text);

struct PfsbConfig {
  InnovationMode mode = InnovationMode::kParametric;
  std::size_t B = 1000;
  /// Sieve order ceiling; 0 selects max_sieve_order(T). AIC picks h in 1..h_max.
  std::size_t h_max = 0;
  RngStream stream;
  /// Workers for the B draws. Output does not depend on this value.
  unsigned threads = 1;
  /// Tail masses of the HPD interval.
  double alpha_lower = 0.025;
  double alpha_upper = 0.025;
};

/// AR sieve fitted once to the pre-filtered series w^f = (1 - z)^{d_f} y and
/// reused across all bootstrap draws.
struct SieveModel {
  double d_f = 0.0;
  std::vector<double> filtered;
  ArFit fit;
  ResidualSet residuals;
  FracCoeffs inverse;  // coefficients of (1 - z)^{-d_f}
};

SieveModel fit_sieve(std::span<const double> y, double d_f, const PfsbConfig& config);

/// One pre-filtered sieve bootstrap series. Consumes only `stream`.
std::vector<double> pfsb_draw(const SieveModel& model, InnovationMode mode, const RngStream& stream);

/// The statistic being bias corrected, plus what the stopping rules need.
struct BiasTarget {
  std::function<double(std::span<const double>)> estimate;
  double upsilon = 0.0;  // omega * psi_P
  std::size_t N = 0;     // bandwidth at the sample size in use
  std::size_t P = 0;     // selects the stopping-rule probability schedule
};

BiasTarget make_target(const EstimatorSpec& spec, std::size_t T);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

/// Narrowest window holding ceil((1 - alpha_L - alpha_U) B) mean-corrected
/// draws, recentred at d_hat: (d_hat - q_hi, d_hat - q_lo).
Interval hpd_interval(std::span<const double> draws, double d_hat, double alpha_lower,
                      double alpha_upper);

struct BootstrapOutcome {
  std::vector<double> draws;
  double d_hat = 0.0;
  double d_f = 0.0;
  double bias_hat = 0.0;  // mean(draws) - d_f
  double d_tilde = 0.0;   // d_hat - bias_hat
  std::size_t sieve_order = 0;
  std::size_t resampled = 0;  // draws whose first estimation attempt failed
  std::optional<Interval> hpd;
};

/// B pre-filtered sieve bootstrap draws around d_f, each re-estimated.
BootstrapOutcome bias_correct(std::span<const double> y, double d_hat, double d_f,
                              const BiasTarget& target, const PfsbConfig& config);

/// Convenience: estimates d_hat with spec and uses it as the pre-filter.
BootstrapOutcome bias_correct(std::span<const double> y, const EstimatorSpec& spec,
                              const PfsbConfig& config);

/// Same, with an explicit pre-filter value.
BootstrapOutcome bias_correct(std::span<const double> y, const EstimatorSpec& spec, double d_f,
                              const PfsbConfig& config);

struct StopThresholds {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double p = 0.0;  // probability of moving on to iteration k + 1
};

/// Probability schedule for the stopping rules at iteration k.
double stop_probability(std::size_t k, std::size_t P);

/// Tolerances of the two stochastic stopping rules at iteration k. B may be
/// +infinity.
StopThresholds stopping_thresholds(std::size_t k, std::size_t N, double B, double upsilon,
                                   std::size_t P);

enum class StopReason { kNone, kRule1, kRule2, kDeterministic, kMaxIter };
std::string to_string(StopReason reason);

/// Which value is reported when a stochastic rule ends the iteration at k:
/// the freshly updated d^(k+1) or the current d^(k).
enum class StopEstimate { kUpdated, kCurrent };

struct IterateOptions {
  std::size_t max_iter = 10;
  /// Keep iterating (without changing the stopping outcome) until at least
  /// this many corrections exist; lets one run also supply BBA(K) values.
  std::size_t min_iterations = 0;
  StopEstimate on_stop = StopEstimate::kUpdated;
  /// Multiplies both tolerances; +infinity forces a stop at k = 0.
  double threshold_scale = 1.0;
};

struct IterationRecord {
  std::size_t k = 0;
  double d_current = 0.0;  // d^(k), the pre-filter of this pass
  double bias = 0.0;       // b^(k)
  double d_next = 0.0;     // d^(k) - b^(k)
  double tau1 = 0.0;
  double tau2 = 0.0;
  double criterion1 = 0.0;  // |d^(k+1) - d^(k)|
  double criterion2 = 0.0;  // |d^(0) - d^(k) - b^(k)|
  std::size_t sieve_order = 0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  /// Accepted iterates d^(0), d^(1), ...; a deterministic stop discards the
  /// offending update so it never appears here.
  std::vector<double> iterates;
  double final = 0.0;
  StopReason reason = StopReason::kNone;
  std::size_t stop_iteration = 0;
  /// Draws and HPD interval of the first pass (pre-filter d^(0)).
  BootstrapOutcome first;

  /// d^(K), holding the last accepted value after a deterministic stop.
  double bba(std::size_t K) const;
};

/// Iterated bootstrap bias correction with the two stochastic stopping rules
/// and the [-1, 1.5) deterministic window. Pass k draws from config.stream for
/// k = 0 and from config.stream.fork(kIteration, k) afterwards.
IterationTrace iterate_bias_correct(std::span<const double> y, double d_hat, const BiasTarget& target,
                                    const PfsbConfig& config, const IterateOptions& options = {});

IterationTrace iterate_bias_correct(std::span<const double> y, const EstimatorSpec& spec,
                                    const PfsbConfig& config, const IterateOptions& options = {});

/// Deterministic window for iterates.
inline constexpr double kIterateLower = -1.0;
inline constexpr double kIterateUpper = 1.5;

}  // namespace lmboot
