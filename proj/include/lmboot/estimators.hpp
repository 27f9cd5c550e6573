#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "lmboot/spectral.hpp"

namespace lmboot {

enum class Family { kLpr, kSplw };

std::string to_string(Family family);
Family parse_family(const std::string& text);

/// Estimator family, number P of even-power correction terms, and the
/// bandwidth exponent nu in N = floor(T^nu).
struct EstimatorSpec {
  Family family = Family::kLpr;
  std::size_t P = 0;
  double bandwidth_exponent = 0.7;

  /// Throws kUnsupportedOrder for P > 3, kInvalidParameter for nu outside (0, 1).
  void validate() const;
};

struct EstimateResult {
  double d_hat = 0.0;
  std::size_t N = 0;
  double asymptotic_sd = 0.0;
  /// LPR: residual variance of the log-periodogram regression.
  /// SPLW: minimized concentrated Whittle objective.
  double diagnostic = 0.0;
  /// SPLW only: the minimizer sits on the search-window boundary.
  bool boundary = false;
};

/// Search window for the local Whittle objective.
inline constexpr double kSplwLower = -1.0;
inline constexpr double kSplwUpper = 1.5;

/// omega * psi_P / sqrt(N), with omega^2 = pi^2/24 (LPR) or 1/4 (SPLW).
double asymptotic_sd(const EstimatorSpec& spec, std::size_t N);

/// omega * psi_P.
double upsilon(const EstimatorSpec& spec);

/// Bandwidth for a series of length T under spec (at least P + 2 frequencies).
std::size_t spec_bandwidth(const EstimatorSpec& spec, std::size_t T);

EstimateResult lpr_estimate(std::span<const double> y, const EstimatorSpec& spec);
EstimateResult splw_estimate(std::span<const double> y, const EstimatorSpec& spec);

/// Dispatch on spec.family.
EstimateResult estimate(std::span<const double> y, const EstimatorSpec& spec);

/// Estimators on an already computed periodogram slice.
EstimateResult lpr_from_periodogram(const PeriodogramSlice& slice, const EstimatorSpec& spec);
EstimateResult splw_from_periodogram(const PeriodogramSlice& slice, const EstimatorSpec& spec);

namespace splw_detail {

/// Concentrated local polynomial Whittle objective
///   R(d, theta) = ln( N^-1 sum_j I_j lambda_j^{2d} exp(-sum_p theta_p lambda_j^{2p}) )
///                 - 2d N^-1 sum_j ln lambda_j + N^-1 sum_j sum_p theta_p lambda_j^{2p},
/// i.e. the local Whittle likelihood of f(lambda) = G lambda^{-2d} exp(sum_p theta_p lambda^{2p})
/// with G profiled out. For P = 0 this is the classical R(d).
double objective(const PeriodogramSlice& slice, double d, std::span<const double> theta);

/// min over theta of R(d, theta) for fixed d (theta warm-started from and written to `theta`).
double profiled_objective(const PeriodogramSlice& slice, double d, std::span<double> theta);

}  // namespace splw_detail

}  // namespace lmboot
