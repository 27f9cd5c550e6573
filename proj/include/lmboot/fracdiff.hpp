#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lmboot {

/// Coefficients of the binomial expansion (1 - z)^d = sum_j alpha_j z^j.
struct FracCoeffs {
  double d = 0.0;
  std::vector<double> coeffs;  // alpha_0 .. alpha_{n-1}, alpha_0 == 1
};

/// First n coefficients via alpha_j = alpha_{j-1} (j - 1 - d) / j.
/// Throws kInvalidParameter for non-finite d or n == 0.
FracCoeffs frac_diff_coeffs(double d, std::size_t n);

/// Truncated (type II) fractional filter: w(t) = sum_{j=0}^{t-1} alpha_j y(t-j).
/// The filter uses observed values only, so apply_frac_filter(., -d) inverts
/// apply_frac_filter(., d) exactly up to rounding.
std::vector<double> apply_frac_filter(std::span<const double> y, double d);

/// Same filter with precomputed coefficients; coeffs.size() must be >= y.size().
std::vector<double> apply_frac_filter(std::span<const double> y, const FracCoeffs& coeffs);

}  // namespace lmboot
