#include "lmboot/fracdiff.hpp"

#include <cmath>
#include <string>

#include "lmboot/error.hpp"

namespace lmboot {

FracCoeffs frac_diff_coeffs(double d, std::size_t n) {
  if (!std::isfinite(d)) fail(ErrorKind::kInvalidParameter, "fractional order must be finite");
  if (n == 0) fail(ErrorKind::kInvalidParameter, "at least one coefficient is required");
  FracCoeffs out;
  out.d = d;
  out.coeffs.resize(n);
  out.coeffs[0] = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double jd = static_cast<double>(j);
    out.coeffs[j] = out.coeffs[j - 1] * ((jd - 1.0 - d) / jd);
  }
  return out;
}

std::vector<double> apply_frac_filter(std::span<const double> y, const FracCoeffs& coeffs) {
  const std::size_t n = y.size();
  if (coeffs.coeffs.size() < n) {
    fail(ErrorKind::kInvalidParameter,
         "filter needs " + std::to_string(n) + " coefficients, got " +
             std::to_string(coeffs.coeffs.size()));
  }
  std::vector<double> w(n, 0.0);
  if (coeffs.d == 0.0) {
    w.assign(y.begin(), y.end());
    return w;
  }
  const double* a = coeffs.coeffs.data();
  // w(t) = sum_{s=0}^{t} a[t-s] y(s); accumulate column-wise so the inner loop
  // runs over contiguous memory.
  for (std::size_t s = 0; s < n; ++s) {
    const double ys = y[s];
    if (ys == 0.0) continue;
    double* out = w.data() + s;
    const std::size_t len = n - s;
    for (std::size_t k = 0; k < len; ++k) out[k] += a[k] * ys;
  }
  return w;
}

std::vector<double> apply_frac_filter(std::span<const double> y, double d) {
  if (y.empty()) return {};
  return apply_frac_filter(y, frac_diff_coeffs(d, y.size()));
}

}  // namespace lmboot
