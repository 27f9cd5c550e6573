#include "lmboot/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lmboot/error.hpp"

namespace lmboot {

std::size_t bandwidth(std::size_t T, double exponent, std::size_t min_count) {
  if (!(exponent > 0.0 && exponent < 1.0)) {
    fail(ErrorKind::kInvalidParameter, "bandwidth exponent must lie in (0, 1)");
  }
  if (T < 8) fail(ErrorKind::kInvalidDesign, "sample size " + std::to_string(T) + " is below 8");
  const std::size_t upper = (T - 1) / 2;
  if (upper < min_count) {
    fail(ErrorKind::kInvalidDesign, "T = " + std::to_string(T) + " leaves " +
                                        std::to_string(upper) + " frequencies, " +
                                        std::to_string(min_count) + " needed");
  }
  auto n = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(T), exponent)));
  if (n < min_count) n = min_count;
  if (n > upper) n = upper;
  return n;
}

PeriodogramSlice periodogram(std::span<const double> y, std::size_t N) {
  const std::size_t T = y.size();
  if (N < 1 || 2 * N >= T) {
    fail(ErrorKind::kInvalidParameter, "periodogram needs 1 <= N < T/2 (N = " +
                                           std::to_string(N) + ", T = " + std::to_string(T) + ")");
  }
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(T);
  std::vector<double> centered(T);
  for (std::size_t t = 0; t < T; ++t) centered[t] = y[t] - mean;

  // Twiddle table over one period; e^{-i lambda_j t} = table[(j t) mod T].
  // The time origin (t = 1 vs t = 0) only changes the phase, not |.|^2.
  const double step = 2.0 * std::numbers::pi / static_cast<double>(T);
  std::vector<double> cos_table(T), sin_table(T);
  for (std::size_t k = 0; k < T; ++k) {
    cos_table[k] = std::cos(step * static_cast<double>(k));
    sin_table[k] = std::sin(step * static_cast<double>(k));
  }

  PeriodogramSlice out;
  out.T = T;
  out.freqs.resize(N);
  out.ordinates.resize(N);
  const double norm = 1.0 / (2.0 * std::numbers::pi * static_cast<double>(T));
  for (std::size_t j = 1; j <= N; ++j) {
    double re = 0.0, im = 0.0;
    std::size_t idx = 0;
    for (std::size_t t = 0; t < T; ++t) {
      re += centered[t] * cos_table[idx];
      im += centered[t] * sin_table[idx];
      idx += j;
      if (idx >= T) idx -= T;
    }
    out.freqs[j - 1] = step * static_cast<double>(j);
    out.ordinates[j - 1] = (re * re + im * im) * norm;
  }
  return out;
}

}  // namespace lmboot
