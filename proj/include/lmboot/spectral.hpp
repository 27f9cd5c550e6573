#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lmboot {

/// Periodogram ordinates at the first N Fourier frequencies 2*pi*j/T, j = 1..N.
struct PeriodogramSlice {
  std::size_t T = 0;
  std::vector<double> freqs;
  std::vector<double> ordinates;

  std::size_t size() const noexcept { return ordinates.size(); }
};

/// floor(T^exponent), clamped to [min_count, floor((T-1)/2)].
/// min_count is the number of frequencies the downstream regression needs
/// (P + 2 for an order-P estimator). Throws kInvalidDesign when T < 8 or the
/// clamp range is empty, kInvalidParameter for an exponent outside (0, 1).
std::size_t bandwidth(std::size_t T, double exponent, std::size_t min_count = 2);

/// I(lambda_j) = |sum_t (y(t) - mean) e^{-i lambda_j t}|^2 / (2 pi T), j = 1..N.
/// Direct O(T N) evaluation. Requires 1 <= N < T/2.
PeriodogramSlice periodogram(std::span<const double> y, std::size_t N);

}  // namespace lmboot
