#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lmboot {

/// AR(h) fit in prediction-error form: eps(t) = sum_{j=0}^{h} phi[j] w(t-j),
/// with phi[0] == 1. Reflection coefficients are phi_m(m) of each nested
/// order m = 1..h.
struct ArFit {
  std::vector<double> phi{1.0};
  double sigma2 = 1.0;
  std::vector<double> reflection;

  std::size_t order() const noexcept { return phi.size() - 1; }
};

struct ResidualSet {
  std::vector<double> raw;           // eps_bar(t), t = 1..T
  std::vector<double> standardized;  // (raw - mean) / scale
  double scale = 0.0;                // sigma_bar
};

/// Durbin-Levinson solution of the Yule-Walker equations for orders 1..h,
/// h = acvf.size() - 1. Throws kNumericalDegeneracy (naming the order) as
/// soon as a reflection coefficient reaches magnitude 1, and
/// kInvalidParameter when acvf[0] <= 0.
std::vector<ArFit> levinson_durbin(std::span<const double> acvf);

/// Burg fits of every order 1..h_max from one forward/backward sweep.
/// The sweep stops early (returning fewer fits) if a reflection coefficient
/// reaches the unit circle at some order > 1. Throws kNumericalDegeneracy for
/// constant input or when order 1 is already degenerate, kInvalidParameter
/// unless T > 2 h_max.
std::vector<ArFit> burg_sweep(std::span<const double> w, std::size_t h_max);

/// Order-h Burg fit. Throws kNumericalDegeneracy if the sweep cannot reach h.
ArFit burg_fit(std::span<const double> w, std::size_t h);

/// AIC(h) = T ln sigma_h^2 + 2h for h = 1..fits.size(), as returned by burg_sweep.
std::vector<double> aic_curve(std::span<const ArFit> fits, std::size_t T);

/// argmin_h AIC(h) over 1..h_max (ties to the smaller order).
std::size_t select_order_aic(std::span<const double> w, std::size_t h_max);

/// Sieve order ceiling: min(floor((ln T)^2), floor(T/4)), and below T/2.
std::size_t max_sieve_order(std::size_t T);

/// Residuals using the circular start-up w(1-j) = w(T-j+1), then centred and
/// scaled to unit in-sample variance.
ResidualSet ar_residuals(std::span<const double> w, const ArFit& fit);

/// Solves sum_j phi[j] w(t-j) = innovations(t) for t = 1..T. `init` holds
/// w(1-h) .. w(0) in time order. Throws kInvalidParameter on a size mismatch
/// or a fit whose reflection coefficients leave the unit interval.
std::vector<double> simulate_ar_path(const ArFit& fit, std::span<const double> innovations,
                                     std::span<const double> init);

/// Writes the path into `out` (size T) without allocating.
void simulate_ar_path_into(const ArFit& fit, std::span<const double> innovations,
                           std::span<const double> init, std::span<double> out);

}  // namespace lmboot
