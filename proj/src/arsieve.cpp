#include "lmboot/arsieve.hpp"

#include <cmath>
#include <string>

#include "lmboot/error.hpp"

namespace lmboot {
namespace {

// Reflection magnitudes this close to 1 make the fit numerically singular.
constexpr double kUnitCircleMargin = 1e-10;

bool on_unit_circle(double k) { return !(std::abs(k) < 1.0 - kUnitCircleMargin); }

// Step-down recursion: recovers the reflection coefficients of a fit given
// only its phi vector. Returns false if any has magnitude >= 1.
bool step_down_stable(const std::vector<double>& phi) {
  std::vector<double> a(phi.begin(), phi.end());
  for (std::size_t m = a.size() - 1; m >= 1; --m) {
    const double k = a[m];
    if (!std::isfinite(k) || on_unit_circle(k)) return false;
    const double denom = 1.0 - k * k;
    std::vector<double> prev(m);
    prev[0] = 1.0;
    for (std::size_t j = 1; j < m; ++j) prev[j] = (a[j] - k * a[m - j]) / denom;
    a = std::move(prev);
  }
  return true;
}

}  // namespace

std::vector<ArFit> levinson_durbin(std::span<const double> acvf) {
  if (acvf.empty() || !(acvf[0] > 0.0)) {
    fail(ErrorKind::kInvalidParameter, "autocovariance at lag 0 must be positive");
  }
  const std::size_t h = acvf.size() - 1;
  std::vector<ArFit> fits;
  fits.reserve(h);
  std::vector<double> a{1.0};
  std::vector<double> reflection;
  double v = acvf[0];
  for (std::size_t m = 1; m <= h; ++m) {
    double acc = acvf[m];
    for (std::size_t j = 1; j < m; ++j) acc += a[j] * acvf[m - j];
    const double k = -acc / v;
    if (!std::isfinite(k) || on_unit_circle(k)) {
      fail(ErrorKind::kNumericalDegeneracy,
           "autocovariance sequence is not positive definite: reflection coefficient " +
               std::to_string(k) + " at order " + std::to_string(m));
    }
    std::vector<double> next(m + 1);
    next[0] = 1.0;
    for (std::size_t j = 1; j < m; ++j) next[j] = a[j] + k * a[m - j];
    next[m] = k;
    a = std::move(next);
    v *= (1.0 - k * k);
    reflection.push_back(k);
    fits.push_back(ArFit{a, v, reflection});
  }
  return fits;
}

std::vector<ArFit> burg_sweep(std::span<const double> w, std::size_t h_max) {
  const std::size_t T = w.size();
  if (h_max < 1 || T <= 2 * h_max) {
    fail(ErrorKind::kInvalidParameter, "Burg fit needs 1 <= h and T > 2h (h = " +
                                           std::to_string(h_max) + ", T = " + std::to_string(T) + ")");
  }
  std::vector<double> f(w.begin(), w.end());
  std::vector<double> b(w.begin(), w.end());
  double sigma2 = 0.0;
  for (double x : w) sigma2 += x * x;
  sigma2 /= static_cast<double>(T);
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    fail(ErrorKind::kNumericalDegeneracy, "Burg fit of a zero or non-finite series");
  }

  std::vector<ArFit> fits;
  fits.reserve(h_max);
  std::vector<double> a{1.0};
  std::vector<double> reflection;
  for (std::size_t m = 1; m <= h_max; ++m) {
    // f[t] holds the order-(m-1) forward error at t, b[t] the backward error.
    double num = 0.0, den = 0.0;
    for (std::size_t t = m; t < T; ++t) {
      num += f[t] * b[t - 1];
      den += f[t] * f[t] + b[t - 1] * b[t - 1];
    }
    const double k = den > 0.0 ? -2.0 * num / den : 1.0;
    if (!std::isfinite(k) || on_unit_circle(k)) {
      if (m == 1) {
        fail(ErrorKind::kNumericalDegeneracy,
             "Burg reflection coefficient " + std::to_string(k) + " at order 1 lies on the unit circle");
      }
      break;
    }
    // Update errors from the top down so b[t-1] is still the old value.
    for (std::size_t t = T - 1; t >= m; --t) {
      const double ft = f[t];
      const double bt = b[t - 1];
      f[t] = ft + k * bt;
      b[t] = bt + k * ft;
    }
    std::vector<double> next(m + 1);
    next[0] = 1.0;
    for (std::size_t j = 1; j < m; ++j) next[j] = a[j] + k * a[m - j];
    next[m] = k;
    a = std::move(next);
    sigma2 *= (1.0 - k * k);
    reflection.push_back(k);
    fits.push_back(ArFit{a, sigma2, reflection});
  }
  return fits;
}

ArFit burg_fit(std::span<const double> w, std::size_t h) {
  if (h == 0) {
    double s = 0.0;
    for (double x : w) s += x * x;
    if (w.empty() || !(s > 0.0)) fail(ErrorKind::kNumericalDegeneracy, "Burg fit of a zero series");
    return ArFit{{1.0}, s / static_cast<double>(w.size()), {}};
  }
  auto fits = burg_sweep(w, h);
  if (fits.size() < h) {
    fail(ErrorKind::kNumericalDegeneracy, "Burg recursion reached the unit circle at order " +
                                              std::to_string(fits.size() + 1));
  }
  return std::move(fits.back());
}

std::vector<double> aic_curve(std::span<const ArFit> fits, std::size_t T) {
  std::vector<double> out;
  out.reserve(fits.size());
  for (std::size_t i = 0; i < fits.size(); ++i) {
    out.push_back(static_cast<double>(T) * std::log(fits[i].sigma2) +
                  2.0 * static_cast<double>(i + 1));
  }
  return out;
}

std::size_t select_order_aic(std::span<const double> w, std::size_t h_max) {
  const auto fits = burg_sweep(w, h_max);
  const auto aic = aic_curve(fits, w.size());
  std::size_t best = 0;
  for (std::size_t i = 1; i < aic.size(); ++i) {
    if (aic[i] < aic[best]) best = i;
  }
  return best + 1;
}

std::size_t max_sieve_order(std::size_t T) {
  if (T < 4) fail(ErrorKind::kInvalidParameter, "series too short for an autoregressive sieve");
  const double lt = std::log(static_cast<double>(T));
  auto h = static_cast<std::size_t>(std::floor(lt * lt));
  h = std::min(h, T / 4);
  h = std::min(h, (T - 1) / 2);
  return std::max<std::size_t>(h, 1);
}

ResidualSet ar_residuals(std::span<const double> w, const ArFit& fit) {
  const std::size_t T = w.size();
  const std::size_t h = fit.order();
  if (h >= T) fail(ErrorKind::kInvalidParameter, "AR order must be below the series length");
  ResidualSet out;
  out.raw.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    double e = w[t];
    for (std::size_t j = 1; j <= h; ++j) {
      const std::size_t idx = t >= j ? t - j : t + T - j;
      e += fit.phi[j] * w[idx];
    }
    out.raw[t] = e;
  }
  double mean = 0.0;
  for (double e : out.raw) mean += e;
  mean /= static_cast<double>(T);
  double var = 0.0;
  for (double e : out.raw) var += (e - mean) * (e - mean);
  var /= static_cast<double>(T);
  if (!(var > 0.0)) fail(ErrorKind::kNumericalDegeneracy, "residuals have zero variance");
  out.scale = std::sqrt(var);
  out.standardized.resize(T);
  for (std::size_t t = 0; t < T; ++t) out.standardized[t] = (out.raw[t] - mean) / out.scale;
  return out;
}

void simulate_ar_path_into(const ArFit& fit, std::span<const double> innovations,
                           std::span<const double> init, std::span<double> out) {
  const std::size_t h = fit.order();
  const std::size_t T = innovations.size();
  if (init.size() != h) {
    fail(ErrorKind::kInvalidParameter, "initial block has " + std::to_string(init.size()) +
                                           " values, AR order is " + std::to_string(h));
  }
  if (out.size() != T) fail(ErrorKind::kInvalidParameter, "output length mismatch");
  const double* phi = fit.phi.data();
  for (std::size_t t = 0; t < T; ++t) {
    double x = innovations[t];
    for (std::size_t j = 1; j <= h; ++j) {
      // w(t - j) lives in out when t >= j, otherwise in the initial block.
      const double past = t >= j ? out[t - j] : init[h + t - j];
      x -= phi[j] * past;
    }
    out[t] = x;
  }
}

std::vector<double> simulate_ar_path(const ArFit& fit, std::span<const double> innovations,
                                     std::span<const double> init) {
  if (fit.phi.empty() || fit.phi[0] != 1.0 || !step_down_stable(fit.phi)) {
    fail(ErrorKind::kInvalidParameter, "AR fit is not stable");
  }
  std::vector<double> out(innovations.size());
  simulate_ar_path_into(fit, innovations, init, out);
  return out;
}

}  // namespace lmboot
