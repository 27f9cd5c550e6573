#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lmboot/rng.hpp"

namespace lmboot {

/// Distribution of the driving noise: standard normal, or Student t scaled to
/// unit variance.
struct InnovationLaw {
  enum class Kind { kGaussian, kStudentT };
  Kind kind = Kind::kGaussian;
  double dof = 5.0;

  static InnovationLaw gaussian() { return {}; }
  static InnovationLaw student_t(double dof) { return {Kind::kStudentT, dof}; }
};

std::string to_string(const InnovationLaw& law);
/// Accepts "gaussian", "student-t" (5 degrees of freedom) or "student-t:DOF".
InnovationLaw parse_innovation_law(const std::string& text);

/// ARFIMA(1, d, 0): (1 - phi z)(1 - z)^d y(t) = eps(t), Var eps = sigma2.
struct ArfimaParams {
  double d = 0.0;
  double phi = 0.0;
  double sigma2 = 1.0;
  InnovationLaw law;

  /// d in (-0.5, 0.5), |phi| < 1, sigma2 > 0, t dof > 2.
  void validate() const;
};

struct AcvfTable {
  std::vector<double> gamma;  // gamma(0..max_lag)

  std::size_t max_lag() const noexcept { return gamma.size() - 1; }
};

/// Exact autocovariances at lags 0..max_lag.
AcvfTable arfima_acvf(const ArfimaParams& params, std::size_t max_lag);

/// Durbin-Levinson factorization of a Toeplitz covariance: one-step
/// prediction coefficients for every t < T and the prediction error variances.
class GaussianSimulator {
 public:
  GaussianSimulator(const ArfimaParams& params, std::size_t T);

  std::size_t length() const noexcept { return v_.size(); }
  const ArfimaParams& params() const noexcept { return params_; }
  /// Prediction error variances v_0 .. v_{T-1}.
  const std::vector<double>& variances() const noexcept { return v_; }

  /// One path driven by the deviates produced from `stream`.
  std::vector<double> draw(const RngStream& stream) const;
  /// Path driven by the caller's unit-variance deviates (size T).
  std::vector<double> draw_from(std::span<const double> z) const;

 private:
  ArfimaParams params_;
  // Row t predicts y(t) from y(t-1), y(t-2), ...; only the prefix up to the
  // last nonzero coefficient is kept, and a row whose partial
  // autocorrelation is exactly zero shares its predecessor's storage.
  struct Row {
    std::size_t offset = 0;
    std::size_t length = 0;
  };
  std::vector<double> coeffs_;
  std::vector<Row> rows_;
  std::vector<double> v_;
};

/// Unit-variance deviates of the requested law.
std::vector<double> innovation_deviates(const InnovationLaw& law, std::size_t n,
                                        std::mt19937_64& engine);

std::vector<double> simulate_gaussian(const ArfimaParams& params, std::size_t T,
                                      const RngStream& stream);

struct MleOptions {
  double d_lower = -0.49;
  double d_upper = 0.49;
  double phi_lower = -0.99;
  double phi_upper = 0.99;
  double grid_step = 0.02;
  double tolerance = 1e-6;
  std::size_t max_evaluations = 2000;
};

struct MleResult {
  double d = 0.0;
  double phi = 0.0;
  double sigma2 = 0.0;
  double loglik = 0.0;
  double best_grid_loglik = 0.0;
  std::size_t evaluations = 0;
};

/// Exact Gaussian log-likelihood at (d, phi) with sigma2 profiled out; the
/// profiled sigma2 is written to *sigma2 when non-null.
double profiled_loglik(std::span<const double> y, double d, double phi, double* sigma2 = nullptr);

/// Grid search over the box followed by Nelder-Mead refinement.
MleResult mle_fit(std::span<const double> y, const MleOptions& options = {});

}  // namespace lmboot
