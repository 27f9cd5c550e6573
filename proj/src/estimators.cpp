#include "lmboot/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "lmboot/error.hpp"

namespace lmboot {
namespace {

constexpr std::array<double, 4> kPsiSquared{1.0, 2.25, 3.52, 4.79};
constexpr double kOrdinateFloor = 1e-300;

// SPLW(0) search: coarse grid, then golden section inside the best bracket,
// polished by Newton on the derivative.
constexpr double kGridStep = 0.01;
constexpr double kGoldenTol = 1e-8;

double log_ordinate(double v) { return std::log(std::max(v, kOrdinateFloor)); }

void require_usable(const PeriodogramSlice& slice, const EstimatorSpec& spec) {
  if (slice.size() < spec.P + 2) {
    fail(ErrorKind::kInvalidDesign, "estimator of order P = " + std::to_string(spec.P) +
                                        " needs at least " + std::to_string(spec.P + 2) +
                                        " frequencies");
  }
  bool any_positive = false;
  for (double v : slice.ordinates) {
    if (!std::isfinite(v)) fail(ErrorKind::kDegenerateInput, "non-finite periodogram ordinate");
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) fail(ErrorKind::kDegenerateInput, "all periodogram ordinates are zero");
}

// Log-sum-exp based evaluation of the concentrated local polynomial Whittle
// objective and its derivatives in beta = (d, theta_1..theta_P).
class WhittleObjective {
 public:
  WhittleObjective(const PeriodogramSlice& slice, std::size_t P)
      : n_(slice.size()), P_(P), log_i_(n_), u_(n_), x_(n_, P) {
    for (std::size_t j = 0; j < n_; ++j) {
      const double lambda = slice.freqs[j];
      const double v = slice.ordinates[j];
      log_i_[j] = v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
      u_[j] = 2.0 * std::log(lambda);
      double pw = 1.0;
      for (std::size_t p = 0; p < P; ++p) {
        pw *= lambda * lambda;
        x_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) = pw;
      }
    }
    u_mean_ = u_.mean();
    x_mean_ = P > 0 ? Eigen::VectorXd(x_.colwise().mean().transpose()) : Eigen::VectorXd();
  }

  std::size_t P() const { return P_; }

  double value(double d, const Eigen::VectorXd& theta) const {
    Eigen::ArrayXd s = log_i_ + d * u_;
    if (P_ > 0) s -= (x_ * theta).array();
    const double m = s.maxCoeff();
    const double lse = m + std::log((s - m).exp().sum() / static_cast<double>(n_));
    double out = lse - d * u_mean_;
    if (P_ > 0) out += x_mean_.dot(theta);
    return out;
  }

  // Gradient and Hessian with respect to the coordinates selected by
  // `with_d` (d first when present, then theta).
  void derivatives(double d, const Eigen::VectorXd& theta, bool with_d, Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const {
    Eigen::ArrayXd s = log_i_ + d * u_;
    if (P_ > 0) s -= (x_ * theta).array();
    const double m = s.maxCoeff();
    Eigen::ArrayXd w = (s - m).exp();
    w /= w.sum();

    const Eigen::Index off = with_d ? 1 : 0;
    const Eigen::Index dim = off + static_cast<Eigen::Index>(P_);
    Eigen::MatrixXd g(static_cast<Eigen::Index>(n_), dim);
    if (with_d) g.col(0) = u_.matrix();
    if (P_ > 0) g.rightCols(static_cast<Eigen::Index>(P_)) = -x_;
    Eigen::VectorXd gbar(dim);
    if (with_d) gbar(0) = u_mean_;
    if (P_ > 0) gbar.tail(static_cast<Eigen::Index>(P_)) = -x_mean_;

    const Eigen::VectorXd ew = g.transpose() * w.matrix();
    grad = ew - gbar;
    const Eigen::MatrixXd centered = g.rowwise() - ew.transpose();
    hess = centered.transpose() * (centered.array().colwise() * w).matrix();
  }

 private:
  std::size_t n_;
  std::size_t P_;
  Eigen::ArrayXd log_i_;
  Eigen::ArrayXd u_;
  Eigen::MatrixXd x_;
  double u_mean_ = 0.0;
  Eigen::VectorXd x_mean_;
};

// Damped Newton on a convex objective over (d, theta) or theta alone.
// Returns false when it fails to converge.
bool newton_minimize(const WhittleObjective& obj, bool with_d, double& d, Eigen::VectorXd& theta) {
  const Eigen::Index off = with_d ? 1 : 0;
  auto pack = [&] {
    Eigen::VectorXd b(off + theta.size());
    if (with_d) b(0) = d;
    b.tail(theta.size()) = theta;
    return b;
  };
  auto unpack = [&](const Eigen::VectorXd& b, double& dd, Eigen::VectorXd& th) {
    if (with_d) dd = b(0);
    th = b.tail(theta.size());
  };

  Eigen::VectorXd beta = pack();
  double f = obj.value(d, theta);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  for (int iter = 0; iter < 200; ++iter) {
    double dd = d;
    Eigen::VectorXd th = theta;
    unpack(beta, dd, th);
    obj.derivatives(dd, th, with_d, grad, hess);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-12) return true;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || grad.dot(step) <= 0.0) {
      step = grad;  // steepest descent fallback
    }
    const double slope = grad.dot(step);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::VectorXd trial = beta - t * step;
      double td = dd;
      Eigen::VectorXd tth = th;
      unpack(trial, td, tth);
      const double ft = obj.value(td, tth);
      if (std::isfinite(ft) && ft <= f - 1e-4 * t * slope) {
        beta = trial;
        f = ft;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved || (t * step).lpNorm<Eigen::Infinity>() < 1e-13) {
      unpack(beta, d, theta);
      // Converged to rounding when no descent step exists.
      return grad.lpNorm<Eigen::Infinity>() < 1e-7;
    }
    unpack(beta, d, theta);
  }
  return false;
}

double golden_section(const auto& f, double lo, double hi, double tol, double& f_best) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - ratio * (b - a);
  double e = a + ratio * (b - a);
  double fc = f(c), fe = f(e);
  while (b - a > tol) {
    if (fc <= fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + ratio * (b - a);
      fe = f(e);
    }
  }
  if (fc <= fe) {
    f_best = fc;
    return c;
  }
  f_best = fe;
  return e;
}

bool near_boundary(double d) {
  return d - kSplwLower < 1e-7 || kSplwUpper - d < 1e-7;
}

EstimateResult splw_order_zero(const WhittleObjective& obj, std::size_t N, const EstimatorSpec& spec) {
  const Eigen::VectorXd none;
  auto f = [&](double d) { return obj.value(d, none); };
  const auto steps = static_cast<std::size_t>(std::llround((kSplwUpper - kSplwLower) / kGridStep));
  std::size_t best = 0;
  double f_grid = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= steps; ++i) {
    const double v = f(kSplwLower + kGridStep * static_cast<double>(i));
    if (v < f_grid) {
      f_grid = v;
      best = i;
    }
  }
  const double d_grid = kSplwLower + kGridStep * static_cast<double>(best);
  const double lo = best == 0 ? kSplwLower : d_grid - kGridStep;
  const double hi = best == steps ? kSplwUpper : d_grid + kGridStep;
  double f_ref = 0.0;
  double d_ref = golden_section(f, lo, hi, kGoldenTol, f_ref);
  // Golden section locates d only to about sqrt(machine eps) because the
  // objective is flat there; a few Newton steps on the first-order condition
  // pin it down to rounding, which keeps d_hat scale invariant.
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  for (int iter = 0; iter < 20; ++iter) {
    obj.derivatives(d_ref, none, true, grad, hess);
    if (!(hess(0, 0) > 0.0)) break;
    const double next = d_ref - grad(0) / hess(0, 0);
    if (!(next >= lo && next <= hi)) break;
    const double step = std::abs(next - d_ref);
    d_ref = next;
    if (step < 1e-15) break;
  }
  f_ref = f(d_ref);
  if (!(f_ref <= f_grid)) {
    d_ref = d_grid;
    f_ref = f_grid;
  }
  EstimateResult out;
  out.d_hat = d_ref;
  out.N = N;
  out.asymptotic_sd = asymptotic_sd(spec, N);
  out.diagnostic = f_ref;
  out.boundary = near_boundary(d_ref);
  return out;
}

}  // namespace

std::string to_string(Family family) { return family == Family::kLpr ? "LPR" : "SPLW"; }

Family parse_family(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (t == "LPR") return Family::kLpr;
  if (t == "SPLW") return Family::kSplw;
  fail(ErrorKind::kInvalidParameter, "unknown estimator family '" + text + "'");
}

void EstimatorSpec::validate() const {
  if (P >= kPsiSquared.size()) {
    fail(ErrorKind::kUnsupportedOrder, "P = " + std::to_string(P) + " is not supported (max 3)");
  }
  if (!(bandwidth_exponent > 0.0 && bandwidth_exponent < 1.0)) {
    fail(ErrorKind::kInvalidParameter, "bandwidth exponent must lie in (0, 1)");
  }
}

double upsilon(const EstimatorSpec& spec) {
  if (spec.P >= kPsiSquared.size()) {
    fail(ErrorKind::kUnsupportedOrder, "P = " + std::to_string(spec.P) + " is not supported (max 3)");
  }
  const double omega2 = spec.family == Family::kLpr ? std::numbers::pi * std::numbers::pi / 24.0 : 0.25;
  return std::sqrt(omega2 * kPsiSquared[spec.P]);
}

double asymptotic_sd(const EstimatorSpec& spec, std::size_t N) {
  if (N == 0) fail(ErrorKind::kInvalidParameter, "bandwidth must be positive");
  return upsilon(spec) / std::sqrt(static_cast<double>(N));
}

std::size_t spec_bandwidth(const EstimatorSpec& spec, std::size_t T) {
  return bandwidth(T, spec.bandwidth_exponent, spec.P + 2);
}

EstimateResult lpr_from_periodogram(const PeriodogramSlice& slice, const EstimatorSpec& spec) {
  spec.validate();
  require_usable(slice, spec);
  const auto n = static_cast<Eigen::Index>(slice.size());
  const auto cols = static_cast<Eigen::Index>(spec.P + 2);
  Eigen::MatrixXd X(n, cols);
  Eigen::VectorXd z(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lambda = slice.freqs[static_cast<std::size_t>(j)];
    z(j) = log_ordinate(slice.ordinates[static_cast<std::size_t>(j)]);
    X(j, 0) = 1.0;
    X(j, 1) = -2.0 * std::log(lambda);
    double pw = 1.0;
    for (Eigen::Index p = 2; p < cols; ++p) {
      pw *= lambda * lambda;
      X(j, p) = pw;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < cols) {
    fail(ErrorKind::kNumericalDegeneracy, "log-periodogram design matrix is rank deficient");
  }
  const Eigen::VectorXd coef = qr.solve(z);
  const Eigen::VectorXd resid = z - X * coef;

  EstimateResult out;
  out.d_hat = coef(1);
  out.N = slice.size();
  out.asymptotic_sd = asymptotic_sd(spec, out.N);
  out.diagnostic = n > cols ? resid.squaredNorm() / static_cast<double>(n - cols) : 0.0;
  return out;
}

EstimateResult splw_from_periodogram(const PeriodogramSlice& slice, const EstimatorSpec& spec) {
  spec.validate();
  require_usable(slice, spec);
  const std::size_t N = slice.size();
  const WhittleObjective obj(slice, spec.P);
  if (spec.P == 0) return splw_order_zero(obj, N, spec);

  double d = 0.0;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.P));
  bool ok = newton_minimize(obj, true, d, theta);
  bool boundary = false;
  if (ok && (d < kSplwLower || d > kSplwUpper)) {
    // The profiled objective is convex in d, so the constrained minimum is at
    // the violated bound.
    d = std::clamp(d, kSplwLower, kSplwUpper);
    ok = newton_minimize(obj, false, d, theta);
    boundary = true;
  }
  if (!ok) {
    // Fallback: golden section on the profiled objective over the full window.
    Eigen::VectorXd th = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.P));
    auto f = [&](double dd) {
      std::vector<double> buf(th.data(), th.data() + th.size());
      const double v = splw_detail::profiled_objective(slice, dd, buf);
      return v;
    };
    double fv = 0.0;
    d = golden_section(f, kSplwLower, kSplwUpper, kGoldenTol, fv);
    std::vector<double> buf(spec.P, 0.0);
    splw_detail::profiled_objective(slice, d, buf);
    theta = Eigen::Map<Eigen::VectorXd>(buf.data(), static_cast<Eigen::Index>(buf.size()));
    boundary = near_boundary(d);
  }

  EstimateResult out;
  out.d_hat = d;
  out.N = N;
  out.asymptotic_sd = asymptotic_sd(spec, N);
  out.diagnostic = obj.value(d, theta);
  out.boundary = boundary;
  return out;
}

EstimateResult lpr_estimate(std::span<const double> y, const EstimatorSpec& spec) {
  spec.validate();
  return lpr_from_periodogram(periodogram(y, spec_bandwidth(spec, y.size())), spec);
}

EstimateResult splw_estimate(std::span<const double> y, const EstimatorSpec& spec) {
  spec.validate();
  return splw_from_periodogram(periodogram(y, spec_bandwidth(spec, y.size())), spec);
}

EstimateResult estimate(std::span<const double> y, const EstimatorSpec& spec) {
  return spec.family == Family::kLpr ? lpr_estimate(y, spec) : splw_estimate(y, spec);
}

namespace splw_detail {

double objective(const PeriodogramSlice& slice, double d, std::span<const double> theta) {
  const WhittleObjective obj(slice, theta.size());
  const Eigen::VectorXd th =
      Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  return obj.value(d, th);
}

double profiled_objective(const PeriodogramSlice& slice, double d, std::span<double> theta) {
  const WhittleObjective obj(slice, theta.size());
  Eigen::VectorXd th =
      Eigen::Map<Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  if (!theta.empty() && !newton_minimize(obj, false, d, th)) {
    fail(ErrorKind::kNonConvergence, "inner polynomial fit did not converge");
  }
  std::copy(th.data(), th.data() + th.size(), theta.begin());
  return obj.value(d, th);
}

}  // namespace splw_detail

}  // namespace lmboot
