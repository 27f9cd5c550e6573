#include "lmboot/arfima.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "lmboot/error.hpp"

namespace lmboot {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Lags needed beyond max_lag before phi^M drops below 1e-18.
std::size_t ar_tail_length(double phi) {
  const double a = std::abs(phi);
  if (a == 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(std::log(1e-18) / std::log(a))) + 1;
}

std::vector<double> fractional_noise_acvf(double d, double sigma2, std::size_t max_lag) {
  std::vector<double> g(max_lag + 1);
  g[0] = sigma2 * std::tgamma(1.0 - 2.0 * d) / std::pow(std::tgamma(1.0 - d), 2);
  for (std::size_t k = 1; k <= max_lag; ++k) {
    const double kk = static_cast<double>(k);
    g[k] = g[k - 1] * (kk - 1.0 + d) / (kk - d);
  }
  return g;
}

}  // namespace

std::string to_string(const InnovationLaw& law) {
  if (law.kind == InnovationLaw::Kind::kGaussian) return "gaussian";
  std::ostringstream out;
  out << "student-t:" << law.dof;
  return out.str();
}

InnovationLaw parse_innovation_law(const std::string& text) {
  if (text == "gaussian" || text == "normal") return InnovationLaw::gaussian();
  const std::string prefix = "student-t";
  if (text.rfind(prefix, 0) == 0) {
    if (text.size() == prefix.size()) return InnovationLaw::student_t(5.0);
    if (text[prefix.size()] == ':') {
      const std::string rest = text.substr(prefix.size() + 1);
      std::size_t used = 0;
      double dof = 0.0;
      try {
        dof = std::stod(rest, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == rest.size() && used > 0) {
        InnovationLaw law = InnovationLaw::student_t(dof);
        if (!(dof > 2.0)) fail(ErrorKind::kInvalidParameter, "student-t dof must exceed 2");
        return law;
      }
    }
  }
  fail(ErrorKind::kInvalidParameter, "unknown innovation law '" + text + "'");
}

void ArfimaParams::validate() const {
  if (!(d > -0.5 && d < 0.5)) fail(ErrorKind::kInvalidParameter, "d must lie in (-0.5, 0.5)");
  if (!(std::abs(phi) < 1.0)) fail(ErrorKind::kInvalidParameter, "|phi| must be below 1");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    fail(ErrorKind::kInvalidParameter, "sigma2 must be positive");
  }
  if (law.kind == InnovationLaw::Kind::kStudentT && !(law.dof > 2.0)) {
    fail(ErrorKind::kInvalidParameter, "student-t dof must exceed 2");
  }
}

AcvfTable arfima_acvf(const ArfimaParams& params, std::size_t max_lag) {
  params.validate();
  const double phi = params.phi;
  const std::size_t tail = ar_tail_length(phi);
  const auto gx = fractional_noise_acvf(params.d, params.sigma2, max_lag + tail);

  AcvfTable table;
  if (tail == 0) {
    table.gamma.assign(gx.begin(), gx.begin() + static_cast<std::ptrdiff_t>(max_lag + 1));
    return table;
  }
  // gamma_y(k) = (1 - phi^2)^-1 sum_m phi^|m| gamma_x(k + m), split into the
  // one-sided sums S+(k) = sum_{m>=0} phi^m gamma_x(k+m) and S-(k) likewise
  // looking backwards.
  std::vector<double> s_plus(max_lag + 1);
  double acc = 0.0;
  for (std::size_t k = max_lag + tail + 1; k-- > 0;) {
    acc = gx[k] + phi * acc;
    if (k <= max_lag) s_plus[k] = acc;
  }
  table.gamma.resize(max_lag + 1);
  const double scale = 1.0 / (1.0 - phi * phi);
  double s_minus = s_plus[0];
  for (std::size_t k = 0; k <= max_lag; ++k) {
    if (k > 0) s_minus = gx[k] + phi * s_minus;
    table.gamma[k] = scale * (s_plus[k] + s_minus - gx[k]);
  }
  return table;
}

GaussianSimulator::GaussianSimulator(const ArfimaParams& params, std::size_t T) : params_(params) {
  if (T < 1) fail(ErrorKind::kInvalidParameter, "series length must be at least 1");
  const auto g = arfima_acvf(params, T - 1).gamma;
  rows_.resize(T);
  v_.resize(T);
  v_[0] = g[0];
  std::vector<double> prev;  // full row t-1, trailing zeros trimmed
  std::vector<double> cur;
  for (std::size_t t = 1; t < T; ++t) {
    double num = g[t];
    for (std::size_t j = 1; j <= prev.size(); ++j) num -= prev[j - 1] * g[t - j];
    const double k = num / v_[t - 1];
    v_[t] = v_[t - 1] * (1.0 - k * k);
    if (!(v_[t] > 0.0)) {
      fail(ErrorKind::kNumericalDegeneracy,
           "autocovariance matrix is not positive definite at order " + std::to_string(t));
    }
    if (k == 0.0) {
      rows_[t] = rows_[t - 1];
      continue;
    }
    cur.assign(t, 0.0);
    cur[t - 1] = k;
    for (std::size_t j = 1; j <= prev.size(); ++j) cur[j - 1] += prev[j - 1];
    for (std::size_t j = 1; j < t; ++j) {
      if (t - j <= prev.size()) cur[j - 1] -= k * prev[t - j - 1];
    }
    rows_[t] = Row{coeffs_.size(), t};
    coeffs_.insert(coeffs_.end(), cur.begin(), cur.end());
    prev.swap(cur);
  }
}

std::vector<double> GaussianSimulator::draw_from(std::span<const double> z) const {
  const std::size_t T = v_.size();
  if (z.size() != T) fail(ErrorKind::kInvalidParameter, "deviate count does not match length");
  std::vector<double> y(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double* row = coeffs_.data() + rows_[t].offset;
    double pred = 0.0;
    for (std::size_t j = 1; j <= rows_[t].length; ++j) pred += row[j - 1] * y[t - j];
    y[t] = pred + std::sqrt(v_[t]) * z[t];
  }
  return y;
}

std::vector<double> GaussianSimulator::draw(const RngStream& stream) const {
  auto engine = stream.engine();
  return draw_from(innovation_deviates(params_.law, v_.size(), engine));
}

std::vector<double> innovation_deviates(const InnovationLaw& law, std::size_t n,
                                        std::mt19937_64& engine) {
  std::vector<double> z(n);
  if (law.kind == InnovationLaw::Kind::kGaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& x : z) x = normal(engine);
  } else {
    if (!(law.dof > 2.0)) fail(ErrorKind::kInvalidParameter, "student-t dof must exceed 2");
    std::student_t_distribution<double> t(law.dof);
    const double scale = std::sqrt((law.dof - 2.0) / law.dof);
    for (auto& x : z) x = scale * t(engine);
  }
  return z;
}

std::vector<double> simulate_gaussian(const ArfimaParams& params, std::size_t T,
                                      const RngStream& stream) {
  return GaussianSimulator(params, T).draw(stream);
}

double profiled_loglik(std::span<const double> y, double d, double phi, double* sigma2) {
  const std::size_t T = y.size();
  if (T < 1) fail(ErrorKind::kInvalidParameter, "empty series");
  ArfimaParams p;
  p.d = d;
  p.phi = phi;
  const auto g = arfima_acvf(p, T - 1).gamma;

  // Reversed copies turn every inner product into a contiguous one:
  // sum_j a_j x(t-j) = a . x_rev[T-t .. T-t+len).
  Eigen::VectorXd g_rev(T);
  Eigen::VectorXd y_rev(T);
  for (std::size_t i = 0; i < T; ++i) {
    g_rev(static_cast<Eigen::Index>(T - 1 - i)) = g[i];
    y_rev(static_cast<Eigen::Index>(T - 1 - i)) = y[i];
  }
  Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(T));  // a(j-1) = phi_{t,j}
  double v = g[0];
  double weighted = y[0] * y[0] / v;
  double log_det = std::log(v);
  for (std::size_t t = 1; t < T; ++t) {
    const auto len = static_cast<Eigen::Index>(t - 1);
    const auto off = static_cast<Eigen::Index>(T - t);
    const double num = g[t] - a.head(len).dot(g_rev.segment(off, len));
    const double k = num / v;
    // phi_{t,j} = phi_{t-1,j} - k phi_{t-1,t-j}, updated in symmetric pairs.
    if (len > 0) {
      double* c = a.data();
      std::size_t lo = 0;
      std::size_t hi = static_cast<std::size_t>(len) - 1;
      for (; lo < hi; ++lo, --hi) {
        const double x = c[lo];
        const double z = c[hi];
        c[lo] = x - k * z;
        c[hi] = z - k * x;
      }
      if (lo == hi) c[lo] *= 1.0 - k;
    }
    a(len) = k;
    v *= 1.0 - k * k;
    if (!(v > 0.0)) {
      fail(ErrorKind::kNumericalDegeneracy, "autocovariance matrix is not positive definite");
    }
    const double pred = a.head(len + 1).dot(y_rev.segment(off, len + 1));
    const double e = y[t] - pred;
    weighted += e * e / v;
    log_det += std::log(v);
  }
  const double n = static_cast<double>(T);
  const double s2 = weighted / n;
  if (!(s2 > 0.0)) fail(ErrorKind::kDegenerateInput, "series has zero variance");
  if (sigma2 != nullptr) *sigma2 = s2;
  return -0.5 * n * std::log(2.0 * M_PI * s2) - 0.5 * log_det - 0.5 * n;
}

MleResult mle_fit(std::span<const double> y, const MleOptions& options) {
  if (y.size() < 20) fail(ErrorKind::kInvalidParameter, "MLE needs at least 20 observations");
  if (!(options.d_lower < options.d_upper && options.phi_lower < options.phi_upper &&
        options.d_lower > -0.5 && options.d_upper < 0.5 && options.phi_lower > -1.0 &&
        options.phi_upper < 1.0 && options.grid_step > 0.0)) {
    fail(ErrorKind::kInvalidParameter, "invalid MLE search region");
  }
  MleResult res;
  auto inside = [&](double d, double phi) {
    return d >= options.d_lower && d <= options.d_upper && phi >= options.phi_lower &&
           phi <= options.phi_upper;
  };
  auto eval = [&](double d, double phi) {
    if (!inside(d, phi)) return kNegInf;
    ++res.evaluations;
    try {
      return profiled_loglik(y, d, phi);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kDegenerateInput) throw;
      return kNegInf;
    }
  };

  const auto nd = static_cast<std::size_t>(std::floor((options.d_upper - options.d_lower) / options.grid_step + 1e-9));
  const auto np = static_cast<std::size_t>(std::floor((options.phi_upper - options.phi_lower) / options.grid_step + 1e-9));
  double best = kNegInf;
  std::array<double, 2> best_x{0.0, 0.0};
  for (std::size_t i = 0; i <= nd; ++i) {
    const double d = options.d_lower + static_cast<double>(i) * options.grid_step;
    for (std::size_t j = 0; j <= np; ++j) {
      const double phi = options.phi_lower + static_cast<double>(j) * options.grid_step;
      const double f = eval(d, phi);
      if (f > best) {
        best = f;
        best_x = {d, phi};
      }
    }
  }
  if (!std::isfinite(best)) {
    fail(ErrorKind::kNonConvergence, "likelihood is not finite anywhere on the grid");
  }
  res.best_grid_loglik = best;

  // Nelder-Mead on the negative log-likelihood, started at the best grid point.
  using Point = std::array<double, 2>;
  const double step = options.grid_step / 2.0;
  std::array<Point, 3> x{best_x, Point{best_x[0] + step, best_x[1]}, Point{best_x[0], best_x[1] + step}};
  for (std::size_t i = 1; i < 3; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      if (!inside(x[i][0], x[i][1])) x[i][c] = best_x[c] - (x[i][c] - best_x[c]);
    }
  }
  std::array<double, 3> f{};
  f[0] = -best;
  for (std::size_t i = 1; i < 3; ++i) f[i] = -eval(x[i][0], x[i][1]);
  const std::size_t grid_evals = res.evaluations;

  auto diameter = [&] {
    double m = 0.0;
    for (std::size_t i = 1; i < 3; ++i) {
      m = std::max({m, std::abs(x[i][0] - x[0][0]), std::abs(x[i][1] - x[0][1])});
    }
    return m;
  };
  bool converged = false;
  while (res.evaluations - grid_evals < options.max_evaluations) {
    std::array<std::size_t, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    const auto xs = x;
    const auto fs = f;
    for (std::size_t i = 0; i < 3; ++i) {
      x[i] = xs[order[i]];
      f[i] = fs[order[i]];
    }
    if (diameter() < options.tolerance) {
      converged = true;
      break;
    }
    const Point centroid{(x[0][0] + x[1][0]) / 2.0, (x[0][1] + x[1][1]) / 2.0};
    auto along = [&](double t) {
      return Point{centroid[0] + t * (x[2][0] - centroid[0]), centroid[1] + t * (x[2][1] - centroid[1])};
    };
    const Point xr = along(-1.0);
    const double fr = -eval(xr[0], xr[1]);
    if (fr < f[0]) {
      const Point xe = along(-2.0);
      const double fe = -eval(xe[0], xe[1]);
      if (fe < fr) {
        x[2] = xe;
        f[2] = fe;
      } else {
        x[2] = xr;
        f[2] = fr;
      }
      continue;
    }
    if (fr < f[1]) {
      x[2] = xr;
      f[2] = fr;
      continue;
    }
    const Point xc = fr < f[2] ? along(-0.5) : along(0.5);
    const double fc = -eval(xc[0], xc[1]);
    if (fc < std::min(fr, f[2])) {
      x[2] = xc;
      f[2] = fc;
      continue;
    }
    for (std::size_t i = 1; i < 3; ++i) {
      x[i] = Point{(x[i][0] + x[0][0]) / 2.0, (x[i][1] + x[0][1]) / 2.0};
      f[i] = -eval(x[i][0], x[i][1]);
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "MLE refinement did not converge; best grid point d=" << best_x[0] << " phi=" << best_x[1];
    fail(ErrorKind::kNonConvergence, msg.str());
  }
  const std::size_t arg = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  res.d = x[arg][0];
  res.phi = x[arg][1];
  res.loglik = profiled_loglik(y, res.d, res.phi, &res.sigma2);
  return res;
}

}  // namespace lmboot
