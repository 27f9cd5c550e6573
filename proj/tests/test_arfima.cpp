#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "lmboot/arfima.hpp"
#include "lmboot/arsieve.hpp"
#include "lmboot/error.hpp"
#include "oracles.hpp"

using namespace lmboot;

namespace {

ArfimaParams params(double d, double phi) {
  ArfimaParams p;
  p.d = d;
  p.phi = phi;
  return p;
}

}  // namespace

TEST_CASE("autocovariance of white noise and AR(1)") {
  const auto white = arfima_acvf(params(0.0, 0.0), 4).gamma;
  CHECK(white == std::vector<double>{1.0, 0.0, 0.0, 0.0, 0.0});
  const auto ar = arfima_acvf(params(0.0, 0.6), 10).gamma;
  for (std::size_t k = 0; k <= 10; ++k) {
    CHECK(ar[k] == doctest::Approx(std::pow(0.6, static_cast<double>(k)) / 0.64).epsilon(1e-13));
  }
  const auto neg = arfima_acvf(params(0.0, -0.8), 5).gamma;
  for (std::size_t k = 0; k <= 5; ++k) {
    CHECK(neg[k] == doctest::Approx(std::pow(-0.8, static_cast<double>(k)) / 0.36).epsilon(1e-12));
  }
}

TEST_CASE("fractional noise variance") {
  const auto g = arfima_acvf(params(0.3, 0.0), 3).gamma;
  CHECK(g[0] == doctest::Approx(std::tgamma(0.4) / std::pow(std::tgamma(0.7), 2)).epsilon(1e-14));
  CHECK(g[0] == doctest::Approx(1.31645).epsilon(1e-5));
  CHECK(g[1] == doctest::Approx(g[0] * 0.3 / 0.7).epsilon(1e-14));
  auto scaled = params(0.3, 0.0);
  scaled.sigma2 = 2.5;
  CHECK(arfima_acvf(scaled, 0).gamma[0] == doctest::Approx(2.5 * g[0]));
}

TEST_CASE("autocovariance agrees with the MA convolution oracle") {
  for (double d : {0.1, 0.3}) {
    for (double phi : {0.0, 0.5}) {
      const auto g = arfima_acvf(params(d, phi), 10).gamma;
      const auto ref = oracle::ma_acvf(d, phi, 10, 50000);
      for (std::size_t k = 0; k <= 10; ++k) CHECK(std::abs(g[k] / ref[k] - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("MA convolution oracle matches the closed form for fractional noise") {
  for (double d : {0.1, 0.45}) {
    const auto ref = oracle::ma_acvf(d, 0.0, 50);
    double g = std::tgamma(1.0 - 2.0 * d) / (std::tgamma(1.0 - d) * std::tgamma(1.0 - d));
    for (std::size_t k = 0; k <= 50; ++k) {
      CHECK(std::abs(ref[k] / g - 1.0) < 1e-8);
      g *= (static_cast<double>(k) + d) / (static_cast<double>(k) + 1.0 - d);
    }
  }
}

TEST_CASE("autocovariance is a valid Toeplitz sequence") {
  for (double d : {-0.45, -0.2, 0.0, 0.2, 0.45}) {
    for (double phi : {-0.9, 0.0, 0.3, 0.9}) {
      const auto g = arfima_acvf(params(d, phi), 60).gamma;
      CHECK(g[0] > 0.0);
      for (double x : g) CHECK(std::abs(x) <= g[0]);
      CHECK_NOTHROW(levinson_durbin(g));
    }
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(arfima_acvf(params(0.5, 0.0), 3), Error);
  CHECK_THROWS_AS(arfima_acvf(params(-0.5, 0.0), 3), Error);
  CHECK_THROWS_AS(arfima_acvf(params(0.2, 1.0), 3), Error);
  auto p = params(0.2, 0.1);
  p.sigma2 = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p.sigma2 = 1.0;
  p.law = InnovationLaw::student_t(2.0);
  CHECK_THROWS_AS(p.validate(), Error);
  try {
    arfima_acvf(params(0.7, 0.0), 3);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidParameter);
  }
}

TEST_CASE("innovation law names") {
  CHECK(parse_innovation_law("gaussian").kind == InnovationLaw::Kind::kGaussian);
  const auto t = parse_innovation_law("student-t:7");
  CHECK(t.kind == InnovationLaw::Kind::kStudentT);
  CHECK(t.dof == 7.0);
  CHECK(parse_innovation_law("student-t").dof == 5.0);
  CHECK(to_string(t) == "student-t:7");
  CHECK_THROWS_AS(parse_innovation_law("student-t:1.5"), Error);
  CHECK_THROWS_AS(parse_innovation_law("student-t:x"), Error);
  CHECK_THROWS_AS(parse_innovation_law("cauchy"), Error);
}

TEST_CASE("white noise simulation passes a Kolmogorov-Smirnov test") {
  const std::size_t T = 100000;
  auto y = simulate_gaussian(params(0.0, 0.0), T, RngStream(99));
  std::sort(y.begin(), y.end());
  const boost::math::normal_distribution<double> normal;
  double D = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    const double F = boost::math::cdf(normal, y[i]);
    D = std::max({D, static_cast<double>(i + 1) / T - F, F - static_cast<double>(i) / T});
  }
  // Asymptotic 1% critical value 1.628 / sqrt(n).
  CHECK(D < 1.628 / std::sqrt(static_cast<double>(T)));
}

TEST_CASE("sample autocovariances match the model") {
  const auto p = params(0.3, 0.6);
  const std::size_t T = 2000;
  const std::size_t R = 200;
  const GaussianSimulator sim(p, T);
  const auto g = arfima_acvf(p, 5).gamma;
  std::vector<std::vector<double>> c(6);
  for (std::size_t r = 0; r < R; ++r) {
    const auto y = sim.draw(RngStream(500).fork(RngStream::Tag::kReplication, r));
    for (std::size_t k = 0; k <= 5; ++k) {
      double s = 0.0;
      for (std::size_t t = k; t < T; ++t) s += y[t] * y[t - k];
      c[k].push_back(s / static_cast<double>(T - k));
    }
  }
  for (std::size_t k = 0; k <= 5; ++k) {
    const double m = std::accumulate(c[k].begin(), c[k].end(), 0.0) / R;
    double v = 0.0;
    for (double x : c[k]) v += (x - m) * (x - m);
    const double se = std::sqrt(v / (R - 1) / R);
    CHECK(std::abs(m - g[k]) <= 3.0 * se);
  }
}

TEST_CASE("short simulated vectors have the Toeplitz covariance") {
  const auto p = params(0.4, 0.5);
  const std::size_t T = 12;
  const std::size_t n = 100000;
  const GaussianSimulator sim(p, T);
  const auto g = arfima_acvf(p, T - 1).gamma;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(T, T);
  std::mt19937_64 eng(4);
  std::normal_distribution<double> z;
  std::vector<double> dev(T);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto& x : dev) x = z(eng);
    const auto y = sim.draw_from(dev);
    for (std::size_t i = 0; i < T; ++i) {
      for (std::size_t j = 0; j < T; ++j) S(i, j) += y[i] * y[j];
    }
  }
  S /= static_cast<double>(n);
  for (std::size_t i = 0; i < T; ++i) {
    for (std::size_t j = 0; j < T; ++j) {
      const double gij = g[i > j ? i - j : j - i];
      const double se = std::sqrt((g[0] * g[0] + gij * gij) / n);
      CHECK(std::abs(S(i, j) - gij) <= 4.5 * se);
    }
  }
}

TEST_CASE("simulation is reproducible") {
  const auto p = params(0.2, 0.3);
  CHECK(simulate_gaussian(p, 300, RngStream(1)) == simulate_gaussian(p, 300, RngStream(1)));
  CHECK(simulate_gaussian(p, 300, RngStream(1)) != simulate_gaussian(p, 300, RngStream(2)));
  CHECK(simulate_gaussian(p, 1, RngStream(3)).size() == 1);
  CHECK_THROWS_AS(simulate_gaussian(p, 0, RngStream(3)), Error);
}

TEST_CASE("Student t deviates are heavy tailed with unit variance") {
  std::mt19937_64 eng(8);
  const auto z = innovation_deviates(InnovationLaw::student_t(5.0), 200000, eng);
  const double n = static_cast<double>(z.size());
  const double m = std::accumulate(z.begin(), z.end(), 0.0) / n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : z) {
    m2 += (x - m) * (x - m);
    m4 += std::pow(x - m, 4);
  }
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m2 - 1.0) < 0.03);
  CHECK(m4 / (m2 * m2) > 3.0);

  auto p = params(0.0, 0.0);
  p.law = InnovationLaw::student_t(5.0);
  p.sigma2 = 2.0;
  const auto y = simulate_gaussian(p, 50000, RngStream(4));
  double v = 0.0;
  for (double x : y) v += x * x;
  CHECK(std::abs(v / 50000.0 / 2.0 - 1.0) < 0.05);
}

TEST_CASE("profiled likelihood of iid data") {
  const auto y = simulate_gaussian(params(0.0, 0.0), 300, RngStream(6));
  double s2 = 0.0;
  for (double x : y) s2 += x * x;
  s2 /= 300.0;
  double sigma2 = 0.0;
  const double ll = profiled_loglik(y, 0.0, 0.0, &sigma2);
  CHECK(sigma2 == doctest::Approx(s2).epsilon(1e-13));
  CHECK(ll == doctest::Approx(-150.0 * (std::log(2.0 * M_PI * s2) + 1.0)).epsilon(1e-13));
}

TEST_CASE("profiled likelihood matches a dense Cholesky evaluation") {
  const auto y = simulate_gaussian(params(0.3, 0.4), 150, RngStream(7));
  for (auto [d, phi] : {std::pair{0.3, 0.4}, std::pair{-0.2, 0.7}, std::pair{0.45, -0.5}}) {
    const auto g = arfima_acvf(params(d, phi), 149).gamma;
    CHECK(profiled_loglik(y, d, phi) == doctest::Approx(oracle::gaussian_loglik(y, g)).epsilon(1e-10));
  }
}

TEST_CASE("MLE optimum dominates the grid") {
  const auto y = simulate_gaussian(params(0.2, 0.3), 200, RngStream(8));
  MleOptions opt;
  opt.grid_step = 0.07;
  const auto fit = mle_fit(y, opt);
  CHECK(fit.loglik >= fit.best_grid_loglik);
  CHECK(std::abs(fit.d) < 0.5);
  CHECK(std::abs(fit.phi) < 1.0);
  CHECK(fit.sigma2 > 0.0);
  for (int i = 0; i <= 14; ++i) {
    for (int j = 0; j <= 28; ++j) {
      const double d = -0.49 + 0.07 * i;
      const double phi = -0.99 + 0.07 * j;
      CHECK(fit.loglik >= profiled_loglik(y, d, phi));
    }
  }
  CHECK_THROWS_AS(mle_fit(std::vector<double>(10, 1.0)), Error);
}

TEST_CASE("MLE recovers a long AR(1)") {
  const auto y = simulate_gaussian(params(0.0, 0.6), 20000, RngStream(9));
  MleOptions opt;
  opt.d_lower = -0.1;
  opt.d_upper = 0.1;
  opt.phi_lower = 0.5;
  opt.phi_upper = 0.7;
  opt.grid_step = 0.1;
  opt.tolerance = 1e-4;
  const auto fit = mle_fit(y, opt);
  CHECK(std::abs(fit.d) < 0.02);
  CHECK(std::abs(fit.phi - 0.6) < 0.02);
}
