#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lmboot/arfima.hpp"
#include "lmboot/error.hpp"
#include "lmboot/estimators.hpp"
#include "lmboot/harness.hpp"
#include "lmboot/pfsb.hpp"

namespace {

using namespace lmboot;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNumericalDegeneracy:
    case ErrorKind::kDegenerateInput:
    case ErrorKind::kNonConvergence:
      return kExitNumeric;
    default:
      return kExitUsage;
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("LMBOOT_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*env == '\0' || *end != '\0') fail(ErrorKind::kInvalidParameter, "LMBOOT_SEED is not an integer");
    return v;
  }
  return 1;
}

std::vector<double> read_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path);
  std::vector<double> y;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto comma = line.find(',');
    if (comma != std::string::npos) line.erase(comma);
    std::istringstream ls(line);
    double x = 0.0;
    if (!(ls >> x)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      fail(ErrorKind::kIo, path + ":" + std::to_string(lineno) + ": not a number");
    }
    y.push_back(x);
  }
  if (y.empty()) fail(ErrorKind::kIo, path + " holds no values");
  return y;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

struct SimulateArgs {
  double d = 0.0;
  double phi = 0.0;
  double sigma2 = 1.0;
  std::size_t T = 500;
  std::size_t n = 1;
  std::optional<std::uint64_t> seed;
  std::string law = "gaussian";
  std::string out;
};

void run_simulate(const SimulateArgs& a) {
  ArfimaParams params;
  params.d = a.d;
  params.phi = a.phi;
  params.sigma2 = a.sigma2;
  params.law = parse_innovation_law(a.law);
  if (a.n < 1) fail(ErrorKind::kInvalidParameter, "--n must be at least 1");
  const GaussianSimulator sim(params, a.T);
  const RngStream base(resolve_seed(a.seed));
  std::vector<std::vector<double>> series;
  for (std::size_t i = 0; i < a.n; ++i) series.push_back(sim.draw(base.fork(RngStream::Tag::kSimulation, i)));

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) fail(ErrorKind::kIo, "cannot write " + a.out);
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  for (std::size_t t = 0; t < a.T; ++t) {
    for (std::size_t i = 0; i < a.n; ++i) out << (i ? "," : "") << format_number(series[i][t]);
    out << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "write failed");
}

struct EstimateArgs {
  std::string in;
  std::string family = "lpr";
  std::size_t P = 0;
  double bandwidth_exp = 0.7;
};

EstimatorSpec make_spec(const std::string& family, std::size_t P, double nu) {
  EstimatorSpec spec;
  spec.family = parse_family(family);
  spec.P = P;
  spec.bandwidth_exponent = nu;
  spec.validate();
  return spec;
}

void run_estimate(const EstimateArgs& a) {
  const auto y = read_series(a.in);
  const auto spec = make_spec(a.family, a.P, a.bandwidth_exp);
  const auto r = estimate(y, spec);
  std::cout << "d_hat          " << num(r.d_hat) << '\n'
            << "asymptotic_sd  " << num(r.asymptotic_sd) << '\n'
            << "N              " << r.N << '\n';
  if (r.boundary) std::cout << "note           minimizer on the search boundary\n";
}

struct BiasArgs {
  EstimateArgs est;
  std::size_t B = 1000;
  std::string mode = "parametric";
  bool iterate = false;
  std::size_t max_iter = 10;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

void run_bias_correct(const BiasArgs& a) {
  const auto y = read_series(a.est.in);
  const auto spec = make_spec(a.est.family, a.est.P, a.est.bandwidth_exp);
  PfsbConfig config;
  config.mode = parse_innovation_mode(a.mode);
  config.B = a.B;
  config.stream = RngStream(resolve_seed(a.seed));
  config.threads = a.threads;

  IterateOptions options;
  if (a.iterate) {
    options.max_iter = a.max_iter;
  } else {
    options.max_iter = 1;
    options.threshold_scale = std::numeric_limits<double>::infinity();
  }
  const auto trace = iterate_bias_correct(y, spec, config, options);
  const auto& first = trace.first;
  std::cout << "d_hat          " << num(first.d_hat) << '\n'
            << "bias_hat       " << num(first.bias_hat) << '\n'
            << "d_tilde        " << num(trace.final) << '\n'
            << "sieve_order    " << first.sieve_order << '\n';
  if (first.hpd) {
    std::cout << "hpd95          [" << num(first.hpd->lo) << ", " << num(first.hpd->hi) << "]\n";
  }
  if (first.resampled) std::cout << "resampled      " << first.resampled << '\n';
  if (a.iterate) {
    std::cout << "stop           " << to_string(trace.reason) << " at k=" << trace.stop_iteration << '\n';
    std::cout << "\n   k        d_k       bias     d_next       tau1       tau2      crit1      crit2\n";
    for (const auto& r : trace.records) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%4zu %10.5f %10.5f %10.5f %10.5f %10.5f %10.5f %10.5f\n", r.k,
                    r.d_current, r.bias, r.d_next, r.tau1, r.tau2, r.criterion1, r.criterion2);
      std::cout << buf;
    }
  }
}

struct McArgs {
  std::string config;
  std::string out_dir;
  unsigned threads = 1;
};

void run_mc(const McArgs& a) {
  const McDesign design = load_design(a.config);
  RunOptions options;
  options.threads = a.threads;
  const auto results = run_design(design, options);
  emit_tables(results, a.out_dir);
  std::cout << "wrote " << a.out_dir << "/results.csv (" << results.cells.size() << " cells)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-memory estimation with pre-filtered sieve bootstrap bias correction"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate ARFIMA(1,d,0) series");
  simulate->add_option("--d", sim.d, "Memory parameter in (-0.5, 0.5)")->required();
  simulate->add_option("--phi", sim.phi, "AR(1) coefficient")->default_val(0.0);
  simulate->add_option("--sigma2", sim.sigma2, "Innovation variance")->default_val(1.0);
  simulate->add_option("--T", sim.T, "Series length")->required();
  simulate->add_option("--n", sim.n, "Number of series (written as columns)")->default_val(1);
  simulate->add_option("--seed", sim.seed, "Seed (default: $LMBOOT_SEED, then 1)");
  simulate->add_option("--law", sim.law, "gaussian or student-t:DOF")->default_val("gaussian");
  simulate->add_option("--out", sim.out, "Output file (default stdout)");

  EstimateArgs est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate d with LPR(P) or SPLW(P)");
  estimate_cmd->add_option("--in", est.in, "Input series, one value per line")->required();
  estimate_cmd->add_option("--family", est.family, "lpr or splw")->required();
  estimate_cmd->add_option("--P", est.P, "Number of polynomial terms (0-3)")->default_val(0);
  estimate_cmd->add_option("--bandwidth-exp", est.bandwidth_exp, "Bandwidth exponent")->default_val(0.7);

  BiasArgs bias;
  auto* bias_cmd = app.add_subcommand("bias-correct", "Bootstrap bias correction and HPD interval");
  bias_cmd->add_option("--in", bias.est.in, "Input series, one value per line")->required();
  bias_cmd->add_option("--family", bias.est.family, "lpr or splw")->required();
  bias_cmd->add_option("--P", bias.est.P, "Number of polynomial terms (0-3)")->default_val(0);
  bias_cmd->add_option("--bandwidth-exp", bias.est.bandwidth_exp, "Bandwidth exponent")->default_val(0.7);
  bias_cmd->add_option("--B", bias.B, "Bootstrap draws")->default_val(1000);
  bias_cmd->add_option("--mode", bias.mode, "parametric or nonparametric")->default_val("parametric");
  bias_cmd->add_flag("--iterate", bias.iterate, "Iterate with the stochastic stopping rules");
  bias_cmd->add_option("--max-iter", bias.max_iter, "Iteration cap")->default_val(10);
  bias_cmd->add_option("--seed", bias.seed, "Seed (default: $LMBOOT_SEED, then 1)");
  bias_cmd->add_option("--threads", bias.threads, "Worker threads")->default_val(1);

  McArgs mc;
  auto* mc_cmd = app.add_subcommand("mc-run", "Run a Monte Carlo design");
  mc_cmd->add_option("--config", mc.config, "Design file (key = value)")->required();
  mc_cmd->add_option("--out-dir", mc.out_dir, "Output directory")->required();
  mc_cmd->add_option("--threads", mc.threads, "Worker threads")->default_val(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (simulate->parsed()) run_simulate(sim);
    if (estimate_cmd->parsed()) run_estimate(est);
    if (bias_cmd->parsed()) run_bias_correct(bias);
    if (mc_cmd->parsed()) run_mc(mc);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
