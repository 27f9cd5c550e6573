#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lmboot/arfima.hpp"
#include "lmboot/estimators.hpp"
#include "lmboot/pfsb.hpp"

namespace lmboot {

enum class Correction { kNone, kBba, kSsr };
std::string to_string(Correction c);

/// One estimator column of a Monte Carlo design: a semiparametric spec with
/// an optional bootstrap correction, or the exact Gaussian MLE.
struct EstimatorEntry {
  bool mle = false;
  Family family = Family::kLpr;
  std::size_t P = 0;
  Correction correction = Correction::kNone;
  std::size_t K = 0;  // iterations for BBA(K)

  /// "LPR:1:none", "SPLW:0:bba:2", "SPLW:2:ssr" or "MLE".
  static EstimatorEntry parse(const std::string& text);
  std::string label() const;
  std::string family_name() const;
  bool needs_bootstrap(bool hpd) const;
};

struct Cell {
  std::size_t index = 0;
  std::size_t T = 0;
  double d = 0.0;
  double phi = 0.0;
};

struct McDesign {
  std::vector<double> d_values{0.0};
  std::vector<double> phi_values{0.0};
  std::vector<std::size_t> T_values{500};
  std::size_t R = 100;
  std::size_t B = 1000;
  InnovationMode mode = InnovationMode::kParametric;
  InnovationLaw law;
  std::uint64_t seed = 1;
  std::vector<EstimatorEntry> estimators;
  std::size_t max_iter = 10;
  double bandwidth_exponent = 0.7;
  bool hpd = true;
  double alpha_lower = 0.025;
  double alpha_upper = 0.025;
  StopEstimate on_stop = StopEstimate::kUpdated;
  MleOptions mle;

  void validate() const;
  std::size_t cell_count() const noexcept;
  /// Cells ordered lexicographically by (T, d, phi).
  Cell cell(std::size_t index) const;
  EstimatorSpec spec_for(const EstimatorEntry& entry) const;
};

/// key = value lines; '#' starts a comment; lists are comma separated.
McDesign parse_design(std::istream& in);
McDesign parse_design_text(const std::string& text);
McDesign load_design(const std::filesystem::path& path);

/// Stream owned by replication r of a cell. The simulated series uses
/// fork(kSimulation, 0); the bootstrap shared by every entry of one
/// (family, P) pair uses fork(kEstimator, bootstrap_stream_index(entry)).
RngStream replication_stream(std::uint64_t master_seed, std::size_t cell_index, std::size_t r);
std::size_t bootstrap_stream_index(const EstimatorEntry& entry);

struct Statistic {
  std::string name;
  double value = 0.0;
};

struct EstimatorSummary {
  EstimatorEntry entry;
  std::size_t R_effective = 0;
  std::size_t failures = 0;
  std::vector<Statistic> stats;

  /// Throws kInvalidParameter when absent.
  double get(const std::string& name) const;
  bool has(const std::string& name) const;
};

struct McCellResult {
  Cell cell;
  std::vector<EstimatorSummary> estimators;
  double wall_seconds = 0.0;
};

struct McResults {
  McDesign design;
  std::vector<McCellResult> cells;
};

/// Estimator replacement for tests: returns the estimate of `entry` on y.
using EstimatorOverride =
    std::function<double(std::span<const double> y, const EstimatorEntry& entry, const Cell& cell)>;

struct RunOptions {
  unsigned threads = 1;
  EstimatorOverride estimator_override;
};

/// Everything one replication produced for one estimator entry.
struct ReplicationValue {
  bool ok = false;
  double estimate = 0.0;
  bool has_hpd = false;
  Interval hpd;
  bool has_asymptotic = false;
  Interval asymptotic;
  StopReason reason = StopReason::kNone;
  std::size_t iterations = 0;
};

/// One replication of one cell, every estimator on the same simulated series.
std::vector<ReplicationValue> run_replication(const McDesign& design, const Cell& cell, std::size_t r,
                                              const GaussianSimulator& simulator,
                                              const RunOptions& options = {});

McResults run_design(const McDesign& design, const RunOptions& options = {});

/// One CSV record.
struct CsvRow {
  std::size_t T = 0;
  double d = 0.0;
  double phi = 0.0;
  std::string estimator;
  std::size_t P = 0;
  std::string correction;
  std::size_t K = 0;
  std::string statistic;
  double value = 0.0;
  std::size_t R_effective = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

inline constexpr const char* kCsvHeader = "T,d,phi,estimator,P,correction,K,statistic,value,R_effective,seed";

/// Rows in cell, estimator, statistic order; an empty filter keeps everything.
std::vector<CsvRow> to_rows(const McResults& results, const std::vector<std::string>& statistics = {});
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(std::istream& in);
/// Shortest text that parses back to the same double.
std::string format_number(double x);

/// Aligned blocks, one per (T, d, phi), estimators as rows.
void write_aligned(std::ostream& out, const McResults& results);

/// Writes results.csv, results.txt and timing.txt into dir.
void emit_tables(const McResults& results, const std::filesystem::path& dir);

}  // namespace lmboot
