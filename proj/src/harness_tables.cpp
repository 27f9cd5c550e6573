#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "lmboot/error.hpp"
#include "lmboot/harness.hpp"

namespace lmboot {
namespace {

template <class T>
T parse_field(const std::string& text, std::size_t line, const char* name) {
  T x{};
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, x);
  if (text.empty() || r.ec != std::errc{} || r.ptr != end) {
    fail(ErrorKind::kIo, "csv line " + std::to_string(line) + ": bad " + name + " '" + text + "'");
  }
  return x;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<CsvRow> to_rows(const McResults& results, const std::vector<std::string>& statistics) {
  const std::set<std::string> keep(statistics.begin(), statistics.end());
  std::vector<CsvRow> rows;
  for (const auto& cell : results.cells) {
    for (const auto& est : cell.estimators) {
      for (const auto& stat : est.stats) {
        if (!keep.empty() && keep.count(stat.name) == 0) continue;
        CsvRow row;
        row.T = cell.cell.T;
        row.d = cell.cell.d;
        row.phi = cell.cell.phi;
        row.estimator = est.entry.family_name();
        row.P = est.entry.mle ? 0 : est.entry.P;
        row.correction = to_string(est.entry.correction);
        row.K = est.entry.correction == Correction::kBba ? est.entry.K : 0;
        row.statistic = stat.name;
        row.value = stat.value;
        row.R_effective = est.R_effective;
        row.seed = results.design.seed;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.T << ',' << format_number(r.d) << ',' << format_number(r.phi) << ',' << r.estimator << ','
        << r.P << ',' << r.correction << ',' << r.K << ',' << r.statistic << ',' << format_number(r.value)
        << ',' << r.R_effective << ',' << r.seed << '\n';
  }
}

std::vector<CsvRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) fail(ErrorKind::kIo, "csv header mismatch");
  std::vector<CsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 11) fail(ErrorKind::kIo, "csv line " + std::to_string(lineno) + ": expected 11 fields");
    CsvRow r;
    r.T = parse_field<std::size_t>(f[0], lineno, "T");
    r.d = parse_field<double>(f[1], lineno, "d");
    r.phi = parse_field<double>(f[2], lineno, "phi");
    r.estimator = f[3];
    r.P = parse_field<std::size_t>(f[4], lineno, "P");
    r.correction = f[5];
    r.K = parse_field<std::size_t>(f[6], lineno, "K");
    r.statistic = f[7];
    r.value = parse_field<double>(f[8], lineno, "value");
    r.R_effective = parse_field<std::size_t>(f[9], lineno, "R_effective");
    r.seed = parse_field<std::uint64_t>(f[10], lineno, "seed");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_aligned(std::ostream& out, const McResults& results) {
  const auto& design = results.design;
  out << "R = " << design.R << ", B = " << design.B << ", bootstrap " << to_string(design.mode)
      << ", innovations " << to_string(design.law) << ", seed " << design.seed << "\n";
  for (const auto& cell : results.cells) {
    std::vector<std::string> columns;
    for (const auto& est : cell.estimators) {
      for (const auto& s : est.stats) {
        if (std::find(columns.begin(), columns.end(), s.name) == columns.end()) columns.push_back(s.name);
      }
    }
    out << "\nT = " << cell.cell.T << "  d = " << format_number(cell.cell.d)
        << "  phi = " << format_number(cell.cell.phi) << "\n";
    out << std::left << std::setw(16) << "estimator" << std::right << std::setw(6) << "R";
    for (const auto& c : columns) out << std::setw(16) << c;
    out << '\n';
    for (const auto& est : cell.estimators) {
      out << std::left << std::setw(16) << est.entry.label() << std::right << std::setw(6) << est.R_effective;
      for (const auto& c : columns) {
        if (est.has(c)) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.4f", est.get(c));
          out << std::setw(16) << buf;
        } else {
          out << std::setw(16) << "-";
        }
      }
      out << '\n';
    }
  }
}

void emit_tables(const McResults& results, const std::filesystem::path& dir) {
  if (results.cells.empty()) fail(ErrorKind::kInvalidParameter, "no results to emit");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());

  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) fail(ErrorKind::kIo, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("results.csv");
    write_csv(f, to_rows(results));
    if (!f) fail(ErrorKind::kIo, "write failed for results.csv");
  }
  {
    auto f = open("results.txt");
    write_aligned(f, results);
    if (!f) fail(ErrorKind::kIo, "write failed for results.txt");
  }
  {
    auto f = open("timing.txt");
    f << "T,d,phi,seconds\n";
    for (const auto& c : results.cells) {
      f << c.cell.T << ',' << format_number(c.cell.d) << ',' << format_number(c.cell.phi) << ','
        << std::fixed << std::setprecision(3) << c.wall_seconds << std::defaultfloat << '\n';
    }
    if (!f) fail(ErrorKind::kIo, "write failed for timing.txt");
  }
}

}  // namespace lmboot
