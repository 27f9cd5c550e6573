#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "lmboot/error.hpp"
#include "lmboot/harness.hpp"

namespace lmboot {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::kInvalidDesign, what); }

double parse_double(const std::string& key, const std::string& text) {
  double x = 0.0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, x);
  if (text.empty() || r.ec != std::errc{} || r.ptr != end) {
    bad("'" + key + "': expected a number, got '" + text + "'");
  }
  return x;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t x = 0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, x);
  if (text.empty() || r.ec != std::errc{} || r.ptr != end) {
    bad("'" + key + "': expected a non-negative integer, got '" + text + "'");
  }
  return x;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto t = lower(text);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  bad("'" + key + "': expected true or false, got '" + text + "'");
}

template <class Fn>
auto parse_list(const std::string& key, const std::string& text, Fn&& one) {
  std::vector<decltype(one(key, std::string{}))> out;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) bad("'" + key + "': empty list item");
    out.push_back(one(key, item));
  }
  if (out.empty()) bad("'" + key + "': empty list");
  return out;
}

}  // namespace

std::string to_string(Correction c) {
  switch (c) {
    case Correction::kNone: return "none";
    case Correction::kBba: return "bba";
    case Correction::kSsr: return "ssr";
  }
  return "none";
}

EstimatorEntry EstimatorEntry::parse(const std::string& text) {
  const auto parts = split(trim(text), ':');
  EstimatorEntry e;
  if (parts.size() == 1 && lower(parts[0]) == "mle") {
    e.mle = true;
    return e;
  }
  if (parts.size() < 2 || parts.size() > 4) bad("estimator '" + text + "': expected FAMILY:P[:CORRECTION[:K]]");
  try {
    e.family = parse_family(parts[0]);
  } catch (const Error&) {
    bad("estimator '" + text + "': unknown family");
  }
  e.P = static_cast<std::size_t>(parse_unsigned("estimators", parts[1]));
  const std::string corr = parts.size() >= 3 ? lower(parts[2]) : "none";
  if (corr == "none") {
    e.correction = Correction::kNone;
  } else if (corr == "bba") {
    e.correction = Correction::kBba;
    e.K = parts.size() == 4 ? static_cast<std::size_t>(parse_unsigned("estimators", parts[3])) : 1;
    if (e.K == 0) bad("estimator '" + text + "': BBA needs K >= 1");
    return e;
  } else if (corr == "ssr") {
    e.correction = Correction::kSsr;
  } else {
    bad("estimator '" + text + "': unknown correction '" + parts[2] + "'");
  }
  if (parts.size() == 4) bad("estimator '" + text + "': K applies to bba only");
  return e;
}

std::string EstimatorEntry::family_name() const {
  if (mle) return "MLE";
  return family == Family::kLpr ? "LPR" : "SPLW";
}

std::string EstimatorEntry::label() const {
  if (mle) return "MLE";
  std::string s = family_name() + "(" + std::to_string(P) + ")";
  if (correction == Correction::kBba) s += "-BBA(" + std::to_string(K) + ")";
  if (correction == Correction::kSsr) s += "-SSR";
  return s;
}

bool EstimatorEntry::needs_bootstrap(bool hpd) const {
  if (mle) return false;
  return correction != Correction::kNone || hpd;
}

void McDesign::validate() const {
  if (d_values.empty() || phi_values.empty() || T_values.empty()) bad("d, phi and T grids must be non-empty");
  for (double d : d_values) {
    if (!(d > -0.5 && d < 0.5)) bad("d values must lie in (-0.5, 0.5)");
  }
  for (double p : phi_values) {
    if (!(std::abs(p) < 1.0)) bad("phi values must satisfy |phi| < 1");
  }
  for (auto T : T_values) {
    if (T < 20) bad("T values must be at least 20");
  }
  if (R < 1) bad("R must be at least 1");
  if (estimators.empty()) bad("no estimators requested");
  if (max_iter < 1) bad("max_iter must be at least 1");
  if (!(bandwidth_exponent > 0.0 && bandwidth_exponent < 1.0)) bad("bandwidth_exp must lie in (0, 1)");
  if (!(alpha_lower >= 0.0 && alpha_upper >= 0.0 && alpha_lower + alpha_upper < 1.0)) {
    bad("HPD tail masses must be non-negative and sum below 1");
  }
  if (law.kind == InnovationLaw::Kind::kStudentT && !(law.dof > 2.0)) bad("student-t dof must exceed 2");
  std::set<std::string> seen;
  bool boot = false;
  bool interval = false;
  for (const auto& e : estimators) {
    if (!seen.insert(e.label()).second) bad("duplicate estimator " + e.label());
    if (!e.mle && e.P > 3) bad("estimator " + e.label() + ": P must be at most 3");
    boot = boot || e.needs_bootstrap(hpd);
    interval = interval || (!e.mle && hpd && e.correction == Correction::kNone);
  }
  if (boot && B < 2) bad("B must be at least 2");
  if (interval && B < 10) bad("HPD intervals need B >= 10");
}

std::size_t McDesign::cell_count() const noexcept {
  return T_values.size() * d_values.size() * phi_values.size();
}

Cell McDesign::cell(std::size_t index) const {
  if (index >= cell_count()) fail(ErrorKind::kInvalidParameter, "cell index out of range");
  const std::size_t nphi = phi_values.size();
  const std::size_t nd = d_values.size();
  Cell c;
  c.index = index;
  c.phi = phi_values[index % nphi];
  c.d = d_values[(index / nphi) % nd];
  c.T = T_values[index / (nphi * nd)];
  return c;
}

EstimatorSpec McDesign::spec_for(const EstimatorEntry& entry) const {
  EstimatorSpec s;
  s.family = entry.family;
  s.P = entry.P;
  s.bandwidth_exponent = bandwidth_exponent;
  return s;
}

McDesign parse_design(std::istream& in) {
  McDesign design;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) bad("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");

    if (key == "d") {
      design.d_values = parse_list(key, value, parse_double);
    } else if (key == "phi") {
      design.phi_values = parse_list(key, value, parse_double);
    } else if (key == "t") {
      design.T_values = parse_list(key, value, [](const std::string& k, const std::string& v) {
        return static_cast<std::size_t>(parse_unsigned(k, v));
      });
    } else if (key == "r") {
      design.R = static_cast<std::size_t>(parse_unsigned(key, value));
    } else if (key == "b") {
      design.B = static_cast<std::size_t>(parse_unsigned(key, value));
    } else if (key == "mode") {
      try {
        design.mode = parse_innovation_mode(value);
      } catch (const Error& e) {
        bad(e.what());
      }
    } else if (key == "law") {
      try {
        design.law = parse_innovation_law(value);
      } catch (const Error& e) {
        bad(e.what());
      }
    } else if (key == "seed") {
      design.seed = parse_unsigned(key, value);
    } else if (key == "estimators") {
      design.estimators = parse_list(key, value, [](const std::string&, const std::string& v) {
        return EstimatorEntry::parse(v);
      });
    } else if (key == "max_iter") {
      design.max_iter = static_cast<std::size_t>(parse_unsigned(key, value));
    } else if (key == "bandwidth_exp") {
      design.bandwidth_exponent = parse_double(key, value);
    } else if (key == "hpd") {
      design.hpd = parse_bool(key, value);
    } else if (key == "alpha_lower") {
      design.alpha_lower = parse_double(key, value);
    } else if (key == "alpha_upper") {
      design.alpha_upper = parse_double(key, value);
    } else if (key == "stop_estimate") {
      const auto v = lower(value);
      if (v == "updated") {
        design.on_stop = StopEstimate::kUpdated;
      } else if (v == "current") {
        design.on_stop = StopEstimate::kCurrent;
      } else {
        bad("'stop_estimate': expected updated or current");
      }
    } else if (key == "mle_grid_step") {
      design.mle.grid_step = parse_double(key, value);
    } else {
      bad("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  design.validate();
  return design;
}

McDesign parse_design_text(const std::string& text) {
  std::istringstream in(text);
  return parse_design(in);
}

McDesign load_design(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read design file " + path.string());
  return parse_design(in);
}

RngStream replication_stream(std::uint64_t master_seed, std::size_t cell_index, std::size_t r) {
  return RngStream(master_seed).fork(RngStream::Tag::kCell, cell_index).fork(RngStream::Tag::kReplication, r);
}

}  // namespace lmboot
