#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "errors.hpp"

namespace metalstm::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string format_report(const Report& r) {
  std::ostringstream os;
  const std::size_t n = r.taus.size();
  os << "# metalstm evaluation report\n";
  os << "format\t1\n";
  os << "suite\t" << r.suite_fingerprint << '\n';
  os << "checkpoint\t" << r.checkpoint_fingerprint << '\n';
  os << "datasets\t" << n << '\n';
  for (const auto& m : r.methods) os << "method\t" << m.name << '\t' << num(m.score.mu) << '\t' << num(m.score.sigma) << '\n';
  os << "table\tindex\ttau\tn";
  for (const auto& m : r.methods) os << '\t' << m.name;
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    os << i << '\t' << r.taus[i] << '\t' << r.lengths[i];
    for (const auto& m : r.methods) os << '\t' << num(m.score.per_dataset.at(i));
    os << '\n';
  }
  return os.str();
}

Report parse_report(const std::string& text) {
  Report r;
  std::istringstream is(text);
  std::string line;
  std::size_t datasets = 0;
  bool in_table = false;
  std::vector<std::vector<double>> columns;
  auto fail = [](const std::string& why) { throw std::runtime_error("report: " + why); };
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (!in_table) {
      if (f[0] == "format" && f.size() == 2 && f[1] != "1") fail("unsupported format " + f[1]);
      if (f[0] == "suite" && f.size() == 2) r.suite_fingerprint = f[1];
      if (f[0] == "checkpoint" && f.size() == 2) r.checkpoint_fingerprint = f[1];
      if (f[0] == "datasets" && f.size() == 2) datasets = std::stoull(f[1]);
      if (f[0] == "method") {
        if (f.size() != 4) fail("malformed method line");
        r.methods.push_back({f[1], SuiteScore{std::stod(f[2]), std::stod(f[3]), {}}});
      }
      if (f[0] == "table") {
        in_table = true;
        columns.resize(r.methods.size());
      }
      continue;
    }
    if (f.size() != 3 + r.methods.size()) fail("malformed table row");
    r.taus.push_back(std::stoull(f[1]));
    r.lengths.push_back(std::stoull(f[2]));
    for (std::size_t m = 0; m < r.methods.size(); ++m) r.methods[m].score.per_dataset.push_back(std::stod(f[3 + m]));
  }
  if (r.taus.size() != datasets) fail("table has " + std::to_string(r.taus.size()) + " rows, header says " + std::to_string(datasets));
  return r;
}

std::string format_table(const Report& r) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s", "");
  os << buf;
  for (const auto& m : r.methods) {
    std::snprintf(buf, sizeof buf, " %10s", m.name.c_str());
    os << buf;
  }
  os << '\n';
  for (int row = 0; row < 2; ++row) {
    std::snprintf(buf, sizeof buf, "%-10s", row == 0 ? "mu MCE" : "sigma MCE");
    os << buf;
    for (const auto& m : r.methods) {
      std::snprintf(buf, sizeof buf, " %10.3f", row == 0 ? m.score.mu : m.score.sigma);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

std::vector<double> read_external_scores(const std::string& path, std::size_t expected) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open external scores " + path);
  std::vector<double> scores(expected, NAN);
  std::vector<bool> seen(expected, false);
  std::string line;
  std::size_t lineno = 0, count = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    std::size_t idx = 0;
    double v = 0.0;
    try {
      if (f.size() != 2) throw std::invalid_argument("fields");
      std::size_t used = 0;
      idx = std::stoull(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument("index");
      v = std::stod(f[1], &used);
      if (used != f[1].size()) throw std::invalid_argument("mce");
    } catch (const std::exception&) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected `dataset_index<TAB>mce`");
    }
    if (idx >= expected) throw UsageError(path + ":" + std::to_string(lineno) + ": index " + std::to_string(idx) + " outside suite of " + std::to_string(expected));
    if (seen[idx]) throw UsageError(path + ":" + std::to_string(lineno) + ": duplicate index " + std::to_string(idx));
    if (!std::isfinite(v) || v < 0.0) throw UsageError(path + ":" + std::to_string(lineno) + ": mce must be finite and >= 0");
    seen[idx] = true;
    scores[idx] = v;
    ++count;
  }
  if (count != expected) {
    throw UsageError("external scores: " + std::to_string(count) + " entries for a suite of " + std::to_string(expected));
  }
  return scores;
}

}  // namespace metalstm::cli
