#pragma once

// Evaluation report: tab-separated key/value lines followed by a per-dataset
// table. Floats are written with 17 significant digits so every mu/sigma can
// be recomputed from the table.
//
//   # metalstm evaluation report
//   format          1
//   suite           <fingerprint>
//   checkpoint      <fingerprint>
//   datasets        <N>
//   method          <name>  <mu>  <sigma>     (one line per method)
//   table           index  tau  n  <method...>
//   <index>  <tau>  <n>  <mce...>             (N lines)

#include <iosfwd>
#include <string>
#include <vector>

#include "metalstm/baselines.hpp"

namespace metalstm::cli {

struct MethodScore {
  std::string name;
  SuiteScore score;
};

struct Report {
  std::string suite_fingerprint;
  std::string checkpoint_fingerprint;
  std::vector<std::size_t> taus;
  std::vector<std::size_t> lengths;
  std::vector<MethodScore> methods;
};

std::string format_report(const Report& report);
Report parse_report(const std::string& text);

/// mu/sigma table rounded to 3 decimals.
std::string format_table(const Report& report);

/// `dataset_index<TAB>mce` lines; every index in [0, expected) exactly once.
std::vector<double> read_external_scores(const std::string& path, std::size_t expected);

}  // namespace metalstm::cli
