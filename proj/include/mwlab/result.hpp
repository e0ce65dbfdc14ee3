// Experiment results: named scalars, verdicts, tables and notes, with JSON and
// CSV emission.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mwlab {

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) { rows.push_back(std::move(row)); }
  /// Header line plus one line per row, numbers printed with %.17g.
  std::string csv() const;
};

/// A pass/fail check: passed iff the stated comparison of `value` against
/// `threshold` (widened by the Monte Carlo `band`) holds. Informational
/// verdicts are reported but never gate a run.
struct Verdict {
  std::string name;
  bool passed = false;
  double value = 0;
  double threshold = 0;
  double band = 0;
  bool informational = false;
  std::string detail;
};

struct ExperimentResult {
  std::string name;
  std::uint64_t seed = 0;
  std::uint64_t stream_begin = 0;
  std::uint64_t stream_end = 0;  ///< exclusive
  std::map<std::string, double> scalars;
  std::vector<Verdict> verdicts;
  std::vector<Table> tables;
  std::vector<std::string> notes;

  double scalar(const std::string& key) const;
  const Table& table(const std::string& table_name) const;
  const Verdict& verdict(const std::string& verdict_name) const;
  /// True when every non-informational verdict passed.
  bool passed() const;

  Verdict& add_verdict(std::string verdict_name, bool ok, double value, double threshold, double band = 0,
                       std::string detail = {});
  nlohmann::ordered_json to_json() const;
};

}  // namespace mwlab
