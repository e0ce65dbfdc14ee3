#include "mwlab/result.hpp"

#include "mwlab/core.hpp"

#include <cstdio>

namespace mwlab {

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string Table::csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_number(row[c]);
    out += '\n';
  }
  return out;
}

double ExperimentResult::scalar(const std::string& key) const {
  const auto it = scalars.find(key);
  if (it == scalars.end()) throw InvalidArgument(name + ": no scalar named " + key);
  return it->second;
}

const Table& ExperimentResult::table(const std::string& table_name) const {
  for (const auto& t : tables)
    if (t.name == table_name) return t;
  throw InvalidArgument(name + ": no table named " + table_name);
}

const Verdict& ExperimentResult::verdict(const std::string& verdict_name) const {
  for (const auto& v : verdicts)
    if (v.name == verdict_name) return v;
  throw InvalidArgument(name + ": no verdict named " + verdict_name);
}

bool ExperimentResult::passed() const {
  for (const auto& v : verdicts)
    if (!v.informational && !v.passed) return false;
  return true;
}

Verdict& ExperimentResult::add_verdict(std::string verdict_name, bool ok, double value, double threshold, double band,
                                       std::string detail) {
  verdicts.push_back({std::move(verdict_name), ok, value, threshold, band, false, std::move(detail)});
  return verdicts.back();
}

nlohmann::ordered_json ExperimentResult::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = name;
  j["seed"] = seed;
  j["streams"] = {stream_begin, stream_end};
  j["passed"] = passed();
  auto& s = j["scalars"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : scalars) s[k] = v;
  auto& vs = j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : verdicts) {
    vs.push_back({{"name", v.name},
                  {"passed", v.passed},
                  {"value", v.value},
                  {"threshold", v.threshold},
                  {"band", v.band},
                  {"informational", v.informational},
                  {"detail", v.detail}});
  }
  auto& ts = j["tables"] = nlohmann::ordered_json::object();
  for (const auto& t : tables) ts[t.name] = {{"file", t.name + ".csv"}, {"columns", t.columns}, {"rows", t.rows.size()}};
  j["notes"] = notes;
  return j;
}

}  // namespace mwlab
