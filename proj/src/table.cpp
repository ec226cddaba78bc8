#include <algorithm>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "trean/experiments.hpp"

namespace trean::exp {

namespace {

std::string format(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  std::ostringstream os;
  os << std::setprecision(10) << std::get<double>(c);
  return os.str();
}

double as_number(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  throw std::invalid_argument("cell is not numeric");
}

}  // namespace

Stat describe(const std::vector<double>& v) {
  Stat s;
  s.count = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::out_of_range("no column '" + name + "' in " + schema);
}

double Table::number(std::size_t row, const std::string& col) const { return as_number(rows.at(row)[column(col)]); }

std::string Table::text(std::size_t row, const std::string& col) const { return format(rows.at(row)[column(col)]); }

std::string Table::csv() const {
  std::ostringstream os;
  os << "# " << schema << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format(r[i]);
    os << "\n";
  }
  return os.str();
}

std::map<std::string, Stat> Table::stats(const std::vector<std::string>& keys, const std::string& metric) const {
  std::vector<std::size_t> idx;
  for (const auto& k : keys) idx.push_back(column(k));
  const auto m = column(metric);
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : rows) {
    std::string key;
    for (std::size_t i = 0; i < idx.size(); ++i) key += (i ? "|" : "") + format(r[idx[i]]);
    groups[key].push_back(as_number(r[m]));
  }
  std::map<std::string, Stat> out;
  for (const auto& [k, v] : groups) out[k] = describe(v);
  return out;
}

std::string Table::summary_json(const std::vector<std::string>& keys) const {
  nlohmann::ordered_json doc;
  doc["schema"] = schema;
  doc["keys"] = keys;
  nlohmann::ordered_json groups = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] == "rep" || std::find(keys.begin(), keys.end(), columns[c]) != keys.end()) continue;
    if (rows.empty() || std::holds_alternative<std::string>(rows.front()[c])) continue;
    for (const auto& [k, s] : stats(keys, columns[c])) {
      groups[k][columns[c]] = {{"mean", s.mean}, {"stddev", s.stddev}, {"n", s.count}};
    }
  }
  doc["groups"] = groups;
  return doc.dump(2) + "\n";
}

}  // namespace trean::exp
