#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "spde/cli.hpp"

namespace spde::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool skip(const std::string& t) { return t.empty() || t[0] == '#'; }

}  // namespace

int CsvTable::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const int j = index_of(name);
  if (j < 0) throw CsvError("missing column '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!skip(trim(line))) break;
  }
  if (trim(line).empty() || skip(trim(line))) throw CsvError(source + ": missing header row");
  t.header = split(trim(line));
  std::set<std::string> seen;
  for (const auto& h : t.header) {
    if (h.empty()) throw CsvError(source + ":" + std::to_string(lineno) + ": empty column name");
    if (!seen.insert(h).second) {
      throw CsvError(source + ":" + std::to_string(lineno) + ": duplicate column '" + h + "'");
    }
  }
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (skip(s)) continue;
    const auto fields = split(s);
    if (fields.size() != t.header.size()) {
      throw CsvError(source + ":" + std::to_string(lineno) + ": expected " +
                     std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const char* begin = fields[j].c_str();
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(begin, &end);
      if (fields[j].empty() || end != begin + fields[j].size() || errno == ERANGE || !std::isfinite(v)) {
        throw CsvError(source + ":" + std::to_string(lineno) + ": field '" + t.header[j] +
                       "' is not a finite number: '" + fields[j] + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
    t.line_numbers.push_back(lineno);
  }
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  return read_csv(in, path);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace spde::cli
