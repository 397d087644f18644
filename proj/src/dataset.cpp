#include "ptfh/dataset.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ptfh/report_io.hpp"

namespace ptfh {

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw std::domain_error("dataset: " + message);
}

// Splits one CSV line; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      if (!field.empty()) {
        fail("line " + std::to_string(line_no) + ": stray quote");
      }
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) fail("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(field);
  return fields;
}

double parse_number(const std::string& field, int row, const std::string& column) {
  if (field.empty()) {
    fail("data row " + std::to_string(row) + ", column " + column +
         ": missing value");
  }
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE) {
    fail("data row " + std::to_string(row) + ", column " + column +
         ": malformed number '" + field + "'");
  }
  return v;
}

// Checks that names form prefix1..prefixN in order; returns N (0 if absent).
int count_indexed(const std::vector<std::string>& columns, std::size_t start,
                  const std::string& prefix) {
  int n = 0;
  for (std::size_t i = start; i < columns.size(); ++i) {
    const std::string expected = prefix + std::to_string(n + 1);
    if (columns[i] != expected) break;
    ++n;
  }
  return n;
}

}  // namespace

Dataset parse_dataset(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) fail("empty file");

  Dataset ds;
  ds.columns = split_csv_line(lines[0], 1);
  {
    std::set<std::string> seen;
    for (const auto& name : ds.columns) {
      if (!seen.insert(name).second) fail("duplicate column '" + name + "'");
    }
  }
  if (ds.columns.size() < 3 || ds.columns[0] != "area_id" || ds.columns[1] != "y") {
    fail("header must start with area_id, y");
  }
  ds.n_x = count_indexed(ds.columns, 2, "x");
  if (ds.n_x == 0) fail("no covariate columns x1..xp after y");
  std::size_t pos = 2 + static_cast<std::size_t>(ds.n_x);
  if (pos < ds.columns.size() && ds.columns[pos] == "D") {
    ds.has_d = true;
    ++pos;
  }
  ds.n_z = count_indexed(ds.columns, pos, "z");
  pos += static_cast<std::size_t>(ds.n_z);
  if (pos != ds.columns.size()) {
    fail("unrecognized column '" + ds.columns[pos] + "'");
  }
  if (ds.has_d && ds.n_z > 0) {
    fail("columns D and z1..z" + std::to_string(ds.n_z) +
         " are both present; exactly one variance source is allowed");
  }
  if (!ds.has_d && ds.n_z == 0) {
    fail("neither a D column nor z1..zk replicate columns present");
  }
  if (ds.n_z == 1) fail("a single replicate column cannot give a variance");

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const int row = static_cast<int>(li);  // 1-based data row
    if (lines[li].empty()) {
      fail("data row " + std::to_string(row) + ": empty line");
    }
    const std::vector<std::string> fields = split_csv_line(lines[li], row + 1);
    if (fields.size() != ds.columns.size()) {
      fail("data row " + std::to_string(row) + ": expected " +
           std::to_string(ds.columns.size()) + " fields, got " +
           std::to_string(fields.size()));
    }
    AreaRecord rec;
    rec.area_id = fields[0];
    if (rec.area_id.empty()) {
      fail("data row " + std::to_string(row) + ": empty area_id");
    }
    rec.y = parse_number(fields[1], row, "y");
    if (rec.y <= 0.0) {
      fail("data row " + std::to_string(row) + ": y must be positive");
    }
    rec.x.push_back(1.0);  // intercept
    for (int j = 0; j < ds.n_x; ++j) {
      const auto ci = 2 + static_cast<std::size_t>(j);
      rec.x.push_back(parse_number(fields[ci], row, ds.columns[ci]));
    }
    std::size_t ci = 2 + static_cast<std::size_t>(ds.n_x);
    if (ds.has_d) {
      const double d = parse_number(fields[ci], row, "D");
      if (d <= 0.0) {
        fail("data row " + std::to_string(row) + ": D must be positive");
      }
      rec.D = d;
      ++ci;
    }
    for (int j = 0; j < ds.n_z; ++j, ++ci) {
      const double z = parse_number(fields[ci], row, ds.columns[ci]);
      if (z <= 0.0) {
        fail("data row " + std::to_string(row) + ": " + ds.columns[ci] +
             " must be positive");
      }
      rec.replicates.push_back(z);
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) fail("no data rows");
  return ds;
}

Dataset parse_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  return parse_dataset(in);
}

void emit_dataset(const Dataset& dataset, std::ostream& out) {
  for (std::size_t i = 0; i < dataset.columns.size(); ++i) {
    if (i) out << ',';
    out << dataset.columns[i];
  }
  out << '\n';
  for (const AreaRecord& rec : dataset.records) {
    out << csv_escape(rec.area_id) << ',' << fmt_g17(rec.y);
    for (std::size_t j = 1; j < rec.x.size(); ++j) out << ',' << fmt_g17(rec.x[j]);
    if (rec.D.has_value()) out << ',' << fmt_g17(*rec.D);
    for (double z : rec.replicates) out << ',' << fmt_g17(z);
    out << '\n';
  }
}

}  // namespace ptfh
