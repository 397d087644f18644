// CSV dataset ingestion. Expected header: area_id, y, x1..xp, then either a
// single D column or replicate columns z1..zk. Loaded records get a leading
// intercept covariate; the file never stores it.
#ifndef PTFH_DATASET_HPP
#define PTFH_DATASET_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "ptfh/estimation.hpp"

namespace ptfh {

struct Dataset {
  std::vector<std::string> columns;  // header as read
  std::vector<AreaRecord> records;   // x = {1, x1..xp}
  int n_x = 0;
  int n_z = 0;
  bool has_d = false;

  bool operator==(const Dataset&) const = default;
};

// Strict parse: rejects unknown or misordered columns, missing values,
// non-positive y/D/z, and the presence of both D and z columns. Errors carry
// the offending data row (1-based) or column name.
Dataset parse_dataset(std::istream& in);
Dataset parse_dataset_file(const std::string& path);

void emit_dataset(const Dataset& dataset, std::ostream& out);

}  // namespace ptfh

#endif
