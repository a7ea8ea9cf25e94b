#pragma once

#include <ostream>
#include <string>

namespace oracle {

struct OracleReport {
  std::string case_id;
  double max_abs_deviation = 0.0;
  double tolerance = 0.0;

  bool pass() const { return max_abs_deviation <= tolerance; }
};

inline std::ostream& operator<<(std::ostream& os, const OracleReport& r) {
  return os << r.case_id << ": max |dev| = " << r.max_abs_deviation << " (tol " << r.tolerance
            << ") " << (r.pass() ? "ok" : "FAIL");
}

}  // namespace oracle
