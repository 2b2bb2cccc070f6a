#pragma once

#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

namespace gridrisk {

/// 12 significant digits, '.' decimal separator.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  std::string s = buf;
  if (s == "-0") s = "0";
  return s;
}

/// 1-based indices joined with ';'.
inline std::string format_index_list(const std::vector<std::size_t>& rows) {
  std::string out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k) out += ';';
    out += std::to_string(rows[k] + 1);
  }
  return out;
}

}  // namespace gridrisk
