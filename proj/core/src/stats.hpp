#pragma once

#include <algorithm>
#include <vector>

namespace urlearn::detail {

/// Median with the even-count convention of averaging the two middle values.
/// Takes its argument by value; returns 0 for an empty sample.
inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace urlearn::detail
