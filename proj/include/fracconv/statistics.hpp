#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "fracconv/grid.hpp"

namespace fracconv {

// Monte Carlo estimate with its standard error over independent members.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

// Sample mean and member-level standard error sqrt(var / N); zero stderr
// for a single member.
inline Estimate mean_and_stderr(std::span<const double> v) {
  Estimate e;
  e.count = v.size();
  if (v.empty()) return e;
  const double n = static_cast<double>(v.size());
  e.value = pairwise_sum(v) / n;
  if (v.size() < 2) return e;
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - e.value) * (v[i] - e.value);
  e.std_error = std::sqrt(pairwise_sum(dev) / (n - 1.0) / n);
  return e;
}

inline double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace fracconv
