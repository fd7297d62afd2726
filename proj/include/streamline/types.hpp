#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace streamline {

inline constexpr int max_dim = 4;

using Vec = std::array<double, max_dim>;
using Mat = std::array<Vec, max_dim>;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct RangeError : std::range_error {
  using std::range_error::range_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double dot(const Vec& a, const Vec& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a, int n) { return dot(a, a, n); }

}  // namespace streamline
