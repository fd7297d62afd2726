#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "streamline/types.hpp"

namespace streamline {

// Uniform node grid on a box: cells[i] + 1 nodes per axis, last axis fastest.
struct GridSpec {
  int dim = 2;
  Vec lo{};
  Vec hi{};
  std::array<int, max_dim> cells{};

  static GridSpec box(int dim, const Vec& lo, const Vec& hi, int cells_per_axis);

  void validate() const;
  double spacing(int axis) const { return (hi[axis] - lo[axis]) / cells[axis]; }
  double max_spacing() const;
  int nodes(int axis) const { return cells[axis] + 1; }
  std::size_t point_count() const;
  std::array<int, max_dim> multi_index(std::size_t index) const;
  std::size_t linear_index(const std::array<int, max_dim>& m) const;
  Vec point(std::size_t index) const;
  std::size_t stride(int axis) const;
  // Same box, cells multiplied by factor.
  GridSpec refined(int factor) const;
};

}  // namespace streamline
