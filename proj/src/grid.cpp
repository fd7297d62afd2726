#include "streamline/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace streamline {

GridSpec GridSpec::box(int dim, const Vec& lo, const Vec& hi, int cells_per_axis) {
  GridSpec g;
  g.dim = dim;
  g.lo = lo;
  g.hi = hi;
  for (int i = 0; i < dim; ++i) g.cells[i] = cells_per_axis;
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (dim < 1 || dim > max_dim) throw ConfigError("grid dimension must be in 1..4");
  for (int i = 0; i < dim; ++i) {
    if (!(lo[i] < hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
      throw ConfigError("grid: lo < hi required on axis " + std::to_string(i + 1));
    if (cells[i] < 2) throw ConfigError("grid: at least 2 cells per axis");
  }
}

double GridSpec::max_spacing() const {
  double h = 0.0;
  for (int i = 0; i < dim; ++i) h = std::max(h, spacing(i));
  return h;
}

std::size_t GridSpec::point_count() const {
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(nodes(i));
  return n;
}

std::size_t GridSpec::stride(int axis) const {
  std::size_t s = 1;
  for (int i = dim - 1; i > axis; --i) s *= static_cast<std::size_t>(nodes(i));
  return s;
}

std::array<int, max_dim> GridSpec::multi_index(std::size_t index) const {
  std::array<int, max_dim> m{};
  for (int i = dim - 1; i >= 0; --i) {
    const auto n = static_cast<std::size_t>(nodes(i));
    m[i] = static_cast<int>(index % n);
    index /= n;
  }
  return m;
}

std::size_t GridSpec::linear_index(const std::array<int, max_dim>& m) const {
  std::size_t index = 0;
  for (int i = 0; i < dim; ++i) index = index * static_cast<std::size_t>(nodes(i)) + m[i];
  return index;
}

Vec GridSpec::point(std::size_t index) const {
  const auto m = multi_index(index);
  Vec x{};
  for (int i = 0; i < dim; ++i)
    x[i] = m[i] == cells[i] ? hi[i] : lo[i] + m[i] * spacing(i);
  return x;
}

GridSpec GridSpec::refined(int factor) const {
  GridSpec g = *this;
  for (int i = 0; i < dim; ++i) g.cells[i] *= factor;
  return g;
}

}  // namespace streamline
