#pragma once

// Periodic Cartesian grid over the flat torus [0, L)^n, axis 0 fastest.

#include <array>
#include <cstddef>
#include <vector>

namespace flowlab {

using Field = std::vector<double>;

struct SpatialGrid {
  int n = 2;
  int N = 64;
  double L = 1.0;

  // Throws ConfigError unless 1 ≤ n ≤ 3, N a power of two ≥ 32 and L > 0.
  void validate() const;
  std::size_t size() const;
  double dx() const { return L / N; }
  double cell_volume() const;
  // Chart coordinates of a flat index.
  std::array<double, 3> point(std::size_t idx) const;
  std::array<int, 3> multi_index(std::size_t idx) const;
  std::size_t flat(const std::array<int, 3>& m) const;
};

Field make_field(const SpatialGrid& grid, double value = 0.0);

// 4th-order periodic stencils; `out` must not alias `f`.
void grid_d1(const SpatialGrid& grid, const Field& f, Field& out, int axis);
void grid_d2(const SpatialGrid& grid, const Field& f, Field& out, int axis);
// Mixed ∂_a∂_b as d1 applied twice; `tmp` is scratch.
void grid_d11(const SpatialGrid& grid, const Field& f, Field& out, int a, int b, Field& tmp);

// Periodic rectangle rule.
double integrate(const SpatialGrid& grid, const Field& f);

// Shift a field by whole cells along every axis.
Field translate(const SpatialGrid& grid, const Field& f, const std::array<int, 3>& shift);

}  // namespace flowlab
