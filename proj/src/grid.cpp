#include "flowlab/grid.hpp"

#include <string>

#include "flowlab/errors.hpp"
#include "flowlab/simd.hpp"

namespace flowlab {

void SpatialGrid::validate() const {
  if (n < 1 || n > 3) throw ConfigError("grid dimension n must lie in 1..3, got " + std::to_string(n));
  if (N < 32 || (N & (N - 1)) != 0)
    throw ConfigError("grid.N must be a power of two >= 32, got " + std::to_string(N));
  if (!(L > 0.0)) throw ConfigError("grid.L must be positive");
}

std::size_t SpatialGrid::size() const {
  std::size_t s = 1;
  for (int i = 0; i < n; ++i) s *= static_cast<std::size_t>(N);
  return s;
}

double SpatialGrid::cell_volume() const {
  double v = 1.0;
  for (int i = 0; i < n; ++i) v *= dx();
  return v;
}

std::array<int, 3> SpatialGrid::multi_index(std::size_t idx) const {
  std::array<int, 3> m{0, 0, 0};
  for (int i = 0; i < n; ++i) {
    m[i] = static_cast<int>(idx % N);
    idx /= N;
  }
  return m;
}

std::size_t SpatialGrid::flat(const std::array<int, 3>& m) const {
  std::size_t idx = 0;
  for (int i = n - 1; i >= 0; --i) idx = idx * N + static_cast<std::size_t>(((m[i] % N) + N) % N);
  return idx;
}

std::array<double, 3> SpatialGrid::point(std::size_t idx) const {
  const auto m = multi_index(idx);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int i = 0; i < n; ++i) x[i] = m[i] * dx();
  return x;
}

Field make_field(const SpatialGrid& grid, double value) { return Field(grid.size(), value); }

void grid_d1(const SpatialGrid& grid, const Field& f, Field& out, int axis) {
  out.resize(f.size());
  simd::d1(f.data(), out.data(), grid.n, grid.N, axis, grid.dx());
}

void grid_d2(const SpatialGrid& grid, const Field& f, Field& out, int axis) {
  out.resize(f.size());
  simd::d2(f.data(), out.data(), grid.n, grid.N, axis, grid.dx());
}

void grid_d11(const SpatialGrid& grid, const Field& f, Field& out, int a, int b, Field& tmp) {
  if (a == b) {
    grid_d2(grid, f, out, a);
    return;
  }
  grid_d1(grid, f, tmp, a);
  grid_d1(grid, tmp, out, b);
}

double integrate(const SpatialGrid& grid, const Field& f) {
  double s = 0.0;
  for (double x : f) s += x;
  return s * grid.cell_volume();
}

Field translate(const SpatialGrid& grid, const Field& f, const std::array<int, 3>& shift) {
  Field out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto m = grid.multi_index(i);
    for (int a = 0; a < grid.n; ++a) m[a] += shift[a];
    out[grid.flat(m)] = f[i];
  }
  return out;
}

}  // namespace flowlab
