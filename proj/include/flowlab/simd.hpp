#pragma once

// Periodic 4th-order stencil kernels with a scalar reference and vector
// variants chosen at runtime. All variants evaluate the same expression tree,
// so their results agree bit for bit.

#include <cstddef>

namespace flowlab::simd {

enum class Isa { Scalar, Avx2, Neon };

Isa active_isa();
// Override the runtime choice; falls back to Scalar when unsupported.
void force_isa(Isa isa);
bool supported(Isa isa);
const char* isa_name(Isa isa);

// Fields live on an N^n grid with axis 0 fastest. h is the grid spacing.
//   d1 = (f[-2] - 8 f[-1] + 8 f[1] - f[2]) / (12 h)
//   d2 = (-f[-2] + 16 f[-1] - 30 f[0] + 16 f[1] - f[2]) / (12 h²)
void d1(const double* f, double* out, int n, int N, int axis, double h);
void d2(const double* f, double* out, int n, int N, int axis, double h);
// out = y + a x
void axpy(double a, const double* x, const double* y, double* out, std::size_t len);

namespace scalar {
void d1(const double* f, double* out, int n, int N, int axis, double h);
void d2(const double* f, double* out, int n, int N, int axis, double h);
void axpy(double a, const double* x, const double* y, double* out, std::size_t len);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define FLOWLAB_SIMD_X86 1
namespace avx2 {
void d1(const double* f, double* out, int n, int N, int axis, double h);
void d2(const double* f, double* out, int n, int N, int axis, double h);
void axpy(double a, const double* x, const double* y, double* out, std::size_t len);
}  // namespace avx2
#endif

#if defined(__aarch64__) && defined(__ARM_NEON)
#define FLOWLAB_SIMD_NEON 1
namespace neon {
void d1(const double* f, double* out, int n, int N, int axis, double h);
void d2(const double* f, double* out, int n, int N, int axis, double h);
void axpy(double a, const double* x, const double* y, double* out, std::size_t len);
}  // namespace neon
#endif

}  // namespace flowlab::simd
