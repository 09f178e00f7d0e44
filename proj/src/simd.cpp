#include "flowlab/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#if defined(FLOWLAB_SIMD_X86)
#include <immintrin.h>
#endif
#if defined(FLOWLAB_SIMD_NEON)
#include <arm_neon.h>
#endif

namespace flowlab::simd {

namespace {

std::size_t ipow(int N, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(N);
  return r;
}

inline int wrap(int j, int N) { return (j % N + N) % N; }

inline double d1_expr(double m2, double m1, double p1, double p2, double c) {
  return ((m2 - p2) + 8.0 * (p1 - m1)) * c;
}
inline double d2_expr(double m2, double m1, double z, double p1, double p2, double c) {
  return ((16.0 * (m1 + p1) - (m2 + p2)) - 30.0 * z) * c;
}

}  // namespace

// ─── Scalar reference ───────────────────────────────────────────────

void scalar::d1(const double* f, double* out, int n, int N, int axis, double h) {
  const double c = 1.0 / (12.0 * h);
  const std::size_t s = ipow(N, axis), B = s * N, total = ipow(N, n);
  for (std::size_t b = 0; b < total; b += B)
    for (int j = 0; j < N; ++j) {
      const double* m2 = f + b + wrap(j - 2, N) * s;
      const double* m1 = f + b + wrap(j - 1, N) * s;
      const double* p1 = f + b + wrap(j + 1, N) * s;
      const double* p2 = f + b + wrap(j + 2, N) * s;
      double* o = out + b + j * s;
      for (std::size_t k = 0; k < s; ++k) o[k] = d1_expr(m2[k], m1[k], p1[k], p2[k], c);
    }
}

void scalar::d2(const double* f, double* out, int n, int N, int axis, double h) {
  const double c = 1.0 / (12.0 * h * h);
  const std::size_t s = ipow(N, axis), B = s * N, total = ipow(N, n);
  for (std::size_t b = 0; b < total; b += B)
    for (int j = 0; j < N; ++j) {
      const double* m2 = f + b + wrap(j - 2, N) * s;
      const double* m1 = f + b + wrap(j - 1, N) * s;
      const double* z = f + b + j * s;
      const double* p1 = f + b + wrap(j + 1, N) * s;
      const double* p2 = f + b + wrap(j + 2, N) * s;
      double* o = out + b + j * s;
      for (std::size_t k = 0; k < s; ++k) o[k] = d2_expr(m2[k], m1[k], z[k], p1[k], p2[k], c);
    }
}

void scalar::axpy(double a, const double* x, const double* y, double* out, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) out[i] = y[i] + a * x[i];
}

// ─── AVX2 ───────────────────────────────────────────────────────────

#if defined(FLOWLAB_SIMD_X86)

namespace {

__attribute__((target("avx2"))) inline __m256d d1_vec(__m256d m2, __m256d m1, __m256d p1,
                                                      __m256d p2, __m256d c) {
  const __m256d eight = _mm256_set1_pd(8.0);
  return _mm256_mul_pd(
      _mm256_add_pd(_mm256_sub_pd(m2, p2), _mm256_mul_pd(eight, _mm256_sub_pd(p1, m1))), c);
}

__attribute__((target("avx2"))) inline __m256d d2_vec(__m256d m2, __m256d m1, __m256d z,
                                                      __m256d p1, __m256d p2, __m256d c) {
  const __m256d sixteen = _mm256_set1_pd(16.0), thirty = _mm256_set1_pd(30.0);
  const __m256d a = _mm256_sub_pd(_mm256_mul_pd(sixteen, _mm256_add_pd(m1, p1)),
                                  _mm256_add_pd(m2, p2));
  return _mm256_mul_pd(_mm256_sub_pd(a, _mm256_mul_pd(thirty, z)), c);
}

}  // namespace

__attribute__((target("avx2"))) void avx2::d1(const double* f, double* out, int n, int N,
                                              int axis, double h) {
  const double cs = 1.0 / (12.0 * h);
  const __m256d c = _mm256_set1_pd(cs);
  const std::size_t s = ipow(N, axis), B = s * N, total = ipow(N, n);
  if (axis == 0) {
    for (std::size_t b = 0; b < total; b += B) {
      const double* r = f + b;
      double* o = out + b;
      for (int j : {0, 1, N - 2, N - 1})
        o[j] = d1_expr(r[wrap(j - 2, N)], r[wrap(j - 1, N)], r[wrap(j + 1, N)],
                       r[wrap(j + 2, N)], cs);
      int j = 2;
      for (; j + 4 <= N - 2; j += 4)
        _mm256_storeu_pd(o + j, d1_vec(_mm256_loadu_pd(r + j - 2), _mm256_loadu_pd(r + j - 1),
                                       _mm256_loadu_pd(r + j + 1), _mm256_loadu_pd(r + j + 2), c));
      for (; j < N - 2; ++j) o[j] = d1_expr(r[j - 2], r[j - 1], r[j + 1], r[j + 2], cs);
    }
    return;
  }
  for (std::size_t b = 0; b < total; b += B)
    for (int j = 0; j < N; ++j) {
      const double* m2 = f + b + wrap(j - 2, N) * s;
      const double* m1 = f + b + wrap(j - 1, N) * s;
      const double* p1 = f + b + wrap(j + 1, N) * s;
      const double* p2 = f + b + wrap(j + 2, N) * s;
      double* o = out + b + j * s;
      std::size_t k = 0;
      for (; k + 4 <= s; k += 4)
        _mm256_storeu_pd(o + k, d1_vec(_mm256_loadu_pd(m2 + k), _mm256_loadu_pd(m1 + k),
                                       _mm256_loadu_pd(p1 + k), _mm256_loadu_pd(p2 + k), c));
      for (; k < s; ++k) o[k] = d1_expr(m2[k], m1[k], p1[k], p2[k], cs);
    }
}

__attribute__((target("avx2"))) void avx2::d2(const double* f, double* out, int n, int N,
                                              int axis, double h) {
  const double cs = 1.0 / (12.0 * h * h);
  const __m256d c = _mm256_set1_pd(cs);
  const std::size_t s = ipow(N, axis), B = s * N, total = ipow(N, n);
  if (axis == 0) {
    for (std::size_t b = 0; b < total; b += B) {
      const double* r = f + b;
      double* o = out + b;
      for (int j : {0, 1, N - 2, N - 1})
        o[j] = d2_expr(r[wrap(j - 2, N)], r[wrap(j - 1, N)], r[j], r[wrap(j + 1, N)],
                       r[wrap(j + 2, N)], cs);
      int j = 2;
      for (; j + 4 <= N - 2; j += 4)
        _mm256_storeu_pd(o + j,
                         d2_vec(_mm256_loadu_pd(r + j - 2), _mm256_loadu_pd(r + j - 1),
                                _mm256_loadu_pd(r + j), _mm256_loadu_pd(r + j + 1),
                                _mm256_loadu_pd(r + j + 2), c));
      for (; j < N - 2; ++j) o[j] = d2_expr(r[j - 2], r[j - 1], r[j], r[j + 1], r[j + 2], cs);
    }
    return;
  }
  for (std::size_t b = 0; b < total; b += B)
    for (int j = 0; j < N; ++j) {
      const double* m2 = f + b + wrap(j - 2, N) * s;
      const double* m1 = f + b + wrap(j - 1, N) * s;
      const double* z = f + b + j * s;
      const double* p1 = f + b + wrap(j + 1, N) * s;
      const double* p2 = f + b + wrap(j + 2, N) * s;
      double* o = out + b + j * s;
      std::size_t k = 0;
      for (; k + 4 <= s; k += 4)
        _mm256_storeu_pd(o + k, d2_vec(_mm256_loadu_pd(m2 + k), _mm256_loadu_pd(m1 + k),
                                       _mm256_loadu_pd(z + k), _mm256_loadu_pd(p1 + k),
                                       _mm256_loadu_pd(p2 + k), c));
      for (; k < s; ++k) o[k] = d2_expr(m2[k], m1[k], z[k], p1[k], p2[k], cs);
    }
}

__attribute__((target("avx2"))) void avx2::axpy(double a, const double* x, const double* y,
                                                double* out, std::size_t len) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(y + i),
                                            _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  for (; i < len; ++i) out[i] = y[i] + a * x[i];
}

#endif

// ─── NEON ───────────────────────────────────────────────────────────

#if defined(FLOWLAB_SIMD_NEON)

namespace {

inline float64x2_t d1_vec(float64x2_t m2, float64x2_t m1, float64x2_t p1, float64x2_t p2,
                          float64x2_t c) {
  return vmulq_f64(vaddq_f64(vsubq_f64(m2, p2), vmulq_f64(vdupq_n_f64(8.0), vsubq_f64(p1, m1))),
                   c);
}

inline float64x2_t d2_vec(float64x2_t m2, float64x2_t m1, float64x2_t z, float64x2_t p1,
                          float64x2_t p2, float64x2_t c) {
  const float64x2_t a =
      vsubq_f64(vmulq_f64(vdupq_n_f64(16.0), vaddq_f64(m1, p1)), vaddq_f64(m2, p2));
  return vmulq_f64(vsubq_f64(a, vmulq_f64(vdupq_n_f64(30.0), z)), c);
}

}  // namespace

void neon::d1(const double* f, double* out, int n, int N, int axis, double h) {
  const double cs = 1.0 / (12.0 * h);
  const float64x2_t c = vdupq_n_f64(cs);
  const std::size_t s = ipow(N, axis), B = s * N, total = ipow(N, n);
  if (axis == 0) {
    for (std::size_t b = 0; b < total; b += B) {
      const double* r = f + b;
      double* o = out + b;
      for (int j : {0, 1, N - 2, N - 1})
        o[j] = d1_expr(r[wrap(j - 2, N)], r[wrap(j - 1, N)], r[wrap(j + 1, N)],
                       r[wrap(j + 2, N)], cs);
      int j = 2;
      for (; j + 2 <= N - 2; j += 2)
        vst1q_f64(o + j, d1_vec(vld1q_f64(r + j - 2), vld1q_f64(r + j - 1),
                                vld1q_f64(r + j + 1), vld1q_f64(r + j + 2), c));
      for (; j < N - 2; ++j) o[j] = d1_expr(r[j - 2], r[j - 1], r[j + 1], r[j + 2], cs);
    }
    return;
  }
  for (std::size_t b = 0; b < total; b += B)
    for (int j = 0; j < N; ++j) {
      const double* m2 = f + b + wrap(j - 2, N) * s;
      const double* m1 = f + b + wrap(j - 1, N) * s;
      const double* p1 = f + b + wrap(j + 1, N) * s;
      const double* p2 = f + b + wrap(j + 2, N) * s;
      double* o = out + b + j * s;
      std::size_t k = 0;
      for (; k + 2 <= s; k += 2)
        vst1q_f64(o + k, d1_vec(vld1q_f64(m2 + k), vld1q_f64(m1 + k), vld1q_f64(p1 + k),
                                vld1q_f64(p2 + k), c));
      for (; k < s; ++k) o[k] = d1_expr(m2[k], m1[k], p1[k], p2[k], cs);
    }
}

void neon::d2(const double* f, double* out, int n, int N, int axis, double h) {
  const double cs = 1.0 / (12.0 * h * h);
  const float64x2_t c = vdupq_n_f64(cs);
  const std::size_t s = ipow(N, axis), B = s * N, total = ipow(N, n);
  if (axis == 0) {
    for (std::size_t b = 0; b < total; b += B) {
      const double* r = f + b;
      double* o = out + b;
      for (int j : {0, 1, N - 2, N - 1})
        o[j] = d2_expr(r[wrap(j - 2, N)], r[wrap(j - 1, N)], r[j], r[wrap(j + 1, N)],
                       r[wrap(j + 2, N)], cs);
      int j = 2;
      for (; j + 2 <= N - 2; j += 2)
        vst1q_f64(o + j, d2_vec(vld1q_f64(r + j - 2), vld1q_f64(r + j - 1), vld1q_f64(r + j),
                                vld1q_f64(r + j + 1), vld1q_f64(r + j + 2), c));
      for (; j < N - 2; ++j) o[j] = d2_expr(r[j - 2], r[j - 1], r[j], r[j + 1], r[j + 2], cs);
    }
    return;
  }
  for (std::size_t b = 0; b < total; b += B)
    for (int j = 0; j < N; ++j) {
      const double* m2 = f + b + wrap(j - 2, N) * s;
      const double* m1 = f + b + wrap(j - 1, N) * s;
      const double* z = f + b + j * s;
      const double* p1 = f + b + wrap(j + 1, N) * s;
      const double* p2 = f + b + wrap(j + 2, N) * s;
      double* o = out + b + j * s;
      std::size_t k = 0;
      for (; k + 2 <= s; k += 2)
        vst1q_f64(o + k, d2_vec(vld1q_f64(m2 + k), vld1q_f64(m1 + k), vld1q_f64(z + k),
                                vld1q_f64(p1 + k), vld1q_f64(p2 + k), c));
      for (; k < s; ++k) o[k] = d2_expr(m2[k], m1[k], z[k], p1[k], p2[k], cs);
    }
}

void neon::axpy(double a, const double* x, const double* y, double* out, std::size_t len) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= len; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  for (; i < len; ++i) out[i] = y[i] + a * x[i];
}

#endif

// ─── Dispatch ───────────────────────────────────────────────────────

namespace {

using D1Fn = void (*)(const double*, double*, int, int, int, double);
using AxpyFn = void (*)(double, const double*, const double*, double*, std::size_t);

struct Table {
  Isa isa;
  D1Fn d1;
  D1Fn d2;
  AxpyFn axpy;
};

Table table_for(Isa isa) {
  switch (isa) {
#if defined(FLOWLAB_SIMD_X86)
    case Isa::Avx2: return {Isa::Avx2, avx2::d1, avx2::d2, avx2::axpy};
#endif
#if defined(FLOWLAB_SIMD_NEON)
    case Isa::Neon: return {Isa::Neon, neon::d1, neon::d2, neon::axpy};
#endif
    default: return {Isa::Scalar, scalar::d1, scalar::d2, scalar::axpy};
  }
}

Isa detect() {
  if (const char* env = std::getenv("FLOWLAB_SIMD"); env && std::strcmp(env, "scalar") == 0)
    return Isa::Scalar;
  if (supported(Isa::Avx2)) return Isa::Avx2;
  if (supported(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

Table& table() {
  static Table t = table_for(detect());
  return t;
}

}  // namespace

bool supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(FLOWLAB_SIMD_X86)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(FLOWLAB_SIMD_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return table().isa; }

void force_isa(Isa isa) { table() = table_for(supported(isa) ? isa : Isa::Scalar); }

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

void d1(const double* f, double* out, int n, int N, int axis, double h) {
  table().d1(f, out, n, N, axis, h);
}
void d2(const double* f, double* out, int n, int N, int axis, double h) {
  table().d2(f, out, n, N, axis, h);
}
void axpy(double a, const double* x, const double* y, double* out, std::size_t len) {
  table().axpy(a, x, y, out, len);
}

}  // namespace flowlab::simd
