#pragma once

#include <atomic>
#include <vector>
#include <cstdint>

#include <omp.h>

namespace fd::kernels {

// Global switch between the OpenMP kernels and the serial reference path.
// Both paths produce bit-identical results: parallel loops only partition
// independent output elements, never reorder a reduction.
inline std::atomic<bool>& parallel_flag() {
  static std::atomic<bool> enabled{true};
  return enabled;
}
inline bool parallel_enabled() { return parallel_flag().load(std::memory_order_relaxed); }
inline void set_parallel(bool on) { parallel_flag().store(on, std::memory_order_relaxed); }

inline constexpr int64_t kMapGrain = 16384;
inline constexpr int64_t kMatmulGrain = 1 << 15;

// C[m,n] = A[m,k] * B[k,n]
template <typename S>
void matmul(const S* __restrict a, const S* __restrict b, S* __restrict c, int64_t m, int64_t k,
            int64_t n) {
  const bool par = parallel_enabled() && m > 1 && m * k * n >= kMatmulGrain;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < m; ++i) {
    S* __restrict crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) crow[j] = S(0);
    const S* __restrict arow = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const S av = arow[p];
      const S* __restrict brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[k,n] = A^T[k,m] * B[m,n]  with A stored [m,k]  (the dW of an affine layer)
template <typename S>
void matmul_at_b(const S* __restrict a, const S* __restrict b, S* __restrict c, int64_t m, int64_t k,
                 int64_t n) {
  const bool par = parallel_enabled() && k > 1 && m * k * n >= kMatmulGrain;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < k; ++i) {
    S* __restrict crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) crow[j] = S(0);
    for (int64_t p = 0; p < m; ++p) {
      const S av = a[p * k + i];
      const S* __restrict brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,k] = A[m,n] * B^T[n,k]  with B stored [k,n]  (the dX of an affine layer).
// B is transposed up front so the hot loop is a vectorizable accumulate
// rather than a dot-product reduction; B is the small operand here.
template <typename S>
void matmul_a_bt(const S* __restrict a, const S* __restrict b, S* __restrict c, int64_t m, int64_t n,
                 int64_t k) {
  std::vector<S> bt(static_cast<size_t>(n * k));
  for (int64_t l = 0; l < k; ++l) {
    for (int64_t j = 0; j < n; ++j) bt[static_cast<size_t>(j * k + l)] = b[l * n + j];
  }
  matmul(a, bt.data(), c, m, n, k);
}

template <typename S, typename F>
void map1(const S* __restrict x, S* __restrict y, int64_t n, F f) {
  const bool par = parallel_enabled() && n >= kMapGrain;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < n; ++i) y[i] = f(x[i]);
}

template <typename S, typename F>
void map2(const S* __restrict a, const S* __restrict b, S* __restrict y, int64_t n, F f) {
  const bool par = parallel_enabled() && n >= kMapGrain;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < n; ++i) y[i] = f(a[i], b[i]);
}

// y[r*small + j] = f(a[r*small + j], b[j]) -- suffix broadcast of b over a.
template <typename S, typename F>
void map2_bcast(const S* __restrict a, const S* __restrict b, S* __restrict y, int64_t repeats,
                int64_t small, F f) {
  const bool par = parallel_enabled() && repeats * small >= kMapGrain && repeats > 1;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t r = 0; r < repeats; ++r) {
    const S* __restrict arow = a + r * small;
    S* __restrict yrow = y + r * small;
    for (int64_t j = 0; j < small; ++j) yrow[j] = f(arow[j], b[j]);
  }
}

// out[j] += sign * sum_r grad[r*small + j] -- reduction of a broadcast axis.
// Serial over repeats so the accumulation order is fixed.
template <typename S>
void reduce_repeats_add(const S* __restrict grad, S* __restrict out, int64_t repeats, int64_t small,
                        S sign) {
  for (int64_t r = 0; r < repeats; ++r) {
    const S* __restrict grow = grad + r * small;
    for (int64_t j = 0; j < small; ++j) out[j] += sign * grow[j];
  }
}

template <typename S>
void axpy(S alpha, const S* __restrict x, S* __restrict y, int64_t n) {
  const bool par = parallel_enabled() && n >= kMapGrain;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Fixed-order serial sum, accumulated wider than S for stability (extended
// precision also keeps the grad-check oracle's quantization below its floor).
template <typename S>
long double reduce_sum(const S* x, int64_t n) {
  long double acc = 0.0L;
  for (int64_t i = 0; i < n; ++i) acc += static_cast<long double>(x[i]);
  return acc;
}

template <typename S>
void gather_rows(const S* __restrict table, const int64_t* __restrict idx, S* __restrict out,
                 int64_t m, int64_t width) {
  const bool par = parallel_enabled() && m * width >= kMapGrain && m > 1;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < m; ++i) {
    const S* __restrict src = table + idx[i] * width;
    S* __restrict dst = out + i * width;
    for (int64_t j = 0; j < width; ++j) dst[j] = src[j];
  }
}

// Scatter-add is serial: rows may repeat, and a fixed order keeps the
// accumulated gradient deterministic.
template <typename S>
void scatter_add_rows(const S* __restrict grad, const int64_t* __restrict idx, S* __restrict table,
                      int64_t m, int64_t width) {
  for (int64_t i = 0; i < m; ++i) {
    const S* __restrict src = grad + i * width;
    S* __restrict dst = table + idx[i] * width;
    for (int64_t j = 0; j < width; ++j) dst[j] += src[j];
  }
}

}  // namespace fd::kernels
