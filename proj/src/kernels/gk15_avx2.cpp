#include <immintrin.h>

#include "ecodrive/kernels/gk15.hpp"

#include "gk15_tables.hpp"

namespace ecodrive::kernels {

namespace {

inline double horizontal_sum(__m256d x) {
  const __m128d lo = _mm256_castpd256_pd128(x);
  const __m128d hi = _mm256_extractf128_pd(x, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

}  // namespace

PanelSums gk15_panel_avx2(const CubicDenominator& den, double a, double b) {
  using namespace detail;
  const __m256d center = _mm256_set1_pd(0.5 * (a + b));
  const __m256d half = _mm256_set1_pd(0.5 * (b - a));
  const __m256d c0 = _mm256_set1_pd(den.c0);
  const __m256d c1 = _mm256_set1_pd(den.c1);
  const __m256d c2 = _mm256_set1_pd(den.c2);
  const __m256d c3 = _mm256_set1_pd(den.c3);

  __m256d k1 = _mm256_setzero_pd();
  __m256d k2 = _mm256_setzero_pd();
  __m256d g1 = _mm256_setzero_pd();
  __m256d g2 = _mm256_setzero_pd();
  for (int i = 0; i < kPaddedNodes; i += 4) {
    const __m256d v = _mm256_fmadd_pd(half, _mm256_load_pd(kNodes + i), center);
    __m256d d = _mm256_fmadd_pd(c3, v, c2);
    d = _mm256_fmadd_pd(d, v, c1);
    d = _mm256_fmadd_pd(d, v, c0);
    const __m256d q = _mm256_div_pd(v, d);
    const __m256d qv = _mm256_mul_pd(q, v);
    const __m256d wk = _mm256_load_pd(kKronrodWeights + i);
    const __m256d wg = _mm256_load_pd(kGaussWeights + i);
    k1 = _mm256_fmadd_pd(wk, q, k1);
    k2 = _mm256_fmadd_pd(wk, qv, k2);
    g1 = _mm256_fmadd_pd(wg, q, g1);
    g2 = _mm256_fmadd_pd(wg, qv, g2);
  }
  const double h = 0.5 * (b - a);
  return PanelSums{h * horizontal_sum(k1), h * horizontal_sum(k2), h * horizontal_sum(g1),
                   h * horizontal_sum(g2)};
}

}  // namespace ecodrive::kernels
