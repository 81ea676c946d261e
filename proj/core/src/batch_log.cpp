#include "batch_log.hpp"

#include <cmath>

#if defined(OAMCORR_HAVE_LIBMVEC) && defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#include <immintrin.h>
#define OAMCORR_VECTOR_LOG 1

// glibc libmvec, AVX2 variant of log.
extern "C" __m256d _ZGVdN4v_log(__m256d);
#endif

namespace oamcorr::detail {

namespace {

std::uint32_t polar_cells_portable(const PhiloxBatch& words, std::complex<double>* z) noexcept {
  std::uint32_t rejected = 0;
  for (std::size_t i = 0; i < kPhiloxBatch; ++i) {
    for (std::size_t half = 0; half < 2; ++half) {
      const std::size_t c = 2 * i + half;
      const double x = signed_unit(words[2 * half][i]);
      const double y = signed_unit(words[2 * half + 1][i]);
      const double s = x * x + y * y;
      if (s < 1.0) {
        double l = 0.0;
        log_batch(&s, &l, 1);
        const double f = std::sqrt(-l / s);
        z[c] = {x * f, y * f};
      } else {
        rejected |= 1u << c;
      }
    }
  }
  return rejected;
}

#ifdef OAMCORR_VECTOR_LOG
bool has_avx2() {
  static const bool yes = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return yes;
}

__attribute__((target("avx2"))) void log_batch_avx2(const double* in, double* out, std::size_t n) noexcept {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _ZGVdN4v_log(_mm256_loadu_pd(in + i)));
  if (i < n) {
    alignas(32) double pad[4] = {1.0, 1.0, 1.0, 1.0};
    alignas(32) double res[4];
    for (std::size_t k = 0; i + k < n; ++k) pad[k] = in[i + k];
    _mm256_store_pd(res, _ZGVdN4v_log(_mm256_load_pd(pad)));
    for (std::size_t k = 0; i + k < n; ++k) out[i + k] = res[k];
  }
}

__attribute__((target("avx2"))) inline __m256d unit4(const std::uint32_t* bits) {
  const __m128i v = _mm_loadu_si128(reinterpret_cast<const __m128i*>(bits));
  return _mm256_mul_pd(_mm256_add_pd(_mm256_cvtepi32_pd(v), _mm256_set1_pd(0.5)), _mm256_set1_pd(0x1.0p-31));
}

__attribute__((target("avx2"))) std::uint32_t polar_cells_avx2(const PhiloxBatch& words,
                                                               std::complex<double>* z) noexcept {
  alignas(32) double re[2][kPhiloxBatch];
  alignas(32) double im[2][kPhiloxBatch];
  std::uint32_t rejected = 0;
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half_one = _mm256_set1_pd(0.5);
  for (std::size_t half = 0; half < 2; ++half) {
    for (std::size_t i = 0; i < kPhiloxBatch; i += 4) {
      const __m256d x = unit4(words[2 * half].data() + i);
      const __m256d y = unit4(words[2 * half + 1].data() + i);
      const __m256d s = _mm256_add_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(y, y));
      const __m256d ok = _mm256_cmp_pd(s, one, _CMP_LT_OQ);
      const __m256d safe = _mm256_blendv_pd(half_one, s, ok);
      const __m256d l = _ZGVdN4v_log(safe);
      const __m256d f = _mm256_sqrt_pd(_mm256_div_pd(_mm256_sub_pd(_mm256_setzero_pd(), l), safe));
      _mm256_store_pd(re[half] + i, _mm256_mul_pd(x, f));
      _mm256_store_pd(im[half] + i, _mm256_mul_pd(y, f));
      const auto bad = static_cast<std::uint32_t>(~_mm256_movemask_pd(ok) & 0xF);
      for (std::uint32_t k = 0; k < 4; ++k) rejected |= ((bad >> k) & 1u) << (2 * (i + k) + half);
    }
  }
  for (std::size_t i = 0; i < kPhiloxBatch; ++i) {
    z[2 * i] = {re[0][i], im[0][i]};
    z[2 * i + 1] = {re[1][i], im[1][i]};
  }
  return rejected;
}
#endif

}  // namespace

void log_batch(const double* in, double* out, std::size_t n) noexcept {
#ifdef OAMCORR_VECTOR_LOG
  if (has_avx2()) {
    log_batch_avx2(in, out, n);
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(in[i]);
}

std::uint32_t polar_cells(const PhiloxBatch& words, std::complex<double>* z) noexcept {
#ifdef OAMCORR_VECTOR_LOG
  if (has_avx2()) return polar_cells_avx2(words, z);
#endif
  return polar_cells_portable(words, z);
}

}  // namespace oamcorr::detail
