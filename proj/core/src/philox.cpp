#include "oamcorr/philox.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#include <immintrin.h>
#define OAMCORR_X86_DISPATCH 1
#endif

namespace oamcorr {

void philox_batch_portable(const PhiloxLanes& lanes, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3,
                           const Philox4x32::Key& key, PhiloxBatch& out) noexcept {
  for (std::size_t i = 0; i < kPhiloxBatch; ++i) {
    const auto w = Philox4x32::generate({lanes[i], c1, c2, c3}, key);
    for (std::size_t k = 0; k < 4; ++k) out[k][i] = w[k];
  }
}

#ifdef OAMCORR_X86_DISPATCH
namespace {

struct MulHiLo {
  __m256i hi;
  __m256i lo;
};

__attribute__((target("avx2"))) inline MulHiLo mul_hi_lo(__m256i a, __m256i m) {
  const __m256i even = _mm256_mul_epu32(a, m);
  const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), m);
  return {_mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0xAA),
          _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0xAA)};
}

__attribute__((target("avx2"))) void philox_batch_avx2(const PhiloxLanes& lanes, std::uint32_t w1, std::uint32_t w2,
                                                       std::uint32_t w3, const Philox4x32::Key& key,
                                                       PhiloxBatch& out) noexcept {
  __m256i c0 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(lanes.data()));
  __m256i c1 = _mm256_set1_epi32(static_cast<int>(w1));
  __m256i c2 = _mm256_set1_epi32(static_cast<int>(w2));
  __m256i c3 = _mm256_set1_epi32(static_cast<int>(w3));
  const __m256i m0 = _mm256_set1_epi64x(0xD2511F53);
  const __m256i m1 = _mm256_set1_epi64x(0xCD9E8D57);
  std::uint32_t k0 = key[0];
  std::uint32_t k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    const MulHiLo p0 = mul_hi_lo(c0, m0);
    const MulHiLo p1 = mul_hi_lo(c2, m1);
    const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(p1.hi, c1), _mm256_set1_epi32(static_cast<int>(k0)));
    const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(p0.hi, c3), _mm256_set1_epi32(static_cast<int>(k1)));
    c0 = n0;
    c1 = p1.lo;
    c2 = n2;
    c3 = p0.lo;
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(out[0].data()), c0);
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(out[1].data()), c1);
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(out[2].data()), c2);
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(out[3].data()), c3);
}

bool has_avx2() {
  static const bool yes = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return yes;
}

}  // namespace
#endif

void philox_batch(const PhiloxLanes& lanes, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3,
                  const Philox4x32::Key& key, PhiloxBatch& out) noexcept {
#ifdef OAMCORR_X86_DISPATCH
  if (has_avx2()) {
    philox_batch_avx2(lanes, c1, c2, c3, key, out);
    return;
  }
#endif
  philox_batch_portable(lanes, c1, c2, c3, key, out);
}

}  // namespace oamcorr
