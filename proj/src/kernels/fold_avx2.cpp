// Compiled with -mavx2; only reached through the dispatcher after a CPU check.

#include "nli/kernels.hpp"

#if NLI_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <cstddef>

namespace nli::kernels::avx2 {

namespace {

// (p + shift) mod period for p, shift in [0, period).
inline __m256i wrapped_sum(__m256i p, __m256i shift, __m256i period, __m256i period_m1) {
    const __m256i q = _mm256_add_epi64(p, shift);
    const __m256i wrap = _mm256_cmpgt_epi64(q, period_m1);
    return _mm256_sub_epi64(q, _mm256_and_si256(wrap, period));
}

inline std::uint64_t horizontal_sum(__m256i v) {
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
    return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

// Exact int64 -> double for 0 <= v < 2^52.
inline __m256d small_int_to_double(__m256i v) {
    const __m256i magic_bits = _mm256_set1_epi64x(0x4330000000000000LL);
    const __m256d magic = _mm256_set1_pd(4503599627370496.0); // 2^52
    return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(v, magic_bits)), magic);
}

} // namespace

std::uint64_t count_first_half(std::span<const std::int64_t> phases, std::int64_t shift,
                               std::int64_t period) {
    const __m256i vshift = _mm256_set1_epi64x(shift);
    const __m256i vperiod = _mm256_set1_epi64x(period);
    const __m256i vperiod_m1 = _mm256_set1_epi64x(period - 1);

    // Lanes accumulate -1 per hit; subtracting keeps the count positive.
    __m256i acc0 = _mm256_setzero_si256();
    __m256i acc1 = _mm256_setzero_si256();

    const std::int64_t* data = phases.data();
    const std::size_t n = phases.size();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256i p0 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
        const __m256i p1 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i + 4));
        const __m256i q0 = wrapped_sum(p0, vshift, vperiod, vperiod_m1);
        const __m256i q1 = wrapped_sum(p1, vshift, vperiod, vperiod_m1);
        acc0 = _mm256_sub_epi64(acc0, _mm256_cmpgt_epi64(vperiod, _mm256_add_epi64(q0, q0)));
        acc1 = _mm256_sub_epi64(acc1, _mm256_cmpgt_epi64(vperiod, _mm256_add_epi64(q1, q1)));
    }
    for (; i + 4 <= n; i += 4) {
        const __m256i p0 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
        const __m256i q0 = wrapped_sum(p0, vshift, vperiod, vperiod_m1);
        acc0 = _mm256_sub_epi64(acc0, _mm256_cmpgt_epi64(vperiod, _mm256_add_epi64(q0, q0)));
    }
    std::uint64_t total = horizontal_sum(_mm256_add_epi64(acc0, acc1));
    total += scalar::count_first_half(phases.subspan(i), shift, period);
    return total;
}

void fold_bins(std::span<const std::int64_t> phases, std::int64_t shift, std::int64_t period,
               std::span<std::uint64_t> counts) {
    const auto n_bins = static_cast<std::int64_t>(counts.size());
    // The double-precision bin computation is exact only while q * n_bins < 2^52.
    if (n_bins >= (std::int64_t{1} << 31) || period > ((std::int64_t{1} << 52) / n_bins)) {
        scalar::fold_bins(phases, shift, period, counts);
        return;
    }

    const __m256i vshift = _mm256_set1_epi64x(shift);
    const __m256i vperiod = _mm256_set1_epi64x(period);
    const __m256i vperiod_m1 = _mm256_set1_epi64x(period - 1);
    const __m256d vbins = _mm256_set1_pd(static_cast<double>(n_bins));
    const __m256d vperiod_d = _mm256_set1_pd(static_cast<double>(period));
    const __m256d one = _mm256_set1_pd(1.0);

    const std::int64_t* data = phases.data();
    const std::size_t n = phases.size();
    alignas(16) std::int32_t idx[4];
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256i p = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
        const __m256i q = wrapped_sum(p, vshift, vperiod, vperiod_m1);
        const __m256d scaled = _mm256_mul_pd(small_int_to_double(q), vbins);
        __m256d bin = _mm256_floor_pd(_mm256_div_pd(scaled, vperiod_d));
        // A quotient just below an integer can round up to it; step back when
        // bin * period overshoots the exact numerator.
        const __m256d over = _mm256_cmp_pd(_mm256_mul_pd(bin, vperiod_d), scaled, _CMP_GT_OQ);
        bin = _mm256_sub_pd(bin, _mm256_and_pd(over, one));
        _mm_store_si128(reinterpret_cast<__m128i*>(idx), _mm256_cvttpd_epi32(bin));
        ++counts[static_cast<std::size_t>(idx[0])];
        ++counts[static_cast<std::size_t>(idx[1])];
        ++counts[static_cast<std::size_t>(idx[2])];
        ++counts[static_cast<std::size_t>(idx[3])];
    }
    scalar::fold_bins(phases.subspan(i), shift, period, counts);
}

} // namespace nli::kernels::avx2

#endif
