#pragma once

// Inner loops of the period-folding analysis, in a portable scalar form and
// an AVX2 form. Every variant produces bit-identical results; the dispatcher
// picks the widest one the running CPU supports.
//
// All kernels take "phases": event times already reduced modulo the period,
// i.e. every value lies in [0, period). The shift is likewise in [0, period).

#include <cstdint>
#include <span>
#include <string_view>

namespace nli::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// True when the binary carries the variant and the CPU can execute it.
bool isa_available(Isa isa);

// Widest available ISA. NLI_SIMD=scalar in the environment forces the scalar path.
Isa best_isa();

// Number of phases p for which (p + shift) mod period falls in the first
// half-open half period, i.e. 2 * ((p + shift) mod period) < period.
std::uint64_t count_first_half(std::span<const std::int64_t> phases, std::int64_t shift,
                               std::int64_t period, Isa isa);

// counts[b] += number of phases with floor(((p + shift) mod period) * n / period) == b,
// where n = counts.size().
void fold_bins(std::span<const std::int64_t> phases, std::int64_t shift, std::int64_t period,
               std::span<std::uint64_t> counts, Isa isa);

inline std::uint64_t count_first_half(std::span<const std::int64_t> phases, std::int64_t shift,
                                      std::int64_t period) {
    return count_first_half(phases, shift, period, best_isa());
}

inline void fold_bins(std::span<const std::int64_t> phases, std::int64_t shift,
                      std::int64_t period, std::span<std::uint64_t> counts) {
    fold_bins(phases, shift, period, counts, best_isa());
}

namespace scalar {
std::uint64_t count_first_half(std::span<const std::int64_t> phases, std::int64_t shift,
                               std::int64_t period);
void fold_bins(std::span<const std::int64_t> phases, std::int64_t shift, std::int64_t period,
               std::span<std::uint64_t> counts);
} // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define NLI_HAVE_AVX2_KERNELS 1
namespace avx2 {
std::uint64_t count_first_half(std::span<const std::int64_t> phases, std::int64_t shift,
                               std::int64_t period);
void fold_bins(std::span<const std::int64_t> phases, std::int64_t shift, std::int64_t period,
               std::span<std::uint64_t> counts);
} // namespace avx2
#else
#define NLI_HAVE_AVX2_KERNELS 0
#endif

} // namespace nli::kernels
