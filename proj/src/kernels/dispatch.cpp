#include <cstdlib>
#include <limits>
#include <string>

#include "nli/error.hpp"
#include "nli/kernels.hpp"

namespace nli::kernels {

namespace {

void check_arguments(std::int64_t shift, std::int64_t period) {
    if (period <= 0) fail(ErrorKind::domain, "fold period must be > 0");
    if (shift < 0 || shift >= period) fail(ErrorKind::domain, "fold shift must lie in [0, period)");
}

} // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if NLI_HAVE_AVX2_KERNELS
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    }
    return false;
}

Isa best_isa() {
    static const Isa chosen = [] {
        if (const char* forced = std::getenv("NLI_SIMD"); forced && std::string(forced) == "scalar")
            return Isa::scalar;
        return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
    }();
    return chosen;
}

std::uint64_t count_first_half(std::span<const std::int64_t> phases, std::int64_t shift,
                               std::int64_t period, Isa isa) {
    check_arguments(shift, period);
#if NLI_HAVE_AVX2_KERNELS
    if (isa == Isa::avx2 && isa_available(Isa::avx2))
        return avx2::count_first_half(phases, shift, period);
#endif
    (void)isa;
    return scalar::count_first_half(phases, shift, period);
}

void fold_bins(std::span<const std::int64_t> phases, std::int64_t shift, std::int64_t period,
               std::span<std::uint64_t> counts, Isa isa) {
    check_arguments(shift, period);
    if (counts.empty()) fail(ErrorKind::domain, "fold needs at least one bin");
    if (period > std::numeric_limits<std::int64_t>::max() / static_cast<std::int64_t>(counts.size()))
        fail(ErrorKind::domain, "fold period times bin count overflows 64 bits");
#if NLI_HAVE_AVX2_KERNELS
    if (isa == Isa::avx2 && isa_available(Isa::avx2)) {
        avx2::fold_bins(phases, shift, period, counts);
        return;
    }
#endif
    (void)isa;
    scalar::fold_bins(phases, shift, period, counts);
}

} // namespace nli::kernels
