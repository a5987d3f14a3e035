#include "nli/kernels.hpp"

namespace nli::kernels::scalar {

std::uint64_t count_first_half(std::span<const std::int64_t> phases, std::int64_t shift,
                               std::int64_t period) {
    std::uint64_t n = 0;
    for (const std::int64_t p : phases) {
        std::int64_t q = p + shift;
        if (q >= period) q -= period;
        n += (2 * q < period) ? 1u : 0u;
    }
    return n;
}

void fold_bins(std::span<const std::int64_t> phases, std::int64_t shift, std::int64_t period,
               std::span<std::uint64_t> counts) {
    const auto n_bins = static_cast<std::int64_t>(counts.size());
    for (const std::int64_t p : phases) {
        std::int64_t q = p + shift;
        if (q >= period) q -= period;
        ++counts[static_cast<std::size_t>(q * n_bins / period)];
    }
}

} // namespace nli::kernels::scalar
