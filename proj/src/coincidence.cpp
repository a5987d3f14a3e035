#include "nli/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "nli/error.hpp"
#include "nli/kernels.hpp"

namespace nli::coincidence {

namespace {

CoincidenceEvent make_event(Picoseconds t_signal, Picoseconds t_idler) {
    const Picoseconds delay = t_idler - t_signal;
    // Arithmetic shift floors, giving round-half-down on the midpoint.
    return {t_signal + (delay >> 1), delay};
}

struct Candidate {
    Picoseconds abs_delay;
    std::size_t idler;
    std::size_t signal;

    bool operator<(const Candidate& o) const {
        return std::tie(abs_delay, idler, signal) < std::tie(o.abs_delay, o.idler, o.signal);
    }
};

// Resolves one cluster: tags whose consecutive merged gaps are all within the
// window. Candidate pairs never span two clusters, so clusters are independent.
class ClusterMatcher {
public:
    ClusterMatcher(std::span<const Picoseconds> signal, std::span<const Picoseconds> idler,
                   Picoseconds window, std::vector<CoincidenceEvent>& out)
        : signal_(signal), idler_(idler), window_(window), out_(out) {}

    void resolve(std::size_t s_begin, std::size_t s_end, std::size_t i_begin, std::size_t i_end) {
        const std::size_t ns = s_end - s_begin;
        const std::size_t ni = i_end - i_begin;
        if (ns == 0 || ni == 0) return;
        if (ns == 1 && ni == 1) {
            if (std::abs(idler_[i_begin] - signal_[s_begin]) <= window_)
                out_.push_back(make_event(signal_[s_begin], idler_[i_begin]));
            return;
        }

        candidates_.clear();
        std::size_t lo = i_begin;
        for (std::size_t s = s_begin; s < s_end; ++s) {
            const Picoseconds ts = signal_[s];
            while (lo < i_end && idler_[lo] < ts - window_) ++lo;
            for (std::size_t i = lo; i < i_end && idler_[i] <= ts + window_; ++i)
                candidates_.push_back({std::abs(idler_[i] - ts), i, s});
        }
        std::sort(candidates_.begin(), candidates_.end());

        signal_used_.assign(ns, false);
        idler_used_.assign(ni, false);
        accepted_.clear();
        for (const Candidate& c : candidates_) {
            const std::size_t s = c.signal - s_begin;
            const std::size_t i = c.idler - i_begin;
            if (signal_used_[s] || idler_used_[i]) continue;
            signal_used_[s] = true;
            idler_used_[i] = true;
            accepted_.emplace_back(c.signal, c.idler);
        }
        std::sort(accepted_.begin(), accepted_.end());
        for (const auto& [s, i] : accepted_) out_.push_back(make_event(signal_[s], idler_[i]));
    }

private:
    std::span<const Picoseconds> signal_;
    std::span<const Picoseconds> idler_;
    Picoseconds window_;
    std::vector<CoincidenceEvent>& out_;
    std::vector<Candidate> candidates_;
    std::vector<bool> signal_used_;
    std::vector<bool> idler_used_;
    std::vector<std::pair<std::size_t, std::size_t>> accepted_;
};

void require_sorted(std::span<const Picoseconds> tags, const char* name) {
    if (!std::is_sorted(tags.begin(), tags.end()))
        fail(ErrorKind::contract, std::string(name) + " stream is not sorted");
}

} // namespace

std::vector<CoincidenceEvent> find_coincidences(std::span<const Picoseconds> signal,
                                                std::span<const Picoseconds> idler,
                                                Picoseconds window_ps) {
    if (window_ps < 0) fail(ErrorKind::domain, "coincidence window must be >= 0");
    require_sorted(signal, "signal");
    require_sorted(idler, "idler");

    std::vector<CoincidenceEvent> out;
    ClusterMatcher matcher(signal, idler, window_ps, out);

    std::size_t s = 0, i = 0;
    std::size_t s_begin = 0, i_begin = 0;
    bool open = false;
    Picoseconds last = 0;
    while (s < signal.size() || i < idler.size()) {
        const bool take_signal = i == idler.size() || (s < signal.size() && signal[s] <= idler[i]);
        const Picoseconds t = take_signal ? signal[s] : idler[i];
        if (open && t - last > window_ps) {
            matcher.resolve(s_begin, s, i_begin, i);
            s_begin = s;
            i_begin = i;
        }
        open = true;
        last = t;
        if (take_signal) ++s;
        else ++i;
    }
    if (open) matcher.resolve(s_begin, s, i_begin, i);
    return out;
}

std::int64_t DelayHistogram::bin_of(Picoseconds delay) const {
    if (delay < -range_ps || delay >= range_ps) return -1;
    return (delay + range_ps) / bin_width_ps;
}

std::uint64_t DelayHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

DelayHistogram delay_histogram(std::span<const CoincidenceEvent> events, Picoseconds bin_width_ps,
                               Picoseconds range_ps) {
    if (bin_width_ps <= 0) fail(ErrorKind::domain, "delay histogram bin width must be > 0");
    if (range_ps <= 0) fail(ErrorKind::domain, "delay histogram range must be > 0");
    if ((2 * range_ps) % bin_width_ps != 0)
        fail(ErrorKind::domain, "delay histogram bin width must divide twice the range");

    DelayHistogram h;
    h.bin_width_ps = bin_width_ps;
    h.range_ps = range_ps;
    h.counts.assign(static_cast<std::size_t>(2 * range_ps / bin_width_ps), 0);
    for (const CoincidenceEvent& e : events) {
        const std::int64_t b = h.bin_of(e.delay_ps);
        if (b < 0) ++h.out_of_range;
        else ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

std::uint64_t FoldedHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Picoseconds phase_in_period(Picoseconds t, Picoseconds period_ps) {
    const Picoseconds r = t % period_ps;
    return r < 0 ? r + period_ps : r;
}

namespace {

std::vector<Picoseconds> midpoint_phases(std::span<const CoincidenceEvent> events,
                                         Picoseconds period_ps) {
    std::vector<Picoseconds> phases(events.size());
    std::transform(events.begin(), events.end(), phases.begin(), [&](const CoincidenceEvent& e) {
        return phase_in_period(e.midpoint_ps, period_ps);
    });
    return phases;
}

} // namespace

FoldedHistogram fold_midpoints(std::span<const CoincidenceEvent> events, Picoseconds period_ps,
                               Picoseconds offset_ps, std::size_t n_bins) {
    if (period_ps <= 0) fail(ErrorKind::domain, "fold period must be > 0");
    if (n_bins == 0) fail(ErrorKind::domain, "fold needs at least one bin");

    FoldedHistogram h;
    h.period_ps = period_ps;
    h.offset_ps = offset_ps;
    h.counts.assign(n_bins, 0);
    const std::vector<Picoseconds> phases = midpoint_phases(events, period_ps);
    kernels::fold_bins(phases, phase_in_period(offset_ps, period_ps), period_ps, h.counts);
    return h;
}

VisibilityResult visibility_from_counts(double c_high, double c_low) {
    if (c_high < 0.0 || c_low < 0.0) fail(ErrorKind::domain, "state counts must be >= 0");
    const double sum = c_high + c_low;
    if (!(sum > 0.0)) fail(ErrorKind::undefined_visibility, "no counts in either modulator state");
    VisibilityResult r;
    r.c_high = c_high;
    r.c_low = c_low;
    r.v = (c_high - c_low) / sum;
    r.sigma_v = 2.0 * std::sqrt(c_high * c_low / (sum * sum * sum));
    return r;
}

VisibilityResult visibility_from_fold(const FoldedHistogram& h) {
    const std::size_t n = h.bin_count();
    if (n == 0 || n % 2 != 0) fail(ErrorKind::domain, "visibility needs an even number of fold bins");
    const auto mid = h.counts.begin() + static_cast<std::ptrdiff_t>(n / 2);
    const auto high = std::accumulate(h.counts.begin(), mid, std::uint64_t{0});
    const auto low = std::accumulate(mid, h.counts.end(), std::uint64_t{0});
    return visibility_from_counts(static_cast<double>(high), static_cast<double>(low));
}

std::vector<Picoseconds> sweep_offsets(Picoseconds period_ps, std::size_t n_steps) {
    if (n_steps < 3) fail(ErrorKind::domain, "offset sweep needs at least 3 steps");
    if (period_ps < 4) fail(ErrorKind::domain, "offset sweep needs a period of at least 4 ps");
    const auto half = static_cast<std::size_t>(period_ps / 2);
    if (static_cast<long double>(period_ps) / (2.0L * static_cast<long double>(n_steps - 1)) < 1.0L)
        n_steps = half + 1;

    std::vector<Picoseconds> offsets(n_steps);
    const long double lo = -static_cast<long double>(period_ps) / 4.0L;
    const long double step =
        static_cast<long double>(period_ps) / (2.0L * static_cast<long double>(n_steps - 1));
    for (std::size_t k = 0; k < n_steps; ++k)
        offsets[k] = std::llround(lo + step * static_cast<long double>(k));
    return offsets;
}

OffsetSweep offset_sweep(std::span<const CoincidenceEvent> events, Picoseconds period_ps,
                         std::size_t n_steps) {
    const std::vector<Picoseconds> offsets = sweep_offsets(period_ps, n_steps);
    return offset_sweep(events, period_ps, offsets);
}

OffsetSweep offset_sweep(std::span<const CoincidenceEvent> events, Picoseconds period_ps,
                         std::span<const Picoseconds> offsets) {
    if (period_ps <= 0) fail(ErrorKind::domain, "sweep period must be > 0");
    if (offsets.empty()) fail(ErrorKind::domain, "offset sweep needs at least one offset");
    if (events.empty()) fail(ErrorKind::undefined_visibility, "offset sweep over an empty event set");

    const std::vector<Picoseconds> phases = midpoint_phases(events, period_ps);
    const kernels::Isa isa = kernels::best_isa();
    const auto total = static_cast<std::uint64_t>(phases.size());

    OffsetSweep sweep;
    sweep.period_ps = period_ps;
    sweep.points.reserve(offsets.size());
    for (const Picoseconds offset : offsets) {
        const std::uint64_t high = kernels::count_first_half(
            phases, phase_in_period(offset, period_ps), period_ps, isa);
        sweep.points.push_back(
            {offset, visibility_from_counts(static_cast<double>(high),
                                            static_cast<double>(total - high))});
    }
    for (std::size_t k = 1; k < sweep.points.size(); ++k)
        if (sweep.points[k].result.v > sweep.points[sweep.best].result.v) sweep.best = k;
    return sweep;
}

namespace {

bool touches_peak(const DelayHistogram& h, std::size_t b, Picoseconds hw) {
    return h.bin_low(b) <= hw && h.bin_high(b) - 1 >= -hw;
}

void check_peak_window(const DelayHistogram& h, Picoseconds hw) {
    if (hw < 0) fail(ErrorKind::domain, "peak half-width must be >= 0");
    if (hw >= h.range_ps) fail(ErrorKind::domain, "peak window must lie strictly inside the histogram");
}

} // namespace

double estimate_accidentals(const DelayHistogram& h, Picoseconds peak_halfwidth_ps) {
    check_peak_window(h, peak_halfwidth_ps);
    std::uint64_t sum = 0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < h.bin_count(); ++b) {
        if (touches_peak(h, b, peak_halfwidth_ps)) continue;
        sum += h.counts[b];
        ++n;
    }
    if (n == 0) fail(ErrorKind::domain, "no histogram bins outside the peak window");
    return static_cast<double>(sum) / static_cast<double>(n);
}

std::size_t peak_bin_count(const DelayHistogram& h, Picoseconds peak_halfwidth_ps) {
    check_peak_window(h, peak_halfwidth_ps);
    std::size_t n = 0;
    for (std::size_t b = 0; b < h.bin_count(); ++b)
        if (touches_peak(h, b, peak_halfwidth_ps)) ++n;
    return n;
}

VisibilityResult background_subtract(const VisibilityResult& r, double accidentals_per_state,
                                     double accidentals_sigma) {
    if (!(accidentals_per_state >= 0.0)) fail(ErrorKind::domain, "accidentals must be >= 0");
    if (!(accidentals_sigma >= 0.0)) fail(ErrorKind::domain, "accidental sigma must be >= 0");
    const double h = r.c_high;
    const double l = r.c_low;
    const double a = accidentals_per_state;
    const double num = h - l;
    const double den = h + l - 2.0 * a;
    if (!(den > 0.0))
        fail(ErrorKind::over_subtraction, "background subtraction leaves no signal counts");

    const double den2 = den * den;
    const double d_high = 2.0 * (l - a) / den2;
    const double d_low = -2.0 * (h - a) / den2;
    const double d_acc = 2.0 * num / den2;

    VisibilityResult out = r;
    out.v = num / den;
    out.sigma_v = std::sqrt(h * d_high * d_high + l * d_low * d_low +
                            accidentals_sigma * accidentals_sigma * d_acc * d_acc);
    out.accidentals_per_state = a;
    return out;
}

} // namespace nli::coincidence
