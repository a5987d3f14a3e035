#pragma once

// Two-channel timetag correlation: coincidence matching, delay histograms,
// folding modulo the drive period, offset sweeps and background subtraction.

#include <cstdint>
#include <span>
#include <vector>

#include "nli/timetag.hpp"

namespace nli::coincidence {

struct CoincidenceEvent {
    Picoseconds midpoint_ps = 0; // floor((t_s + t_i) / 2)
    Picoseconds delay_ps = 0;    // t_i - t_s

    friend bool operator==(const CoincidenceEvent&, const CoincidenceEvent&) = default;
};

// Exclusive nearest-partner matching of signal and idler tags whose
// separation is at most window_ps.
//
// Candidate pairs are accepted greedily in order of increasing |delay|; ties
// go to the earlier idler tag, then the earlier signal tag. Each tag joins at
// most one coincidence. Output is ordered by (signal tag, idler tag).
//
// Both inputs must be sorted ascending (contract error otherwise).
std::vector<CoincidenceEvent> find_coincidences(std::span<const Picoseconds> signal,
                                                std::span<const Picoseconds> idler,
                                                Picoseconds window_ps);

// Signed-delay histogram over the half-open range [-range_ps, range_ps).
struct DelayHistogram {
    Picoseconds bin_width_ps = 0;
    Picoseconds range_ps = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t out_of_range = 0;

    std::size_t bin_count() const { return counts.size(); }
    Picoseconds bin_low(std::size_t b) const {
        return -range_ps + static_cast<Picoseconds>(b) * bin_width_ps;
    }
    Picoseconds bin_high(std::size_t b) const { return bin_low(b) + bin_width_ps; }
    // Bin index of a delay, or -1 when outside the range.
    std::int64_t bin_of(Picoseconds delay) const;
    std::uint64_t total() const;
};

DelayHistogram delay_histogram(std::span<const CoincidenceEvent> events, Picoseconds bin_width_ps,
                               Picoseconds range_ps);

struct FoldedHistogram {
    Picoseconds period_ps = 0;
    Picoseconds offset_ps = 0;
    std::vector<std::uint64_t> counts; // n_bins entries

    std::size_t bin_count() const { return counts.size(); }
    std::uint64_t total() const;
};

// Nonnegative remainder of t modulo period.
Picoseconds phase_in_period(Picoseconds t, Picoseconds period_ps);

FoldedHistogram fold_midpoints(std::span<const CoincidenceEvent> events, Picoseconds period_ps,
                               Picoseconds offset_ps, std::size_t n_bins);

struct VisibilityResult {
    double c_high = 0.0;
    double c_low = 0.0;
    double v = 0.0;
    double sigma_v = 0.0;
    double accidentals_per_state = 0.0;
};

// v = (h - l) / (h + l) with first-order Poisson error 2 sqrt(h l / (h + l)^3).
VisibilityResult visibility_from_counts(double c_high, double c_low);

// High state = first half of the period, low state = second half.
VisibilityResult visibility_from_fold(const FoldedHistogram& h);

struct SweepPoint {
    Picoseconds offset_ps = 0;
    VisibilityResult result;
};

struct OffsetSweep {
    Picoseconds period_ps = 0;
    std::vector<SweepPoint> points;
    std::size_t best = 0; // index of the maximum visibility

    const SweepPoint& best_point() const { return points.at(best); }
};

// The offsets of a sweep over [-T/4, +T/4]; the step is never below 1 ps, so
// fewer than n_steps offsets come back for very short periods.
std::vector<Picoseconds> sweep_offsets(Picoseconds period_ps, std::size_t n_steps);

OffsetSweep offset_sweep(std::span<const CoincidenceEvent> events, Picoseconds period_ps,
                         std::size_t n_steps);

// Same sweep over offsets chosen by the caller.
OffsetSweep offset_sweep(std::span<const CoincidenceEvent> events, Picoseconds period_ps,
                         std::span<const Picoseconds> offsets);

// Mean count of the histogram bins that do not touch [-peak_halfwidth, +peak_halfwidth].
double estimate_accidentals(const DelayHistogram& h, Picoseconds peak_halfwidth_ps);

// Number of bins that do touch the peak window; the complement of the bins
// estimate_accidentals averages over.
std::size_t peak_bin_count(const DelayHistogram& h, Picoseconds peak_halfwidth_ps);

// Removes an accidental background of `accidentals_per_state` counts from each
// state. `accidentals_sigma` is the standard error of that estimate.
VisibilityResult background_subtract(const VisibilityResult& r, double accidentals_per_state,
                                     double accidentals_sigma = 0.0);

} // namespace nli::coincidence
