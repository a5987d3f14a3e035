#pragma once

// Parameter extraction from scanned and modulated count data.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nli/model.hpp"

namespace nli::analysis {

struct Measured {
    double value = 0.0;
    double sigma = 0.0;
};

// counts = A/2 (1 + v cos(n phi + phi0)), fitted by weighted linear least
// squares on (1, cos n phi, sin n phi) with weights 1 / max(count, 1).
// v is reported as fitted, never clamped; `in_range` flags 0 <= v <= 1.
struct FringeFit {
    model::Harmonic harmonic = model::Harmonic::nonlinear;
    Measured amplitude;
    Measured visibility;
    Measured phase_offset;  // wrapped to (-pi, pi]
    double residual_rms = 0.0;
    double chi2 = 0.0;      // weighted residual sum of squares
    double chi2_flat = 0.0; // same weights, best constant model
    bool in_range = true;
};

FringeFit fit_fringe(std::span<const double> phases, std::span<const double> counts,
                     model::Harmonic n);

struct HarmonicChoice {
    model::Harmonic harmonic;
    FringeFit linear;
    FringeFit nonlinear;

    const FringeFit& chosen() const {
        return harmonic == model::Harmonic::linear ? linear : nonlinear;
    }
};

// Fits both harmonics and keeps the one with the lower residual RMS. Throws
// ambiguous_harmonic when the residuals agree within 1%, or when neither fit
// improves on a flat line by more than noise explains.
HarmonicChoice select_harmonic(std::span<const double> phases, std::span<const double> counts);

struct VpiEstimate {
    double vpi_v = 0.0;
    double sigma_v = 0.0;
    bool small_signal = true; // false when the phase swing is >= 0.5 rad
};

// pi * probe_vpp / phase_swing for a linear voltage-phase response.
double estimate_vpi(double probe_vpp, double phase_swing_rad);
VpiEstimate estimate_vpi(double probe_vpp, Measured phase_swing_rad);

// Applied-phase difference between two levels of a fitted fringe, found by
// inverting the fringe on one monotonic branch. Levels outside the fitted
// range clamp to the nearest extremum.
Measured fringe_phase_swing(const FringeFit& fit, Measured level_high, Measured level_low);

struct LossBudget {
    double total_db = 0.0; // negative: transmission implied by singles visibility
    std::vector<std::pair<std::string, double>> components; // signed dB (losses negative)
    double residual_db = 0.0; // total - sum(components)
};

// `losses_db` are loss magnitudes (positive dB); they are stored negated.
LossBudget loss_budget(double v_singles, std::span<const std::pair<std::string, double>> losses_db);

// (max - min) / (max + min) of a count series.
double contrast(std::span<const double> counts);

} // namespace nli::analysis
