#pragma once

// Closed-form physics of a two-source nonlinear interferometer.
//
// Phases are radians and are never reduced internally; compare them with
// wrap_phase() when a canonical representative is needed.

namespace nli::model {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Harmonic of the pump phase seen in the detected fringe: a linear (Mach-Zehnder)
// interferometer gives n=1, two SFWM sources in series give n=2.
enum class Harmonic : int { linear = 1, nonlinear = 2 };

constexpr int order(Harmonic h) { return static_cast<int>(h); }
Harmonic harmonic_from_order(int n); // throws domain error unless n is 1 or 2

struct FringeParams {
    double visibility = 1.0;  // [0, 1]
    Harmonic harmonic = Harmonic::nonlinear;
    double phase_offset = 0.0; // aggregate constant phase, radians

    void validate() const;
};

// Ratio of the pair-production amplitudes of the two sources.
class SourceRatio {
public:
    explicit SourceRatio(double r);
    double value() const noexcept { return r_; }

private:
    double r_;
};

struct ModulatorParams {
    double vpi_v = 7.99;           // voltage for a pi phase shift
    double alpha_db_per_pi = 0.0;  // excess loss per pi of applied phase
    double base_loss_db = 0.0;     // static insertion loss

    void validate() const;
};

// Phases along the pump, signal and idler paths plus the constant offset.
struct PhaseState {
    double pump_applied = 0.0;
    double signal = 0.0;
    double idler = 0.0;
    double offset = 0.0;

    // Phase of the generated biphoton: twice the pump phase plus the
    // signal and idler path phases.
    double biphoton_phase() const;
};

// Maps any finite angle onto [0, 2pi).
double wrap_phase(double phi);

// |(1 + e^{i theta}) / 2|^2
double interference_weight(double theta);

// 1/2 (1 + v cos(n phi + phi0))
double fringe(double phi_p, const FringeParams& params);

// 2R / (1 + R^2)
double visibility_from_ratio(SourceRatio r);

// A shifter on the pump path enters the biphoton phase twice.
double pump_phase_transfer(double phi_p_applied);

double phase_from_voltage(double volts, const ModulatorParams& m);

// Power transmission of the carrier-depletion modulator at phase phi >= 0,
// with loss linear (in dB) in the applied phase.
double cdm_transmission(double phi, const ModulatorParams& m);

// Poisson probability of exactly one event given mean <n>.
double coincidence_probability(double mean_n);

// Total transmission in dB (negative) implied by a singles fringe visibility.
double loss_from_singles_visibility(double v_singles);

} // namespace nli::model
