#include "nli/model.hpp"

#include <cmath>
#include <string>

#include "nli/error.hpp"

namespace nli::model {

Harmonic harmonic_from_order(int n) {
    if (n == 1) return Harmonic::linear;
    if (n == 2) return Harmonic::nonlinear;
    fail(ErrorKind::domain, "harmonic must be 1 or 2, got " + std::to_string(n));
}

void FringeParams::validate() const {
    if (!(visibility >= 0.0 && visibility <= 1.0))
        fail(ErrorKind::domain, "fringe visibility must lie in [0, 1]");
    if (harmonic != Harmonic::linear && harmonic != Harmonic::nonlinear)
        fail(ErrorKind::domain, "fringe harmonic must be 1 or 2");
    if (!std::isfinite(phase_offset))
        fail(ErrorKind::domain, "fringe phase offset must be finite");
}

SourceRatio::SourceRatio(double r) : r_(r) {
    if (!(r >= 0.0) || !std::isfinite(r))
        fail(ErrorKind::domain, "source ratio must be finite and >= 0");
}

void ModulatorParams::validate() const {
    if (!(vpi_v > 0.0) || !std::isfinite(vpi_v))
        fail(ErrorKind::domain, "modulator vpi must be > 0");
    if (!(alpha_db_per_pi >= 0.0))
        fail(ErrorKind::domain, "modulator alpha_db_per_pi must be >= 0");
    if (!(base_loss_db >= 0.0))
        fail(ErrorKind::domain, "modulator base_loss_db must be >= 0");
}

double PhaseState::biphoton_phase() const {
    return pump_phase_transfer(pump_applied) + signal + idler + offset;
}

double wrap_phase(double phi) {
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    return r >= kTwoPi ? 0.0 : r;
}

double interference_weight(double theta) {
    return 0.5 * (1.0 + std::cos(theta));
}

double fringe(double phi_p, const FringeParams& params) {
    params.validate();
    const double n = order(params.harmonic);
    return 0.5 * (1.0 + params.visibility * std::cos(n * phi_p + params.phase_offset));
}

double visibility_from_ratio(SourceRatio r) {
    const double x = r.value();
    return 2.0 * x / (1.0 + x * x);
}

double pump_phase_transfer(double phi_p_applied) {
    return 2.0 * phi_p_applied;
}

double phase_from_voltage(double volts, const ModulatorParams& m) {
    if (!(m.vpi_v > 0.0)) fail(ErrorKind::domain, "modulator vpi must be > 0");
    return kPi * volts / m.vpi_v;
}

double cdm_transmission(double phi, const ModulatorParams& m) {
    if (!(phi >= 0.0)) fail(ErrorKind::domain, "modulator phase must be >= 0");
    const double loss_db = m.base_loss_db + m.alpha_db_per_pi * phi / kPi;
    return std::pow(10.0, -loss_db / 10.0);
}

double coincidence_probability(double mean_n) {
    if (!(mean_n >= 0.0)) fail(ErrorKind::domain, "mean count must be >= 0");
    return mean_n * std::exp(-mean_n);
}

double loss_from_singles_visibility(double v_singles) {
    if (!(v_singles > 0.0) || v_singles > 1.0)
        fail(ErrorKind::domain, "singles visibility must lie in (0, 1]");
    return 10.0 * std::log10(v_singles);
}

} // namespace nli::model
