#pragma once

// Monte Carlo timetag generation for the two-source interferometer under a
// static thermo-optic phase and a square-wave (or DC) modulator drive.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nli/model.hpp"
#include "nli/timetag.hpp"

namespace nli::sim {

enum class DriveShape { square, dc };

struct DriveWaveform {
    DriveShape shape = DriveShape::dc;
    double freq_hz = 10e6;
    double vpp_v = 0.0;
    double vdc_v = 0.0;
    double vpp_scale = 1.0;           // stands in for high-frequency Vpi roll-off
    std::optional<double> t0_ps;      // drive-to-tagger offset; drawn from the seed when unset

    double period_ps() const { return 1e12 / freq_hz; }
    double effective_vpp() const { return vpp_v * vpp_scale; }
};

struct DetectorModel {
    double efficiency = 1.0;
    double dark_rate_hz = 0.0;
    double jitter_sigma_ps = 0.0;
    double dead_time_ps = 0.0;
};

// Loss figures in dB. Reported by scans as the known loss components; they do
// not attenuate the simulated streams, whose rates are set directly.
struct LossFigures {
    double spiral_db[2] = {0.0, 0.0};
    double routing_db = 0.0;
    double coupling_db = 0.0;
};

// Pump-rejection filter. Only leak_rate_hz affects the simulation: an
// uncorrelated photon rate arriving at each detector.
struct AmziFilter {
    double delta_l_um = 90.0;
    double fsr_nm = 6.4;
    double extinction_db = 0.0;
    double leak_rate_hz = 0.0;
};

struct RunConfig {
    double pump_wavelength_nm = 1544.61;
    model::Harmonic interferometer = model::Harmonic::nonlinear;
    double pair_rate_hz = 100.0;    // pair emission rate at the fringe maximum
    double ratio_r = 1.0;
    double phi0_rad = 0.0;          // constant biphoton phase offset
    model::ModulatorParams modulator;
    DriveWaveform drive;
    double tps_offset_rad = 0.0;    // static pump-path phase
    LossFigures losses;
    AmziFilter amzi;
    DetectorModel detectors[2];     // signal, idler
    Picoseconds window_ps = 1000;
    double duration_s = 1.0;
    std::uint64_t seed = 0;
    double drift_rad_per_s = 0.0;

    void validate() const;
    Picoseconds duration_ps() const;
};

// Drive-to-tagger offset of a run: the pinned value, or a seed-derived draw
// uniform in [-T/2, T/2).
double resolve_t0_ps(const RunConfig& c);

double waveform_voltage(double t_ps, const DriveWaveform& w, double t0_ps);

// Biphoton phase at time t: harmonic * (modulator phase + TPS phase) + phi0 + drift * t.
double biphoton_phase(double t_ps, const RunConfig& c, double t0_ps);

// Pair emission rate. Normalised so that a lossless modulator at the fringe
// maximum gives pair_rate_hz; modulator loss scales the second source's
// amplitude by its transmission.
double instantaneous_rate(double t_ps, const RunConfig& c, double t0_ps);
double instantaneous_rate(double t_ps, const RunConfig& c);

// Upper bound of instantaneous_rate used for thinning.
double max_rate(const RunConfig& c);

struct SampleOptions {
    unsigned threads = 0; // 0: NLI_THREADS or hardware concurrency
};

// Length of the independently seeded generation chunks.
inline constexpr Picoseconds kChunkPs = 100'000'000'000; // 0.1 s

struct RunOutput {
    TimetagStream signal;
    TimetagStream idler;
    double t0_ps = 0.0;
};

// Deterministic for a given config: thread count does not change the output.
RunOutput sample_run(const RunConfig& c, SampleOptions opts = {});

// Pre-detection pair emission times of the same process sample_run draws,
// rounded to picoseconds.
std::vector<Picoseconds> sample_emissions(const RunConfig& c, SampleOptions opts = {});

struct ScanPoint {
    double phase_rad = 0.0;
    std::uint64_t singles_signal = 0;
    std::uint64_t singles_idler = 0;
    std::uint64_t coincidences = 0;
};

// Steps the TPS through `phases`, dwelling dwell_s at each. Point k uses a
// seed derived from (seed, k).
std::vector<ScanPoint> simulate_phase_scan(const RunConfig& c, std::span<const double> phases,
                                           double dwell_s, SampleOptions opts = {});

// Photodetector record of the pump power at the device output: for each
// sample time, a Poisson count with mean photon_rate_hz * dwell_s scaled by
// the normalised fringe.
std::vector<double> sample_power_trace(const RunConfig& c, std::span<const double> times_ps,
                                       double photon_rate_hz, double dwell_s);

unsigned default_threads();

} // namespace nli::sim
