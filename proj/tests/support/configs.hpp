#pragma once

#include "nli/simulator.hpp"

namespace nli::testing {

// Lossless, noiseless, DC-driven source locked to the fringe maximum.
inline sim::RunConfig ideal_config() {
    sim::RunConfig c;
    c.interferometer = model::Harmonic::nonlinear;
    c.pair_rate_hz = 100.0;
    c.ratio_r = 1.0;
    c.modulator = {7.99, 0.0, 0.0};
    c.drive.shape = sim::DriveShape::dc;
    c.drive.vdc_v = 0.0;
    c.drive.vpp_v = 0.0;
    for (auto& d : c.detectors) d = {1.0, 0.0, 0.0, 0.0};
    c.window_ps = 1000;
    c.duration_s = 1.0;
    c.seed = 1;
    return c;
}

// Square drive between the fringe maximum (high state) and the null: vpp = vpi/2
// swings the n=2 biphoton phase by pi; the TPS parks the high state at theta = 0.
inline sim::RunConfig square_config(double freq_hz) {
    sim::RunConfig c = ideal_config();
    c.drive.shape = sim::DriveShape::square;
    c.drive.freq_hz = freq_hz;
    c.drive.vpp_v = c.modulator.vpi_v / 2.0;
    c.drive.vdc_v = 0.0;
    c.drive.t0_ps = 0.0;
    // high voltage +vpi/4 -> pump phase pi/4; cancel it on the TPS.
    c.tps_offset_rad = -model::kPi / 4.0;
    return c;
}

} // namespace nli::testing
