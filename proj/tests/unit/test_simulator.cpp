#include <doctest.h>

#include <cmath>
#include <numeric>

#include "nli/coincidence.hpp"
#include "nli/error.hpp"
#include "nli/simulator.hpp"
#include "support/configs.hpp"

using namespace nli;
using namespace nli::sim;
using doctest::Approx;
using nli::testing::ideal_config;
using nli::testing::square_config;

namespace {

bool within_sigma(double observed, double mean, double n_sigma) {
    return std::abs(observed - mean) <= n_sigma * std::sqrt(std::max(mean, 1.0));
}

void check_ordering(const TimetagStream& s, double dead_time_ps) {
    for (std::size_t k = 1; k < s.tags.size(); ++k) {
        REQUIRE(s.tags[k] >= s.tags[k - 1]);
        REQUIRE(static_cast<double>(s.tags[k] - s.tags[k - 1]) >= dead_time_ps);
    }
}

} // namespace

TEST_CASE("waveform_voltage") {
    DriveWaveform w;
    w.shape = DriveShape::square;
    w.freq_hz = 10e6;
    w.vpp_v = 4.0;
    w.vdc_v = 2.1;
    const double T = w.period_ps();
    const double t0 = 1234.0;
    CHECK(waveform_voltage(t0 + T / 4, w, t0) == Approx(4.1));
    CHECK(waveform_voltage(t0 + 3 * T / 4, w, t0) == Approx(0.1));
    CHECK(waveform_voltage(t0 + T / 2, w, t0) == Approx(0.1)); // boundary belongs to the low half
    CHECK(waveform_voltage(t0 - T / 4, w, t0) == Approx(0.1));
    w.vpp_scale = 0.5;
    CHECK(waveform_voltage(t0 + T / 4, w, t0) == Approx(3.1));
    w.shape = DriveShape::dc;
    CHECK(waveform_voltage(987654.0, w, t0) == Approx(2.1));
}

TEST_CASE("instantaneous_rate anchors") {
    RunConfig c = ideal_config();
    CHECK(instantaneous_rate(0.0, c) == Approx(100.0));

    c.tps_offset_rad = model::kPi / 2; // biphoton phase pi: destructive lock
    CHECK(instantaneous_rate(0.0, c) == Approx(0.0).epsilon(1e-12));
    CHECK(instantaneous_rate(5e6, c) == Approx(0.0).epsilon(1e-12));

    RunConfig sq = square_config(1e9);
    const double T = sq.drive.period_ps();
    for (int cycle = 0; cycle < 5; ++cycle) {
        CHECK(instantaneous_rate(cycle * T + T / 4, sq) == Approx(100.0));
        CHECK(instantaneous_rate(cycle * T + 3 * T / 4, sq) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("classical interferometer has a single-period fringe in the TPS phase") {
    RunConfig c = ideal_config();
    c.interferometer = model::Harmonic::linear;
    c.tps_offset_rad = model::kPi;
    CHECK(instantaneous_rate(0.0, c) == Approx(0.0).epsilon(1e-12));
    c.tps_offset_rad = model::kPi / 2;
    CHECK(instantaneous_rate(0.0, c) == Approx(50.0));
}

TEST_CASE("modulator loss lowers the second source amplitude") {
    RunConfig c = ideal_config();
    c.modulator.alpha_db_per_pi = 1.0;
    c.drive.vdc_v = c.modulator.vpi_v; // phase pi, biphoton phase 2 pi: fringe maximum
    const double t = std::pow(10.0, -0.1);
    CHECK(instantaneous_rate(0.0, c) == Approx(100.0 * (1 + t) * (1 + t) / 4.0));
    CHECK(instantaneous_rate(0.0, c) <= max_rate(c));
}

TEST_CASE("t0 is drawn from the seed unless pinned") {
    RunConfig c = square_config(10e6);
    CHECK(resolve_t0_ps(c) == 0.0);
    c.drive.t0_ps.reset();
    const double T = c.drive.period_ps();
    const double a = resolve_t0_ps(c);
    CHECK(a >= -T / 2);
    CHECK(a < T / 2);
    CHECK(resolve_t0_ps(c) == a);
    c.seed = 2;
    CHECK(resolve_t0_ps(c) != a);
}

TEST_CASE("dark counts only") {
    RunConfig c = ideal_config();
    c.pair_rate_hz = 0.0;
    for (auto& d : c.detectors) d.dark_rate_hz = 100.0;
    c.duration_s = 10.0;
    const RunOutput run = sample_run(c);
    CHECK(within_sigma(static_cast<double>(run.signal.tags.size()), 1000.0, 5.0));
    CHECK(within_sigma(static_cast<double>(run.idler.tags.size()), 1000.0, 5.0));
    // Expected accidentals: 100 * 100 * 2 ns * 10 s = 2e-4.
    CHECK(coincidence::find_coincidences(run.signal.tags, run.idler.tags, c.window_ps).size() <= 1);
}

TEST_CASE("lossless pairing") {
    RunConfig c = ideal_config();
    c.duration_s = 30.0;
    const RunOutput run = sample_run(c);
    CHECK(within_sigma(static_cast<double>(run.signal.tags.size()), 3000.0, 5.0));
    CHECK(run.signal.tags == run.idler.tags);
    check_ordering(run.signal, 0.0);
}

TEST_CASE("determinism across repeats and thread counts") {
    RunConfig c = square_config(1e9);
    c.pair_rate_hz = 20'000.0;
    c.duration_s = 1.05;
    for (auto& d : c.detectors) d = {0.8, 500.0, 30.0, 20'000.0};
    c.amzi.leak_rate_hz = 2000.0;
    const RunOutput a = sample_run(c, {1});
    const RunOutput b = sample_run(c, {1});
    const RunOutput p = sample_run(c, {4});
    CHECK(a.signal.tags == b.signal.tags);
    CHECK(a.idler.tags == b.idler.tags);
    CHECK(a.signal.tags == p.signal.tags);
    CHECK(a.idler.tags == p.idler.tags);
    CHECK(sample_emissions(c, {1}) == sample_emissions(c, {3}));
    c.seed = 99;
    CHECK(sample_run(c).signal.tags != a.signal.tags);
}

TEST_CASE("streams are sorted and respect dead time") {
    RunConfig c = ideal_config();
    c.pair_rate_hz = 200'000.0;
    for (auto& d : c.detectors) d = {0.9, 50'000.0, 50.0, 100'000.0};
    c.duration_s = 0.3;
    const RunOutput run = sample_run(c);
    check_ordering(run.signal, 100'000.0);
    check_ordering(run.idler, 100'000.0);
    CHECK(run.signal.tags.front() >= 0);
    CHECK(run.signal.tags.back() < c.duration_ps());
}

TEST_CASE("stationary tag rate matches the analytic mean") {
    RunConfig c = ideal_config();
    c.pair_rate_hz = 5000.0;
    c.detectors[0] = {0.85, 300.0, 20.0, 0.0};
    c.detectors[1] = {0.6, 700.0, 20.0, 0.0};
    c.duration_s = 2.0;
    const RunOutput run = sample_run(c);
    CHECK(within_sigma(static_cast<double>(run.signal.tags.size()), (5000.0 * 0.85 + 300.0) * 2.0, 5.0));
    CHECK(within_sigma(static_cast<double>(run.idler.tags.size()), (5000.0 * 0.6 + 700.0) * 2.0, 5.0));
}

TEST_CASE("thinning reproduces the square-wave rate profile") {
    RunConfig c = square_config(10e6);
    c.ratio_r = 0.6; // v = 0.882
    c.tps_offset_rad += 0.3;
    c.pair_rate_hz = 50'000.0;
    c.duration_s = 1.0;
    const double T = c.drive.period_ps();
    const std::vector<Picoseconds> emissions = sample_emissions(c);
    double high = 0, low = 0;
    for (const Picoseconds t : emissions) {
        const auto phase = static_cast<double>(coincidence::phase_in_period(t, static_cast<Picoseconds>(T)));
        (phase < T / 2 ? high : low) += 1.0;
    }
    const double rate_high = instantaneous_rate(T / 4, c);
    const double rate_low = instantaneous_rate(3 * T / 4, c);
    const double expected_high = (high + low) * rate_high / (rate_high + rate_low);
    // Binomial split of the total
    const double p = rate_high / (rate_high + rate_low);
    CHECK(std::abs(high - expected_high) < 5.0 * std::sqrt((high + low) * p * (1 - p)));
    CHECK(within_sigma(high + low, 0.5 * (rate_high + rate_low) * c.duration_s, 5.0));
}

TEST_CASE("halving one efficiency halves its correlated tags and the coincidences") {
    RunConfig c = ideal_config();
    c.pair_rate_hz = 20'000.0;
    c.duration_s = 1.0;
    const RunOutput full = sample_run(c);
    c.detectors[0].efficiency = 0.5;
    const RunOutput half = sample_run(c);
    const auto n_full = static_cast<double>(
        coincidence::find_coincidences(full.signal.tags, full.idler.tags, c.window_ps).size());
    const auto n_half = static_cast<double>(
        coincidence::find_coincidences(half.signal.tags, half.idler.tags, c.window_ps).size());
    CHECK(within_sigma(n_half, 0.5 * n_full, 5.0));
    CHECK(within_sigma(static_cast<double>(half.signal.tags.size()), 0.5 * 20'000.0, 5.0));
    CHECK(within_sigma(static_cast<double>(half.idler.tags.size()), 20'000.0, 5.0));
}

TEST_CASE("jitter broadens the delay peak to sqrt(2) sigma") {
    RunConfig c = ideal_config();
    c.pair_rate_hz = 20'000.0;
    c.duration_s = 1.0;
    for (auto& d : c.detectors) d.jitter_sigma_ps = 30.0;
    const RunOutput run = sample_run(c);
    const auto ev = coincidence::find_coincidences(run.signal.tags, run.idler.tags, c.window_ps);
    const auto h = coincidence::delay_histogram(ev, 10, 500);
    // Moment fit of a Gaussian to the binned delays (bin centres).
    double n = 0, sum = 0, sum2 = 0;
    for (std::size_t b = 0; b < h.bin_count(); ++b) {
        const double centre = static_cast<double>(h.bin_low(b)) + 0.5 * static_cast<double>(h.bin_width_ps);
        n += h.counts[b];
        sum += h.counts[b] * centre;
        sum2 += h.counts[b] * centre * centre;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean - 10.0 * 10.0 / 12.0);
    CHECK(sd == Approx(30.0 * std::sqrt(2.0)).epsilon(0.03));
    CHECK(std::abs(mean) < 2.0);
}

TEST_CASE("accidentals between independent dark streams") {
    RunConfig c = ideal_config();
    c.pair_rate_hz = 0.0;
    c.detectors[0].dark_rate_hz = 200'000.0;
    c.detectors[1].dark_rate_hz = 150'000.0;
    c.duration_s = 2.0;
    const RunOutput run = sample_run(c);
    const auto ev = coincidence::find_coincidences(run.signal.tags, run.idler.tags, 10'000);
    const auto h = coincidence::delay_histogram(ev, 100, 10'000);
    const double per_bin = coincidence::estimate_accidentals(h, 500);
    const double expected = 200'000.0 * 150'000.0 * 100e-12 * c.duration_s; // 6 per bin
    const double n_off = static_cast<double>(h.bin_count() - coincidence::peak_bin_count(h, 500));
    CHECK(std::abs(per_bin - expected) < 3.0 * std::sqrt(expected / n_off));
}

TEST_CASE("phase scan with a clean fringe") {
    RunConfig c = ideal_config();
    const double phases[] = {0.0, model::kPi / 2}; // n=2: max, then null
    const auto scan = simulate_phase_scan(c, phases, 5.0);
    REQUIRE(scan.size() == 2);
    CHECK(within_sigma(static_cast<double>(scan[0].coincidences), 500.0, 5.0));
    CHECK(scan[0].singles_signal == scan[0].coincidences);
    CHECK(scan[1].coincidences == 0);
    CHECK_THROWS_AS(simulate_phase_scan(c, phases, 0.0), nli::Error);
}

TEST_CASE("power trace follows the classical fringe") {
    RunConfig c = ideal_config();
    c.interferometer = model::Harmonic::linear;
    c.tps_offset_rad = model::kPi / 3;
    const double times[] = {0.0, 1.0, 2.0};
    const auto trace = sample_power_trace(c, times, 1e12, 1e-3);
    const double mean = 1e9 * 0.5 * (1.0 + std::cos(model::kPi / 3));
    for (const double x : trace) CHECK(std::abs(x - mean) < 5.0 * std::sqrt(mean));
}

TEST_CASE("validation and resource limits") {
    RunConfig c = ideal_config();
    c.duration_s = 0.0;
    try {
        sample_run(c);
        FAIL("expected throw");
    } catch (const nli::Error& e) {
        CHECK(e.kind() == nli::ErrorKind::config);
        CHECK(std::string(e.what()).find("duration_s") != std::string::npos);
    }
    c = ideal_config();
    c.detectors[1].efficiency = 1.5;
    CHECK_THROWS_AS(sample_run(c), nli::Error);
    c = ideal_config();
    c.pair_rate_hz = 1e9;
    c.duration_s = 10.0;
    try {
        sample_run(c);
        FAIL("expected throw");
    } catch (const nli::Error& e) {
        CHECK(e.kind() == nli::ErrorKind::resource);
    }
}
