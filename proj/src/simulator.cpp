#include "nli/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>

#include "nli/coincidence.hpp"
#include "nli/error.hpp"

namespace nli::sim {

namespace {

// Independent random streams derived from the run seed.
enum class Stream : std::uint64_t { chunk = 1, t0 = 2, scan = 3, power = 4 };

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

void check(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::config, what);
}

// |1 + a e^{i theta}|^2 / (1 + R)^2, the pair rate relative to pair_rate_hz.
double relative_rate(double t_ps, const RunConfig& c, double t0_ps) {
    const double volts = waveform_voltage(t_ps, c.drive, t0_ps);
    const double phi_cdm = model::phase_from_voltage(volts, c.modulator);
    const double amplitude = c.ratio_r * model::cdm_transmission(std::abs(phi_cdm), c.modulator);
    const model::FringeParams fp{model::visibility_from_ratio(model::SourceRatio(amplitude)),
                                 model::Harmonic::linear, 0.0};
    const double norm = (1.0 + c.ratio_r) * (1.0 + c.ratio_r);
    return (1.0 + amplitude * amplitude) * 2.0 * model::fringe(biphoton_phase(t_ps, c, t0_ps), fp) /
           norm;
}

struct ChunkOutput {
    std::vector<Picoseconds> tags[2];
    std::vector<Picoseconds> emissions;
};

void push_if_inside(std::vector<Picoseconds>& v, Picoseconds t, Picoseconds duration) {
    if (t >= 0 && t < duration) v.push_back(t);
}

void generate_chunk(const RunConfig& c, double t0_ps, std::size_t index, bool record_emissions,
                    ChunkOutput& out) {
    const Picoseconds duration = c.duration_ps();
    const Picoseconds start = static_cast<Picoseconds>(index) * kChunkPs;
    const double length = static_cast<double>(std::min(start + kChunkPs, duration) - start);
    auto engine = make_engine(c.seed, Stream::chunk, index);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const double peak = max_rate(c);
    if (peak > 0.0) {
        std::exponential_distribution<double> gap(peak / 1e12);
        for (double t = gap(engine); t < length; t += gap(engine)) {
            const double t_abs = static_cast<double>(start) + t;
            if (uniform(engine) * peak >= instantaneous_rate(t_abs, c, t0_ps)) continue;
            if (record_emissions) out.emissions.push_back(start + std::llround(t));
            for (int ch = 0; ch < 2; ++ch) {
                const DetectorModel& d = c.detectors[ch];
                if (uniform(engine) >= d.efficiency) continue;
                double jitter = 0.0;
                if (d.jitter_sigma_ps > 0.0)
                    jitter = std::normal_distribution<double>(0.0, d.jitter_sigma_ps)(engine);
                push_if_inside(out.tags[ch], start + std::llround(t + jitter), duration);
            }
        }
    }

    for (int ch = 0; ch < 2; ++ch) {
        const DetectorModel& d = c.detectors[ch];
        const double rate = d.dark_rate_hz + c.amzi.leak_rate_hz * d.efficiency;
        if (rate <= 0.0) continue;
        std::exponential_distribution<double> gap(rate / 1e12);
        for (double t = gap(engine); t < length; t += gap(engine))
            push_if_inside(out.tags[ch], start + std::llround(t), duration);
    }
}

std::vector<ChunkOutput> generate_all(const RunConfig& c, double t0_ps, bool record_emissions,
                                      SampleOptions opts) {
    const Picoseconds duration = c.duration_ps();
    const auto n_chunks = static_cast<std::size_t>((duration + kChunkPs - 1) / kChunkPs);
    std::vector<ChunkOutput> chunks(n_chunks);

    unsigned threads = opts.threads ? opts.threads : default_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_chunks));
    if (threads <= 1) {
        for (std::size_t k = 0; k < n_chunks; ++k)
            generate_chunk(c, t0_ps, k, record_emissions, chunks[k]);
        return chunks;
    }

    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < n_chunks; k = next++)
                    generate_chunk(c, t0_ps, k, record_emissions, chunks[k]);
            });
    }
    return chunks;
}

void check_capacity(const RunConfig& c) {
    constexpr double kMaxTags = 2147483648.0; // 2^31
    for (const DetectorModel& d : c.detectors) {
        const double expected =
            (max_rate(c) * d.efficiency + d.dark_rate_hz + c.amzi.leak_rate_hz * d.efficiency) *
            c.duration_s;
        if (expected > kMaxTags)
            fail(ErrorKind::resource, "run would produce more than 2^31 tags per channel");
    }
}

// Non-paralyzable dead time: drop tags closer than dead_time to the last kept tag.
void apply_dead_time(std::vector<Picoseconds>& tags, double dead_time_ps) {
    if (tags.empty() || dead_time_ps <= 0.0) return;
    const auto dead = static_cast<Picoseconds>(std::ceil(dead_time_ps));
    std::size_t kept = 1;
    for (std::size_t k = 1; k < tags.size(); ++k) {
        if (tags[k] - tags[kept - 1] >= dead) tags[kept++] = tags[k];
    }
    tags.resize(kept);
}

} // namespace

void RunConfig::validate() const {
    check(std::isfinite(pair_rate_hz) && pair_rate_hz >= 0.0, "pair_rate_hz must be >= 0");
    check(std::isfinite(ratio_r) && ratio_r >= 0.0, "ratio_r must be >= 0");
    check(std::isfinite(phi0_rad), "phi0_rad must be finite");
    check(std::isfinite(tps_offset_rad), "tps_offset_rad must be finite");
    check(std::isfinite(drift_rad_per_s), "drift.rad_per_s must be finite");
    check(std::isfinite(modulator.vpi_v) && modulator.vpi_v > 0.0, "modulator.vpi_v must be > 0");
    check(modulator.alpha_db_per_pi >= 0.0, "modulator.alpha_db_per_pi must be >= 0");
    check(modulator.base_loss_db >= 0.0, "modulator.base_loss_db must be >= 0");
    check(std::isfinite(drive.vpp_v) && std::isfinite(drive.vdc_v), "drive voltages must be finite");
    check(drive.vpp_scale >= 0.0, "drive.vpp_scale must be >= 0");
    if (drive.shape == DriveShape::square)
        check(std::isfinite(drive.freq_hz) && drive.freq_hz > 0.0, "drive.freq_hz must be > 0");
    if (drive.t0_ps) check(std::isfinite(*drive.t0_ps), "drive.t0_ps must be finite");
    check(amzi.leak_rate_hz >= 0.0, "amzi.leak_rate_hz must be >= 0");
    for (const DetectorModel& d : detectors) {
        check(d.efficiency >= 0.0 && d.efficiency <= 1.0, "detectors.efficiency must lie in [0, 1]");
        check(d.dark_rate_hz >= 0.0, "detectors.dark_rate_hz must be >= 0");
        check(d.jitter_sigma_ps >= 0.0, "detectors.jitter_sigma_ps must be >= 0");
        check(d.dead_time_ps >= 0.0, "detectors.dead_time_ps must be >= 0");
    }
    check(window_ps > 0, "window_ps must be > 0");
    check(std::isfinite(duration_s) && duration_s > 0.0, "duration_s must be > 0");
    check(duration_s * 1e12 < 4.0e18, "duration_s exceeds the 64-bit picosecond range");
}

Picoseconds RunConfig::duration_ps() const {
    return std::llround(duration_s * 1e12);
}

double resolve_t0_ps(const RunConfig& c) {
    if (c.drive.t0_ps) return *c.drive.t0_ps;
    if (c.drive.shape != DriveShape::square) return 0.0;
    auto engine = make_engine(c.seed, Stream::t0, 0);
    const double period = c.drive.period_ps();
    return std::uniform_real_distribution<double>(-0.5 * period, 0.5 * period)(engine);
}

double waveform_voltage(double t_ps, const DriveWaveform& w, double t0_ps) {
    if (w.shape == DriveShape::dc) return w.vdc_v;
    const double period = w.period_ps();
    const double cycles = (t_ps - t0_ps) / period;
    const double frac = cycles - std::floor(cycles);
    const double half = 0.5 * w.effective_vpp();
    return frac < 0.5 ? w.vdc_v + half : w.vdc_v - half;
}

double biphoton_phase(double t_ps, const RunConfig& c, double t0_ps) {
    const double pump = model::phase_from_voltage(waveform_voltage(t_ps, c.drive, t0_ps), c.modulator) +
                        c.tps_offset_rad;
    const double transferred =
        c.interferometer == model::Harmonic::nonlinear ? model::pump_phase_transfer(pump) : pump;
    return transferred + c.phi0_rad + c.drift_rad_per_s * (t_ps / 1e12);
}

double instantaneous_rate(double t_ps, const RunConfig& c, double t0_ps) {
    return c.pair_rate_hz * relative_rate(t_ps, c, t0_ps);
}

double instantaneous_rate(double t_ps, const RunConfig& c) {
    return instantaneous_rate(t_ps, c, resolve_t0_ps(c));
}

double max_rate(const RunConfig& c) {
    // The second source's amplitude never exceeds R, so |1 + a e^{i theta}| <= 1 + R.
    return c.pair_rate_hz;
}

unsigned default_threads() {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("NLI_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap > 0) return std::min(hw, static_cast<unsigned>(cap));
    }
    return hw;
}

RunOutput sample_run(const RunConfig& c, SampleOptions opts) {
    c.validate();
    check_capacity(c);
    RunOutput out;
    out.t0_ps = resolve_t0_ps(c);
    std::vector<ChunkOutput> chunks = generate_all(c, out.t0_ps, false, opts);

    TimetagStream* streams[2] = {&out.signal, &out.idler};
    out.signal.channel = kSignalChannel;
    out.idler.channel = kIdlerChannel;
    for (int ch = 0; ch < 2; ++ch) {
        std::size_t total = 0;
        for (const ChunkOutput& chunk : chunks) total += chunk.tags[ch].size();
        std::vector<Picoseconds>& tags = streams[ch]->tags;
        tags.reserve(total);
        for (ChunkOutput& chunk : chunks) {
            tags.insert(tags.end(), chunk.tags[ch].begin(), chunk.tags[ch].end());
            std::vector<Picoseconds>().swap(chunk.tags[ch]);
        }
        std::sort(tags.begin(), tags.end());
        apply_dead_time(tags, c.detectors[ch].dead_time_ps);
    }
    return out;
}

std::vector<Picoseconds> sample_emissions(const RunConfig& c, SampleOptions opts) {
    c.validate();
    check_capacity(c);
    std::vector<ChunkOutput> chunks = generate_all(c, resolve_t0_ps(c), true, opts);
    std::vector<Picoseconds> emissions;
    for (const ChunkOutput& chunk : chunks)
        emissions.insert(emissions.end(), chunk.emissions.begin(), chunk.emissions.end());
    return emissions;
}

std::vector<ScanPoint> simulate_phase_scan(const RunConfig& c, std::span<const double> phases,
                                           double dwell_s, SampleOptions opts) {
    if (!(dwell_s > 0.0)) fail(ErrorKind::domain, "scan dwell must be > 0");
    std::vector<ScanPoint> points;
    points.reserve(phases.size());
    for (std::size_t k = 0; k < phases.size(); ++k) {
        RunConfig step = c;
        step.tps_offset_rad = phases[k];
        step.duration_s = dwell_s;
        step.seed = make_engine(c.seed, Stream::scan, k)();
        const RunOutput run = sample_run(step, opts);
        const auto matches = coincidence::find_coincidences(run.signal.tags, run.idler.tags, c.window_ps);
        points.push_back({phases[k], run.signal.tags.size(), run.idler.tags.size(), matches.size()});
    }
    return points;
}

std::vector<double> sample_power_trace(const RunConfig& c, std::span<const double> times_ps,
                                       double photon_rate_hz, double dwell_s) {
    c.validate();
    if (!(photon_rate_hz >= 0.0) || !(dwell_s > 0.0))
        fail(ErrorKind::domain, "power trace needs photon_rate_hz >= 0 and dwell_s > 0");
    const double t0 = resolve_t0_ps(c);
    auto engine = make_engine(c.seed, Stream::power, 0);
    std::vector<double> counts;
    counts.reserve(times_ps.size());
    for (const double t : times_ps) {
        const double mean = photon_rate_hz * dwell_s * relative_rate(t, c, t0);
        counts.push_back(mean > 0.0
                             ? static_cast<double>(std::poisson_distribution<long long>(mean)(engine))
                             : 0.0);
    }
    return counts;
}

} // namespace nli::sim
