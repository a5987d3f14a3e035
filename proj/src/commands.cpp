#include "nli/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "nli/analysis.hpp"
#include "nli/run_document.hpp"
#include "nli/simulator.hpp"
#include "nli/timetag_file.hpp"

namespace nli::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Shortest round-trip representation; independent of the C/C++ locale.
std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string fmt(std::int64_t x) { return std::to_string(x); }
std::string fmt(std::uint64_t x) { return std::to_string(x); }

class CsvFile {
public:
    CsvFile(const fs::path& path, std::initializer_list<const char*> header) : path_(path), out_(path) {
        if (!out_) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
        row(std::vector<std::string>(header.begin(), header.end()));
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
        out_ << '\n';
    }

    void close() {
        out_.close();
        if (!out_) fail(ErrorKind::io, "write to " + path_.string() + " failed");
    }

private:
    fs::path path_;
    std::ofstream out_;
};

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    out << doc.dump(2) << '\n';
    out.close();
    if (!out) fail(ErrorKind::io, "write to " + path.string() + " failed");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
}

json visibility_json(const coincidence::VisibilityResult& r) {
    return {{"c_high", r.c_high}, {"c_low", r.c_low}, {"v", r.v}, {"sigma_v", r.sigma_v},
            {"accidentals_per_state", r.accidentals_per_state}};
}

json fit_json(const analysis::FringeFit& f) {
    return {{"n", model::order(f.harmonic)},
            {"v", f.visibility.value},
            {"sigma_v", f.visibility.sigma},
            {"phi0_rad", f.phase_offset.value},
            {"sigma_phi0_rad", f.phase_offset.sigma},
            {"amplitude", f.amplitude.value},
            {"sigma_amplitude", f.amplitude.sigma},
            {"residual_rms", f.residual_rms},
            {"in_range", f.in_range}};
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::bad_alloc&) {
        err << "error: out of memory\n";
        return kExitIo;
    }
}

Picoseconds wrap_centered(Picoseconds t, Picoseconds period) {
    Picoseconds r = coincidence::phase_in_period(t, period);
    if (2 * r >= period) r -= period;
    return r;
}

void validate(const AnalyzeOptions& o) {
    const auto bad = [](const std::string& what) { fail(ErrorKind::config, what); };
    if (o.period_ps <= 0) bad("--period-ps must be > 0");
    if (o.window_ps <= 0) bad("--window-ps must be > 0");
    if (o.bin_width_ps <= 0 || (2 * o.window_ps) % o.bin_width_ps != 0)
        bad("--bin-width-ps must be > 0 and divide twice --window-ps");
    if (o.peak_ps < 0 || o.peak_ps >= o.window_ps) bad("--peak-ps must lie in [0, --window-ps)");
    if (o.bins != 0 && o.bins % 2 != 0) bad("--bins must be even");
    if (o.sweep_steps < 3) bad("--sweep-steps must be >= 3");
}

} // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config:
    case ErrorKind::domain:
    case ErrorKind::resource: return kExitConfig;
    case ErrorKind::io: return kExitIo;
    case ErrorKind::format:
    case ErrorKind::contract: return kExitFormat;
    case ErrorKind::empty_result:
    case ErrorKind::undefined_visibility:
    case ErrorKind::over_subtraction: return kExitEmpty;
    case ErrorKind::singular_fit:
    case ErrorKind::ambiguous_harmonic: return kExitAmbiguous;
    }
    return 1;
}

std::size_t default_fold_bins(Picoseconds period_ps) {
    std::size_t bins = 64;
    while (bins > 2 && period_ps / static_cast<Picoseconds>(bins) < 50) bins /= 2;
    return bins;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        sim::RunConfig config = io::load_run_document(opts.config);
        if (opts.vpp_v) {
            config.drive.vpp_v = *opts.vpp_v;
            config.validate();
        }
        const sim::RunOutput run = sim::sample_run(config);
        const TimetagStream streams[] = {run.signal, run.idler};
        io::write_timetag_file(opts.out, streams);

        json summary = {{"command", "simulate"},
                        {"out", opts.out.string()},
                        {"duration_s", config.duration_s},
                        {"t0_ps", run.t0_ps},
                        {"tags", {run.signal.tags.size(), run.idler.tags.size()}},
                        {"rates_hz",
                         {static_cast<double>(run.signal.tags.size()) / config.duration_s,
                          static_cast<double>(run.idler.tags.size()) / config.duration_s}}};
        out << summary.dump() << '\n';
        return kExitOk;
    });
}

AnalysisReport analyze_streams(std::span<const Picoseconds> signal, std::span<const Picoseconds> idler,
                               const AnalyzeOptions& opts) {
    validate(opts);
    const Picoseconds period = opts.period_ps;
    const std::size_t bins = opts.bins ? opts.bins : default_fold_bins(period);

    AnalysisReport rep;
    const std::vector<coincidence::CoincidenceEvent> events =
        coincidence::find_coincidences(signal, idler, opts.window_ps);
    rep.coincidences = events.size();
    if (events.empty()) fail(ErrorKind::empty_result, "no coincidences found");

    rep.delays = coincidence::delay_histogram(events, opts.bin_width_ps, opts.window_ps);
    rep.accidentals_per_bin = coincidence::estimate_accidentals(rep.delays, opts.peak_ps);
    rep.peak_bins = coincidence::peak_bin_count(rep.delays, opts.peak_ps);
    const double off_bins = static_cast<double>(rep.delays.bin_count() - rep.peak_bins);
    rep.accidentals_per_state = 0.5 * rep.accidentals_per_bin * static_cast<double>(rep.peak_bins);
    rep.accidentals_sigma =
        0.5 * std::sqrt(rep.accidentals_per_bin / off_bins) * static_cast<double>(rep.peak_bins);

    // Keep the matches that land in bins touching the peak window, the same
    // bins the accidental estimate is scaled to.
    std::vector<coincidence::CoincidenceEvent> peak;
    peak.reserve(events.size());
    for (const auto& e : events) {
        const std::int64_t b = rep.delays.bin_of(e.delay_ps);
        if (b < 0) continue;
        const auto bin = static_cast<std::size_t>(b);
        if (rep.delays.bin_low(bin) <= opts.peak_ps && rep.delays.bin_high(bin) - 1 >= -opts.peak_ps)
            peak.push_back(e);
    }
    rep.peak_coincidences = peak.size();
    if (peak.empty()) fail(ErrorKind::empty_result, "no coincidences inside the peak window");

    rep.sweep = coincidence::offset_sweep(peak, period, opts.sweep_steps);

    // A drive offset beyond T/4 puts the high state in the second half of the
    // fold; the sweep then bottoms out instead of peaking.
    std::size_t worst = 0;
    for (std::size_t k = 1; k < rep.sweep.points.size(); ++k)
        if (rep.sweep.points[k].result.v < rep.sweep.points[worst].result.v) worst = k;
    const double v_best = rep.sweep.best_point().result.v;
    const double v_worst = rep.sweep.points[worst].result.v;
    if (-v_worst > v_best) {
        rep.states_swapped = true;
        rep.offset_ps = wrap_centered(rep.sweep.points[worst].offset_ps + period / 2, period);
    } else {
        rep.offset_ps = rep.sweep.best_point().offset_ps;
    }

    rep.folded = coincidence::fold_midpoints(peak, period, rep.offset_ps, bins);
    rep.raw = coincidence::visibility_from_fold(rep.folded);
    rep.corrected =
        coincidence::background_subtract(rep.raw, rep.accidentals_per_state, rep.accidentals_sigma);
    return rep;
}

int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        validate(opts);
        const std::vector<TimetagStream> streams = io::read_timetag_file(opts.tags);
        if (streams.size() < 2) fail(ErrorKind::format, opts.tags.string() + ": needs at least 2 channels");
        const AnalysisReport rep = analyze_streams(streams[0].tags, streams[1].tags, opts);
        ensure_dir(opts.out_dir);

        CsvFile delays(opts.out_dir / "delay_histogram.csv",
                       {"delay_low_ps", "delay_high_ps", "counts", "in_peak"});
        for (std::size_t b = 0; b < rep.delays.bin_count(); ++b) {
            const bool in_peak = rep.delays.bin_low(b) <= opts.peak_ps &&
                                 rep.delays.bin_high(b) - 1 >= -opts.peak_ps;
            delays.row({fmt(rep.delays.bin_low(b)), fmt(rep.delays.bin_high(b)),
                        fmt(rep.delays.counts[b]), in_peak ? "1" : "0"});
        }
        delays.close();

        CsvFile sweep(opts.out_dir / "offset_sweep.csv",
                      {"offset_ps", "v", "sigma_v", "v_corrected", "sigma_v_corrected"});
        for (const auto& p : rep.sweep.points) {
            double vc = std::numeric_limits<double>::quiet_NaN();
            double sc = vc;
            try {
                const auto c = coincidence::background_subtract(p.result, rep.accidentals_per_state,
                                                                rep.accidentals_sigma);
                vc = c.v;
                sc = c.sigma_v;
            } catch (const Error&) {
            }
            sweep.row({fmt(p.offset_ps), fmt(p.result.v), fmt(p.result.sigma_v), fmt(vc), fmt(sc)});
        }
        sweep.close();

        const std::size_t n_bins = rep.folded.bin_count();
        const double background_per_bin =
            2.0 * rep.accidentals_per_state / static_cast<double>(n_bins);
        CsvFile folded(opts.out_dir / "folded_high_low.csv",
                       {"bin", "phase_low_ps", "phase_high_ps", "state", "counts",
                        "counts_background_subtracted"});
        const auto period = static_cast<double>(opts.period_ps);
        for (std::size_t b = 0; b < n_bins; ++b) {
            const double lo = period * static_cast<double>(b) / static_cast<double>(n_bins);
            const double hi = period * static_cast<double>(b + 1) / static_cast<double>(n_bins);
            const double c = static_cast<double>(rep.folded.counts[b]);
            folded.row({fmt(static_cast<std::uint64_t>(b)), fmt(lo), fmt(hi),
                        2 * b < n_bins ? "high" : "low", fmt(rep.folded.counts[b]),
                        fmt(c - background_per_bin)});
        }
        folded.close();

        json vis = {{"period_ps", opts.period_ps},
                    {"window_ps", opts.window_ps},
                    {"peak_halfwidth_ps", opts.peak_ps},
                    {"fold_bins", n_bins},
                    {"offset_ps", rep.offset_ps},
                    {"states_swapped", rep.states_swapped},
                    {"coincidences", rep.coincidences},
                    {"peak_coincidences", rep.peak_coincidences},
                    {"accidentals_per_bin", rep.accidentals_per_bin},
                    {"accidentals_per_state", rep.accidentals_per_state},
                    {"accidentals_sigma", rep.accidentals_sigma},
                    {"raw", visibility_json(rep.raw)},
                    {"corrected", visibility_json(rep.corrected)}};
        write_json(opts.out_dir / "visibility.json", vis);
        out << json{{"command", "analyze"}, {"v_raw", rep.raw.v}, {"v_corrected", rep.corrected.v}}.dump()
            << '\n';
        return kExitOk;
    });
}

int cmd_scan(const ScanOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opts.points < 5) fail(ErrorKind::config, "--points must be >= 5");
        if (!(opts.dwell_s > 0.0)) fail(ErrorKind::config, "--dwell-s must be > 0");
        const sim::RunConfig config = io::load_run_document(opts.config);

        std::vector<double> phases(opts.points);
        for (std::size_t k = 0; k < opts.points; ++k)
            phases[k] = model::kTwoPi * static_cast<double>(k) / static_cast<double>(opts.points);
        const std::vector<sim::ScanPoint> scan = sim::simulate_phase_scan(config, phases, opts.dwell_s);

        ensure_dir(opts.out_dir);
        CsvFile csv(opts.out_dir / "fringe.csv", {"phase_rad", "singles_s", "singles_i", "coincidences"});
        std::vector<double> coincidences, singles;
        for (const auto& p : scan) {
            csv.row({fmt(p.phase_rad), fmt(p.singles_signal), fmt(p.singles_idler), fmt(p.coincidences)});
            coincidences.push_back(static_cast<double>(p.coincidences));
            singles.push_back(static_cast<double>(p.singles_signal));
        }
        csv.close();

        const analysis::HarmonicChoice choice = analysis::select_harmonic(phases, coincidences);
        const analysis::FringeFit& best = choice.chosen();
        json fit = fit_json(best);
        fit["fit_n1"] = fit_json(choice.linear);
        fit["fit_n2"] = fit_json(choice.nonlinear);

        const double singles_v = analysis::contrast(singles);
        fit["singles_visibility"] = singles_v;
        if (singles_v > 0.0) {
            const std::pair<std::string, double> losses[] = {
                {"spiral_1", config.losses.spiral_db[0]},
                {"spiral_2", config.losses.spiral_db[1]},
                {"routing", config.losses.routing_db},
                {"coupling", config.losses.coupling_db}};
            const analysis::LossBudget budget = analysis::loss_budget(singles_v, losses);
            json components = json::object();
            for (const auto& [name, db] : budget.components) components[name] = db;
            fit["loss_budget"] = {{"total_db", budget.total_db},
                                  {"components_db", components},
                                  {"residual_db", budget.residual_db}};
        }
        write_json(opts.out_dir / "fit.json", fit);
        out << json{{"command", "scan"}, {"n", model::order(best.harmonic)}, {"v", best.visibility.value}}
                   .dump()
            << '\n';
        return kExitOk;
    });
}

} // namespace nli::cli
