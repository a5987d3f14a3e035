#pragma once

// The three CLI commands as library calls. Each returns a process exit code
// from the fixed table below and writes diagnostics to `err`.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>

#include "nli/coincidence.hpp"
#include "nli/error.hpp"
#include "nli/timetag.hpp"

namespace nli::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitIo = 3,
    kExitFormat = 4,
    kExitEmpty = 5,
    kExitAmbiguous = 6,
};

int exit_code_for(ErrorKind kind);

struct SimulateOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    std::optional<double> vpp_v; // overrides drive.vpp_v, for manual Vpi/2 searches
};

// Prints a one-line JSON summary to `out`.
int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);

struct AnalyzeOptions {
    std::filesystem::path tags;
    Picoseconds period_ps = 0;
    Picoseconds window_ps = 10'000;   // coincidence window, also the delay-histogram range
    Picoseconds bin_width_ps = 100;   // delay-histogram bin width
    Picoseconds peak_ps = 500;        // half-width of the coincidence peak
    std::size_t bins = 0;             // fold bins; 0 picks a default from the period
    std::size_t sweep_steps = 101;
    std::filesystem::path out_dir = ".";
};

// 64 bins, halved until each bin spans at least 50 ps (16 bins at 1 GHz).
std::size_t default_fold_bins(Picoseconds period_ps);

struct AnalysisReport {
    std::size_t coincidences = 0;      // all matches within the window
    std::size_t peak_coincidences = 0; // matches whose delay lies in the peak bins
    coincidence::DelayHistogram delays;
    double accidentals_per_bin = 0.0;  // per delay-histogram bin
    std::size_t peak_bins = 0;
    double accidentals_per_state = 0.0;
    double accidentals_sigma = 0.0;
    coincidence::OffsetSweep sweep;
    Picoseconds offset_ps = 0;         // offset the fold is normalised to
    bool states_swapped = false;       // drive high state fell in the second half of the sweep
    coincidence::FoldedHistogram folded;
    coincidence::VisibilityResult raw;
    coincidence::VisibilityResult corrected;
};

// The analysis pipeline on in-memory streams. Throws nli::Error.
AnalysisReport analyze_streams(std::span<const Picoseconds> signal, std::span<const Picoseconds> idler,
                               const AnalyzeOptions& opts);

// Reads a timetag file, runs analyze_streams on channels 0 and 1 and writes
// delay_histogram.csv, offset_sweep.csv, folded_high_low.csv and visibility.json.
int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err);

struct ScanOptions {
    std::filesystem::path config;
    std::size_t points = 32;
    double dwell_s = 1.0;
    std::filesystem::path out_dir = ".";
};

// Writes fringe.csv and fit.json.
int cmd_scan(const ScanOptions& opts, std::ostream& out, std::ostream& err);

} // namespace nli::cli
