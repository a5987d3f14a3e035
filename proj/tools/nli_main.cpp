// nli: simulate, analyze and scan two-source nonlinear interferometer runs.

#include <iostream>

#include <CLI11.hpp>

#include "nli/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Two-source nonlinear interferometer simulator and timetag analyzer"};
    app.require_subcommand(1);

    nli::cli::SimulateOptions sim_opts;
    std::string sim_config, sim_out;
    double vpp = 0.0;
    auto* simulate = app.add_subcommand("simulate", "Generate a timetag file from a run document");
    simulate->add_option("config", sim_config, "Run document (JSON)")->required();
    simulate->add_option("out", sim_out, "Output timetag file")->required();
    auto* vpp_opt = simulate->add_option("--vpp-v", vpp, "Override drive.vpp_v");

    nli::cli::AnalyzeOptions an_opts;
    std::string an_tags, an_out = ".";
    auto* analyze = app.add_subcommand("analyze", "Coincidence, folding and visibility analysis");
    analyze->add_option("tags", an_tags, "Timetag file")->required();
    analyze->add_option("--period-ps", an_opts.period_ps, "Drive period in ps")->required();
    analyze->add_option("--window-ps", an_opts.window_ps, "Coincidence window / histogram range in ps")
        ->capture_default_str();
    analyze->add_option("--bin-width-ps", an_opts.bin_width_ps, "Delay histogram bin width in ps")
        ->capture_default_str();
    analyze->add_option("--peak-ps", an_opts.peak_ps, "Half-width of the coincidence peak in ps")
        ->capture_default_str();
    analyze->add_option("--bins", an_opts.bins, "Fold bins (default: 64, fewer for short periods)");
    analyze->add_option("--sweep-steps", an_opts.sweep_steps, "Offset sweep steps")->capture_default_str();
    analyze->add_option("--out-dir", an_out, "Directory for CSV/JSON outputs")->capture_default_str();

    nli::cli::ScanOptions scan_opts;
    std::string scan_config, scan_out = ".";
    auto* scan = app.add_subcommand("scan", "Simulate a thermo-optic phase scan and fit the fringe");
    scan->add_option("config", scan_config, "Run document (JSON)")->required();
    scan->add_option("--points", scan_opts.points, "Scan points over [0, 2pi)")->capture_default_str();
    scan->add_option("--dwell-s", scan_opts.dwell_s, "Dwell per point in s")->capture_default_str();
    scan->add_option("--out-dir", scan_out, "Directory for fringe.csv and fit.json")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return nli::cli::kExitConfig;
    }

    if (*simulate) {
        sim_opts.config = sim_config;
        sim_opts.out = sim_out;
        if (*vpp_opt) sim_opts.vpp_v = vpp;
        return nli::cli::cmd_simulate(sim_opts, std::cout, std::cerr);
    }
    if (*analyze) {
        an_opts.tags = an_tags;
        an_opts.out_dir = an_out;
        return nli::cli::cmd_analyze(an_opts, std::cout, std::cerr);
    }
    scan_opts.config = scan_config;
    scan_opts.out_dir = scan_out;
    return nli::cli::cmd_scan(scan_opts, std::cout, std::cerr);
}
