#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "nli/run_document.hpp"
#include "nli/timetag_file.hpp"
#include "support/configs.hpp"

using namespace nli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("nli_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct Run {
    int status;
    std::string out;
    std::string err;
};

Run nli_run(const TempDir& dir, const std::string& args) {
    const fs::path out = dir.path / "stdout.txt", err = dir.path / "stderr.txt";
    const std::string cmd = std::string(NLI_BINARY) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

fs::path write_config(const TempDir& dir, const std::string& name, const nlohmann::json& doc) {
    const fs::path p = dir.path / name;
    std::ofstream(p) << doc.dump(2);
    return p;
}

sim::RunConfig scan_config(model::Harmonic n, double ratio) {
    sim::RunConfig c = testing::ideal_config();
    c.interferometer = n;
    c.pair_rate_hz = 400.0;
    c.ratio_r = ratio;
    c.seed = 11;
    return c;
}

} // namespace

TEST_CASE("simulate") {
    TempDir dir;
    sim::RunConfig c = testing::square_config(1e7);
    c.pair_rate_hz = 1000.0;
    const nlohmann::json doc = io::to_run_document(c);
    const fs::path cfg = write_config(dir, "run.json", doc);

    const Run ok = nli_run(dir, "simulate " + cfg.string() + " " + (dir.path / "run.nltt").string());
    CHECK(ok.status == 0);
    const auto summary = nlohmann::json::parse(ok.out);
    CHECK(summary["command"] == "simulate");
    CHECK(summary["tags"].size() == 2);
    const auto streams = io::read_timetag_file(dir.path / "run.nltt");
    CHECK(summary["tags"][0] == streams[0].tags.size());

    nlohmann::json no_seed = doc;
    no_seed.erase("seed");
    const Run missing = nli_run(dir, "simulate " + write_config(dir, "a.json", no_seed).string() + " x.nltt");
    CHECK(missing.status == 2);
    CHECK(missing.err.find("seed") != std::string::npos);

    nlohmann::json zero = doc;
    zero["duration_s"] = 0.0;
    CHECK(nli_run(dir, "simulate " + write_config(dir, "b.json", zero).string() + " x.nltt").status == 2);

    CHECK(nli_run(dir, "simulate " + (dir.path / "absent.json").string() + " x.nltt").status == 3);
    CHECK(nli_run(dir, "simulate " + cfg.string() + " " + (dir.path / "no/such/dir/x.nltt").string()).status == 3);
    CHECK(nli_run(dir, "simulate").status == 2);
}

TEST_CASE("analyze") {
    TempDir dir;
    sim::RunConfig c = testing::square_config(1e7);
    c.pair_rate_hz = 2000.0;
    c.amzi.leak_rate_hz = 5000.0;
    c.ratio_r = 0.8;
    const fs::path cfg = write_config(dir, "run.json", io::to_run_document(c));
    const fs::path tags = dir.path / "run.nltt";
    REQUIRE(nli_run(dir, "simulate " + cfg.string() + " " + tags.string()).status == 0);

    const std::array<std::string, 4> outputs{"delay_histogram.csv", "offset_sweep.csv", "folded_high_low.csv",
                                             "visibility.json"};
    for (const char* sub : {"a", "b"}) {
        const Run r = nli_run(dir, "analyze " + tags.string() + " --period-ps 100000 --out-dir " +
                                       (dir.path / sub).string());
        REQUIRE(r.status == 0);
        for (const auto& f : outputs) CHECK(fs::exists(dir.path / sub / f));
    }
    for (const auto& f : outputs) CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));

    const auto vis = nlohmann::json::parse(slurp(dir.path / "a" / "visibility.json"));
    CHECK(vis["raw"]["v"].get<double>() > 0.5);
    CHECK(vis["corrected"]["v"].get<double>() >= vis["raw"]["v"].get<double>());
    CHECK(slurp(dir.path / "a" / "offset_sweep.csv").rfind("offset_ps,", 0) == 0);

    sim::RunConfig dark = c;
    dark.pair_rate_hz = 0.0;
    dark.amzi.leak_rate_hz = 0.0;
    dark.detectors[0].dark_rate_hz = dark.detectors[1].dark_rate_hz = 1000.0;
    const fs::path dark_tags = dir.path / "dark.nltt";
    REQUIRE(nli_run(dir, "simulate " + write_config(dir, "dark.json", io::to_run_document(dark)).string() + " " +
                             dark_tags.string())
                .status == 0);
    CHECK(nli_run(dir, "analyze " + dark_tags.string() + " --period-ps 100000 --out-dir " + dir.path.string())
              .status == 5);

    std::string bytes = slurp(tags);
    bytes[0] = 'X';
    std::ofstream(dir.path / "bad.nltt", std::ios::binary) << bytes;
    CHECK(nli_run(dir, "analyze " + (dir.path / "bad.nltt").string() + " --period-ps 100000").status == 4);
    CHECK(nli_run(dir, "analyze " + (dir.path / "none.nltt").string() + " --period-ps 100000").status == 3);
    CHECK(nli_run(dir, "analyze " + tags.string() + " --period-ps -5").status == 2);
}

TEST_CASE("scan picks the harmonic") {
    TempDir dir;
    struct Case {
        model::Harmonic n;
        double ratio;
        int status;
        int chosen;
    };
    for (const Case k : {Case{model::Harmonic::nonlinear, 0.82, 0, 2}, Case{model::Harmonic::linear, 0.9, 0, 1},
                         Case{model::Harmonic::nonlinear, 0.0, 6, 0}}) {
        const fs::path cfg = write_config(dir, "scan.json", io::to_run_document(scan_config(k.n, k.ratio)));
        const fs::path out = dir.path / ("scan" + std::to_string(k.chosen));
        const Run r = nli_run(dir, "scan " + cfg.string() + " --out-dir " + out.string());
        CHECK(r.status == k.status);
        if (k.status != 0) continue;
        const auto fit = nlohmann::json::parse(slurp(out / "fit.json"));
        CHECK(fit["n"] == k.chosen);
        CHECK(slurp(out / "fringe.csv").rfind("phase_rad,", 0) == 0);
    }
}
