#include "nli/run_document.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "nli/error.hpp"

namespace nli::io {

namespace {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) fail(ErrorKind::config, where() + " must be an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const json& at(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end()) fail(ErrorKind::config, "missing required key '" + qualified(key) + "'");
        return *it;
    }

    double number(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number()) fail(ErrorKind::config, "key '" + qualified(key) + "' must be a number");
        return v.get<double>();
    }

    double number_or(const std::string& key, double fallback) {
        return has(key) ? number(key) : (seen_.insert(key), fallback);
    }

    std::string string(const std::string& key) {
        const json& v = at(key);
        if (!v.is_string()) fail(ErrorKind::config, "key '" + qualified(key) + "' must be a string");
        return v.get<std::string>();
    }

    std::string qualified(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items())
            if (!seen_.count(key)) fail(ErrorKind::config, "unknown key '" + qualified(key) + "'");
    }

private:
    std::string where() const { return path_.empty() ? "run document" : "'" + path_ + "'"; }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

} // namespace

sim::RunConfig parse_run_document(const json& doc) {
    sim::RunConfig c;
    ObjectReader top(doc, "");

    c.pump_wavelength_nm = top.number("pump_wavelength_nm");
    const std::string kind = top.string("interferometer");
    if (kind == "nonlinear") c.interferometer = model::Harmonic::nonlinear;
    else if (kind == "classical") c.interferometer = model::Harmonic::linear;
    else fail(ErrorKind::config, "key 'interferometer' must be \"nonlinear\" or \"classical\"");
    c.pair_rate_hz = top.number("pair_rate_hz");
    c.ratio_r = top.number("ratio_r");
    c.phi0_rad = top.number_or("phi0_rad", 0.0);
    c.tps_offset_rad = top.number("tps_offset_rad");

    {
        ObjectReader m(top.at("modulator"), "modulator");
        c.modulator.vpi_v = m.number("vpi_v");
        c.modulator.alpha_db_per_pi = m.number("alpha_db_per_pi");
        c.modulator.base_loss_db = m.number("base_loss_db");
        m.finish();
    }
    {
        ObjectReader d(top.at("drive"), "drive");
        const std::string shape = d.string("shape");
        if (shape == "square") c.drive.shape = sim::DriveShape::square;
        else if (shape == "dc") c.drive.shape = sim::DriveShape::dc;
        else fail(ErrorKind::config, "key 'drive.shape' must be \"square\" or \"dc\"");
        c.drive.freq_hz = c.drive.shape == sim::DriveShape::square ? d.number("freq_hz")
                                                                    : d.number_or("freq_hz", c.drive.freq_hz);
        c.drive.vpp_v = d.number("vpp_v");
        c.drive.vdc_v = d.number("vdc_v");
        c.drive.vpp_scale = d.number_or("vpp_scale", 1.0);
        // Absent or null: drawn from the seed at run time.
        if (d.has("t0_ps") && !d.at("t0_ps").is_null()) c.drive.t0_ps = d.number("t0_ps");
        d.finish();
    }
    {
        ObjectReader l(top.at("losses"), "losses");
        const json& spirals = l.at("spiral_db");
        if (!spirals.is_array() || spirals.size() != 2 || !spirals[0].is_number() || !spirals[1].is_number())
            fail(ErrorKind::config, "key 'losses.spiral_db' must be an array of two numbers");
        c.losses.spiral_db[0] = spirals[0].get<double>();
        c.losses.spiral_db[1] = spirals[1].get<double>();
        c.losses.routing_db = l.number("routing_db");
        c.losses.coupling_db = l.number("coupling_db");
        l.finish();
    }
    {
        ObjectReader a(top.at("amzi"), "amzi");
        c.amzi.delta_l_um = a.number("delta_l_um");
        c.amzi.fsr_nm = a.number("fsr_nm");
        c.amzi.extinction_db = a.number("extinction_db");
        c.amzi.leak_rate_hz = a.number("leak_rate_hz");
        a.finish();
    }
    {
        const json& dets = top.at("detectors");
        if (!dets.is_array() || dets.size() != 2)
            fail(ErrorKind::config, "key 'detectors' must be an array of two detector objects");
        for (int ch = 0; ch < 2; ++ch) {
            ObjectReader d(dets[static_cast<std::size_t>(ch)], "detectors[" + std::to_string(ch) + "]");
            c.detectors[ch].efficiency = d.number("efficiency");
            c.detectors[ch].dark_rate_hz = d.number("dark_rate_hz");
            c.detectors[ch].jitter_sigma_ps = d.number("jitter_sigma_ps");
            c.detectors[ch].dead_time_ps = d.number("dead_time_ps");
            d.finish();
        }
    }

    const json& window = top.at("window_ps");
    if (!window.is_number_integer()) fail(ErrorKind::config, "key 'window_ps' must be an integer");
    c.window_ps = window.get<Picoseconds>();
    c.duration_s = top.number("duration_s");

    const json& seed = top.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
        fail(ErrorKind::config, "key 'seed' must be a non-negative integer");
    c.seed = seed.get<std::uint64_t>();

    if (top.has("drift")) {
        ObjectReader d(top.at("drift"), "drift");
        c.drift_rad_per_s = d.number("rad_per_s");
        d.finish();
    }
    top.finish();

    c.validate();
    return c;
}

sim::RunConfig load_run_document(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config, path.string() + ": " + e.what());
    }
    return parse_run_document(doc);
}

json to_run_document(const sim::RunConfig& c) {
    json drive = {{"shape", c.drive.shape == sim::DriveShape::square ? "square" : "dc"},
                  {"freq_hz", c.drive.freq_hz},
                  {"vpp_v", c.drive.vpp_v},
                  {"vdc_v", c.drive.vdc_v},
                  {"vpp_scale", c.drive.vpp_scale}};
    if (c.drive.t0_ps) drive["t0_ps"] = *c.drive.t0_ps;

    json detectors = json::array();
    for (const auto& d : c.detectors)
        detectors.push_back({{"efficiency", d.efficiency},
                             {"dark_rate_hz", d.dark_rate_hz},
                             {"jitter_sigma_ps", d.jitter_sigma_ps},
                             {"dead_time_ps", d.dead_time_ps}});

    return {
        {"pump_wavelength_nm", c.pump_wavelength_nm},
        {"interferometer", c.interferometer == model::Harmonic::nonlinear ? "nonlinear" : "classical"},
        {"pair_rate_hz", c.pair_rate_hz},
        {"ratio_r", c.ratio_r},
        {"phi0_rad", c.phi0_rad},
        {"tps_offset_rad", c.tps_offset_rad},
        {"modulator",
         {{"vpi_v", c.modulator.vpi_v},
          {"alpha_db_per_pi", c.modulator.alpha_db_per_pi},
          {"base_loss_db", c.modulator.base_loss_db}}},
        {"drive", drive},
        {"losses",
         {{"spiral_db", {c.losses.spiral_db[0], c.losses.spiral_db[1]}},
          {"routing_db", c.losses.routing_db},
          {"coupling_db", c.losses.coupling_db}}},
        {"amzi",
         {{"delta_l_um", c.amzi.delta_l_um},
          {"fsr_nm", c.amzi.fsr_nm},
          {"extinction_db", c.amzi.extinction_db},
          {"leak_rate_hz", c.amzi.leak_rate_hz}}},
        {"detectors", detectors},
        {"window_ps", c.window_ps},
        {"duration_s", c.duration_s},
        {"seed", c.seed},
        {"drift", {{"rad_per_s", c.drift_rad_per_s}}},
    };
}

} // namespace nli::io
