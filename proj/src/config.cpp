#include "anc/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

namespace anc {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& section,
                  const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + key + "' in section '" + section + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + key + "'");
    }
}

WeightProfile parse_profile(const json& j, const std::string& name) {
    WeightProfile p;
    if (!j.is_array()) throw ConfigError("config: profile '" + name + "' must be an array");
    for (const auto& bp : j) {
        if (!bp.is_array() || bp.size() != 2)
            throw ConfigError("config: profile '" + name + "' entries must be [freq, value]");
        p.breakpoints.emplace_back(bp[0].get<double>(), bp[1].get<double>());
    }
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError("config: profile '" + name + "': " + e.what());
    }
    return p;
}

MismatchSpec parse_mismatch(const json& j) {
    require_keys(j, "sim.mismatch",
                 {"gain_perturbation_db", "delay_perturbation_samples", "tap_noise_rel", "seed"});
    MismatchSpec m;
    m.gain_perturbation_db = get_or<std::vector<double>>(j, "gain_perturbation_db", {});
    m.delay_perturbation_samples = get_or<std::vector<int>>(j, "delay_perturbation_samples", {});
    m.tap_noise_rel = get_or<double>(j, "tap_noise_rel", 0.0);
    m.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (m.tap_noise_rel < 0) throw ConfigError("config: tap_noise_rel must be >= 0");
    return m;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config: cannot open " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    require_keys(j, "<root>", {"plant", "design", "noise", "sim", "output"});

    RunConfig cfg;
    if (j.contains("plant")) {
        const json& p = j["plant"];
        require_keys(p, "plant",
                     {"num_loudspeakers", "sample_rate", "ir_length", "speaker_delays",
                      "lowpass_corner_hz", "min_resonances", "max_resonances",
                      "resonance_freq_lo_hz", "resonance_freq_hi_hz", "primary_drum_delay",
                      "primary_mic_delay", "seed"});
        cfg.plant.num_loudspeakers = get_or<int>(p, "num_loudspeakers", 2);
        cfg.plant.sample_rate = get_or<double>(p, "sample_rate", 16000.0);
        cfg.plant.ir_length = get_or<int>(p, "ir_length", 256);
        cfg.plant.speaker_delays = get_or<std::vector<int>>(p, "speaker_delays", {});
        cfg.plant.lowpass_corner_hz = get_or<double>(p, "lowpass_corner_hz", 1000.0);
        cfg.plant.min_resonances = get_or<int>(p, "min_resonances", 1);
        cfg.plant.max_resonances = get_or<int>(p, "max_resonances", 3);
        cfg.plant.resonance_freq_lo_hz = get_or<double>(p, "resonance_freq_lo_hz", 60.0);
        cfg.plant.resonance_freq_hi_hz = get_or<double>(p, "resonance_freq_hi_hz", 500.0);
        cfg.plant.primary_drum_delay = get_or<int>(p, "primary_drum_delay", 12);
        cfg.plant.primary_mic_delay = get_or<int>(p, "primary_mic_delay", 6);
        cfg.plant_seed = get_or<std::uint64_t>(p, "seed", 1);
        if (cfg.plant.num_loudspeakers < 1)
            throw ConfigError("config: plant.num_loudspeakers must be >= 1");
        if (cfg.plant.primary_mic_delay >= cfg.plant.primary_drum_delay)
            throw ConfigError("config: primary_mic_delay must be < primary_drum_delay");
    }
    if (j.contains("design")) {
        const json& d = j["design"];
        require_keys(d, "design",
                     {"L", "N", "l_dft", "rho", "varrho", "channels", "profiles", "multi_start",
                      "solver_seed"});
        cfg.design.num_channels = get_or<int>(d, "L", 2);
        cfg.design.taps_per_channel = get_or<int>(d, "N", 64);
        cfg.design.l_dft = get_or<int>(d, "l_dft", 8192);
        cfg.design.stability.rho = get_or<double>(d, "rho", 0.8);
        cfg.design.stability.varrho = get_or<double>(d, "varrho", 2.0);
        cfg.design.channels = get_or<std::vector<int>>(d, "channels", {});
        cfg.design.solver.multi_start = get_or<int>(d, "multi_start", 0);
        cfg.design.solver.seed = get_or<std::uint64_t>(d, "solver_seed", 1);
        try {
            cfg.design.stability.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        if (cfg.design.l_dft < 2 || cfg.design.l_dft % 2 != 0)
            throw ConfigError("config: design.l_dft must be a positive even integer");
        if (cfg.design.taps_per_channel < 1) throw ConfigError("config: design.N must be >= 1");
        if (j.contains("design") && d.contains("profiles")) {
            require_keys(d["profiles"], "design.profiles", {"g1", "g2", "g3"});
            if (d["profiles"].contains("g1")) cfg.design.g1 = parse_profile(d["profiles"]["g1"], "g1");
            if (d["profiles"].contains("g2")) cfg.design.g2 = parse_profile(d["profiles"]["g2"], "g2");
            if (d["profiles"].contains("g3")) cfg.design.g3 = parse_profile(d["profiles"]["g3"], "g3");
        }
    }
    if (j.contains("noise")) {
        const json& n = j["noise"];
        require_keys(n, "noise", {"duration_s", "seed", "source_spectrum", "drum_noise_rel"});
        cfg.noise.duration_s = get_or<double>(n, "duration_s", 10.0);
        cfg.noise.seed = get_or<std::uint64_t>(n, "seed", 7);
        cfg.noise.source_spectrum = get_or<std::string>(n, "source_spectrum", "white");
        cfg.noise.drum_noise_rel = get_or<double>(n, "drum_noise_rel", 0.0);
        if (!(cfg.noise.duration_s > 0)) throw ConfigError("config: noise.duration_s must be > 0");
        if (cfg.noise.source_spectrum != "white" && cfg.noise.source_spectrum != "pink")
            throw ConfigError("config: noise.source_spectrum must be white or pink");
    }
    if (j.contains("sim")) {
        require_keys(j["sim"], "sim", {"mismatch"});
        if (j["sim"].contains("mismatch")) cfg.sim.mismatch = parse_mismatch(j["sim"]["mismatch"]);
    }
    if (j.contains("output")) {
        require_keys(j["output"], "output", {"directory"});
        cfg.output_directory = get_or<std::string>(j["output"], "directory", "out");
    }
    return cfg;
}

PlantModel select_channels(const PlantModel& plant, const std::vector<int>& channels) {
    if (channels.empty()) return plant;
    PlantModel out;
    out.num_loudspeakers = static_cast<int>(channels.size());
    out.sample_rate = plant.sample_rate;
    for (int l : channels) {
        if (l < 0 || l >= plant.num_loudspeakers)
            throw std::invalid_argument("select_channels: channel index out of range");
        out.s_true.push_back(plant.s_true[l]);
        out.s_model.push_back(plant.s_model[l]);
        out.br_true.push_back(plant.br_true[l]);
        out.br_model.push_back(plant.br_model[l]);
    }
    out.primary_drum = plant.primary_drum;
    out.primary_mic = plant.primary_mic;
    out.validate();
    return out;
}

}  // namespace anc
