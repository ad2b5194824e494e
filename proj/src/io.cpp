#include "anc/io.hpp"

#include <fstream>
#include <json.hpp>

namespace anc {

using nlohmann::json;

namespace {

json write_json_file(const json& j, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failure on " + file.string());
    return j;
}

json read_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    return json::parse(in);
}

}  // namespace

void save_plant(const PlantModel& plant, const std::filesystem::path& dir) {
    plant.validate();
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["num_loudspeakers"] = plant.num_loudspeakers;
    manifest["sample_rate"] = plant.sample_rate;
    auto save_list = [&](const std::vector<ImpulseResponse>& v, const std::string& name) {
        std::vector<std::string> files;
        for (int l = 0; l < plant.num_loudspeakers; ++l) {
            const std::string f = name + "_" + std::to_string(l + 1) + ".csv";
            save_ir(v[l], dir / f, IrFormat::Csv);
            files.push_back(f);
        }
        manifest[name] = files;
    };
    save_list(plant.s_true, "s_true");
    save_list(plant.s_model, "s_model");
    save_list(plant.br_true, "br_true");
    save_list(plant.br_model, "br_model");
    save_ir(plant.primary_drum, dir / "primary_drum.csv", IrFormat::Csv);
    save_ir(plant.primary_mic, dir / "primary_mic.csv", IrFormat::Csv);
    manifest["primary_drum"] = "primary_drum.csv";
    manifest["primary_mic"] = "primary_mic.csv";
    write_json_file(manifest, dir / "manifest.json");
}

PlantModel load_plant(const std::filesystem::path& manifest) {
    const json j = read_json_file(manifest);
    const auto dir = manifest.parent_path();
    PlantModel plant;
    plant.num_loudspeakers = j.at("num_loudspeakers").get<int>();
    plant.sample_rate = j.at("sample_rate").get<double>();
    auto load_list = [&](const std::string& name) {
        std::vector<ImpulseResponse> v;
        for (const auto& f : j.at(name))
            v.push_back(load_ir(dir / f.get<std::string>(), IrFormat::Csv, plant.sample_rate));
        return v;
    };
    plant.s_true = load_list("s_true");
    plant.s_model = load_list("s_model");
    plant.br_true = load_list("br_true");
    plant.br_model = load_list("br_model");
    plant.primary_drum =
        load_ir(dir / j.at("primary_drum").get<std::string>(), IrFormat::Csv, plant.sample_rate);
    plant.primary_mic =
        load_ir(dir / j.at("primary_mic").get<std::string>(), IrFormat::Csv, plant.sample_rate);
    plant.validate();
    return plant;
}

namespace {

json profile_json(const WeightProfile& p) {
    json arr = json::array();
    for (const auto& [f, v] : p.breakpoints) arr.push_back({f, v});
    return arr;
}

}  // namespace

void save_controller(const ControllerBank& c, const std::vector<int>& channels,
                     const DesignProblem& p, const std::filesystem::path& manifest) {
    c.validate();
    const auto dir = manifest.parent_path();
    std::filesystem::create_directories(dir);
    const std::string stem = manifest.stem().string();
    json j;
    j["num_channels"] = c.num_channels;
    j["taps_per_channel"] = c.taps_per_channel;
    j["sample_rate"] = c.sample_rate;
    j["channels"] = channels;
    j["grid"] = {{"l_dft", p.grid.l_dft}, {"sample_rate", p.grid.sample_rate}};
    j["stability"] = {{"rho", p.stability.rho}, {"varrho", p.stability.varrho}};
    j["profiles"] = {{"g1", profile_json(p.g1)}, {"g2", profile_json(p.g2)},
                     {"g3", profile_json(p.g3)}};
    std::vector<std::string> files;
    for (int l = 0; l < c.num_channels; ++l) {
        const std::string f = stem + "_ch" + std::to_string(l + 1) + ".csv";
        save_ir(ImpulseResponse(c.coefficients[l], c.sample_rate), dir / f, IrFormat::Csv);
        files.push_back(f);
    }
    j["files"] = files;
    write_json_file(j, manifest);
}

LoadedController load_controller(const std::filesystem::path& manifest) {
    const json j = read_json_file(manifest);
    const auto dir = manifest.parent_path();
    LoadedController lc;
    lc.bank.num_channels = j.at("num_channels").get<int>();
    lc.bank.taps_per_channel = j.at("taps_per_channel").get<int>();
    lc.bank.sample_rate = j.at("sample_rate").get<double>();
    for (const auto& f : j.at("files")) {
        const auto ir = load_ir(dir / f.get<std::string>(), IrFormat::Csv, lc.bank.sample_rate);
        lc.bank.coefficients.push_back(ir.taps);
    }
    lc.bank.validate();
    lc.channels = j.at("channels").get<std::vector<int>>();
    lc.stability.rho = j.at("stability").at("rho").get<double>();
    lc.stability.varrho = j.at("stability").at("varrho").get<double>();
    lc.grid = dft_grid(j.at("grid").at("l_dft").get<int>(),
                       j.at("grid").at("sample_rate").get<double>());
    return lc;
}

void save_solve_report(const SolveReport& r, const std::filesystem::path& file) {
    json j;
    j["objective_value"] = r.objective_value;
    j["initial_objective"] = r.initial_objective;
    j["max_constraint_violation"] = r.max_constraint_violation;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["num_channels"] = r.controller.num_channels;
    j["taps_per_channel"] = r.controller.taps_per_channel;
    write_json_file(j, file);
}

void save_verification_report(const VerificationReport& r, const std::filesystem::path& file) {
    json j;
    j["worst_hyperbola_residual"] = r.worst_hyperbola_residual;
    j["winding_number"] = r.winding_number;
    j["gain_margin"] = std::isfinite(r.gain_margin) ? json(r.gain_margin) : json("inf");
    j["phase_margin"] = std::isfinite(r.phase_margin) ? json(r.phase_margin) : json("inf");
    j["pass"] = r.pass;
    write_json_file(j, file);
}

void save_psd_csv(const PsdEstimate& psd, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out.precision(17);
    out << "f_hz,density\n";
    for (int k = 0; k < psd.grid.num_bins(); ++k)
        out << psd.grid.freq(k) << ',' << psd.density[k] << '\n';
}

void save_nyquist_csv(const NyquistCurve& curve, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out.precision(17);
    out << "omega,re,im\n";
    for (int m = 0; m < curve.grid_size; ++m)
        out << 2.0 * M_PI * m / curve.grid_size << ',' << curve.loop_values[m].real() << ','
            << curve.loop_values[m].imag() << '\n';
}

void save_comparison_csv(const SpectrumGrid& grid, const Array& psd_off_db,
                         const std::vector<std::string>& labels,
                         const std::vector<Array>& psd_on_db, const std::filesystem::path& file) {
    if (labels.size() != psd_on_db.size())
        throw std::invalid_argument("save_comparison_csv: label/column mismatch");
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out.precision(12);
    out << "f_hz,psd_off_db";
    for (const auto& label : labels) out << ",psd_" << label << "_db";
    out << '\n';
    for (int k = 0; k < grid.num_bins(); ++k) {
        out << grid.freq(k) << ',' << psd_off_db[k];
        for (const auto& col : psd_on_db) out << ',' << col[k];
        out << '\n';
    }
}

}  // namespace anc
