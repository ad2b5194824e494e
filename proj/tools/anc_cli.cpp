#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "anc/config.hpp"
#include "anc/io.hpp"
#include "anc/loop_sim.hpp"
#include "anc/spectral.hpp"
#include "anc/stability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitInstability = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_override;
    std::int64_t seed_override = -1;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run configuration")->required();
    cmd->add_option("--out", args.out_override, "Output directory (overrides config)");
    cmd->add_option("--seed", args.seed_override, "Seed override for plant and noise");
    cmd->add_flag("--verbose", args.verbose, "Print progress details");
}

anc::RunConfig load(const CommonArgs& args) {
    anc::RunConfig cfg = anc::load_config(args.config_path);
    if (!args.out_override.empty()) cfg.output_directory = args.out_override;
    if (args.seed_override >= 0) {
        cfg.plant_seed = static_cast<std::uint64_t>(args.seed_override);
        cfg.noise.seed = static_cast<std::uint64_t>(args.seed_override);
    }
    return cfg;
}

std::vector<int> design_channels(const anc::RunConfig& cfg) {
    if (!cfg.design.channels.empty()) return cfg.design.channels;
    std::vector<int> all;
    for (int l = 0; l < cfg.design.num_channels; ++l) all.push_back(l);
    return all;
}

anc::DesignProblem build_problem(const anc::RunConfig& cfg, const anc::PlantModel& plant) {
    const auto grid = anc::dft_grid(cfg.design.l_dft, plant.sample_rate);
    anc::DesignProblem p = anc::make_design_problem(plant, grid, cfg.design.taps_per_channel,
                                                    cfg.design.stability, design_channels(cfg));
    if (cfg.design.g1) p.g1 = *cfg.design.g1;
    if (cfg.design.g2) p.g2 = *cfg.design.g2;
    if (cfg.design.g3) p.g3 = *cfg.design.g3;
    p.validate();
    return p;
}

int cmd_synth_plant(const CommonArgs& args) {
    const anc::RunConfig cfg = load(args);
    const anc::PlantModel plant = anc::synth_plant(cfg.plant, cfg.plant_seed);
    const fs::path dir = fs::path(cfg.output_directory) / "plant";
    anc::save_plant(plant, dir);
    if (args.verbose)
        std::cout << "wrote plant with L=" << plant.num_loudspeakers << " to " << dir << "\n";
    return kExitOk;
}

int cmd_design(const CommonArgs& args, const std::string& plant_path, const std::string& name) {
    const anc::RunConfig cfg = load(args);
    const fs::path manifest = plant_path.empty()
                                  ? fs::path(cfg.output_directory) / "plant" / "manifest.json"
                                  : fs::path(plant_path);
    if (!fs::exists(manifest)) {
        std::cerr << "design: missing plant file " << manifest << "\n";
        return kExitValidation;
    }
    const anc::PlantModel plant = anc::load_plant(manifest);
    const anc::DesignProblem p = build_problem(cfg, plant);
    const anc::SolveReport report = anc::solve(p, cfg.design.solver);
    const fs::path dir = fs::path(cfg.output_directory) / "design";
    anc::save_controller(report.controller, design_channels(cfg), p, dir / (name + ".json"));
    anc::save_solve_report(report, dir / (name + "_report.json"));
    if (args.verbose)
        std::cout << "objective " << report.objective_value << " (zero controller "
                  << report.initial_objective << "), max violation "
                  << report.max_constraint_violation << "\n";
    if (!report.converged || report.max_constraint_violation > cfg.design.solver.feasibility_tol) {
        std::cerr << "design: solver failed to converge to a feasible point\n";
        return kExitSolver;
    }
    return kExitOk;
}

int cmd_verify(const CommonArgs& args, const std::string& plant_path,
               const std::string& controller_path) {
    const anc::RunConfig cfg = load(args);
    const fs::path plant_manifest = plant_path.empty()
                                        ? fs::path(cfg.output_directory) / "plant" / "manifest.json"
                                        : fs::path(plant_path);
    const fs::path ctrl_manifest =
        controller_path.empty() ? fs::path(cfg.output_directory) / "design" / "controller.json"
                                : fs::path(controller_path);
    for (const fs::path& f : {plant_manifest, ctrl_manifest})
        if (!fs::exists(f)) {
            std::cerr << "verify: missing file " << f << "\n";
            return kExitValidation;
        }
    const anc::PlantModel plant = anc::load_plant(plant_manifest);
    const anc::LoadedController lc = anc::load_controller(ctrl_manifest);
    const anc::PlantModel sub = anc::select_channels(plant, lc.channels);
    const anc::VerificationReport rep =
        anc::verify_design(lc.bank, sub, lc.stability, 8 * lc.grid.l_dft);
    const fs::path dir = fs::path(cfg.output_directory) / "verify";
    fs::create_directories(dir);
    anc::save_verification_report(rep, dir / (ctrl_manifest.stem().string() + "_verify.json"));
    const anc::NyquistCurve curve = anc::open_loop_response(lc.bank, sub.s_model, 8 * lc.grid.l_dft);
    anc::save_nyquist_csv(curve, dir / (ctrl_manifest.stem().string() + "_nyquist.csv"));
    if (args.verbose)
        std::cout << "winding " << rep.winding_number << ", gm " << rep.gain_margin << ", pm "
                  << rep.phase_margin << ", pass " << rep.pass << "\n";
    return rep.pass ? kExitOk : kExitInstability;
}

int cmd_simulate(const CommonArgs& args, const std::string& plant_path,
                 const std::vector<std::string>& controller_paths) {
    const anc::RunConfig cfg = load(args);
    const fs::path plant_manifest = plant_path.empty()
                                        ? fs::path(cfg.output_directory) / "plant" / "manifest.json"
                                        : fs::path(plant_path);
    if (!fs::exists(plant_manifest)) {
        std::cerr << "simulate: missing plant file " << plant_manifest << "\n";
        return kExitValidation;
    }
    anc::PlantModel plant = anc::load_plant(plant_manifest);
    if (cfg.sim.mismatch) plant = anc::apply_mismatch(plant, *cfg.sim.mismatch);

    anc::NoiseFieldConfig ncfg;
    ncfg.duration_s = cfg.noise.duration_s;
    ncfg.sample_rate = plant.sample_rate;
    ncfg.source_spectrum = cfg.noise.source_spectrum;
    ncfg.seed = cfg.noise.seed;
    ncfg.drum_noise_rel = cfg.noise.drum_noise_rel;
    const auto [d, r] = anc::gen_noise(plant, ncfg);

    const auto grid = anc::dft_grid(cfg.design.l_dft, plant.sample_rate);
    anc::WelchConfig wcfg;
    wcfg.segment_length = std::min<int>(cfg.design.l_dft, static_cast<int>(d.size()));
    const anc::PsdEstimate psd_off = anc::welch_psd(d, wcfg, grid);
    const anc::Array off_db = 10.0 * psd_off.density.max(1e-300).log10();

    json summary;
    summary["anc_off"] = {{"stable", true}};
    std::vector<std::string> labels;
    std::vector<anc::Array> columns;
    bool any_unstable = false;
    const fs::path dir = fs::path(cfg.output_directory) / "simulate";
    fs::create_directories(dir);

    for (const auto& cp : controller_paths) {
        if (!fs::exists(cp)) {
            std::cerr << "simulate: missing controller file " << cp << "\n";
            return kExitValidation;
        }
        const anc::LoadedController lc = anc::load_controller(cp);
        const anc::PlantModel sub = anc::select_channels(plant, lc.channels);
        const anc::SimResult sim = anc::run_closed_loop(sub, lc.bank, d, r);
        const std::string label = fs::path(cp).stem().string();
        labels.push_back(label);
        json entry;
        entry["stable"] = sim.stable;
        if (sim.stable) {
            const anc::PsdEstimate psd_on = anc::welch_psd(sim.e, wcfg, grid);
            const anc::Array curve = anc::attenuation_curve(psd_off, psd_on);
            columns.push_back(10.0 * psd_on.density.max(1e-300).log10());
            entry["band_attenuation_db_20_300"] = anc::band_attenuation(curve, 20.0, 300.0, grid);
            double max_amp = 0.0;
            for (int k = 0; k < grid.num_bins(); ++k) {
                const double f = grid.freq(k);
                if (f >= 1000.0 && f <= 4000.0) max_amp = std::max(max_amp, -curve[k]);
            }
            entry["max_amplification_db_1k_4k"] = max_amp;
        } else {
            columns.push_back(anc::Array::Zero(grid.num_bins()));
            any_unstable = true;
        }
        summary[label] = entry;
        if (args.verbose) std::cout << label << ": " << entry.dump() << "\n";
    }

    anc::save_comparison_csv(grid, off_db, labels, columns, dir / "comparison.csv");
    {
        std::ofstream out(dir / "summary.json");
        out << summary.dump(2) << '\n';
    }
    return any_unstable ? kExitInstability : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-loudspeaker feedback ANC controller design and simulation"};
    app.require_subcommand(1);

    CommonArgs synth_args, design_args, verify_args, sim_args;
    std::string plant_path, controller_path, design_name = "controller";
    std::vector<std::string> controller_paths;

    CLI::App* synth = app.add_subcommand("synth-plant", "Synthesize a plant and write it to disk");
    add_common(synth, synth_args);

    CLI::App* design = app.add_subcommand("design", "Design a controller for a plant");
    add_common(design, design_args);
    design->add_option("--plant", plant_path, "Plant manifest path");
    design->add_option("--name", design_name, "Controller file name stem");

    CLI::App* verify = app.add_subcommand("verify", "Verify closed-loop stability of a controller");
    add_common(verify, verify_args);
    verify->add_option("--plant", plant_path, "Plant manifest path");
    verify->add_option("--controller", controller_path, "Controller manifest path");

    CLI::App* simulate = app.add_subcommand("simulate", "Closed-loop simulation and comparison");
    add_common(simulate, sim_args);
    simulate->add_option("--plant", plant_path, "Plant manifest path");
    simulate->add_option("--controllers", controller_paths, "Controller manifest paths");

    CLI11_PARSE(app, argc, argv);
    try {
        if (synth->parsed()) return cmd_synth_plant(synth_args);
        if (design->parsed()) return cmd_design(design_args, plant_path, design_name);
        if (verify->parsed()) return cmd_verify(verify_args, plant_path, controller_path);
        if (simulate->parsed()) return cmd_simulate(sim_args, plant_path, controller_paths);
    } catch (const anc::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
