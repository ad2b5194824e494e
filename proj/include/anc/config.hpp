#ifndef ANC_CONFIG_HPP
#define ANC_CONFIG_HPP

#include <optional>
#include <string>

#include "anc/acoustic_paths.hpp"
#include "anc/controller_design.hpp"

namespace anc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Validated run configuration. Parsing rejects unknown keys anywhere in the
/// document and checks every invariant before any command does work.
struct RunConfig {
    PlantSynthesisSpec plant;
    std::uint64_t plant_seed = 1;

    struct Design {
        int num_channels = 2;
        int taps_per_channel = 64;
        int l_dft = 8192;
        StabilitySpec stability;
        std::vector<int> channels;  // empty = all plant loudspeakers
        std::optional<WeightProfile> g1, g2, g3;
        SolverOptions solver;
    } design;

    struct Noise {
        double duration_s = 10.0;
        std::uint64_t seed = 7;
        std::string source_spectrum = "white";
        double drum_noise_rel = 0.0;
    } noise;

    struct Sim {
        std::optional<MismatchSpec> mismatch;
    } sim;

    std::string output_directory = "out";
};

RunConfig load_config(const std::filesystem::path& file);

/// Plant restricted to a subset of loudspeaker channels (primary paths kept).
PlantModel select_channels(const PlantModel& plant, const std::vector<int>& channels);

}  // namespace anc

#endif
