#ifndef ANC_IO_HPP
#define ANC_IO_HPP

#include <filesystem>

#include "anc/controller_design.hpp"
#include "anc/loop_sim.hpp"
#include "anc/stability.hpp"
#include "anc/types.hpp"

namespace anc {

/// Plant on disk: manifest.json plus one CSV per acoustic path.
void save_plant(const PlantModel& plant, const std::filesystem::path& dir);
PlantModel load_plant(const std::filesystem::path& manifest);

/// Controller on disk: JSON manifest plus one CSV of taps per channel.
/// `channels` records which plant loudspeakers the bank drives.
void save_controller(const ControllerBank& c, const std::vector<int>& channels,
                     const DesignProblem& p, const std::filesystem::path& manifest);
struct LoadedController {
    ControllerBank bank;
    std::vector<int> channels;
    StabilitySpec stability;
    SpectrumGrid grid;
};
LoadedController load_controller(const std::filesystem::path& manifest);

void save_solve_report(const SolveReport& r, const std::filesystem::path& file);
void save_verification_report(const VerificationReport& r, const std::filesystem::path& file);

/// PSD as CSV with header "f_hz,density".
void save_psd_csv(const PsdEstimate& psd, const std::filesystem::path& file);

/// Nyquist curve as CSV with header "omega,re,im".
void save_nyquist_csv(const NyquistCurve& curve, const std::filesystem::path& file);

/// Fig.-4-style comparison: f_hz, psd_off_db, then one dB column per label.
void save_comparison_csv(const SpectrumGrid& grid, const Array& psd_off_db,
                         const std::vector<std::string>& labels,
                         const std::vector<Array>& psd_on_db, const std::filesystem::path& file);

}  // namespace anc

#endif
