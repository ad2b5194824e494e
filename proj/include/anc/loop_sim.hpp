#ifndef ANC_LOOP_SIM_HPP
#define ANC_LOOP_SIM_HPP

#include <cstdint>

#include "anc/acoustic_paths.hpp"
#include "anc/controller_design.hpp"
#include "anc/spectral.hpp"
#include "anc/types.hpp"

namespace anc {

struct NoiseFieldConfig {
    double duration_s = 10.0;
    double sample_rate = 44100.0;
    std::string kind = "filtered-common-source";
    std::string source_spectrum = "white";  // or "pink"
    std::uint64_t seed = 0;
    // Relative level of an extra independent noise component added at the
    // drum, degrading coherence(d, r). 0 keeps the common-source model.
    double drum_noise_rel = 0.0;

    void validate() const;
};

struct SimResult {
    Array e;       // sound pressure at the eardrum
    Array mic;     // inner microphone signal
    Array r_hat, d_hat, e_hat;
    std::vector<Array> u;  // L control signals
    Array d, r;    // primary-noise signals
    bool stable = true;
};

struct SpectralFactors {
    PsdEstimate phi_rr;
    PsdEstimate phi_dd;
    ComplexSpectrum phi_dr;
};

/// One seeded source filtered through the two primary paths.
std::pair<Array, Array> gen_noise(const PlantModel& plant, const NoiseFieldConfig& cfg);

/// Sample-by-sample closed-loop simulation of the three-step virtual-sensing
/// block diagram. Well-posed because every loudspeaker path has a zero first
/// tap. Stops early with stable = false when |e| exceeds 1e6.
SimResult run_closed_loop(const PlantModel& plant, const ControllerBank& c,
                          const Array& d, const Array& r);

/// Phi_ee[k] = |1/(1 + T_k)|^2 * Phi_rr[k], T_k = W^T(Omega_k) S_hat(Omega_k).
PsdEstimate predicted_psd_vma(const ControllerBank& c,
                              const std::vector<ImpulseResponse>& s_hat,
                              const PsdEstimate& phi_rr);

struct FullPsdPrediction {
    PsdEstimate total;
    Array min_achievable;  // left addend
    Array control_term;    // right addend
};

/// Full mismatch-aware prediction from the measured spectral factors.
FullPsdPrediction predicted_psd_full(const ControllerBank& c, const PlantModel& plant,
                                     const SpectralFactors& factors);

/// curve[k] = 10*log10(psd_off[k]/psd_on[k]); positive = attenuation.
Array attenuation_curve(const PsdEstimate& psd_off, const PsdEstimate& psd_on);

/// Arithmetic mean of the curve over bins with f_lo <= f_k <= f_hi.
double band_attenuation(const Array& curve, double f_lo, double f_hi, const SpectrumGrid& grid);

}  // namespace anc

#endif
