#ifndef ANC_ACOUSTIC_PATHS_HPP
#define ANC_ACOUSTIC_PATHS_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "anc/types.hpp"

namespace anc {

/// The full set of acoustic paths defining the plant: true and modelled
/// loudspeaker paths to the eardrum (S, S_hat) and to the inner microphone
/// (B_r, B_r_hat), plus the primary noise paths.
struct PlantModel {
    int num_loudspeakers = 0;
    std::vector<ImpulseResponse> s_true;    // loudspeaker -> eardrum
    std::vector<ImpulseResponse> s_model;   // measured/model counterpart
    std::vector<ImpulseResponse> br_true;   // loudspeaker -> inner mic
    std::vector<ImpulseResponse> br_model;
    ImpulseResponse primary_drum;           // noise source -> eardrum
    ImpulseResponse primary_mic;            // noise source -> inner mic
    double sample_rate = 0.0;

    void validate() const;
};

/// Perturbation applied to the *true* paths only, to exercise model mismatch.
struct MismatchSpec {
    std::vector<double> gain_perturbation_db;       // per loudspeaker
    std::vector<int> delay_perturbation_samples;    // per loudspeaker, >= 0
    double tap_noise_rel = 0.0;
    std::uint64_t seed = 0;
};

/// A damped resonance added to a synthesized loudspeaker path.
struct Resonance {
    double freq_hz = 0.0;
    double decay_time_s = 0.0;  // 1/e amplitude decay
    double amplitude = 0.0;
};

/// Parameter family for synthetic plants: per-speaker pure delay, two-pole
/// low-pass roll-off and a handful of damped resonances.
struct PlantSynthesisSpec {
    int num_loudspeakers = 2;
    double sample_rate = 16000.0;
    int ir_length = 256;
    std::vector<int> speaker_delays;        // samples, >= 1, one per speaker
    double lowpass_corner_hz = 1000.0;
    int min_resonances = 1;
    int max_resonances = 3;
    double resonance_freq_lo_hz = 60.0;
    double resonance_freq_hi_hz = 500.0;
    int primary_drum_delay = 12;            // samples
    int primary_mic_delay = 6;              // samples, strictly less than drum delay
};

enum class IrFormat { Csv, WavFloat };

ImpulseResponse load_ir(const std::filesystem::path& file, IrFormat format,
                        double csv_sample_rate = 44100.0);
void save_ir(const ImpulseResponse& ir, const std::filesystem::path& file, IrFormat format);

/// Frequency response on the one-sided grid: value[k] = sum_n taps[n] exp(-j Omega_k n).
ComplexSpectrum freq_response(const ImpulseResponse& ir, const SpectrumGrid& grid);

/// Full linear convolution, output length a.size() + b.size() - 1.
Array convolve(const Array& a, const Array& b);

PlantModel synth_plant(const PlantSynthesisSpec& spec, std::uint64_t seed);

PlantModel apply_mismatch(const PlantModel& plant, const MismatchSpec& m);

}  // namespace anc

#endif
