#ifndef ANC_SPECTRAL_HPP
#define ANC_SPECTRAL_HPP

#include "anc/types.hpp"

namespace anc {

struct WelchConfig {
    int segment_length = 8192;
    double overlap_fraction = 0.5;
    std::string window = "hann";

    void validate() const {
        if (segment_length < 8) throw std::invalid_argument("WelchConfig: segment_length < 8");
        if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
            throw std::invalid_argument("WelchConfig: overlap_fraction outside [0,1)");
        if (window != "hann") throw std::invalid_argument("WelchConfig: unsupported window");
    }
};

/// One-sided Welch PSD. Normalized so that sum_k density[k] * df equals the
/// signal variance for stationary noise (one-sided density convention).
PsdEstimate welch_psd(const Array& x, const WelchConfig& cfg, const SpectrumGrid& grid);

/// One-sided Welch cross-PSD between x and y. welch_cpsd(x, x) equals
/// welch_psd(x) bin for bin (purely real).
ComplexSpectrum welch_cpsd(const Array& x, const Array& y, const WelchConfig& cfg,
                           const SpectrumGrid& grid);

/// Magnitude-squared coherence |Phi_xy|^2 / (Phi_xx * Phi_yy), clamped to [0,1].
/// Requires at least 4 Welch segments.
Array coherence(const Array& x, const Array& y, const WelchConfig& cfg, const SpectrumGrid& grid);

}  // namespace anc

#endif
