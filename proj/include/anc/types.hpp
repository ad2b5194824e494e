#ifndef ANC_TYPES_HPP
#define ANC_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace anc {

using Array = Eigen::ArrayXd;
using ComplexArray = Eigen::ArrayXcd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// A finite real-valued tap sequence with its sample rate. The atomic
/// representation for acoustic paths and FIR filters.
struct ImpulseResponse {
    Array taps;
    double sample_rate = 0.0;

    ImpulseResponse() = default;
    ImpulseResponse(Array t, double fs) : taps(std::move(t)), sample_rate(fs) { validate(); }

    void validate() const {
        if (taps.size() == 0) throw std::invalid_argument("ImpulseResponse: empty taps");
        if (!taps.isFinite().all()) throw std::invalid_argument("ImpulseResponse: non-finite tap");
        if (!(sample_rate > 0.0)) throw std::invalid_argument("ImpulseResponse: sample_rate must be > 0");
    }
};

/// One-sided DFT frequency grid: bins k = 0..l_dft/2, Omega_k = 2*pi*k/l_dft.
struct SpectrumGrid {
    int l_dft = 0;
    double sample_rate = 0.0;

    int num_bins() const { return l_dft / 2 + 1; }
    double omega(int k) const { return 2.0 * M_PI * k / l_dft; }
    double freq(int k) const { return k * sample_rate / l_dft; }
    Array freqs() const {
        Array f(num_bins());
        for (int k = 0; k < num_bins(); ++k) f[k] = freq(k);
        return f;
    }
    bool operator==(const SpectrumGrid& o) const {
        return l_dft == o.l_dft && sample_rate == o.sample_rate;
    }
};

/// Grid factory with the contract checks in one place.
SpectrumGrid dft_grid(int l_dft, double sample_rate);

/// Complex frequency response sampled on a SpectrumGrid.
struct ComplexSpectrum {
    ComplexArray values;
    SpectrumGrid grid;
};

/// One-sided power spectral density (signal^2 per Hz) with estimation metadata.
struct PsdEstimate {
    Array density;
    SpectrumGrid grid;
    int num_segments = 0;
    std::string window = "hann";
    double overlap_fraction = 0.0;
};

}  // namespace anc

#endif
