#include "anc/spectral.hpp"

#include <unsupported/Eigen/FFT>

namespace anc {

SpectrumGrid dft_grid(int l_dft, double sample_rate) {
    if (l_dft < 2) throw std::invalid_argument("dft_grid: l_dft must be >= 2");
    if (l_dft % 2 != 0) throw std::invalid_argument("dft_grid: l_dft must be even");
    if (!(sample_rate > 0)) throw std::invalid_argument("dft_grid: sample_rate must be > 0");
    return SpectrumGrid{l_dft, sample_rate};
}

namespace {

Array hann_window(int n) {
    Array w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
    return w;
}

struct WelchAccumulator {
    ComplexArray cross;  // sum over segments of conj(X_k) * Y_k
    int num_segments = 0;
    double window_power = 0.0;  // sum of squared window samples
};

// Shared segmentation for PSD and CPSD. Segments are windowed with a periodic
// Hann window and zero-padded to the grid's DFT length.
WelchAccumulator welch_accumulate(const Array& x, const Array& y, const WelchConfig& cfg,
                                  const SpectrumGrid& grid) {
    cfg.validate();
    if (x.size() != y.size()) throw std::invalid_argument("welch: signal length mismatch");
    if (cfg.segment_length > grid.l_dft)
        throw std::invalid_argument("welch: segment_length exceeds DFT length");
    const int seg = cfg.segment_length;
    if (x.size() < seg) throw std::invalid_argument("welch: signal shorter than one segment");
    const int hop = std::max(1, static_cast<int>(seg * (1.0 - cfg.overlap_fraction)));
    const Array win = hann_window(seg);

    Eigen::FFT<double> fft;
    std::vector<double> buf_x(grid.l_dft), buf_y(grid.l_dft);
    std::vector<Complex> spec_x(grid.l_dft), spec_y(grid.l_dft);

    WelchAccumulator acc;
    acc.cross = ComplexArray::Zero(grid.num_bins());
    acc.window_power = win.square().sum();
    const bool same = (&x == &y);
    for (Eigen::Index start = 0; start + seg <= x.size(); start += hop) {
        for (int i = 0; i < seg; ++i) buf_x[i] = win[i] * x[start + i];
        std::fill(buf_x.begin() + seg, buf_x.end(), 0.0);
        fft.fwd(spec_x, buf_x);
        if (same) {
            for (int k = 0; k < grid.num_bins(); ++k)
                acc.cross[k] += std::conj(spec_x[k]) * spec_x[k];
        } else {
            for (int i = 0; i < seg; ++i) buf_y[i] = win[i] * y[start + i];
            std::fill(buf_y.begin() + seg, buf_y.end(), 0.0);
            fft.fwd(spec_y, buf_y);
            for (int k = 0; k < grid.num_bins(); ++k)
                acc.cross[k] += std::conj(spec_x[k]) * spec_y[k];
        }
        ++acc.num_segments;
    }
    return acc;
}

// One-sided density scaling: interior bins carry a factor 2, DC and Nyquist
// do not, so that sum_k density * df recovers the signal variance.
ComplexArray one_sided_density(const WelchAccumulator& acc, const SpectrumGrid& grid) {
    ComplexArray density = acc.cross /
        (static_cast<double>(acc.num_segments) * grid.sample_rate * acc.window_power);
    for (int k = 1; k < grid.num_bins() - 1; ++k) density[k] *= 2.0;
    return density;
}

}  // namespace

PsdEstimate welch_psd(const Array& x, const WelchConfig& cfg, const SpectrumGrid& grid) {
    const auto acc = welch_accumulate(x, x, cfg, grid);
    const ComplexArray density = one_sided_density(acc, grid);
    return {density.real(), grid, acc.num_segments, cfg.window, cfg.overlap_fraction};
}

ComplexSpectrum welch_cpsd(const Array& x, const Array& y, const WelchConfig& cfg,
                           const SpectrumGrid& grid) {
    const auto acc = welch_accumulate(x, y, cfg, grid);
    return {one_sided_density(acc, grid), grid};
}

Array coherence(const Array& x, const Array& y, const WelchConfig& cfg, const SpectrumGrid& grid) {
    const auto axx = welch_accumulate(x, x, cfg, grid);
    if (axx.num_segments < 4) throw std::invalid_argument("coherence: need at least 4 segments");
    const auto ayy = welch_accumulate(y, y, cfg, grid);
    const auto axy = welch_accumulate(x, y, cfg, grid);
    Array out(grid.num_bins());
    for (int k = 0; k < grid.num_bins(); ++k) {
        const double denom = axx.cross[k].real() * ayy.cross[k].real();
        const double num = std::norm(axy.cross[k]);
        out[k] = denom > 0.0 ? std::clamp(num / denom, 0.0, 1.0) : 0.0;
    }
    return out;
}

}  // namespace anc
