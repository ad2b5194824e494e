#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "anc/acoustic_paths.hpp"
#include "anc/spectral.hpp"

using namespace anc;

namespace {

Array white_noise(Eigen::Index n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Array x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = gauss(rng);
    return x;
}

WelchConfig small_cfg(int seg = 1024) {
    WelchConfig cfg;
    cfg.segment_length = seg;
    return cfg;
}

}  // namespace

TEST_CASE("dft_grid bin spacing and contract") {
    const auto grid = dft_grid(8192, 44100.0);
    CHECK(grid.freq(1) == doctest::Approx(5.38330078125).epsilon(1e-15));
    CHECK(grid.num_bins() == 4097);

    const auto tiny = dft_grid(4, 4.0);
    CHECK(tiny.freq(0) == 0.0);
    CHECK(tiny.freq(1) == 1.0);
    CHECK(tiny.freq(2) == 2.0);

    CHECK_THROWS(dft_grid(7, 44100.0));
    CHECK_THROWS(dft_grid(0, 44100.0));
}

TEST_CASE("welch psd of white noise: flat density and Parseval") {
    const double fs = 44100.0;
    const Array x = white_noise(static_cast<Eigen::Index>(10 * fs), 101);
    const auto grid = dft_grid(1024, fs);
    const auto psd = welch_psd(x, small_cfg(), grid);
    CHECK(psd.num_segments >= 50);
    const double expected = 2.0 / fs;  // one-sided density of unit-variance white noise
    for (int k = 5; k < grid.num_bins() - 5; k += 17)
        CHECK(psd.density[k] == doctest::Approx(expected).epsilon(0.20));
    const double df = fs / grid.l_dft;
    const double integral = psd.density.sum() * df;
    const double variance = (x - x.mean()).square().mean();
    CHECK(integral == doctest::Approx(variance).epsilon(0.05));
}

TEST_CASE("welch psd of a sinusoid integrates to A^2/2") {
    const double fs = 8000.0, f0 = 440.0, amp = 0.7;
    Array x(80000);
    for (int n = 0; n < x.size(); ++n) x[n] = amp * std::sin(2.0 * M_PI * f0 * n / fs);
    const auto grid = dft_grid(1024, fs);
    const auto psd = welch_psd(x, small_cfg(), grid);
    const double integral = psd.density.sum() * fs / grid.l_dft;
    CHECK(integral == doctest::Approx(amp * amp / 2.0).epsilon(0.05));
}

TEST_CASE("welch psd of zeros is zero") {
    const auto grid = dft_grid(256, 1000.0);
    const auto psd = welch_psd(Array::Zero(4096), small_cfg(256), grid);
    CHECK((psd.density == 0.0).all());
}

TEST_CASE("welch errors") {
    const auto grid = dft_grid(256, 1000.0);
    CHECK_THROWS(welch_psd(Array::Zero(100), small_cfg(256), grid));
    WelchConfig bad = small_cfg(4);
    CHECK_THROWS(bad.validate());
}

TEST_CASE("self-cpsd is real and equals psd") {
    const Array x = white_noise(20000, 5);
    const auto grid = dft_grid(512, 1000.0);
    const auto cpsd = welch_cpsd(x, x, small_cfg(512), grid);
    const auto psd = welch_psd(x, small_cfg(512), grid);
    for (int k = 0; k < grid.num_bins(); ++k) {
        CHECK(std::abs(cpsd.values[k].imag()) <= 1e-12 * std::abs(cpsd.values[k].real()));
        CHECK(cpsd.values[k].real() == doctest::Approx(psd.density[k]).epsilon(1e-12));
    }
}

TEST_CASE("cpsd of a delayed copy has phase -Omega*D") {
    const int delay = 5;
    const Array x = white_noise(60000, 9);
    Array y = Array::Zero(x.size());
    y.tail(x.size() - delay) = x.head(x.size() - delay);
    const auto grid = dft_grid(1024, 2000.0);
    const auto cpsd = welch_cpsd(x, y, small_cfg(), grid);
    for (int k = 10; k < grid.num_bins() - 10; k += 13) {
        const double expected = -grid.omega(k) * delay;
        double phase = std::arg(cpsd.values[k]);
        // unwrap to the expected branch
        phase += 2.0 * M_PI * std::round((expected - phase) / (2.0 * M_PI));
        CHECK(std::abs(phase - expected) < 0.05);
    }
}

TEST_CASE("cpsd conjugate symmetry is exact") {
    const Array x = white_noise(30000, 21);
    const Array y = white_noise(30000, 22);
    const auto grid = dft_grid(512, 1000.0);
    const auto xy = welch_cpsd(x, y, small_cfg(512), grid);
    const auto yx = welch_cpsd(y, x, small_cfg(512), grid);
    for (int k = 0; k < grid.num_bins(); ++k)
        CHECK(std::abs(xy.values[k] - std::conj(yx.values[k])) <=
              1e-12 * std::abs(xy.values[k]));
}

TEST_CASE("cpsd rejects length mismatch") {
    const auto grid = dft_grid(256, 1000.0);
    CHECK_THROWS(welch_cpsd(Array::Zero(1000), Array::Zero(999), small_cfg(256), grid));
}

TEST_CASE("independent noises have low coherence") {
    const Array x = white_noise(441000, 31);
    const Array y = white_noise(441000, 32);
    const auto grid = dft_grid(1024, 44100.0);
    const Array coh = coherence(x, y, small_cfg(), grid);
    int low = 0;
    for (int k = 0; k < grid.num_bins(); ++k)
        if (coh[k] < 0.1) ++low;
    CHECK(low >= static_cast<int>(0.95 * grid.num_bins()));
    CHECK(coh.mean() < 0.1);
}

TEST_CASE("coherence of a scaled copy is one") {
    const Array x = white_noise(20000, 41);
    const Array y = 2.0 * x;
    const auto grid = dft_grid(512, 1000.0);
    const Array coh = coherence(x, y, small_cfg(512), grid);
    for (int k = 0; k < grid.num_bins(); ++k) CHECK(coh[k] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("coherence high when noise 20 dB down in the passband") {
    const Array x = white_noise(441000, 51);
    // gentle FIR low-pass, then weak independent noise
    Array taps(8);
    taps.setConstant(1.0 / 8.0);
    Array y = convolve(x, taps).head(x.size());
    const Array n = white_noise(x.size(), 52);
    const double rms_y = std::sqrt(y.square().mean());
    y += 0.1 * rms_y * n;  // -20 dB
    const auto grid = dft_grid(1024, 44100.0);
    const Array coh = coherence(x, y, small_cfg(), grid);
    for (int k = 2; k < 40; ++k) CHECK(coh[k] > 0.9);  // passband bins
}

TEST_CASE("coherence requires 4 segments") {
    const auto grid = dft_grid(256, 1000.0);
    const Array x = white_noise(300, 6);
    CHECK_THROWS(coherence(x, x, small_cfg(256), grid));
}

TEST_CASE("psd non-negative for arbitrary input") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> dist(-100.0, 100.0);
    const auto grid = dft_grid(128, 500.0);
    for (int trial = 0; trial < 10; ++trial) {
        Array x(1000);
        for (int i = 0; i < 1000; ++i) x[i] = dist(rng);
        const auto psd = welch_psd(x, small_cfg(128), grid);
        CHECK((psd.density >= 0.0).all());
    }
}
