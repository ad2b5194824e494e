#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "anc/acoustic_paths.hpp"
#include "anc/spectral.hpp"

using namespace anc;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("anc_test_" + name);
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

PlantSynthesisSpec small_spec() {
    PlantSynthesisSpec spec;
    spec.num_loudspeakers = 2;
    spec.sample_rate = 44100.0;
    spec.ir_length = 128;
    return spec;
}

}  // namespace

TEST_CASE("csv load parses taps verbatim") {
    const auto p = temp_file("ir.csv");
    write_text(p, "0\n0.5\n-0.25\n");
    const auto ir = load_ir(p, IrFormat::Csv, 44100.0);
    REQUIRE(ir.taps.size() == 3);
    CHECK(ir.taps[0] == 0.0);
    CHECK(ir.taps[1] == 0.5);
    CHECK(ir.taps[2] == -0.25);
    CHECK(ir.sample_rate == 44100.0);
    fs::remove(p);
}

TEST_CASE("csv load error paths") {
    CHECK_THROWS(load_ir(temp_file("nope.csv"), IrFormat::Csv));
    const auto p = temp_file("bad.csv");
    write_text(p, "0.1\nNaN\n");
    CHECK_THROWS_WITH_AS(load_ir(p, IrFormat::Csv), doctest::Contains("non-finite"),
                         std::runtime_error);
    write_text(p, "0.1\n1.2.3\n");
    CHECK_THROWS_WITH_AS(load_ir(p, IrFormat::Csv), doctest::Contains("malformed"),
                         std::runtime_error);
    write_text(p, "");
    CHECK_THROWS_WITH_AS(load_ir(p, IrFormat::Csv), doctest::Contains("zero-length"),
                         std::runtime_error);
    fs::remove(p);
}

TEST_CASE("csv round-trip is bit exact") {
    Array taps(4);
    taps << 0.0, 1.0 / 3.0, -0.123456789012345678, 1e-17;
    const ImpulseResponse ir(taps, 48000.0);
    const auto p = temp_file("rt.csv");
    save_ir(ir, p, IrFormat::Csv);
    const auto back = load_ir(p, IrFormat::Csv, 48000.0);
    REQUIRE(back.taps.size() == taps.size());
    for (int i = 0; i < taps.size(); ++i) CHECK(back.taps[i] == taps[i]);
    fs::remove(p);
}

TEST_CASE("wav round-trip within float32") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Array taps(100);
    for (int i = 0; i < 100; ++i) taps[i] = dist(rng);
    const ImpulseResponse ir(taps, 44100.0);
    const auto p = temp_file("rt.wav");
    save_ir(ir, p, IrFormat::WavFloat);
    const auto back = load_ir(p, IrFormat::WavFloat);
    REQUIRE(back.taps.size() == taps.size());
    CHECK(back.sample_rate == 44100.0);
    for (int i = 0; i < 100; ++i) CHECK(back.taps[i] == static_cast<double>(static_cast<float>(taps[i])));
    fs::remove(p);
}

TEST_CASE("freq_response identity and delay") {
    const auto grid = dft_grid(16, 44100.0);
    Array one(1);
    one << 1.0;
    auto resp = freq_response(ImpulseResponse(one, 44100.0), grid);
    for (int k = 0; k < grid.num_bins(); ++k) CHECK(std::abs(resp.values[k] - 1.0) < 1e-15);

    Array delay(2);
    delay << 0.0, 1.0;
    resp = freq_response(ImpulseResponse(delay, 44100.0), grid);
    for (int k = 0; k < grid.num_bins(); ++k) {
        CHECK(std::abs(std::abs(resp.values[k]) - 1.0) < 1e-14);
        // expected value exp(-j Omega_k); compare complex values to dodge
        // the arg branch cut at Omega = pi
        CHECK(std::abs(resp.values[k] - std::polar(1.0, -grid.omega(k))) < 1e-12);
    }
}

TEST_CASE("freq_response hand DFT for two-tap average") {
    const auto grid = dft_grid(8, 8000.0);
    Array taps(2);
    taps << 0.5, 0.5;
    const auto resp = freq_response(ImpulseResponse(taps, 8000.0), grid);
    CHECK(std::abs(resp.values[0] - Complex(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(resp.values[4]) < 1e-15);  // Omega = pi
}

TEST_CASE("freq_response rejects sample-rate mismatch") {
    Array one(1);
    one << 1.0;
    CHECK_THROWS(freq_response(ImpulseResponse(one, 48000.0), dft_grid(8, 44100.0)));
}

TEST_CASE("freq_response linearity") {
    const auto grid = dft_grid(64, 44100.0);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Array x(20), y(20);
    for (int i = 0; i < 20; ++i) {
        x[i] = dist(rng);
        y[i] = dist(rng);
    }
    const double a = 0.7, b = -1.3;
    const auto rx = freq_response(ImpulseResponse(x, 44100.0), grid);
    const auto ry = freq_response(ImpulseResponse(y, 44100.0), grid);
    const auto rc = freq_response(ImpulseResponse(a * x + b * y, 44100.0), grid);
    for (int k = 0; k < grid.num_bins(); ++k) {
        const Complex expect = a * rx.values[k] + b * ry.values[k];
        CHECK(std::abs(rc.values[k] - expect) <= 1e-12 * (1.0 + std::abs(expect)));
    }
}

TEST_CASE("freq_response of a convolution is the product of responses") {
    const auto grid = dft_grid(128, 44100.0);
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Array x(15), y(9);
    for (int i = 0; i < 15; ++i) x[i] = dist(rng);
    for (int i = 0; i < 9; ++i) y[i] = dist(rng);
    const auto rx = freq_response(ImpulseResponse(x, 44100.0), grid);
    const auto ry = freq_response(ImpulseResponse(y, 44100.0), grid);
    const auto rc = freq_response(ImpulseResponse(convolve(x, y), 44100.0), grid);
    for (int k = 0; k < grid.num_bins(); ++k) {
        const Complex expect = rx.values[k] * ry.values[k];
        CHECK(std::abs(rc.values[k] - expect) <= 1e-9 * (1.0 + std::abs(expect)));
    }
}

TEST_CASE("synth_plant deterministic per seed") {
    const auto spec = small_spec();
    const auto a = synth_plant(spec, 42);
    const auto b = synth_plant(spec, 42);
    for (int l = 0; l < 2; ++l) {
        CHECK((a.s_true[l].taps == b.s_true[l].taps).all());
        CHECK((a.br_true[l].taps == b.br_true[l].taps).all());
    }
    const auto c = synth_plant(spec, 43);
    CHECK_FALSE((a.s_true[0].taps == c.s_true[0].taps).all());
}

TEST_CASE("synth_plant primary delays as configured") {
    auto spec = small_spec();
    spec.primary_drum_delay = 8;
    spec.primary_mic_delay = 4;
    const auto plant = synth_plant(spec, 1);
    for (int n = 0; n < 8; ++n) CHECK(plant.primary_drum.taps[n] == 0.0);
    CHECK(plant.primary_drum.taps[8] == 1.0);
    for (int n = 0; n < 4; ++n) CHECK(plant.primary_mic.taps[n] == 0.0);
    CHECK(plant.primary_mic.taps[4] == 1.0);
}

TEST_CASE("synthesized speaker path rolls off at least 20 dB from 1 kHz to 20 kHz") {
    auto spec = small_spec();
    spec.lowpass_corner_hz = 1000.0;
    spec.ir_length = 512;
    for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
        const auto plant = synth_plant(spec, seed);
        const auto grid = dft_grid(4096, spec.sample_rate);
        for (int l = 0; l < spec.num_loudspeakers; ++l) {
            const auto resp = freq_response(plant.s_true[l], grid);
            const int k1 = static_cast<int>(std::round(1000.0 * grid.l_dft / spec.sample_rate));
            const int k20 = static_cast<int>(std::round(20000.0 * grid.l_dft / spec.sample_rate));
            const double db_drop = 20.0 * std::log10(std::abs(resp.values[k1]) /
                                                     std::abs(resp.values[k20]));
            CHECK(db_drop >= 20.0);
        }
    }
}

TEST_CASE("synth_plant invariants over random specs") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> l_dist(1, 3), len_dist(32, 300), delay_dist(1, 6);
    for (int trial = 0; trial < 20; ++trial) {
        PlantSynthesisSpec spec;
        spec.num_loudspeakers = l_dist(rng);
        spec.ir_length = len_dist(rng);
        spec.speaker_delays.clear();
        for (int l = 0; l < spec.num_loudspeakers; ++l) spec.speaker_delays.push_back(delay_dist(rng));
        const auto plant = synth_plant(spec, rng());
        CHECK_NOTHROW(plant.validate());
        for (const auto& ir : plant.s_true) CHECK(ir.taps[0] == 0.0);
        for (const auto& ir : plant.br_true) CHECK(ir.taps[0] == 0.0);
    }
}

TEST_CASE("synth_plant rejects invalid specs") {
    auto spec = small_spec();
    spec.speaker_delays = {0, 2};
    CHECK_THROWS(synth_plant(spec, 1));
    spec = small_spec();
    spec.lowpass_corner_hz = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(synth_plant(spec, 1));
}

TEST_CASE("apply_mismatch identity for all-zero spec") {
    const auto plant = synth_plant(small_spec(), 2);
    const auto out = apply_mismatch(plant, MismatchSpec{});
    for (int l = 0; l < 2; ++l) {
        CHECK((out.s_true[l].taps == plant.s_true[l].taps).all());
        CHECK((out.br_true[l].taps == plant.br_true[l].taps).all());
    }
}

TEST_CASE("apply_mismatch gain in dB") {
    const auto plant = synth_plant(small_spec(), 2);
    MismatchSpec m;
    m.gain_perturbation_db = {6.0205999132796239, 0.0};
    const auto out = apply_mismatch(plant, m);
    for (int n = 0; n < plant.s_true[0].taps.size(); ++n)
        CHECK(out.s_true[0].taps[n] == doctest::Approx(2.0 * plant.s_true[0].taps[n]).epsilon(1e-9));
    CHECK((out.s_true[1].taps == plant.s_true[1].taps).all());
    CHECK((out.s_model[0].taps == plant.s_model[0].taps).all());  // models untouched
}

TEST_CASE("apply_mismatch delay shift") {
    const auto plant = synth_plant(small_spec(), 2);
    MismatchSpec m;
    m.delay_perturbation_samples = {2, 0};
    const auto out = apply_mismatch(plant, m);
    REQUIRE(out.s_true[0].taps.size() == plant.s_true[0].taps.size() + 2);
    CHECK(out.s_true[0].taps[0] == 0.0);
    CHECK(out.s_true[0].taps[1] == 0.0);
    for (int n = 0; n < plant.s_true[0].taps.size(); ++n)
        CHECK(out.s_true[0].taps[n + 2] == plant.s_true[0].taps[n]);
}
