#include "anc/acoustic_paths.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace anc {

void PlantModel::validate() const {
    if (num_loudspeakers < 1) throw std::invalid_argument("PlantModel: need at least one loudspeaker");
    auto check_list = [&](const std::vector<ImpulseResponse>& v, const char* name) {
        if (static_cast<int>(v.size()) != num_loudspeakers)
            throw std::invalid_argument(std::string("PlantModel: wrong path count for ") + name);
        for (const auto& ir : v) {
            ir.validate();
            if (ir.sample_rate != sample_rate)
                throw std::invalid_argument(std::string("PlantModel: sample-rate mismatch in ") + name);
            if (ir.taps[0] != 0.0)
                throw std::invalid_argument(std::string("PlantModel: loudspeaker path ") + name +
                                            " must have zero first tap");
        }
    };
    check_list(s_true, "s_true");
    check_list(s_model, "s_model");
    check_list(br_true, "br_true");
    check_list(br_model, "br_model");
    primary_drum.validate();
    primary_mic.validate();
    if (primary_drum.sample_rate != sample_rate || primary_mic.sample_rate != sample_rate)
        throw std::invalid_argument("PlantModel: primary path sample-rate mismatch");
}

// ---------------------------------------------------------------------------
// CSV / WAV import and export

static ImpulseResponse load_csv(const std::filesystem::path& file, double sample_rate) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("load_ir: cannot open " + file.string());
    std::vector<double> taps;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // tolerate trailing \r and a final empty line
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(line, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error("load_ir: malformed row " + std::to_string(lineno) + " in " +
                                     file.string());
        }
        if (pos != line.size())
            throw std::runtime_error("load_ir: malformed row " + std::to_string(lineno) + " in " +
                                     file.string());
        if (!std::isfinite(v))
            throw std::runtime_error("load_ir: non-finite value at row " + std::to_string(lineno) +
                                     " in " + file.string());
        taps.push_back(v);
    }
    if (taps.empty()) throw std::runtime_error("load_ir: zero-length data in " + file.string());
    return ImpulseResponse(Eigen::Map<const Array>(taps.data(), taps.size()), sample_rate);
}

static void save_csv(const ImpulseResponse& ir, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("save_ir: cannot write " + file.string());
    out.precision(17);
    for (Eigen::Index n = 0; n < ir.taps.size(); ++n) out << ir.taps[n] << '\n';
    if (!out) throw std::runtime_error("save_ir: write failure on " + file.string());
}

namespace {

void put_u32(std::ostream& o, std::uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
void put_u16(std::ostream& o, std::uint16_t v) { o.write(reinterpret_cast<const char*>(&v), 2); }

std::uint32_t get_u32(std::istream& i) {
    std::uint32_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint16_t get_u16(std::istream& i) {
    std::uint16_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 2);
    return v;
}

}  // namespace

// 32-bit IEEE-float mono WAV; header sample rate is authoritative on load.
static void save_wav(const ImpulseResponse& ir, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("save_ir: cannot write " + file.string());
    const std::uint32_t n = static_cast<std::uint32_t>(ir.taps.size());
    const std::uint32_t data_bytes = n * 4;
    const std::uint32_t fs = static_cast<std::uint32_t>(std::lround(ir.sample_rate));
    out.write("RIFF", 4);
    put_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(out, 16);
    put_u16(out, 3);  // IEEE float
    put_u16(out, 1);  // mono
    put_u32(out, fs);
    put_u32(out, fs * 4);
    put_u16(out, 4);
    put_u16(out, 32);
    out.write("data", 4);
    put_u32(out, data_bytes);
    for (std::uint32_t i = 0; i < n; ++i) {
        float v = static_cast<float>(ir.taps[i]);
        out.write(reinterpret_cast<const char*>(&v), 4);
    }
    if (!out) throw std::runtime_error("save_ir: write failure on " + file.string());
}

static ImpulseResponse load_wav(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("load_ir: cannot open " + file.string());
    char tag[5] = {0};
    in.read(tag, 4);
    if (std::strncmp(tag, "RIFF", 4) != 0) throw std::runtime_error("load_ir: not a RIFF file");
    get_u32(in);
    in.read(tag, 4);
    if (std::strncmp(tag, "WAVE", 4) != 0) throw std::runtime_error("load_ir: not a WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t fs = 0;
    std::vector<float> samples;
    bool have_fmt = false, have_data = false;
    while (in.read(tag, 4)) {
        std::uint32_t size = get_u32(in);
        if (std::strncmp(tag, "fmt ", 4) == 0) {
            format = get_u16(in);
            channels = get_u16(in);
            fs = get_u32(in);
            get_u32(in);
            get_u16(in);
            bits = get_u16(in);
            if (size > 16) in.seekg(size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::strncmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw std::runtime_error("load_ir: data chunk before fmt chunk");
            if (format != 3 || bits != 32 || channels != 1)
                throw std::runtime_error("load_ir: expected 32-bit float mono WAV");
            samples.resize(size / 4);
            in.read(reinterpret_cast<char*>(samples.data()), size);
            have_data = true;
        } else {
            in.seekg(size + (size & 1), std::ios::cur);
        }
    }
    if (!have_data || samples.empty()) throw std::runtime_error("load_ir: zero-length WAV data");
    Array taps(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i])) throw std::runtime_error("load_ir: non-finite WAV sample");
        taps[static_cast<Eigen::Index>(i)] = samples[i];
    }
    return ImpulseResponse(std::move(taps), static_cast<double>(fs));
}

ImpulseResponse load_ir(const std::filesystem::path& file, IrFormat format, double csv_sample_rate) {
    if (!std::filesystem::exists(file))
        throw std::runtime_error("load_ir: missing file " + file.string());
    return format == IrFormat::Csv ? load_csv(file, csv_sample_rate) : load_wav(file);
}

void save_ir(const ImpulseResponse& ir, const std::filesystem::path& file, IrFormat format) {
    ir.validate();
    if (format == IrFormat::Csv)
        save_csv(ir, file);
    else
        save_wav(ir, file);
}

// ---------------------------------------------------------------------------

ComplexSpectrum freq_response(const ImpulseResponse& ir, const SpectrumGrid& grid) {
    if (ir.sample_rate != grid.sample_rate)
        throw std::invalid_argument("freq_response: grid sample rate differs from impulse response");
    const int bins = grid.num_bins();
    ComplexArray values(bins);
    const Eigen::Index len = ir.taps.size();
    for (int k = 0; k < bins; ++k) {
        const double omega = grid.omega(k);
        Complex acc(0.0, 0.0);
        for (Eigen::Index n = 0; n < len; ++n)
            acc += ir.taps[n] * std::polar(1.0, -omega * static_cast<double>(n));
        values[k] = acc;
    }
    return {std::move(values), grid};
}

Array convolve(const Array& a, const Array& b) {
    if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("convolve: empty input");
    Array out = Array::Zero(a.size() + b.size() - 1);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic plant: pure delay + two-pole low-pass + damped low-frequency
// resonances; stands in for the measured prototype paths.

namespace {

// impulse at `delay` through a cascade of two one-pole low-pass sections
Array delayed_lowpass_pulse(int length, int delay, double corner_hz, double fs) {
    const double a = std::exp(-2.0 * M_PI * corner_hz / fs);
    const double b = 1.0 - a;
    Array x = Array::Zero(length);
    if (delay < length) x[delay] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
        double state = 0.0;
        for (int n = 0; n < length; ++n) {
            state = b * x[n] + a * state;
            x[n] = state;
        }
    }
    return x;
}

Array synth_speaker_path(const PlantSynthesisSpec& spec, int delay, std::mt19937_64& rng) {
    Array h = delayed_lowpass_pulse(spec.ir_length, delay, spec.lowpass_corner_hz, spec.sample_rate);
    std::uniform_int_distribution<int> count_dist(spec.min_resonances, spec.max_resonances);
    std::uniform_real_distribution<double> freq_dist(spec.resonance_freq_lo_hz,
                                                     spec.resonance_freq_hi_hz);
    std::uniform_real_distribution<double> amp_dist(0.1, 0.3);
    std::uniform_real_distribution<double> decay_dist(0.002, 0.004);
    const int count = count_dist(rng);
    for (int i = 0; i < count; ++i) {
        const double f = freq_dist(rng);
        const double amp = amp_dist(rng);
        const double tau = decay_dist(rng) * spec.sample_rate;  // samples
        const double w = 2.0 * M_PI * f / spec.sample_rate;
        for (int n = delay; n < spec.ir_length; ++n) {
            const double t = static_cast<double>(n - delay);
            h[n] += amp * std::exp(-t / tau) * std::sin(w * t) / tau;
        }
    }
    h[0] = 0.0;  // >= 1 sample acoustic propagation delay
    // scale to unit peak frequency-response magnitude on a modest grid
    ImpulseResponse ir(h, spec.sample_rate);
    auto resp = freq_response(ir, dft_grid(512, spec.sample_rate));
    const double peak = resp.values.abs().maxCoeff();
    if (peak > 0.0) h /= peak;
    h[0] = 0.0;
    return h;
}

}  // namespace

PlantModel synth_plant(const PlantSynthesisSpec& spec, std::uint64_t seed) {
    if (spec.num_loudspeakers < 1) throw std::invalid_argument("synth_plant: L >= 1 required");
    if (spec.ir_length < 8) throw std::invalid_argument("synth_plant: ir_length too small");
    if (!(spec.sample_rate > 0) || !std::isfinite(spec.lowpass_corner_hz) ||
        spec.lowpass_corner_hz <= 0)
        throw std::invalid_argument("synth_plant: non-finite or invalid parameters");
    if (spec.primary_mic_delay < 0 || spec.primary_mic_delay >= spec.primary_drum_delay)
        throw std::invalid_argument("synth_plant: primary mic delay must be < drum delay");
    std::vector<int> delays = spec.speaker_delays;
    if (delays.empty())
        for (int l = 0; l < spec.num_loudspeakers; ++l) delays.push_back(2 + l);
    if (static_cast<int>(delays.size()) != spec.num_loudspeakers)
        throw std::invalid_argument("synth_plant: speaker_delays size mismatch");
    for (int d : delays)
        if (d < 1) throw std::invalid_argument("synth_plant: speaker delay must be >= 1 sample");

    std::mt19937_64 rng(seed);
    PlantModel plant;
    plant.num_loudspeakers = spec.num_loudspeakers;
    plant.sample_rate = spec.sample_rate;
    for (int l = 0; l < spec.num_loudspeakers; ++l) {
        Array s = synth_speaker_path(spec, delays[l], rng);
        // inner-mic path: one sample closer than the eardrum path
        Array br = synth_speaker_path(spec, std::max(1, delays[l] - 1), rng);
        plant.s_true.emplace_back(s, spec.sample_rate);
        plant.s_model.emplace_back(s, spec.sample_rate);
        plant.br_true.emplace_back(br, spec.sample_rate);
        plant.br_model.emplace_back(br, spec.sample_rate);
    }
    const int plen = std::max(spec.primary_drum_delay + 1, spec.primary_mic_delay + 1);
    Array pd = Array::Zero(plen);
    pd[spec.primary_drum_delay] = 1.0;
    Array pm = Array::Zero(plen);
    pm[spec.primary_mic_delay] = 1.0;
    plant.primary_drum = ImpulseResponse(pd, spec.sample_rate);
    plant.primary_mic = ImpulseResponse(pm, spec.sample_rate);
    plant.validate();
    return plant;
}

PlantModel apply_mismatch(const PlantModel& plant, const MismatchSpec& m) {
    plant.validate();
    const int L = plant.num_loudspeakers;
    auto per_channel = [&](const std::vector<double>& v) {
        if (!v.empty() && static_cast<int>(v.size()) != L)
            throw std::invalid_argument("apply_mismatch: per-loudspeaker list size mismatch");
    };
    per_channel(m.gain_perturbation_db);
    if (!m.delay_perturbation_samples.empty() &&
        static_cast<int>(m.delay_perturbation_samples.size()) != L)
        throw std::invalid_argument("apply_mismatch: per-loudspeaker list size mismatch");
    if (m.tap_noise_rel < 0) throw std::invalid_argument("apply_mismatch: tap_noise_rel < 0");

    std::mt19937_64 rng(m.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    PlantModel out = plant;
    auto perturb = [&](ImpulseResponse& ir, int l) {
        Array taps = ir.taps;
        if (!m.gain_perturbation_db.empty()) {
            const double g = m.gain_perturbation_db[l];
            if (!std::isfinite(g)) throw std::invalid_argument("apply_mismatch: non-finite gain");
            taps *= std::pow(10.0, g / 20.0);
        }
        if (m.tap_noise_rel > 0.0) {
            const double scale = m.tap_noise_rel * taps.abs().maxCoeff();
            for (Eigen::Index n = 0; n < taps.size(); ++n) taps[n] += scale * gauss(rng);
        }
        int delay = m.delay_perturbation_samples.empty() ? 0 : m.delay_perturbation_samples[l];
        if (delay < 0) throw std::invalid_argument("apply_mismatch: negative delay perturbation");
        if (delay > 0) {
            Array shifted = Array::Zero(taps.size() + delay);
            shifted.tail(taps.size()) = taps;
            taps = std::move(shifted);
        }
        taps[0] = 0.0;  // preserve first-tap-zero
        ir = ImpulseResponse(std::move(taps), ir.sample_rate);
    };
    for (int l = 0; l < L; ++l) perturb(out.s_true[l], l);
    for (int l = 0; l < L; ++l) perturb(out.br_true[l], l);
    out.validate();
    return out;
}

}  // namespace anc
