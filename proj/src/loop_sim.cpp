#include "anc/loop_sim.hpp"

#include <cmath>
#include <random>

namespace anc {

void NoiseFieldConfig::validate() const {
    if (!(duration_s > 0)) throw std::invalid_argument("NoiseFieldConfig: duration must be > 0");
    if (!(sample_rate > 0)) throw std::invalid_argument("NoiseFieldConfig: sample_rate must be > 0");
    if (kind != "filtered-common-source")
        throw std::invalid_argument("NoiseFieldConfig: unknown kind");
    if (source_spectrum != "white" && source_spectrum != "pink")
        throw std::invalid_argument("NoiseFieldConfig: unknown source spectrum");
    if (drum_noise_rel < 0) throw std::invalid_argument("NoiseFieldConfig: drum_noise_rel < 0");
}

namespace {

// Streaming FIR delay line. `pending()` is the output at time n excluding the
// current input sample (the taps[0] term), which is all that is needed for
// loudspeaker paths because their first tap is zero.
class DelayLine {
  public:
    explicit DelayLine(const Array& taps)
        : taps_(taps), hist_(static_cast<std::size_t>(taps.size()), 0.0) {}

    double pending() const {
        double acc = 0.0;
        const int len = static_cast<int>(hist_.size());
        int idx = head_;
        for (int m = 1; m < len; ++m) {
            acc += taps_[m] * hist_[idx];
            idx = (idx == 0) ? len - 1 : idx - 1;
        }
        return acc;
    }

    double process(double x) {
        const double y = taps_[0] * x + pending();
        push(x);
        return y;
    }

    void push(double x) {
        head_ = (head_ + 1 == static_cast<int>(hist_.size())) ? 0 : head_ + 1;
        hist_[head_] = x;
    }

  private:
    Array taps_;
    std::vector<double> hist_;
    int head_ = 0;  // slot holding x(n-1)
};

Array fir_filter(const Array& x, const Array& taps) {
    Array y(x.size());
    DelayLine line(taps);
    for (Eigen::Index n = 0; n < x.size(); ++n) y[n] = line.process(x[n]);
    return y;
}

}  // namespace

std::pair<Array, Array> gen_noise(const PlantModel& plant, const NoiseFieldConfig& cfg) {
    cfg.validate();
    if (cfg.sample_rate != plant.sample_rate)
        throw std::invalid_argument("gen_noise: sample-rate mismatch with plant");
    const Eigen::Index len = static_cast<Eigen::Index>(cfg.duration_s * cfg.sample_rate);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Array src(len);
    for (Eigen::Index n = 0; n < len; ++n) src[n] = gauss(rng);
    if (cfg.source_spectrum == "pink") {
        // Kellet three-pole pinking filter
        double b0 = 0, b1 = 0, b2 = 0;
        for (Eigen::Index n = 0; n < len; ++n) {
            const double w = src[n];
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            src[n] = b0 + b1 + b2 + w * 0.1848;
        }
    }
    Array r = fir_filter(src, plant.primary_mic.taps);
    Array d = fir_filter(src, plant.primary_drum.taps);
    if (cfg.drum_noise_rel > 0.0) {
        std::mt19937_64 rng2(cfg.seed + 0x9e3779b97f4a7c15ull);
        const double scale = cfg.drum_noise_rel * std::sqrt(d.square().mean());
        for (Eigen::Index n = 0; n < len; ++n) d[n] += scale * gauss(rng2);
    }
    return {std::move(d), std::move(r)};
}

SimResult run_closed_loop(const PlantModel& plant, const ControllerBank& c, const Array& d,
                          const Array& r) {
    plant.validate();
    c.validate();
    if (c.sample_rate != plant.sample_rate)
        throw std::invalid_argument("run_closed_loop: sample-rate mismatch");
    if (c.num_channels != plant.num_loudspeakers)
        throw std::invalid_argument("run_closed_loop: channel count mismatch");
    if (d.size() != r.size()) throw std::invalid_argument("run_closed_loop: d/r length mismatch");

    const int L = plant.num_loudspeakers;
    std::vector<DelayLine> br_true, br_model, s_model, s_true, ctrl;
    for (int l = 0; l < L; ++l) {
        br_true.emplace_back(plant.br_true[l].taps);
        br_model.emplace_back(plant.br_model[l].taps);
        s_model.emplace_back(plant.s_model[l].taps);
        s_true.emplace_back(plant.s_true[l].taps);
        ctrl.emplace_back(c.coefficients[l]);
    }

    const Eigen::Index len = d.size();
    SimResult res;
    res.e.resize(len);
    res.mic.resize(len);
    res.r_hat.resize(len);
    res.d_hat.resize(len);
    res.e_hat.resize(len);
    res.u.assign(L, Array(len));
    res.d = d;
    res.r = r;

    Eigen::Index n = 0;
    for (; n < len; ++n) {
        double q_br = 0, q_br_hat = 0, q_s_hat = 0, q_s = 0;
        for (int l = 0; l < L; ++l) {
            q_br += br_true[l].pending();
            q_br_hat += br_model[l].pending();
            q_s_hat += s_model[l].pending();
            q_s += s_true[l].pending();
        }
        const double mic = r[n] - q_br;
        const double r_hat = mic + q_br_hat;
        const double d_hat = r_hat;
        const double e_hat = d_hat - q_s_hat;
        const double e = d[n] - q_s;
        res.mic[n] = mic;
        res.r_hat[n] = r_hat;
        res.d_hat[n] = d_hat;
        res.e_hat[n] = e_hat;
        res.e[n] = e;
        for (int l = 0; l < L; ++l) {
            const double ul = ctrl[l].process(e_hat);
            res.u[l][n] = ul;
            br_true[l].push(ul);
            br_model[l].push(ul);
            s_model[l].push(ul);
            s_true[l].push(ul);
        }
        if (std::abs(e) > 1e6) {
            res.stable = false;
            ++n;
            break;
        }
    }
    if (n < len) {
        const auto cut = [n](Array& a) { a.conservativeResize(n); };
        cut(res.e);
        cut(res.mic);
        cut(res.r_hat);
        cut(res.d_hat);
        cut(res.e_hat);
        for (auto& u : res.u) cut(u);
        cut(res.d);
        cut(res.r);
    }
    return res;
}

namespace {

ComplexArray loop_response_on_grid(const ControllerBank& c,
                                   const std::vector<ImpulseResponse>& paths,
                                   const SpectrumGrid& grid) {
    if (static_cast<int>(paths.size()) != c.num_channels)
        throw std::invalid_argument("predicted PSD: channel count mismatch");
    ComplexArray t = ComplexArray::Zero(grid.num_bins());
    for (int l = 0; l < c.num_channels; ++l) {
        const ComplexSpectrum w =
            freq_response(ImpulseResponse(c.coefficients[l], c.sample_rate), grid);
        const ComplexSpectrum s = freq_response(paths[l], grid);
        t += w.values * s.values;
    }
    return t;
}

}  // namespace

PsdEstimate predicted_psd_vma(const ControllerBank& c, const std::vector<ImpulseResponse>& s_hat,
                              const PsdEstimate& phi_rr) {
    const ComplexArray t = loop_response_on_grid(c, s_hat, phi_rr.grid);
    const Array denom = (t + Complex(1.0)).abs();
    if ((denom < 1e-9).any())
        throw std::domain_error("predicted_psd_vma: singular sensitivity |1+T| < 1e-9");
    PsdEstimate out = phi_rr;
    out.density = phi_rr.density / denom.square();
    return out;
}

FullPsdPrediction predicted_psd_full(const ControllerBank& c, const PlantModel& plant,
                                     const SpectralFactors& factors) {
    plant.validate();
    const SpectrumGrid& grid = factors.phi_rr.grid;
    if (!(factors.phi_dd.grid == grid) || !(factors.phi_dr.grid == grid))
        throw std::invalid_argument("predicted_psd_full: factors on different grids");

    const ComplexArray numer = loop_response_on_grid(c, plant.s_true, grid);
    ComplexArray denom = loop_response_on_grid(c, plant.s_model, grid);
    denom += loop_response_on_grid(c, plant.br_true, grid);
    denom -= loop_response_on_grid(c, plant.br_model, grid);
    denom += Complex(1.0);
    if ((denom.abs() < 1e-9).any())
        throw std::domain_error("predicted_psd_full: singular denominator");

    const int bins = grid.num_bins();
    FullPsdPrediction pred;
    pred.min_achievable.resize(bins);
    pred.control_term.resize(bins);
    for (int k = 0; k < bins; ++k) {
        const double pdd = factors.phi_dd.density[k];
        const double prr = factors.phi_rr.density[k];
        const Complex pdr = factors.phi_dr.values[k];
        const double msc = (pdd > 0 && prr > 0) ? std::norm(pdr) / (pdd * prr) : 0.0;
        pred.min_achievable[k] = (1.0 - msc) * pdd;
        if (prr > 0) {
            const Complex diff = pdr / prr - numer[k] / denom[k];
            pred.control_term[k] = std::norm(diff) * prr;
        } else {
            pred.control_term[k] = 0.0;
        }
    }
    pred.total = factors.phi_rr;
    pred.total.density = pred.min_achievable + pred.control_term;
    return pred;
}

Array attenuation_curve(const PsdEstimate& psd_off, const PsdEstimate& psd_on) {
    if (!(psd_off.grid == psd_on.grid))
        throw std::invalid_argument("attenuation_curve: grid mismatch");
    if ((psd_off.density <= 0.0).any())
        throw std::domain_error("attenuation_curve: zero or negative off-PSD bin");
    return 10.0 * (psd_off.density / psd_on.density).log10();
}

double band_attenuation(const Array& curve, double f_lo, double f_hi, const SpectrumGrid& grid) {
    if (!(f_lo < f_hi)) throw std::invalid_argument("band_attenuation: need f_lo < f_hi");
    if (curve.size() != grid.num_bins())
        throw std::invalid_argument("band_attenuation: curve/grid length mismatch");
    double sum = 0.0;
    int count = 0;
    for (int k = 0; k < grid.num_bins(); ++k) {
        const double f = grid.freq(k);
        if (f >= f_lo && f <= f_hi) {
            sum += curve[k];
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("band_attenuation: empty band");
    return sum / count;
}

}  // namespace anc
