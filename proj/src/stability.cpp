#include "anc/stability.hpp"

#include <cmath>
#include <limits>
#include <unsupported/Eigen/FFT>

namespace anc {

NyquistCurve open_loop_response(const ControllerBank& c,
                                const std::vector<ImpulseResponse>& s_hat, int grid_size) {
    c.validate();
    if (static_cast<int>(s_hat.size()) != c.num_channels)
        throw std::invalid_argument("open_loop_response: channel count mismatch");
    if (grid_size < 8) throw std::invalid_argument("open_loop_response: grid too small");

    // T(Omega) = sum_l W_l(Omega) * S_hat_l(Omega); evaluate the combined FIR
    // taps w_l * s_hat_l on the full circle with one zero-padded FFT.
    Array combined;
    for (int l = 0; l < c.num_channels; ++l) {
        const Array conv = convolve(c.coefficients[l], s_hat[l].taps);
        if (combined.size() == 0)
            combined = conv;
        else if (conv.size() >= combined.size()) {
            Array tmp = conv;
            tmp.head(combined.size()) += combined;
            combined = std::move(tmp);
        } else {
            combined.head(conv.size()) += conv;
        }
    }
    if (combined.size() > grid_size)
        throw std::invalid_argument("open_loop_response: grid smaller than combined tap length");
    std::vector<double> buf(grid_size, 0.0);
    for (Eigen::Index n = 0; n < combined.size(); ++n) buf[n] = combined[n];
    Eigen::FFT<double> fft;
    std::vector<Complex> spec(grid_size);
    fft.fwd(spec, buf);
    NyquistCurve curve;
    curve.grid_size = grid_size;
    curve.loop_values = Eigen::Map<const ComplexArray>(spec.data(), grid_size);
    return curve;
}

int winding_number(const NyquistCurve& curve, Complex point) {
    const int m = curve.grid_size;
    if (m < 3) throw std::invalid_argument("winding_number: degenerate curve");
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        const Complex a = curve.loop_values[i] - point;
        const Complex b = curve.loop_values[(i + 1) % m] - point;
        if (std::abs(a) < 1e-9 || std::abs(b) < 1e-9)
            throw std::invalid_argument("winding_number: curve passes through the point");
        double dtheta = std::arg(b / a);
        if (std::abs(dtheta) > M_PI_2) {
            // subdivide the chord to keep each increment well inside (-pi, pi)
            const Complex mid = 0.5 * (a + b);
            if (std::abs(mid) < 1e-9)
                throw std::invalid_argument("winding_number: curve passes through the point");
            dtheta = std::arg(mid / a) + std::arg(b / mid);
        }
        total += dtheta;
    }
    return static_cast<int>(std::lround(total / (2.0 * M_PI)));
}

std::pair<double, double> measured_margins(const NyquistCurve& curve) {
    if (winding_number(curve, Complex(-1.0, 0.0)) != 0)
        throw std::invalid_argument("measured_margins: curve encircles -1 (unstable)");
    const int m = curve.grid_size;
    const int half = m / 2;  // conjugate symmetry: margins live on [0, pi]
    const double inf = std::numeric_limits<double>::infinity();
    double gm = inf;
    double pm = inf;
    const auto& t = curve.loop_values;
    for (int i = 0; i <= half; ++i) {
        // phase crossover: T real-negative
        if (t[i].imag() == 0.0 && t[i].real() < 0.0) gm = std::min(gm, 1.0 / -t[i].real());
        if (i < half) {
            const double ia = t[i].imag(), ib = t[i + 1].imag();
            if ((ia < 0.0 && ib > 0.0) || (ia > 0.0 && ib < 0.0)) {
                const double s = ia / (ia - ib);
                const double re = t[i].real() + s * (t[i + 1].real() - t[i].real());
                if (re < 0.0) gm = std::min(gm, 1.0 / -re);
            }
            // gain crossover: |T| passes through 1
            const double ga = std::abs(t[i]) - 1.0, gb = std::abs(t[i + 1]) - 1.0;
            if (ga == 0.0) pm = std::min(pm, M_PI - std::abs(std::arg(t[i])));
            if ((ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0)) {
                const double s = ga / (ga - gb);
                const Complex tc = t[i] + s * (t[i + 1] - t[i]);
                pm = std::min(pm, M_PI - std::abs(std::arg(tc)));
            }
        }
    }
    if (std::abs(t[half]) == 1.0) pm = std::min(pm, M_PI - std::abs(std::arg(t[half])));
    return {gm, pm};
}

VerificationReport verify_design(const ControllerBank& c, const PlantModel& plant,
                                 const StabilitySpec& spec, int grid_size) {
    plant.validate();
    spec.validate();
    const NyquistCurve curve = open_loop_response(c, plant.s_model, grid_size);
    VerificationReport rep;
    const ComplexArray& t = curve.loop_values;
    rep.worst_hyperbola_residual =
        ((Complex(spec.varrho) - t).abs() - (Complex(spec.varrho) + t).abs() - 2.0 * spec.rho)
            .maxCoeff();
    bool stable = true;
    try {
        rep.winding_number = winding_number(curve, Complex(-1.0, 0.0));
        stable = (rep.winding_number == 0);
    } catch (const std::invalid_argument&) {
        // curve passes through -1: marginal, treated as failure
        rep.winding_number = std::numeric_limits<int>::max();
        stable = false;
    }
    if (stable) {
        const auto [gm, pm] = measured_margins(curve);
        rep.gain_margin = gm;
        rep.phase_margin = pm;
    } else {
        rep.gain_margin = 0.0;
        rep.phase_margin = 0.0;
    }
    rep.pass = stable && rep.worst_hyperbola_residual <= 1e-6 + 1e-3;
    return rep;
}

}  // namespace anc
