#include "anc/controller_design.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

namespace anc {

void ControllerBank::validate() const {
    if (num_channels < 1 || taps_per_channel < 1)
        throw std::invalid_argument("ControllerBank: invalid dimensions");
    if (static_cast<int>(coefficients.size()) != num_channels)
        throw std::invalid_argument("ControllerBank: channel count mismatch");
    for (const auto& c : coefficients) {
        if (c.size() != taps_per_channel)
            throw std::invalid_argument("ControllerBank: tap count mismatch");
        if (!c.isFinite().all()) throw std::invalid_argument("ControllerBank: non-finite coefficient");
    }
    if (!(sample_rate > 0)) throw std::invalid_argument("ControllerBank: sample_rate must be > 0");
}

Vector ControllerBank::concatenated() const {
    Vector w(num_channels * taps_per_channel);
    for (int l = 0; l < num_channels; ++l)
        w.segment(l * taps_per_channel, taps_per_channel) = coefficients[l].matrix();
    return w;
}

ControllerBank ControllerBank::from_concatenated(const Vector& w, int num_channels,
                                                 int taps_per_channel, double sample_rate) {
    if (w.size() != static_cast<Eigen::Index>(num_channels) * taps_per_channel)
        throw std::invalid_argument("ControllerBank: coefficient vector length mismatch");
    ControllerBank b;
    b.num_channels = num_channels;
    b.taps_per_channel = taps_per_channel;
    b.sample_rate = sample_rate;
    for (int l = 0; l < num_channels; ++l)
        b.coefficients.push_back(w.segment(l * taps_per_channel, taps_per_channel).array());
    b.validate();
    return b;
}

// ---------------------------------------------------------------------------

void WeightProfile::validate() const {
    if (breakpoints.empty()) throw std::invalid_argument("WeightProfile: no breakpoints");
    double prev = -1.0;
    for (const auto& [f, v] : breakpoints) {
        if (!(f > prev)) throw std::invalid_argument("WeightProfile: frequencies must increase");
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("WeightProfile: values must be positive and finite");
        prev = f;
    }
}

double WeightProfile::at(double freq_hz) const {
    validate();
    const auto& bp = breakpoints;
    if (freq_hz <= bp.front().first) return bp.front().second;
    if (freq_hz >= bp.back().first) return bp.back().second;
    for (std::size_t i = 1; i < bp.size(); ++i) {
        if (freq_hz <= bp[i].first) {
            const double f0 = bp[i - 1].first, f1 = bp[i].first;
            const double d0 = 20.0 * std::log10(bp[i - 1].second);
            const double d1 = 20.0 * std::log10(bp[i].second);
            // linear in dB over log frequency; guard f0 = 0 by linear-f fallback
            double t;
            if (f0 > 0.0)
                t = (std::log(freq_hz) - std::log(f0)) / (std::log(f1) - std::log(f0));
            else
                t = (freq_hz - f0) / (f1 - f0);
            return std::pow(10.0, (d0 + t * (d1 - d0)) / 20.0);
        }
    }
    return bp.back().second;
}

Array WeightProfile::sample(const SpectrumGrid& grid) const {
    Array out(grid.num_bins());
    for (int k = 0; k < grid.num_bins(); ++k) out[k] = at(grid.freq(k));
    return out;
}

void DesignProblem::validate() const {
    if (num_channels < 1 || taps_per_channel < 1)
        throw std::invalid_argument("DesignProblem: invalid dimensions");
    if (static_cast<int>(s_hat_responses.size()) != num_channels)
        throw std::invalid_argument("DesignProblem: response count mismatch");
    for (const auto& r : s_hat_responses)
        if (r.values.size() != grid.num_bins())
            throw std::invalid_argument("DesignProblem: response length mismatch");
    stability.validate();
    g1.validate();
    g2.validate();
    g3.validate();
    for (int k = 0; k < grid.num_bins(); ++k)
        if (g2.at(grid.freq(k)) < 1.0)
            throw std::invalid_argument("DesignProblem: G2 must be >= 1 at every bin");
}

double gm_bound(const StabilitySpec& spec) {
    spec.validate();
    return 1.0 / spec.rho;
}

double pm_bound(const StabilitySpec& spec) {
    spec.validate();
    const double r2 = spec.rho * spec.rho;
    const double q2 = spec.varrho * spec.varrho;
    const double arg = (r2 * q2 + r2 - r2 * r2) / q2;
    if (arg < 0.0 || arg > 1.0)
        throw std::invalid_argument("pm_bound: arccos argument outside [0,1], invalid spec");
    return std::acos(std::sqrt(arg));
}

void default_profiles(const SpectrumGrid& grid, WeightProfile& g1, WeightProfile& g2,
                      WeightProfile& g3) {
    (void)grid;
    g1.breakpoints = {{500.0, 1.0}, {5000.0, 0.01}};
    g2.breakpoints = {{100.0, std::pow(10.0, 4.0 / 20.0)}};  // 4 dB amplification cap
    g3.breakpoints = {{1000.0, 10.0}, {10000.0, 1.0}};       // 20 dB -> 0 dB controller gain
}

DesignProblem make_design_problem(const PlantModel& plant, const SpectrumGrid& grid,
                                  int taps_per_channel, const StabilitySpec& spec,
                                  const std::vector<int>& channels) {
    std::vector<int> chan = channels;
    if (chan.empty())
        for (int l = 0; l < plant.num_loudspeakers; ++l) chan.push_back(l);
    DesignProblem p;
    for (int l : chan) {
        if (l < 0 || l >= plant.num_loudspeakers)
            throw std::invalid_argument("make_design_problem: channel index out of range");
        p.s_hat_responses.push_back(freq_response(plant.s_model[l], grid));
    }
    p.grid = grid;
    default_profiles(grid, p.g1, p.g2, p.g3);
    p.stability = spec;
    p.num_channels = static_cast<int>(chan.size());
    p.taps_per_channel = taps_per_channel;
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// Shared evaluation workspace

namespace {

constexpr double kSoftAbsEps = 1e-12;

struct Workspace {
    int num_bins, L, N;
    ComplexMatrix dft;   // num_bins x N, entry (k,n) = exp(-j Omega_k n)
    ComplexMatrix shat;  // num_bins x L
    Array g1, g2, g3;
    double rho, varrho;
};

Workspace make_workspace(const DesignProblem& p) {
    p.validate();
    Workspace ws;
    ws.num_bins = p.grid.num_bins();
    ws.L = p.num_channels;
    ws.N = p.taps_per_channel;
    ws.dft.resize(ws.num_bins, ws.N);
    for (int k = 0; k < ws.num_bins; ++k)
        for (int n = 0; n < ws.N; ++n) ws.dft(k, n) = std::polar(1.0, -p.grid.omega(k) * n);
    ws.shat.resize(ws.num_bins, ws.L);
    for (int l = 0; l < ws.L; ++l) ws.shat.col(l) = p.s_hat_responses[l].values.matrix();
    ws.g1 = p.g1.sample(p.grid);
    ws.g2 = p.g2.sample(p.grid);
    ws.g3 = p.g3.sample(p.grid);
    ws.rho = p.stability.rho;
    ws.varrho = p.stability.varrho;
    return ws;
}

void check_dims(const Vector& w, const Workspace& ws) {
    if (w.size() != static_cast<Eigen::Index>(ws.L) * ws.N)
        throw std::invalid_argument("coefficient vector length must be L*N");
}

// per-channel controller spectra (num_bins x L) and loop response T (num_bins)
ComplexMatrix channel_spectra(const Vector& w, const Workspace& ws) {
    Eigen::MatrixXd wm = w.reshaped(ws.N, ws.L);
    return ws.dft * wm.cast<Complex>();
}

ComplexArray loop_response(const ComplexMatrix& wspec, const Workspace& ws) {
    return (wspec.array() * ws.shat.array()).rowwise().sum();
}

Array soft_abs(const ComplexArray& z) { return (z.abs2() + kSoftAbsEps).sqrt(); }

ComplexArray cmul(const Array& a, const ComplexArray& b) { return a.cast<Complex>() * b; }
ComplexArray cdiv(const ComplexArray& a, const Array& b) { return a / b.cast<Complex>(); }

}  // namespace

double objective_value(const Vector& w, const DesignProblem& p) {
    const Workspace ws = make_workspace(p);
    check_dims(w, ws);
    const ComplexArray t = loop_response(channel_spectra(w, ws), ws);
    return ((ComplexArray::Ones(ws.num_bins) + t).abs2() * ws.g1).sum();
}

Vector objective_gradient(const Vector& w, const DesignProblem& p) {
    const Workspace ws = make_workspace(p);
    check_dims(w, ws);
    const ComplexArray t = loop_response(channel_spectra(w, ws), ws);
    const ComplexArray q = cmul(2.0 * ws.g1, t + Complex(1.0));  // dJ = sum Re(conj(q) dT)
    Vector grad(ws.L * ws.N);
    for (int l = 0; l < ws.L; ++l) {
        const ComplexArray col = q.conjugate() * ws.shat.col(l).array();
        grad.segment(l * ws.N, ws.N) = (ws.dft.transpose() * col.matrix()).real();
    }
    return grad;
}

Array hyperbola_residuals(const Vector& w, const DesignProblem& p) {
    const Workspace ws = make_workspace(p);
    check_dims(w, ws);
    const ComplexArray t = loop_response(channel_spectra(w, ws), ws);
    return (Complex(ws.varrho) - t).abs() - (Complex(ws.varrho) + t).abs() - 2.0 * ws.rho;
}

Array amplification_residuals(const Vector& w, const DesignProblem& p) {
    const Workspace ws = make_workspace(p);
    check_dims(w, ws);
    const ComplexArray t = loop_response(channel_spectra(w, ws), ws);
    return 1.0 - ws.g2 * (t + Complex(1.0)).abs();
}

Array gain_residuals(const Vector& w, const DesignProblem& p) {
    const Workspace ws = make_workspace(p);
    check_dims(w, ws);
    const ComplexMatrix wspec = channel_spectra(w, ws);
    Array out(static_cast<Eigen::Index>(ws.L) * ws.num_bins);
    for (int l = 0; l < ws.L; ++l)
        out.segment(static_cast<Eigen::Index>(l) * ws.num_bins, ws.num_bins) =
            wspec.col(l).array().abs() - ws.g3;
    return out;
}

double max_residual(const Vector& w, const DesignProblem& p) {
    return std::max({hyperbola_residuals(w, p).maxCoeff(), amplification_residuals(w, p).maxCoeff(),
                     gain_residuals(w, p).maxCoeff()});
}

// ---------------------------------------------------------------------------
// Augmented-Lagrangian solver with L-BFGS inner iterations. The objective of
// the design problem is maximized, so the inner problem minimizes its negative
// plus the constraint penalty terms.

namespace {

struct Multipliers {
    Array hyp, amp;  // num_bins each
    Array gain;      // num_bins * L
};

struct ExactEval {
    double objective;
    double max_violation;
};

ExactEval exact_eval(const Vector& w, const Workspace& ws) {
    const ComplexMatrix wspec = channel_spectra(w, ws);
    const ComplexArray t = loop_response(wspec, ws);
    ExactEval e;
    e.objective = ((t + Complex(1.0)).abs2() * ws.g1).sum();
    double v = ((Complex(ws.varrho) - t).abs() - (Complex(ws.varrho) + t).abs() - 2.0 * ws.rho)
                   .maxCoeff();
    v = std::max(v, (1.0 - ws.g2 * (t + Complex(1.0)).abs()).maxCoeff());
    for (int l = 0; l < ws.L; ++l)
        v = std::max(v, (wspec.col(l).array().abs() - ws.g3).maxCoeff());
    e.max_violation = v;
    return e;
}

// Augmented-Lagrangian value and (optionally) its gradient.
double al_eval(const Vector& w, const Workspace& ws, const Multipliers& lam, double mu,
               Vector* grad_out) {
    const ComplexMatrix wspec = channel_spectra(w, ws);
    const ComplexArray t = loop_response(wspec, ws);
    const ComplexArray one_plus = t + Complex(1.0);
    const ComplexArray hyp_a = Complex(ws.varrho) - t;
    const ComplexArray hyp_b = Complex(ws.varrho) + t;
    const Array s1 = soft_abs(hyp_a), s2 = soft_abs(hyp_b), s3 = soft_abs(one_plus);

    const Array c_hyp = s1 - s2 - 2.0 * ws.rho;
    const Array c_amp = 1.0 - ws.g2 * s3;
    const Array m_hyp = (lam.hyp + mu * c_hyp).max(0.0);
    const Array m_amp = (lam.amp + mu * c_amp).max(0.0);

    double value = -(one_plus.abs2() * ws.g1).sum();
    value += ((m_hyp.square() - lam.hyp.square()).sum() +
              (m_amp.square() - lam.amp.square()).sum()) / (2.0 * mu);

    std::vector<Array> s4(ws.L), m_gain(ws.L);
    for (int l = 0; l < ws.L; ++l) {
        s4[l] = soft_abs(wspec.col(l).array());
        const Array c = s4[l] - ws.g3;
        m_gain[l] = (lam.gain.segment(static_cast<Eigen::Index>(l) * ws.num_bins, ws.num_bins) +
                     mu * c).max(0.0);
        value += (m_gain[l].square() -
                  lam.gain.segment(static_cast<Eigen::Index>(l) * ws.num_bins, ws.num_bins).square())
                     .sum() / (2.0 * mu);
    }

    if (grad_out) {
        // adjoint q on T: dF = sum_k Re(conj(q_k) dT_k)
        ComplexArray q = cmul(-2.0 * ws.g1, one_plus);
        q += cmul(m_hyp, -(cdiv(hyp_a, s1) + cdiv(hyp_b, s2)));
        q += cmul(-(m_amp * ws.g2), cdiv(one_plus, s3));
        Vector grad(ws.L * ws.N);
        for (int l = 0; l < ws.L; ++l) {
            ComplexArray col = q.conjugate() * ws.shat.col(l).array();
            // gain constraint acts on W_l directly
            col += cmul(m_gain[l] / s4[l], wspec.col(l).array().conjugate());
            grad.segment(l * ws.N, ws.N) = (ws.dft.transpose() * col.matrix()).real();
        }
        *grad_out = std::move(grad);
    }
    return value;
}

// L-BFGS with Armijo backtracking; returns iterations used.
int lbfgs_minimize(Vector& w, const Workspace& ws, const Multipliers& lam, double mu,
                   double grad_tol, int max_iters) {
    const int memory = 10;
    std::deque<Vector> s_hist, y_hist;
    Vector grad;
    double f = al_eval(w, ws, lam, mu, &grad);
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        if (grad.lpNorm<Eigen::Infinity>() <= grad_tol) break;
        // two-loop recursion
        Vector dir = -grad;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            const double rho_i = 1.0 / y_hist[i].dot(s_hist[i]);
            alpha[i] = rho_i * s_hist[i].dot(dir);
            dir -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const double gamma =
                s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            dir *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double rho_i = 1.0 / y_hist[i].dot(s_hist[i]);
            const double beta = rho_i * y_hist[i].dot(dir);
            dir += (alpha[i] - beta) * s_hist[i];
        }
        double slope = grad.dot(dir);
        if (slope >= 0.0) {  // fall back to steepest descent
            dir = -grad;
            slope = -grad.squaredNorm();
        }
        double step = 1.0;
        double f_new = 0.0;
        Vector w_new;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            w_new = w + step * dir;
            f_new = al_eval(w_new, ws, lam, mu, nullptr);
            if (f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        Vector grad_new;
        al_eval(w_new, ws, lam, mu, &grad_new);
        const Vector s_vec = w_new - w;
        const Vector y_vec = grad_new - grad;
        if (y_vec.dot(s_vec) > 1e-14 * s_vec.norm() * y_vec.norm()) {
            s_hist.push_back(s_vec);
            y_hist.push_back(y_vec);
            if (static_cast<int>(s_hist.size()) > memory) {
                s_hist.pop_front();
                y_hist.pop_front();
            }
        }
        w = std::move(w_new);
        f = f_new;
        grad = std::move(grad_new);
    }
    return iter;
}

struct LocalResult {
    Vector w;
    double objective = 0.0;
    double violation = 0.0;
    int iterations = 0;
    bool converged = false;
};

LocalResult solve_from(Vector w, const Workspace& ws, const SolverOptions& opts) {
    Multipliers lam{Array::Zero(ws.num_bins), Array::Zero(ws.num_bins),
                    Array::Zero(static_cast<Eigen::Index>(ws.L) * ws.num_bins)};
    double mu = 10.0;
    double prev_viol = std::numeric_limits<double>::infinity();
    LocalResult res;
    int total_iters = 0;
    bool inner_converged = false;
    for (int outer = 0; outer < 40 && total_iters < opts.max_iterations * 10; ++outer) {
        const double grad_tol = std::max(opts.optimality_tol, 1e-9) *
                                std::max(1.0, std::abs(al_eval(w, ws, lam, mu, nullptr)));
        const int used = lbfgs_minimize(w, ws, lam, mu, grad_tol, 400);
        total_iters += std::max(used, 1);
        // multiplier update from the soft constraint values at the new point
        const ComplexMatrix wspec = channel_spectra(w, ws);
        const ComplexArray t = loop_response(wspec, ws);
        const Array s1 = soft_abs(Complex(ws.varrho) - t), s2 = soft_abs(Complex(ws.varrho) + t),
                    s3 = soft_abs(t + Complex(1.0));
        lam.hyp = (lam.hyp + mu * (s1 - s2 - 2.0 * ws.rho)).max(0.0);
        lam.amp = (lam.amp + mu * (1.0 - ws.g2 * s3)).max(0.0);
        for (int l = 0; l < ws.L; ++l) {
            const Array c = soft_abs(wspec.col(l).array()) - ws.g3;
            auto seg = lam.gain.segment(static_cast<Eigen::Index>(l) * ws.num_bins, ws.num_bins);
            seg = (seg + mu * c).max(0.0);
        }
        const ExactEval e = exact_eval(w, ws);
        const double viol = std::max(0.0, e.max_violation);
        inner_converged = (used < 400);
        if (viol <= 0.1 * opts.feasibility_tol && inner_converged) break;
        if (viol > 0.25 * prev_viol) mu = std::min(mu * 5.0, 1e12);
        prev_viol = std::min(prev_viol, viol);
    }
    // Feasibility polish: the zero controller is strictly feasible, so a
    // scale-back toward it removes any residual constraint violation.
    ExactEval e = exact_eval(w, ws);
    if (e.max_violation > 0.1 * opts.feasibility_tol) {
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 80; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (exact_eval(mid * w, ws).max_violation <= 0.1 * opts.feasibility_tol)
                lo = mid;
            else
                hi = mid;
        }
        w *= lo;
        e = exact_eval(w, ws);
    }
    res.w = std::move(w);
    res.objective = e.objective;
    res.violation = e.max_violation;
    res.iterations = total_iters;
    // exact feasibility is certified above; an inner line-search stall at a
    // feasible point still yields a usable controller
    res.converged = e.max_violation <= opts.feasibility_tol;
    return res;
}

}  // namespace

SolveReport solve(const DesignProblem& p, const SolverOptions& opts) {
    const Workspace ws = make_workspace(p);
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(ws.L) * ws.N);
    const ExactEval at_zero = exact_eval(zero, ws);
    if (at_zero.max_violation > 0.0)
        throw std::invalid_argument("solve: zero controller infeasible (check G2 >= 1)");
    const double obj0 = at_zero.objective;

    LocalResult best = solve_from(zero, ws, opts);
    int total_iters = best.iterations;
    if (best.violation > opts.feasibility_tol || best.objective < obj0) {
        best = {zero, obj0, at_zero.max_violation, best.iterations, true};
    }

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int s = 0; s < opts.multi_start; ++s) {
        Vector w0(zero.size());
        for (Eigen::Index i = 0; i < w0.size(); ++i) w0[i] = gauss(rng);
        w0 *= 0.1 / std::max(1e-12, w0.norm());
        // pull the start inside the feasible region
        double scale = 1.0;
        while (scale > 1e-6 && exact_eval(scale * w0, ws).max_violation > 0.0) scale *= 0.5;
        LocalResult r = solve_from(scale * w0, ws, opts);
        total_iters += r.iterations;
        if (r.violation <= opts.feasibility_tol && r.objective > best.objective) best = std::move(r);
    }

    SolveReport report;
    report.controller = ControllerBank::from_concatenated(best.w, ws.L, ws.N, p.grid.sample_rate);
    report.objective_value = best.objective;
    report.max_constraint_violation = best.violation;
    report.iterations = total_iters;
    report.initial_objective = obj0;
    report.converged = best.converged && best.objective >= obj0;
    return report;
}

}  // namespace anc
