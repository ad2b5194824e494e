#ifndef ANC_CONTROLLER_DESIGN_HPP
#define ANC_CONTROLLER_DESIGN_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "anc/acoustic_paths.hpp"
#include "anc/types.hpp"

namespace anc {

/// L per-channel FIR controllers of length N. The concatenation of the
/// channel coefficient vectors is the optimization variable of length L*N.
struct ControllerBank {
    int num_channels = 0;
    int taps_per_channel = 0;
    std::vector<Array> coefficients;  // num_channels entries of length taps_per_channel
    double sample_rate = 0.0;

    void validate() const;
    Vector concatenated() const;
    static ControllerBank from_concatenated(const Vector& w, int num_channels,
                                            int taps_per_channel, double sample_rate);
};

/// Hyperbola parameters: rho is the x-axis intersect (-rho, 0) and varrho the
/// focus (-varrho, 0) of the single-sided stability boundary.
struct StabilitySpec {
    double rho = 0.8;
    double varrho = 2.0;

    void validate() const {
        if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("StabilitySpec: need 0 < rho < 1");
        if (!(rho < varrho)) throw std::invalid_argument("StabilitySpec: need rho < varrho");
    }
};

/// Piecewise profile over frequency, interpolated linearly in dB against
/// log-frequency, extended by its edge values outside the breakpoint range.
struct WeightProfile {
    std::vector<std::pair<double, double>> breakpoints;  // (freq Hz, linear value)

    void validate() const;
    double at(double freq_hz) const;
    Array sample(const SpectrumGrid& grid) const;
};

struct DesignProblem {
    std::vector<ComplexSpectrum> s_hat_responses;  // L entries
    SpectrumGrid grid;
    WeightProfile g1, g2, g3;
    StabilitySpec stability;
    int num_channels = 0;     // L
    int taps_per_channel = 0; // N

    void validate() const;
};

struct SolverOptions {
    double feasibility_tol = 1e-6;
    double optimality_tol = 1e-6;
    int max_iterations = 500;
    int multi_start = 0;       // extra seeded starting points beyond w = 0
    std::uint64_t seed = 1;
};

struct SolveReport {
    ControllerBank controller;
    double objective_value = 0.0;
    double max_constraint_violation = 0.0;
    int iterations = 0;
    double initial_objective = 0.0;
    bool converged = false;
};

double objective_value(const Vector& w, const DesignProblem& p);
Vector objective_gradient(const Vector& w, const DesignProblem& p);

/// residual[k] = |varrho - T_k| - |varrho + T_k| - 2*rho; feasible iff <= 0.
Array hyperbola_residuals(const Vector& w, const DesignProblem& p);
/// residual[k] = 1 - G2(Omega_k)*|1 + T_k|; feasible iff <= 0.
Array amplification_residuals(const Vector& w, const DesignProblem& p);
/// residual[l*(num_bins)+k] = |W_l(Omega_k)| - G3(Omega_k); feasible iff <= 0.
Array gain_residuals(const Vector& w, const DesignProblem& p);

/// Worst residual over all three constraint families.
double max_residual(const Vector& w, const DesignProblem& p);

SolveReport solve(const DesignProblem& p, const SolverOptions& opts = {});

/// GM >= 1/rho (linear gain).
double gm_bound(const StabilitySpec& spec);
/// PM >= arccos(sqrt((rho^2*varrho^2 + rho^2 - rho^4) / varrho^2)), radians.
double pm_bound(const StabilitySpec& spec);

/// Default G1/G2/G3: low-frequency emphasis, 4 dB amplification cap,
/// 20 dB controller gain cap rolling off to 0 dB at 10 kHz.
void default_profiles(const SpectrumGrid& grid, WeightProfile& g1, WeightProfile& g2,
                      WeightProfile& g3);

/// Assemble a DesignProblem from the plant's modelled paths, optionally
/// restricted to a subset of loudspeaker channels.
DesignProblem make_design_problem(const PlantModel& plant, const SpectrumGrid& grid,
                                  int taps_per_channel, const StabilitySpec& spec,
                                  const std::vector<int>& channels = {});

}  // namespace anc

#endif
