#ifndef ANC_STABILITY_HPP
#define ANC_STABILITY_HPP

#include "anc/controller_design.hpp"
#include "anc/types.hpp"

namespace anc {

/// Open-loop response T(Omega) sampled on a dense grid over the full circle
/// Omega in [0, 2*pi), m = 0..grid_size-1.
struct NyquistCurve {
    ComplexArray loop_values;
    int grid_size = 0;
};

struct VerificationReport {
    double worst_hyperbola_residual = 0.0;
    int winding_number = 0;
    double gain_margin = 0.0;   // linear; +inf when no phase crossover
    double phase_margin = 0.0;  // radians; +inf when |T| < 1 everywhere
    bool pass = false;
};

NyquistCurve open_loop_response(const ControllerBank& c,
                                const std::vector<ImpulseResponse>& s_hat, int grid_size);

/// Signed encirclements of `point` by the closed curve, via accumulated phase.
/// Throws if the curve passes within 1e-9 of the point.
int winding_number(const NyquistCurve& curve, Complex point);

/// Measured gain margin (linear) and phase margin (radians) from the curve.
/// Requires a stable curve (winding number 0 about -1).
std::pair<double, double> measured_margins(const NyquistCurve& curve);

/// Post-hoc audit: hyperbola residual on a dense grid plus the Nyquist test.
VerificationReport verify_design(const ControllerBank& c, const PlantModel& plant,
                                 const StabilitySpec& spec, int grid_size);

}  // namespace anc

#endif
