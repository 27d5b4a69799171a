#pragma once

#include <string>
#include <vector>

#include "lendopt/core.hpp"
#include "lendopt/intensity.hpp"

namespace lendopt::hjb {

/// Vector form of the backward system for h(.,t):
///   dh/dt + r_bar*U + A h + (1/(4 phi)) (U + B h) .* (U + B h) = 0,
///   h(T) = -psi(U).
/// A carries the jump stencil at the reference-rate intensities, B the same
/// stencil on the rate-sensitivity coefficients; the first and last rows use
/// the ghost-node closure that zeroes the discrete third difference at the
/// boundary.
struct RiccatiSystem {
    UtilizationGrid grid;
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::VectorXd source;     // r_bar * U
    double curvature = 0.0;     // 1 / (4 phi)
    Eigen::VectorXd terminal;   // -psi(U)
    intensity::LinearIntensity curve;
    RiskParams params;
};

RiccatiSystem build_system(const intensity::LinearIntensity& curve, const RiskParams& params);

/// Classic fixed-step RK4 from t = T down to 0, step min(tau, max_step)
/// blocks, recording h on the time grid.  Throws DivergenceError (with the
/// first bad time) if the state leaves the finite range.
ValueSurface solve_riccati(const RiccatiSystem& system, const TimeGrid& times,
                           double max_step = 0.1);

/// r*(u,t) = r_bar + (1/(2 phi)) [u + a1+ h(u+d) + a1- h(u-d) - (a1+ + a1-) h(u)]
/// on interior nodes; boundary nodes are linearly extrapolated from the two
/// nearest interior nodes; everything clipped to [r_min, r_max].
RateSurface optimal_rate_surface(const ValueSurface& h, const intensity::LinearIntensity& curve,
                                 const RiskParams& params);

/// Small-delta expansion of the terminal optimal rate:
///   r_bar + (1/(2 phi)) [u + 2 eta delta (a1- - a1+) max(u - u*, 0)].
double taylor_terminal_rate(double u, const intensity::LinearIntensity& curve,
                            const RiskParams& params);

struct SensitivityReport {
    Eigen::VectorXd d_r_bar;  // per-node d r*(u,T) / d r_bar
    Eigen::VectorXd d_phi;
    Eigen::VectorXd d_eta;
    bool r_bar_unit = false;        // d/d r_bar == 1 everywhere (1e-6)
    bool phi_non_positive = false;  // d/d phi <= 0 everywhere
    bool eta_split = false;         // d/d eta == 0 below u*, >= 0 at/above
};

struct SensitivityBumps {
    double r_bar = 0.01;  // relative, except r_bar which falls back to absolute at 0
    double phi = 0.01;
    double eta = 0.01;
};

/// Central finite differences of the terminal rate slice with respect to
/// r_bar, phi and eta.
SensitivityReport sensitivity_report(const RiskParams& params,
                                     const intensity::LinearIntensity& curve,
                                     const SensitivityBumps& bumps = {});

template <class Tag>
void write_surface_csv(const Surface<Tag>& s, const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& meta = {});

RateSurface read_rate_surface_csv(const std::string& path);

}  // namespace lendopt::hjb
