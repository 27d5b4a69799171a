#pragma once

#include <Eigen/Core>
#include <cmath>
#include <utility>

#include "lendopt/errors.hpp"

namespace lendopt {

inline constexpr double kGridTol = 1e-9;

/// Constants of the control problem.  Rates are plain decimals, time is
/// measured in blocks; all downstream code multiplies r*u*tau directly and
/// never converts units.
struct RiskParams {
    double phi = 7.0;        // running-penalty weight on (r - r_bar)^2
    double eta = 1500.0;     // terminal-penalty weight above target utilization
    double r_bar = 0.0;      // reference rate
    double u_star = 0.9;     // target utilization
    double horizon = 100.0;  // horizon T in blocks
    double delta = 0.001;    // utilization jump size
    double r_min = 0.0;
    double r_max = 0.25;

    void validate() const {
        if (!(phi > 0.0)) throw ConfigError("phi must be > 0");
        if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0");
        if (!(r_bar >= 0.0)) throw ConfigError("r_bar must be >= 0");
        if (!(u_star >= 0.0 && u_star <= 1.0)) throw ConfigError("u_star must be in [0,1]");
        if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
        if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must be in (0,1)");
        const double inv = 1.0 / delta;
        if (std::abs(inv - std::round(inv)) > kGridTol)
            throw ConfigError("1/delta must be an integer (grid has to close at u = 1)");
        if (!(r_min >= 0.0 && r_min < r_max)) throw ConfigError("need 0 <= r_min < r_max");
    }
};

/// Terminal liquidity penalty: eta * max(u - u_star, 0)^2.
template <class Scalar>
Scalar terminal_penalty_value(Scalar u, double eta, double u_star) {
    const Scalar excess = u - u_star;
    return excess > Scalar(0) ? Scalar(eta) * excess * excess : Scalar(0);
}

inline double terminal_penalty(double u, const RiskParams& params) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("utilization outside [0,1]");
    return terminal_penalty_value(u, params.eta, params.u_star);
}

/// d/du of the terminal penalty (0 below target, 2*eta*(u-u*) above).
inline double terminal_penalty_slope(double u, const RiskParams& params) {
    const double excess = u - params.u_star;
    return excess > 0.0 ? 2.0 * params.eta * excess : 0.0;
}

/// Uniform lattice {0, delta, ..., 1}.  Node k is exactly k*delta.
struct UtilizationGrid {
    double delta = 0.0;
    Eigen::VectorXd nodes;

    static UtilizationGrid make(double delta) {
        const double inv = 1.0 / delta;
        if (std::abs(inv - std::round(inv)) > kGridTol)
            throw ConfigError("1/delta must be an integer");
        const int n = static_cast<int>(std::llround(inv));
        UtilizationGrid g;
        g.delta = delta;
        g.nodes.resize(n + 1);
        for (int k = 0; k <= n; ++k) g.nodes[k] = k * delta;
        g.nodes[n] = 1.0;
        return g;
    }

    int size() const { return static_cast<int>(nodes.size()); }
    double node(int k) const { return nodes[k]; }

    /// Index of the lattice node equal to u (within kGridTol), or -1.
    int index_of(double u) const {
        const double q = u / delta;
        const int k = static_cast<int>(std::llround(q));
        if (k < 0 || k >= size()) return -1;
        return std::abs(u - nodes[k]) <= kGridTol ? k : -1;
    }
};

/// Uniform partition of [0, T] into n_steps intervals of length tau.
struct TimeGrid {
    int n_steps = 0;
    double horizon = 0.0;
    double tau = 0.0;
    Eigen::VectorXd times;

    static TimeGrid make(double horizon, int n_steps) {
        if (n_steps <= 0) throw ConfigError("n_steps must be > 0");
        if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
        TimeGrid t;
        t.n_steps = n_steps;
        t.horizon = horizon;
        t.tau = horizon / n_steps;
        t.times.resize(n_steps + 1);
        for (int i = 0; i <= n_steps; ++i) t.times[i] = i * horizon / n_steps;
        t.times[n_steps] = horizon;
        return t;
    }
};

inline std::pair<UtilizationGrid, TimeGrid> build_grids(const RiskParams& params, int n_steps) {
    params.validate();
    return {UtilizationGrid::make(params.delta), TimeGrid::make(params.horizon, n_steps)};
}

namespace detail {
struct RateTag {};
struct ValueTag {};
}  // namespace detail

/// Values on the (utilization, time) lattice; rows index u, columns index t.
template <class Tag>
struct Surface {
    UtilizationGrid grid;
    TimeGrid times;
    Eigen::MatrixXd values;  // grid.size() x (times.n_steps + 1)

    bool same_layout(const Surface& other) const {
        return grid.size() == other.grid.size() && times.n_steps == other.times.n_steps &&
               std::abs(grid.delta - other.grid.delta) <= kGridTol &&
               std::abs(times.tau - other.times.tau) <= kGridTol;
    }
};

using RateSurface = Surface<detail::RateTag>;
using ValueSurface = Surface<detail::ValueTag>;

}  // namespace lendopt
