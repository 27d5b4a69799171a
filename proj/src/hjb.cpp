#include "lendopt/hjb.hpp"

#include <algorithm>
#include <cmath>

#include "lendopt/csv.hpp"

namespace lendopt::hjb {

namespace {

/// Jump stencil with ghost-node boundary rows (discrete third difference
/// vanishes across u = 0 and u = 1).
Eigen::MatrixXd stencil_matrix(int n, double minus, double plus) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m(0, 0) = 2.0 * minus - plus;
    m(0, 1) = plus - 3.0 * minus;
    m(0, 2) = minus;
    for (int i = 1; i + 1 < n; ++i) {
        m(i, i - 1) = minus;
        m(i, i) = -minus - plus;
        m(i, i + 1) = plus;
    }
    m(n - 1, n - 3) = plus;
    m(n - 1, n - 2) = minus - 3.0 * plus;
    m(n - 1, n - 1) = 2.0 * plus - minus;
    return m;
}

}  // namespace

RiccatiSystem build_system(const intensity::LinearIntensity& curve, const RiskParams& params) {
    curve.validate();
    params.validate();
    RiccatiSystem sys;
    sys.grid = UtilizationGrid::make(params.delta);
    sys.curve = curve;
    sys.params = params;

    const int n = sys.grid.size();
    const auto [lp_bar, lm_bar] = intensity::eval_linear(curve, params.r_bar);
    sys.A = stencil_matrix(n, lm_bar, lp_bar);
    sys.B = stencil_matrix(n, curve.a1_minus, curve.a1_plus);
    sys.source = params.r_bar * sys.grid.nodes;
    sys.curvature = 1.0 / (4.0 * params.phi);
    sys.terminal.resize(n);
    for (int k = 0; k < n; ++k)
        sys.terminal[k] = -terminal_penalty_value(sys.grid.nodes[k], params.eta, params.u_star);
    return sys;
}

ValueSurface solve_riccati(const RiccatiSystem& system, const TimeGrid& times, double max_step) {
    if (!(max_step > 0.0)) throw ConfigError("max_step must be > 0");
    const int n = system.grid.size();
    const auto& u = system.grid.nodes;

    // dh/dt = -F(h); integrating backward in t means stepping g(s) = h(T - s)
    // forward with dg/ds = F(g).
    const auto rhs = [&](const Eigen::VectorXd& h) -> Eigen::VectorXd {
        const Eigen::VectorXd q = u + system.B * h;
        return system.source + system.A * h +
               system.curvature * q.cwiseProduct(q);
    };

    ValueSurface out;
    out.grid = system.grid;
    out.times = times;
    out.values.resize(n, times.n_steps + 1);

    Eigen::VectorXd h = system.terminal;
    out.values.col(times.n_steps) = h;

    const double step_cap = std::min(times.tau, max_step);
    for (int i = times.n_steps; i > 0; --i) {
        // integrate over [t_{i-1}, t_i] with a whole number of RK4 substeps
        const int substeps = std::max(1, static_cast<int>(std::ceil(times.tau / step_cap - 1e-12)));
        const double dt = times.tau / substeps;
        for (int s = 0; s < substeps; ++s) {
            const Eigen::VectorXd k1 = rhs(h);
            const Eigen::VectorXd k2 = rhs(h + 0.5 * dt * k1);
            const Eigen::VectorXd k3 = rhs(h + 0.5 * dt * k2);
            const Eigen::VectorXd k4 = rhs(h + dt * k3);
            h += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!h.allFinite()) {
            const double bad_time = times.times[i - 1];
            throw DivergenceError("Riccati integration diverged near t = " +
                                  csv::format_double(bad_time));
        }
        out.values.col(i - 1) = h;
    }
    return out;
}

RateSurface optimal_rate_surface(const ValueSurface& h, const intensity::LinearIntensity& curve,
                                 const RiskParams& params) {
    const int n = h.grid.size();
    const int cols = h.times.n_steps + 1;
    RateSurface out;
    out.grid = h.grid;
    out.times = h.times;
    out.values.resize(n, cols);

    const double a1p = curve.a1_plus, a1m = curve.a1_minus;
    const double inv_two_phi = 1.0 / (2.0 * params.phi);
    for (int t = 0; t < cols; ++t) {
        for (int k = 1; k + 1 < n; ++k) {
            const double bracket = h.grid.nodes[k] + a1p * h.values(k + 1, t) +
                                   a1m * h.values(k - 1, t) - (a1p + a1m) * h.values(k, t);
            out.values(k, t) = params.r_bar + inv_two_phi * bracket;
        }
        out.values(0, t) = 2.0 * out.values(1, t) - out.values(2, t);
        out.values(n - 1, t) = 2.0 * out.values(n - 2, t) - out.values(n - 3, t);
        for (int k = 0; k < n; ++k)
            out.values(k, t) = std::clamp(out.values(k, t), params.r_min, params.r_max);
    }
    return out;
}

double taylor_terminal_rate(double u, const intensity::LinearIntensity& curve,
                            const RiskParams& params) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("utilization outside [0,1]");
    const double kink = std::max(u - params.u_star, 0.0);
    return params.r_bar +
           (u + 2.0 * params.eta * params.delta * (curve.a1_minus - curve.a1_plus) * kink) /
               (2.0 * params.phi);
}

namespace {

/// Terminal rate slice (t = T) straight from the terminal condition: the
/// backward solve never has to run for sensitivities of the final slice.
Eigen::VectorXd terminal_rate_slice(const RiskParams& params,
                                    const intensity::LinearIntensity& curve) {
    const auto sys = build_system(curve, params);
    ValueSurface h;
    h.grid = sys.grid;
    h.times = TimeGrid::make(params.horizon, 1);
    h.values.resize(sys.grid.size(), 2);
    h.values.col(0) = sys.terminal;
    h.values.col(1) = sys.terminal;
    return optimal_rate_surface(h, curve, params).values.col(1);
}

}  // namespace

SensitivityReport sensitivity_report(const RiskParams& params,
                                     const intensity::LinearIntensity& curve,
                                     const SensitivityBumps& bumps) {
    SensitivityReport rep;
    const int n = UtilizationGrid::make(params.delta).size();

    // central differences; boundary parameters (r_bar or eta at zero) shift
    // the evaluation center so both bumped points stay in-domain
    const auto central = [&](auto&& apply, double base, double bump) -> Eigen::VectorXd {
        const double center = std::max(base, bump);
        RiskParams up = params, down = params;
        apply(up, center + bump);
        apply(down, center - bump);
        return (terminal_rate_slice(up, curve) - terminal_rate_slice(down, curve)) / (2.0 * bump);
    };

    const double db = params.r_bar > 0.0 ? bumps.r_bar * params.r_bar : bumps.r_bar * 0.01;
    rep.d_r_bar = central([](RiskParams& p, double v) { p.r_bar = v; }, params.r_bar, db);
    rep.d_phi = central([](RiskParams& p, double v) { p.phi = v; }, params.phi,
                        bumps.phi * params.phi);
    rep.d_eta = central([](RiskParams& p, double v) { p.eta = v; }, params.eta,
                        params.eta > 0.0 ? bumps.eta * params.eta : 1.0);

    rep.r_bar_unit = ((rep.d_r_bar.array() - 1.0).abs() <= 1e-6).all();
    rep.phi_non_positive = (rep.d_phi.array() <= 1e-12).all();

    const UtilizationGrid grid = UtilizationGrid::make(params.delta);
    bool split = true;
    for (int k = 0; k < n; ++k) {
        const double u = grid.nodes[k];
        if (u < params.u_star - kGridTol) {
            if (std::abs(rep.d_eta[k]) > 1e-12) split = false;
        } else if (rep.d_eta[k] < -1e-12) {
            split = false;
        }
    }
    rep.eta_split = split;
    return rep;
}

template <class Tag>
void write_surface_csv(const Surface<Tag>& s, const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& meta) {
    csv::Writer w(path);
    for (const auto& [k, v] : meta) w.meta(k, v);
    w.meta("delta", s.grid.delta);
    w.meta("n_steps", s.times.n_steps);
    w.meta("horizon", s.times.horizon);
    w.header("u,t,value");
    for (int k = 0; k < s.grid.size(); ++k)
        for (int t = 0; t <= s.times.n_steps; ++t)
            w.row(csv::format_double(s.grid.nodes[k], 12) + "," +
                  csv::format_double(s.times.times[t], 12) + "," +
                  csv::format_double(s.values(k, t), 12));
}

template void write_surface_csv<detail::RateTag>(
    const RateSurface&, const std::string&,
    const std::vector<std::pair<std::string, std::string>>&);
template void write_surface_csv<detail::ValueTag>(
    const ValueSurface&, const std::string&,
    const std::vector<std::pair<std::string, std::string>>&);

RateSurface read_rate_surface_csv(const std::string& path) {
    const auto t = csv::read_table(path);
    if (t.columns != std::vector<std::string>{"u", "t", "value"})
        throw InputError("surface file '" + path + "' must have header u,t,value");
    const auto need = [&](const char* key) -> double {
        const auto it = t.meta.find(key);
        if (it == t.meta.end())
            throw InputError("surface file '" + path + "' missing # " + key + "= header");
        return csv::parse_double(it->second, -1);
    };
    const double delta = need("delta");
    const int n_steps = static_cast<int>(need("n_steps"));
    const double horizon = need("horizon");

    RateSurface s;
    s.grid = UtilizationGrid::make(delta);
    s.times = TimeGrid::make(horizon, n_steps);
    const long expected = static_cast<long>(s.grid.size()) * (n_steps + 1);
    if (static_cast<long>(t.rows.size()) != expected)
        throw InputError("surface file '" + path + "' has " + std::to_string(t.rows.size()) +
                         " rows, expected " + std::to_string(expected));
    s.values.resize(s.grid.size(), n_steps + 1);
    std::size_t r = 0;
    for (int k = 0; k < s.grid.size(); ++k)
        for (int ti = 0; ti <= n_steps; ++ti, ++r)
            s.values(k, ti) = csv::parse_double(t.rows[r][2], t.line_numbers[r]);
    return s;
}

}  // namespace lendopt::hjb
