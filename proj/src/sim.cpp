#include "lendopt/sim.hpp"

#include "lendopt/csv.hpp"

namespace lendopt::sim {

std::pair<double, double> jump_counts(double lambda_plus, double lambda_minus, double u_prev,
                                      double tau, int trials, JumpMode mode, double epsilon,
                                      std::span<const double> uniforms) {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (uniforms.size() != static_cast<std::size_t>(2 * trials))
        throw ConfigError("need 2*J uniforms (up trials then down trials)");
    if (u_prev >= 1.0) lambda_plus = 0.0;
    if (u_prev <= 0.0) lambda_minus = 0.0;
    const double p_up = lambda_plus * tau / trials;
    const double p_dn = lambda_minus * tau / trials;
    if (p_up > 1.0 || p_dn > 1.0)
        throw ConfigError("per-trial jump probability exceeds 1 (highest jump probability "
                          "given N and J is too large)");
    if (mode == JumpMode::exact) {
        const int up = exact_count(p_up, trials, [&](int j) { return uniforms[j]; });
        const int dn = exact_count(p_dn, trials, [&](int j) { return uniforms[trials + j]; });
        return {static_cast<double>(up), static_cast<double>(dn)};
    }
    const double exp_pe = std::exp(epsilon);
    const double exp_me = std::exp(-epsilon);
    const double cp = std::clamp(p_up, kProbClamp, 1.0 - kProbClamp);
    const double cm = std::clamp(p_dn, kProbClamp, 1.0 - kProbClamp);
    const double up = relaxed_count(cp, trials, epsilon, exp_pe, exp_me,
                                    [&](int j) { return uniforms[j]; });
    const double dn = relaxed_count(cm, trials, epsilon, exp_pe, exp_me,
                                    [&](int j) { return uniforms[trials + j]; });
    return {up, dn};
}

double max_probability(const intensity::PiecewiseIntensity& curve, double tau, int trials) {
    // both curves are monotone, so the extremes sit at the range endpoints
    return std::max(curve.lambda_plus.front(), curve.lambda_minus.back()) * tau / trials;
}

double max_probability(const intensity::LinearIntensity& curve, const RiskParams& params,
                       double tau, int trials) {
    const auto [lp, lm_unused] = intensity::eval_linear(curve, params.r_min);
    const auto [lp_unused, lm] = intensity::eval_linear(curve, params.r_max);
    return std::max(lp, lm) * tau / trials;
}

double objective(const TrajectoryBatch& batch, const RiskParams& params) {
    double total = 0.0;
    for (long p = 0; p < batch.n_paths; ++p)
        total += batch.terminal_x[p] -
                 terminal_penalty_value(batch.terminal_u[p], params.eta, params.u_star) -
                 batch.terminal_q[p];
    return total / (static_cast<double>(batch.n_paths) * params.horizon);
}

void write_trajectories_csv(const TrajectoryBatch& batch, const std::string& path,
                            const std::vector<std::pair<std::string, std::string>>& meta) {
    if (!batch.has_paths)
        throw ConfigError("trajectory dump requires record_paths = true");
    csv::Writer w(path);
    for (const auto& [k, v] : meta) w.meta(k, v);
    w.meta("n_paths", static_cast<long long>(batch.n_paths));
    w.meta("n_steps", batch.n_steps);
    w.meta("tau", batch.tau);
    w.header("path,step,u,x,q");
    for (long p = 0; p < batch.n_paths; ++p)
        for (int i = 0; i <= batch.n_steps; ++i)
            w.row(std::to_string(p) + "," + std::to_string(i) + "," +
                  csv::format_double(batch.u_paths(p, i)) + "," +
                  csv::format_double(batch.x_paths(p, i)) + "," +
                  csv::format_double(batch.q_paths(p, i)));
}

}  // namespace lendopt::sim
