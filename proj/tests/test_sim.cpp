#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lendopt/optimize.hpp"
#include "lendopt/sim.hpp"

using namespace lendopt;
using namespace lendopt::sim;

namespace {

RiskParams toy_params(double delta = 0.01) {
    RiskParams p;
    p.phi = 7.0;
    p.eta = 1500.0;
    p.r_bar = 0.0;
    p.u_star = 0.9;
    p.horizon = 100.0;
    p.delta = delta;
    p.r_min = 0.0;
    p.r_max = 0.4;
    return p;
}

intensity::SampledCurve zero_curve() {
    return intensity::SampledCurve::from(
        intensity::to_piecewise(intensity::LinearIntensity{0, 0, 0, 0}, 0.0, 0.4));
}

intensity::SampledCurve toy_curve() {
    return intensity::SampledCurve::from(
        intensity::to_piecewise(intensity::LinearIntensity{0.05, -0.2, 0.0, 0.25}, 0.0, 0.4));
}

struct ConstPolicy {
    double value;
    struct State {};
    State init_state(double) const { return {}; }
    double rate(double, int, State&) const { return value; }
};

SimConfig config(long paths, JumpMode mode, std::uint64_t seed = 7) {
    SimConfig c;
    c.n_steps = 100;
    c.jump_trials = 10;
    c.epsilon = 0.25;
    c.mode = mode;
    c.seed = seed;
    c.n_paths = paths;
    return c;
}

}  // namespace

TEST_CASE("hard sigmoid") {
    CHECK(hard_sigmoid(0.0, 0.25) == 0.5);
    CHECK(hard_sigmoid(0.0, 1.0) == 0.5);
    CHECK(hard_sigmoid(0.25, 0.25) == 1.0);
    CHECK(hard_sigmoid(5.0, 0.25) == 1.0);
    CHECK(hard_sigmoid(-0.25, 0.25) == 0.0);
    CHECK(hard_sigmoid(-0.1, 0.25) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("logit") {
    CHECK(logit(0.5) == 0.0);
    CHECK(logit(0.7310585786300049) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(logit(0.25) == doctest::Approx(-std::log(3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(logit(0.0), std::domain_error);
    CHECK_THROWS_AS(logit(1.0), std::domain_error);
    CHECK_THROWS_AS(logit(-0.2), std::domain_error);
}

TEST_CASE("jump counts") {
    std::vector<double> uniforms(20);
    for (int j = 0; j < 20; ++j) uniforms[j] = rng::uniform(rng::path_key(3, 3), j);

    SUBCASE("zero intensities produce zero counts in both modes") {
        for (const auto mode : {JumpMode::exact, JumpMode::relaxed}) {
            const auto [up, dn] = jump_counts(0.0, 0.0, 0.5, 1.0, 10, mode, 0.25, uniforms);
            CHECK(up == 0.0);
            CHECK(dn == 0.0);
        }
    }
    SUBCASE("boundary indicators gate the intensities") {
        const auto [up, dn] =
            jump_counts(8.0, 8.0, 1.0, 1.0, 10, JumpMode::exact, 0.25, uniforms);
        CHECK(up == 0.0);  // at u = 1 no up-jumps regardless of intensity
        CHECK(dn > 0.0);   // p = 0.8 per trial: some of 10 trials fire
        const auto [up2, dn2] =
            jump_counts(8.0, 8.0, 0.0, 1.0, 10, JumpMode::exact, 0.25, uniforms);
        CHECK(dn2 == 0.0);  // at u = 0 no down-jumps
        CHECK(up2 > 0.0);
    }
    SUBCASE("excessive probability is rejected") {
        CHECK_THROWS_AS(jump_counts(20.0, 0.0, 0.5, 1.0, 10, JumpMode::exact, 0.25, uniforms),
                        ConfigError);
    }
    SUBCASE("tiny relaxation reproduces the exact threshold rule") {
        for (const double p : {0.1, 0.5, 0.9}) {
            const auto [re_up, re_dn] =
                jump_counts(10.0 * p, 10.0 * p, 0.5, 1.0, 10, JumpMode::relaxed, 1e-9, uniforms);
            const auto [ex_up, ex_dn] =
                jump_counts(10.0 * p, 10.0 * p, 0.5, 1.0, 10, JumpMode::exact, 1e-9, uniforms);
            CHECK(re_up == doctest::Approx(ex_up).epsilon(1e-9));
            CHECK(re_dn == doctest::Approx(ex_dn).epsilon(1e-9));
        }
    }
    SUBCASE("law of large numbers at p = 0.5") {
        const int big = 1000000;
        std::vector<double> u(2 * big);
        const auto key = rng::path_key(11, 0);
        for (int j = 0; j < 2 * big; ++j) u[j] = rng::uniform(key, j);
        const auto [up, dn] =
            jump_counts(0.5 * big, 0.5 * big, 0.5, 1.0, big, JumpMode::exact, 0.25, u);
        CHECK(up / big >= 0.499);
        CHECK(up / big <= 0.501);
    }
}

TEST_CASE("jump-free simulation accumulates wealth and penalty deterministically") {
    const auto params = toy_params();
    const auto curve = zero_curve();
    const ConstPolicy policy{0.05};
    const auto batch = simulate_batch(policy, curve, params, config(3, JumpMode::exact),
                                      U0Spec::fixed_at(0.8));
    for (int p = 0; p < 3; ++p) {
        CHECK(batch.terminal_x[p] == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(batch.terminal_u[p] == 0.8);
        CHECK(batch.terminal_q[p] == doctest::Approx(7.0 * 0.0025 * 100.0).epsilon(1e-12));
    }
    CHECK(objective(batch, params) == doctest::Approx((4.0 - 1.75) / 100.0).epsilon(1e-12));
}

TEST_CASE("zero rate and intensities give a zero objective") {
    const auto params = toy_params();
    const auto batch = simulate_batch(ConstPolicy{0.0}, zero_curve(), params,
                                      config(2, JumpMode::exact), U0Spec::fixed_at(0.5));
    CHECK(objective(batch, params) == 0.0);
}

TEST_CASE("exact paths stay on the lattice inside the unit interval") {
    const auto params = toy_params();
    auto cfg = config(64, JumpMode::exact);
    cfg.record_paths = true;
    const auto batch = simulate_batch(ConstPolicy{0.05}, toy_curve(), params, cfg,
                                      U0Spec::uniform_interior());
    for (long p = 0; p < batch.n_paths; ++p) {
        for (int i = 0; i <= batch.n_steps; ++i) {
            const double u = batch.u_paths(p, i);
            CHECK(u >= 0.0);
            CHECK(u <= 1.0);
            const double q = u / params.delta;
            CHECK(std::abs(q - std::round(q)) <= 1e-9);
        }
        // wealth never decreases under non-negative rates; penalty never decreases
        for (int i = 0; i < batch.n_steps; ++i) {
            CHECK(batch.x_paths(p, i + 1) >= batch.x_paths(p, i));
            CHECK(batch.q_paths(p, i + 1) >= batch.q_paths(p, i));
        }
    }
}

TEST_CASE("boundary absorption: no down intensity keeps a full pool full") {
    const auto params = toy_params();
    auto curve = intensity::SampledCurve::from(
        intensity::to_piecewise(intensity::LinearIntensity{0.5, 0.0, 0.0, 0.0}, 0.0, 0.4));
    const auto batch = simulate_batch(ConstPolicy{0.05}, curve, params,
                                      config(16, JumpMode::exact), U0Spec::fixed_at(1.0));
    for (long p = 0; p < batch.n_paths; ++p) CHECK(batch.terminal_u[p] == 1.0);
}

TEST_CASE("relaxed counts converge to exact counts pathwise") {
    const auto params = toy_params();
    auto cfg_exact = config(32, JumpMode::exact, 99);
    auto cfg_tiny = config(32, JumpMode::relaxed, 99);
    cfg_tiny.epsilon = 1e-9;
    cfg_exact.record_paths = cfg_tiny.record_paths = true;
    const auto a =
        simulate_batch(ConstPolicy{0.05}, toy_curve(), params, cfg_exact, U0Spec::fixed_at(0.5));
    const auto b =
        simulate_batch(ConstPolicy{0.05}, toy_curve(), params, cfg_tiny, U0Spec::fixed_at(0.5));
    CHECK((a.u_paths - b.u_paths).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("determinism is independent of the thread count") {
    const auto params = toy_params();
    for (const auto mode : {JumpMode::exact, JumpMode::relaxed}) {
        auto c1 = config(257, mode, 31);
        auto c8 = config(257, mode, 31);
        c1.threads = 1;
        c8.threads = 8;
        const auto a =
            simulate_batch(ConstPolicy{0.07}, toy_curve(), params, c1, U0Spec::uniform_interior());
        const auto b =
            simulate_batch(ConstPolicy{0.07}, toy_curve(), params, c8, U0Spec::uniform_interior());
        CHECK((a.terminal_u - b.terminal_u).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.terminal_x - b.terminal_x).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.initial_u - b.initial_u).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("one-step drift matches intensity difference within three standard errors") {
    auto params = toy_params(0.001);
    params.horizon = 1.0;
    auto cfg = config(1000000, JumpMode::exact, 17);
    cfg.n_steps = 1;
    cfg.jump_trials = 10;
    const double r = 0.06;
    const auto curve = toy_curve();
    double lp, lm;
    curve.eval(r, lp, lm);
    const auto batch =
        simulate_batch(ConstPolicy{r}, curve, params, cfg, U0Spec::fixed_at(0.5));
    const double mean_du = (batch.terminal_u.array() - 0.5).mean();
    const double expected = params.delta * 1.0 * (lp - lm);
    // per-path variance of delta * (Binomial - Binomial)
    const double var = params.delta * params.delta *
                       (lp / 10.0 * (1 - lp / 10.0) + lm / 10.0 * (1 - lm / 10.0)) * 10.0;
    const double se = std::sqrt(var / cfg.n_paths);
    CHECK(std::abs(mean_du - expected) <= 3.0 * se);
}

TEST_CASE("convexity penalty") {
    const auto params = toy_params();
    const auto grid = UtilizationGrid::make(0.01);
    SUBCASE("linear policies carry no penalty") {
        const auto linear = [](double u, int) { return 0.1 * u; };
        CHECK(convexity_penalty(linear, grid, 100, params) == 0.0);
    }
    SUBCASE("convex kinks carry no penalty") {
        const auto kinked = [&](double u, int) {
            return u < 0.9 ? 0.05 * u : 0.05 * 0.9 + 0.5 * (u - 0.9);
        };
        CHECK(convexity_penalty(kinked, grid, 100, params) == 0.0);
    }
    SUBCASE("concave quadratic: each node contributes 2 delta^2 per slice") {
        const auto concave = [](double u, int) { return -(u - 0.9) * (u - 0.9); };
        const double per_slice_per_node = 2.0 * 0.01 * 0.01;
        // nodes u* .. 1-delta: 10 of them
        CHECK(convexity_penalty(concave, grid, 100, params) ==
              doctest::Approx(10.0 * per_slice_per_node).epsilon(1e-9));
    }
}

TEST_CASE("highest jump probability") {
    const auto lin = intensity::LinearIntensity{0.05, -0.2, 0.0, 0.25};
    auto p = toy_params();
    SUBCASE("coarse grids saturate") {
        CHECK(max_probability(lin, p, 10.0, 1) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(max_probability(lin, p, 1.0, 10) == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(max_probability(lin, p, 10.0, 10) == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(max_probability(lin, p, 1.0, 1) == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("zero curve") {
        CHECK(max_probability(intensity::LinearIntensity{0, 0, 0, 0}, p, 10.0, 1) == 0.0);
    }
    SUBCASE("piecewise version agrees") {
        const auto pw = intensity::to_piecewise(lin, p.r_min, p.r_max);
        CHECK(max_probability(pw, 10.0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("market-scale simulation smoke: raw pnl magnitude") {
    // Table-like setup at reduced path count; the acceptance suite runs the
    // full comparison.
    RiskParams params = toy_params(0.001);
    params.r_max = 0.25;
    intensity::PiecewiseIntensity market;
    market.rates = {0.0, 0.0545, 0.0555, 0.0567, 0.058, 0.25};
    market.lambda_plus = {0.0067, 0.0067, 0.0067, 0.0041, 0.0015, 0.0};
    market.lambda_minus = {0.0, 0.0008, 0.0029, 0.009, 0.0222, 1.9485};
    const auto curve = intensity::SampledCurve::from(market);
    opt::ParametricModel bilinear(opt::Variant::bilinear, 0.9, 1.0);
    Eigen::VectorXd v(3);
    v << 0.0, 0.0634, 0.0734;
    bilinear.set_params(v);
    const auto batch = simulate_batch(bilinear, curve, params, config(20000, JumpMode::exact, 5),
                                      U0Spec::fixed_at(0.9));
    const double raw_mean_bps = batch.terminal_x.mean() / params.horizon * 1e4;
    CHECK(raw_mean_bps > 540.0);
    CHECK(raw_mean_bps < 590.0);
}
