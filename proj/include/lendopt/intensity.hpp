#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lendopt/core.hpp"

namespace lendopt::intensity {

/// Arrival rates linear in the interest rate, floored at zero:
///   lambda_plus(r)  = max(a0_plus  + a1_plus  * r, 0)
///   lambda_minus(r) = max(a0_minus + a1_minus * r, 0)
struct LinearIntensity {
    double a0_plus = 0.0;
    double a1_plus = 0.0;   // <= 0: higher rates discourage new borrowing
    double a0_minus = 0.0;
    double a1_minus = 0.0;  // >= 0: higher rates accelerate repayment

    void validate() const {
        if (!(a0_plus >= 0.0) || !(a0_minus >= 0.0))
            throw ConfigError("intensity intercepts must be >= 0");
        if (!(a1_plus <= 0.0)) throw ConfigError("a1_plus must be <= 0");
        if (!(a1_minus >= 0.0)) throw ConfigError("a1_minus must be >= 0");
    }
};

/// Monotone piecewise-linear arrival rates on [r_min, r_max].
struct PiecewiseIntensity {
    std::vector<double> rates;         // strictly increasing knot rates
    std::vector<double> lambda_plus;   // non-increasing
    std::vector<double> lambda_minus;  // non-decreasing

    double r_min() const { return rates.front(); }
    double r_max() const { return rates.back(); }

    void validate() const;
};

std::pair<double, double> eval_linear(const LinearIntensity& curve, double r);

/// Linear interpolation between bracketing knots; exact at knots.
/// Throws std::domain_error outside [r_min, r_max].
std::pair<double, double> eval_piecewise(const PiecewiseIntensity& curve, double r);

struct RawIntensityPoint {
    double rate = 0.0;
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
};

/// Extrapolate the extreme segments to [r_min, r_max], floor at zero and
/// restore monotonicity by isotonic clipping (running min on lambda_plus,
/// running max on lambda_minus).  Idempotent on valid curves.
PiecewiseIntensity post_process(const std::vector<RawIntensityPoint>& raw_points, double r_min,
                                double r_max);

/// Smallest rate where the two arrival curves meet, if they cross at all.
std::optional<double> equilibrium_rate(const PiecewiseIntensity& curve);
std::optional<double> equilibrium_rate(const LinearIntensity& curve, double r_min, double r_max);

/// Represent a (floored) linear curve as knots over [r_min, r_max]; floor
/// roots become knots so segment interpolation reproduces the curve.
PiecewiseIntensity to_piecewise(const LinearIntensity& curve, double r_min, double r_max);

void write_csv(const PiecewiseIntensity& curve, const std::string& path,
               const std::vector<std::pair<std::string, std::string>>& meta = {});
PiecewiseIntensity read_csv(const std::string& path);

/// Lookup table used by the simulator: per-segment values and slopes so that
/// evaluation and d(lambda)/dr come from the same segment scan.
struct SampledCurve {
    std::vector<double> rates;
    std::vector<double> lp, lm;           // values at knots
    std::vector<double> slope_p, slope_m; // per-segment slopes (size rates-1)

    static SampledCurve from(const PiecewiseIntensity& c);

    int segment(double r) const {
        // clamped binary search; r is pre-clipped to [r_min, r_max] by callers
        int lo = 0, hi = static_cast<int>(rates.size()) - 1;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            (r < rates[mid] ? hi : lo) = mid;
        }
        return lo;
    }

    void eval(double r, double& lambda_p, double& lambda_m) const {
        const int s = segment(r);
        const double dr = r - rates[s];
        lambda_p = lp[s] + slope_p[s] * dr;
        lambda_m = lm[s] + slope_m[s] * dr;
    }

    void eval_with_slopes(double r, double& lambda_p, double& lambda_m, double& dp,
                          double& dm) const {
        const int s = segment(r);
        const double dr = r - rates[s];
        lambda_p = lp[s] + slope_p[s] * dr;
        lambda_m = lm[s] + slope_m[s] * dr;
        dp = slope_p[s];
        dm = slope_m[s];
    }

    double max_lambda_plus() const { return lp.front(); }   // non-increasing
    double max_lambda_minus() const { return lm.back(); }   // non-decreasing
};

}  // namespace lendopt::intensity
