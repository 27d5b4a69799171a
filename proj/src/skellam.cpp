#include "lendopt/skellam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "lendopt/errors.hpp"

namespace lendopt::skellam {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

struct Grouped {
    std::vector<std::pair<int, long>> value_count;  // sorted by value
    long n = 0;
    double sum = 0.0;
};

Grouped group(std::span<const int> sample) {
    std::map<int, long> counts;
    Grouped g;
    for (const int x : sample) {
        ++counts[x];
        ++g.n;
        g.sum += x;
    }
    g.value_count.assign(counts.begin(), counts.end());
    return g;
}

/// I_{x+1}(z) / I_x(z) with integer-order symmetry for negative orders.
double bessel_ratio1(int x, double z) {
    return std::exp(log_bessel_i(std::abs(x + 1), z) - log_bessel_i(std::abs(x), z));
}

double bessel_ratio2(int x, double z) {
    return std::exp(log_bessel_i(std::abs(x + 2), z) - log_bessel_i(std::abs(x), z));
}

}  // namespace

double log_bessel_i(int order, double z) {
    if (order < 0) throw std::domain_error("order must be >= 0 (use |x| with symmetry)");
    if (z < 0.0) throw std::domain_error("argument must be >= 0");
    if (z == 0.0) return order == 0 ? 0.0 : kNegInf;

    const double log_half_z = std::log(0.5 * z);
    double log_term = order * log_half_z - std::lgamma(order + 1.0);
    double log_sum = log_term;
    for (long k = 0; k < 1000000000L; ++k) {
        log_term += 2.0 * log_half_z - std::log(static_cast<double>(k + 1)) -
                    std::log(static_cast<double>(order + k + 1));
        log_sum = log_add(log_sum, log_term);
        const bool decreasing = 0.25 * z * z < static_cast<double>(k + 2) * (order + k + 2);
        if (decreasing && log_term < log_sum + std::log(1e-16)) break;
    }
    return log_sum;
}

double log_pmf(long long x, double lambda_plus, double lambda_minus) {
    if (lambda_plus < 0.0 || lambda_minus < 0.0)
        throw std::domain_error("intensities must be >= 0");
    if (lambda_plus == 0.0 && lambda_minus == 0.0) return x == 0 ? 0.0 : kNegInf;
    if (lambda_minus == 0.0) {
        if (x < 0) return kNegInf;
        return -lambda_plus + x * std::log(lambda_plus) - std::lgamma(double(x) + 1.0);
    }
    if (lambda_plus == 0.0) {
        if (x > 0) return kNegInf;
        return -lambda_minus + (-x) * std::log(lambda_minus) - std::lgamma(double(-x) + 1.0);
    }
    const double z = 2.0 * std::sqrt(lambda_plus * lambda_minus);
    return -lambda_plus - lambda_minus +
           0.5 * x * (std::log(lambda_plus) - std::log(lambda_minus)) +
           log_bessel_i(static_cast<int>(std::llabs(x)), z);
}

double log_likelihood(std::span<const int> sample, double lambda_plus, double lambda_minus) {
    const Grouped g = group(sample);
    double total = 0.0;
    for (const auto& [x, c] : g.value_count) total += c * log_pmf(x, lambda_plus, lambda_minus);
    return total;
}

Score score(std::span<const int> sample, double lambda_plus, double lambda_minus) {
    if (!(lambda_plus > 0.0) || !(lambda_minus > 0.0))
        throw std::domain_error("score needs interior intensities");
    const Grouped g = group(sample);
    const double z = 2.0 * std::sqrt(lambda_plus * lambda_minus);
    double ratio_sum = 0.0;
    for (const auto& [x, c] : g.value_count) ratio_sum += c * bessel_ratio1(x, z);
    Score s;
    s.d_lambda_plus =
        -g.n + g.sum / lambda_plus + std::sqrt(lambda_minus / lambda_plus) * ratio_sum;
    s.d_lambda_minus = -g.n + std::sqrt(lambda_plus / lambda_minus) * ratio_sum;
    return s;
}

Hessian hessian(std::span<const int> sample, double lambda_plus, double lambda_minus) {
    if (!(lambda_plus > 0.0) || !(lambda_minus > 0.0))
        throw std::domain_error("hessian needs interior intensities");
    const Grouped g = group(sample);
    const double z = 2.0 * std::sqrt(lambda_plus * lambda_minus);
    double r1_sum = 0.0;
    double bracket_sum = 0.0;  // sum of R1/z' + R2 - R1^2 with z' = 2 sqrt(l+ l-)
    for (const auto& [x, c] : g.value_count) {
        const double r1 = bessel_ratio1(x, z);
        const double r2 = bessel_ratio2(x, z);
        r1_sum += c * r1;
        bracket_sum += c * (r1 / z + r2 - r1 * r1);
    }
    Hessian h;
    h.dpp = -g.sum / (lambda_plus * lambda_plus) -
            0.5 * std::sqrt(lambda_minus / lambda_plus) / lambda_plus * r1_sum +
            (lambda_minus / lambda_plus) * bracket_sum;
    h.dmm = -0.5 * std::sqrt(lambda_plus / lambda_minus) / lambda_minus * r1_sum +
            (lambda_plus / lambda_minus) * bracket_sum;
    h.dpm = r1_sum / z + bracket_sum;
    return h;
}

namespace {

/// Score in lambda_minus along the ridge lambda_plus = lambda_minus + mean.
double ridge_score(const Grouped& g, double mean, double lambda_minus) {
    const double lambda_plus = lambda_minus + mean;
    const double z = 2.0 * std::sqrt(lambda_plus * lambda_minus);
    double ratio_sum = 0.0;
    for (const auto& [x, c] : g.value_count) ratio_sum += c * bessel_ratio1(x, z);
    return -g.n + std::sqrt(lambda_plus / lambda_minus) * ratio_sum;
}

}  // namespace

SkellamFit mle(std::span<const int> sample) {
    if (sample.empty()) throw CalibrationError("empty sample");
    const Grouped g = group(sample);
    const double mean = g.sum / g.n;

    SkellamFit fit;
    fit.n = g.n;

    const bool all_zero = g.value_count.size() == 1 && g.value_count.front().first == 0;
    if (all_zero) return fit;  // boundary maximum at (0, 0)

    const double lower = std::max(0.0, -mean);
    const double lo_eval = lower + 1e-12 * (1.0 + std::abs(mean));
    if (ridge_score(g, mean, lo_eval) <= 0.0) {
        // One-sided sample: likelihood decreasing in lambda_minus, so the
        // maximum sits on the boundary and the model degenerates to a Poisson.
        fit.boundary = true;
        if (mean >= 0.0) {
            fit.lambda_plus = mean;
            fit.ci_plus = 1.96 * std::sqrt(mean / g.n);
        } else {
            fit.lambda_minus = -mean;
            fit.ci_minus = 1.96 * std::sqrt(-mean / g.n);
        }
        return fit;
    }

    double lo = lo_eval;
    double hi = std::max(2.0 * lo, lower + std::max(1.0, std::abs(mean)));
    constexpr double kLambdaCap = 1e6;
    while (ridge_score(g, mean, hi) > 0.0) {
        hi *= 2.0;
        if (hi > kLambdaCap)
            throw CalibrationError("Skellam MLE: no sign change below lambda = 1e6");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ridge_score(g, mean, mid) > 0.0 ? lo : hi) = mid;
    }
    fit.lambda_minus = 0.5 * (lo + hi);
    fit.lambda_plus = fit.lambda_minus + mean;

    const Hessian h = hessian(sample, fit.lambda_plus, fit.lambda_minus);
    const double ipp = -h.dpp, imm = -h.dmm, ipm = -h.dpm;
    const double det = ipp * imm - ipm * ipm;
    if (det > 0.0 && ipp > 0.0 && imm > 0.0) {
        fit.ci_plus = 1.96 * std::sqrt(imm / det);
        fit.ci_minus = 1.96 * std::sqrt(ipp / det);
    }
    return fit;
}

}  // namespace lendopt::skellam
