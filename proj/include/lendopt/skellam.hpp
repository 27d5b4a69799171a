#pragma once

#include <span>
#include <vector>

namespace lendopt::skellam {

/// log I_x(z) for integer order x >= 0 and z >= 0, summed in log space until
/// the next term drops below 1e-16 relative.  I_0(0) = 1; I_x(0) = 0 for
/// x > 0 (returned as -inf).  Throws std::domain_error for z < 0.
double log_bessel_i(int order, double z);

/// log P(X = x) for X ~ Skellam(lambda_plus, lambda_minus).  Uses integer-order
/// symmetry I_{-x} = I_x for x < 0 and reduces to a Poisson log-pmf when one
/// intensity is zero.  Impossible outcomes return -inf.
double log_pmf(long long x, double lambda_plus, double lambda_minus);

/// Log-likelihood of an i.i.d. sample (internally grouped by value).
double log_likelihood(std::span<const int> sample, double lambda_plus, double lambda_minus);

struct Score {
    double d_lambda_plus = 0.0;
    double d_lambda_minus = 0.0;
};

/// Analytic first derivatives of the log-likelihood (interior intensities only).
Score score(std::span<const int> sample, double lambda_plus, double lambda_minus);

struct Hessian {
    double dpp = 0.0;  // d2/d(lambda_plus)^2
    double dmm = 0.0;  // d2/d(lambda_minus)^2
    double dpm = 0.0;  // mixed
};

/// Analytic second derivatives of the log-likelihood.
Hessian hessian(std::span<const int> sample, double lambda_plus, double lambda_minus);

struct SkellamFit {
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
    double ci_plus = 0.0;   // 95% half-width
    double ci_minus = 0.0;  // 95% half-width
    long n = 0;
    bool boundary = false;  // one intensity pinned at zero (one-sided sample)
};

/// Maximum-likelihood fit.  lambda_plus - lambda_minus always equals the
/// sample mean; the down intensity is found by bisection of the remaining
/// score equation.  Confidence intervals use the observed information
/// (negative Hessian at the optimum); boundary fits fall back to the
/// one-parameter Poisson interval.
SkellamFit mle(std::span<const int> sample);

}  // namespace lendopt::skellam
