#include "lendopt/intensity.hpp"

#include <algorithm>
#include <cmath>

#include "lendopt/csv.hpp"

namespace lendopt::intensity {

void PiecewiseIntensity::validate() const {
    const std::size_t n = rates.size();
    if (n < 2 || lambda_plus.size() != n || lambda_minus.size() != n)
        throw ConfigError("piecewise intensity needs >= 2 aligned knots");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(rates[i] < rates[i + 1])) throw ConfigError("knot rates must be strictly increasing");
    for (std::size_t i = 0; i < n; ++i)
        if (!(lambda_plus[i] >= 0.0) || !(lambda_minus[i] >= 0.0))
            throw ConfigError("intensities must be >= 0");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (lambda_plus[i + 1] > lambda_plus[i] + 1e-12)
            throw ConfigError("lambda_plus must be non-increasing in the rate");
        if (lambda_minus[i + 1] < lambda_minus[i] - 1e-12)
            throw ConfigError("lambda_minus must be non-decreasing in the rate");
    }
}

std::pair<double, double> eval_linear(const LinearIntensity& curve, double r) {
    return {std::max(curve.a0_plus + curve.a1_plus * r, 0.0),
            std::max(curve.a0_minus + curve.a1_minus * r, 0.0)};
}

std::pair<double, double> eval_piecewise(const PiecewiseIntensity& curve, double r) {
    if (!(r >= curve.r_min() && r <= curve.r_max()))
        throw std::domain_error("rate outside the calibrated range");
    const std::size_t n = curve.rates.size();
    std::size_t lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (r < curve.rates[mid] ? hi : lo) = mid;
    }
    if (r == curve.rates[lo]) return {curve.lambda_plus[lo], curve.lambda_minus[lo]};
    if (r == curve.rates[hi]) return {curve.lambda_plus[hi], curve.lambda_minus[hi]};
    const double w = (r - curve.rates[lo]) / (curve.rates[hi] - curve.rates[lo]);
    return {curve.lambda_plus[lo] + w * (curve.lambda_plus[hi] - curve.lambda_plus[lo]),
            curve.lambda_minus[lo] + w * (curve.lambda_minus[hi] - curve.lambda_minus[lo])};
}

namespace {

double extrapolate(double x0, double y0, double x1, double y1, double x) {
    return y0 + (y1 - y0) / (x1 - x0) * (x - x0);
}

}  // namespace

PiecewiseIntensity post_process(const std::vector<RawIntensityPoint>& raw, double r_min,
                                double r_max) {
    if (raw.size() < 2) throw CalibrationError("need at least 2 intensity points");
    for (std::size_t i = 0; i + 1 < raw.size(); ++i)
        if (!(raw[i].rate < raw[i + 1].rate))
            throw CalibrationError("intensity point rates must be increasing");
    if (!(raw.front().rate > r_min) || !(raw.back().rate < r_max))
        throw CalibrationError("intensity points must lie strictly inside (r_min, r_max)");

    PiecewiseIntensity out;
    const std::size_t n = raw.size();
    out.rates.reserve(n + 2);
    out.lambda_plus.reserve(n + 2);
    out.lambda_minus.reserve(n + 2);

    out.rates.push_back(r_min);
    out.lambda_plus.push_back(
        extrapolate(raw[0].rate, raw[0].lambda_plus, raw[1].rate, raw[1].lambda_plus, r_min));
    out.lambda_minus.push_back(
        extrapolate(raw[0].rate, raw[0].lambda_minus, raw[1].rate, raw[1].lambda_minus, r_min));
    for (const auto& p : raw) {
        out.rates.push_back(p.rate);
        out.lambda_plus.push_back(p.lambda_plus);
        out.lambda_minus.push_back(p.lambda_minus);
    }
    out.rates.push_back(r_max);
    out.lambda_plus.push_back(extrapolate(raw[n - 2].rate, raw[n - 2].lambda_plus, raw[n - 1].rate,
                                          raw[n - 1].lambda_plus, r_max));
    out.lambda_minus.push_back(extrapolate(raw[n - 2].rate, raw[n - 2].lambda_minus,
                                           raw[n - 1].rate, raw[n - 1].lambda_minus, r_max));

    for (auto& v : out.lambda_plus) v = std::max(v, 0.0);
    for (auto& v : out.lambda_minus) v = std::max(v, 0.0);

    // isotonic clipping: running min / running max over the knots
    for (std::size_t i = 1; i < out.rates.size(); ++i) {
        out.lambda_plus[i] = std::min(out.lambda_plus[i], out.lambda_plus[i - 1]);
        out.lambda_minus[i] = std::max(out.lambda_minus[i], out.lambda_minus[i - 1]);
    }

    out.validate();
    return out;
}

namespace {

/// Smallest root of lambda_plus(r) == lambda_minus(r) over the knot segments.
std::optional<double> crossing(const PiecewiseIntensity& c) {
    const std::size_t n = c.rates.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = c.lambda_plus[i] - c.lambda_minus[i];
        if (d == 0.0) return c.rates[i];
        if (i + 1 == n) break;
        const double d_next = c.lambda_plus[i + 1] - c.lambda_minus[i + 1];
        if (d > 0.0 && d_next < 0.0) {
            const double w = d / (d - d_next);
            return c.rates[i] + w * (c.rates[i + 1] - c.rates[i]);
        }
        if (d < 0.0 && d_next > 0.0) {
            const double w = -d / (d_next - d);
            return c.rates[i] + w * (c.rates[i + 1] - c.rates[i]);
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<double> equilibrium_rate(const PiecewiseIntensity& curve) { return crossing(curve); }

std::optional<double> equilibrium_rate(const LinearIntensity& curve, double r_min, double r_max) {
    return crossing(to_piecewise(curve, r_min, r_max));
}

PiecewiseIntensity to_piecewise(const LinearIntensity& curve, double r_min, double r_max) {
    if (!(r_min < r_max)) throw ConfigError("need r_min < r_max");
    std::vector<double> knots{r_min, r_max};
    // floor roots split segments where max(a0 + a1*r, 0) kinks
    for (const auto& [a0, a1] : {std::pair{curve.a0_plus, curve.a1_plus},
                                 std::pair{curve.a0_minus, curve.a1_minus}}) {
        if (a1 != 0.0) {
            const double root = -a0 / a1;
            if (root > r_min && root < r_max) knots.push_back(root);
        }
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    PiecewiseIntensity out;
    for (const double r : knots) {
        const auto [lp, lm] = eval_linear(curve, r);
        out.rates.push_back(r);
        out.lambda_plus.push_back(lp);
        out.lambda_minus.push_back(lm);
    }
    out.validate();
    return out;
}

void write_csv(const PiecewiseIntensity& curve, const std::string& path,
               const std::vector<std::pair<std::string, std::string>>& meta) {
    csv::Writer w(path);
    for (const auto& [k, v] : meta) w.meta(k, v);
    w.header("rate,lambda_plus,lambda_minus");
    for (std::size_t i = 0; i < curve.rates.size(); ++i)
        w.row(csv::format_double(curve.rates[i]) + "," + csv::format_double(curve.lambda_plus[i]) +
              "," + csv::format_double(curve.lambda_minus[i]));
}

PiecewiseIntensity read_csv(const std::string& path) {
    const auto t = csv::read_table(path);
    if (t.columns != std::vector<std::string>{"rate", "lambda_plus", "lambda_minus"})
        throw InputError("intensity file '" + path +
                         "' must have header rate,lambda_plus,lambda_minus");
    PiecewiseIntensity out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const long line = t.line_numbers[i];
        out.rates.push_back(csv::parse_double(t.rows[i][0], line));
        out.lambda_plus.push_back(csv::parse_double(t.rows[i][1], line));
        out.lambda_minus.push_back(csv::parse_double(t.rows[i][2], line));
    }
    try {
        out.validate();
    } catch (const ConfigError& e) {
        throw InputError(std::string("invalid intensity file: ") + e.what());
    }
    return out;
}

SampledCurve SampledCurve::from(const PiecewiseIntensity& c) {
    SampledCurve s;
    s.rates = c.rates;
    s.lp = c.lambda_plus;
    s.lm = c.lambda_minus;
    const std::size_t n = c.rates.size();
    s.slope_p.resize(n - 1);
    s.slope_m.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dr = c.rates[i + 1] - c.rates[i];
        s.slope_p[i] = (c.lambda_plus[i + 1] - c.lambda_plus[i]) / dr;
        s.slope_m[i] = (c.lambda_minus[i + 1] - c.lambda_minus[i]) / dr;
    }
    return s;
}

}  // namespace lendopt::intensity
