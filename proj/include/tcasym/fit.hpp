#pragma once

// Least-squares fits on log-log data with slope confidence intervals.

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcasym {

struct LinearFit {
    std::size_t n = 0;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double ci_low = 0.0, ci_high = 0.0;  // 95% on the slope
    double r_squared = 0.0;
    bool low_r_squared = false;          // R^2 < 0.98
};

inline constexpr std::size_t kMinFitPoints = 4;
inline constexpr double kMinRSquared = 0.98;

/// Weighted OLS of y on x (weights 1/sigma^2; pass empty for unweighted).
/// Requires >= 3 points for a standard error.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& w = {}) {
    const std::size_t n = x.size();
    if (n != y.size() || (!w.empty() && w.size() != n)) throw std::invalid_argument("linear_fit: size mismatch");
    if (n < 3) throw std::invalid_argument("linear_fit: need at least 3 points");
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        sw += wi, sx += wi * x[i], sy += wi * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        sxx += wi * (x[i] - mx) * (x[i] - mx);
        sxy += wi * (x[i] - mx) * (y[i] - my);
        syy += wi * (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinearFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += wi * r * r;
    }
    const double dof = static_cast<double>(n - 2);
    f.slope_se = std::sqrt(sse / dof / sxx);
    const boost::math::students_t dist(dof);
    const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
    f.ci_low = f.slope - q * f.slope_se;
    f.ci_high = f.slope + q * f.slope_se;
    f.r_squared = syy > 0 ? 1.0 - sse / syy : 1.0;
    f.low_r_squared = f.r_squared < kMinRSquared;
    return f;
}

/// Fits log y = a + s log x. Returns nullopt ("insufficient points") below
/// kMinFitPoints positive samples.
inline std::optional<LinearFit> loglog_fit(const std::vector<double>& x, const std::vector<double>& y,
                                           const std::vector<double>& y_err = {}) {
    std::vector<double> lx, ly, w;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0 && y[i] > 0)) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
        if (!y_err.empty()) {
            const double rel = y_err[i] / y[i];  // error of log y
            w.push_back(rel > 0 ? 1.0 / (rel * rel) : 1.0);
        }
    }
    if (lx.size() < kMinFitPoints) return std::nullopt;
    if (!w.empty()) {
        // floor tiny error bars so one point cannot dominate
        double wmax = 0;
        for (double v : w) wmax = std::max(wmax, v);
        double wmin = wmax;
        for (double v : w) wmin = std::min(wmin, v);
        if (wmax > 1e6 * wmin)
            for (double& v : w) v = std::min(v, 1e6 * wmin);
    }
    return linear_fit(lx, ly, w);
}

/// Least squares for y = c1 x^a + c2 x^b (two fixed exponents).
struct TwoTermFit {
    double c1 = 0.0, c2 = 0.0;
    double max_rel_residual = 0.0;
};

inline TwoTermFit two_term_fit(const std::vector<double>& x, const std::vector<double>& y, double a, double b) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("two_term_fit: need >= 2 points");
    // relative least squares: rows scaled by 1/y
    double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f1 = std::pow(x[i], a) / y[i], f2 = std::pow(x[i], b) / y[i];
        s11 += f1 * f1, s12 += f1 * f2, s22 += f2 * f2, r1 += f1, r2 += f2;
    }
    const double det = s11 * s22 - s12 * s12;
    if (det == 0.0) throw std::invalid_argument("two_term_fit: singular");
    TwoTermFit f;
    f.c1 = (r1 * s22 - r2 * s12) / det;
    f.c2 = (s11 * r2 - s12 * r1) / det;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double model = f.c1 * std::pow(x[i], a) + f.c2 * std::pow(x[i], b);
        f.max_rel_residual = std::max(f.max_rel_residual, std::abs(model - y[i]) / std::abs(y[i]));
    }
    return f;
}

}  // namespace tcasym
