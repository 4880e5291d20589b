#pragma once

// Problem parameters and the closed-form constants of the small-cost
// expansion for finite-horizon power utility with proportional costs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcasym {

/// Raw market and preference inputs for one problem instance.
struct MarketParams {
    double mu = 0.0;      // stock drift
    double sigma = 0.0;   // stock volatility
    double r = 0.0;       // money-market rate
    double p = 0.0;       // utility exponent, U(c) = c^p / p
    double lambda = 0.0;  // proportional transaction cost
    double beta = 0.0;    // discount rate
    double T = 0.0;       // horizon
    double t0 = 0.0;      // evaluation start time

    /// The canonical instance used by the acceptance runs (theta = 1/2).
    static MarketParams reference(double lambda = 1e-3) {
        return {0.10, std::sqrt(0.20), 0.05, 0.5, lambda, 0.10, 1.0, 0.0};
    }

    /// Negative-exponent stress instance; beta = 0 keeps pA < 0 for p < 0.
    static MarketParams stress(double lambda = 1e-3) {
        return {0.10, std::sqrt(0.20), 0.05, -1.0, lambda, 0.0, 1.0, 0.0};
    }

    MarketParams with_lambda(double l) const {
        MarketParams q = *this;
        q.lambda = l;
        return q;
    }
};

class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Merton proportion (mu - r) / ((1 - p) sigma^2).
inline double merton_proportion(const MarketParams& m) {
    return (m.mu - m.r) / ((1.0 - m.p) * m.sigma * m.sigma);
}

/// Growth constant A = r - beta/p + (mu - r)^2 / (2 (1 - p) sigma^2).
inline double growth_rate(const MarketParams& m) {
    return m.r - m.beta / m.p + 0.5 * (m.mu - m.r) * (m.mu - m.r) / ((1.0 - m.p) * m.sigma * m.sigma);
}

/// Outcome of checking the hypotheses under which the expansion holds.
struct ValidationReport {
    std::vector<std::string> violations;
    bool degenerate = false;  // theta at (or within 1e-6 of) 0 or 1

    bool ok() const { return violations.empty(); }

    std::string summary() const {
        std::string s;
        for (const auto& v : violations) {
            if (!s.empty()) s += "; ";
            s += v;
        }
        return s;
    }
};

inline constexpr double kThetaExclusion = 1e-6;

inline ValidationReport validate(const MarketParams& m) {
    ValidationReport rep;
    auto fail = [&](std::string msg) { rep.violations.push_back(std::move(msg)); };

    const bool finite = std::isfinite(m.mu) && std::isfinite(m.sigma) && std::isfinite(m.r) &&
                        std::isfinite(m.p) && std::isfinite(m.lambda) && std::isfinite(m.beta) &&
                        std::isfinite(m.T) && std::isfinite(m.t0);
    if (!finite) {
        fail("all parameters must be finite");
        return rep;
    }
    if (!(m.r > 0.0)) fail("interest rate r must be positive");
    if (!(m.r < m.mu)) fail("need r < mu (positive excess return)");
    if (!(m.sigma > 0.0)) fail("sigma must be positive");
    if (!(m.lambda > 0.0 && m.lambda < 1.0)) fail("lambda must lie in (0, 1)");
    if (!(m.T > 0.0)) fail("horizon T must be positive");
    if (!(m.t0 >= 0.0 && m.t0 <= m.T)) fail("t0 must lie in [0, T]");
    if (!(m.beta >= 0.0)) fail("discount rate beta must be nonnegative");
    if (!(m.p < 1.0)) fail("utility exponent p must be < 1");
    if (m.p == 0.0) {
        fail("p = 0 (log utility) is not supported; need p != 0");
        return rep;
    }
    if (!(m.sigma > 0.0) || !(m.p < 1.0)) return rep;

    const double theta = merton_proportion(m);
    if (!(theta > 0.0)) fail("Merton proportion theta must be positive");
    if (std::abs(theta) < kThetaExclusion || std::abs(theta - 1.0) < kThetaExclusion) {
        rep.degenerate = true;
        fail("degenerate Merton proportion theta = " + std::to_string(theta) +
             ": at theta in {0, 1} no rebalancing is needed, the loss is of order lambda "
             "and gamma2 = 0, so the lambda^(2/3) expansion does not apply");
    }
    const double pA = m.p * growth_rate(m);
    if (!(pA < 0.0)) {
        fail("need p*A < 0 (got " + std::to_string(pA) + "); increase beta");
    }
    return rep;
}

/// Constants of the expansion, computed once per instance.
struct DerivedConstants {
    double theta = 0.0;   // Merton proportion
    double A = 0.0;       // adjusted growth rate
    double gamma2 = 0.0;  // lambda^(2/3) loss coefficient
    double nu = 0.0;      // no-trade half-width constant
    double B = 0.0;       // offset making xi well defined
    double M = 0.0;       // sub/supersolution margin
    double xi_max = 0.0;  // max of xi over [0, T]
};

inline double xi_squared(double t, const DerivedConstants& c, const MarketParams& m) {
    return (2.0 / 3.0) * m.p * (m.T - t) * c.gamma2 + c.B;
}

inline DerivedConstants derive_constants(const MarketParams& m) {
    const auto rep = validate(m);
    if (!rep.ok()) throw ValidationError(rep.summary());

    DerivedConstants c;
    const double s2 = m.sigma * m.sigma;
    const double th = merton_proportion(m);
    const double g = th * (1.0 - th);
    c.theta = th;
    c.A = growth_rate(m);
    c.gamma2 = std::cbrt(9.0 / 32.0 * (1.0 - m.p) * g * g * g * g) * s2;
    c.nu = std::cbrt(12.0 / (1.0 - m.p) * g * g);
    c.B = (2.0 / 3.0) * std::abs(m.p) * m.T * c.gamma2 + 1.0;

    // xi^2 is affine in t, so its maximum sits at an endpoint.
    c.xi_max = std::sqrt(std::max(xi_squared(0.0, c, m), xi_squared(m.T, c, m)));

    const double pA = m.p * c.A;
    const double op1 = 6.0 * s2 / c.nu * (2.0 * c.nu * th * std::abs((1.0 - th) * (1.0 - 2.0 * th)) + 1.0) + 1.0;
    const double op2 = 0.5 * s2 * (1.0 - m.p) * c.nu * c.nu * c.xi_max + 1.0;
    c.M = th + 1.0 + 2.0 / (-pA) * std::max({op1, op2, 1.0});
    return c;
}

/// xi(t) = sqrt((2/3) p (T - t) gamma2 + B), strictly positive on [0, T].
inline double xi(double t, const DerivedConstants& c, const MarketParams& m) {
    if (!(t >= 0.0 && t <= m.T)) throw std::out_of_range("xi: t outside [0, T]");
    return std::sqrt(xi_squared(t, c, m));
}

/// Time-dependent loss coefficient gamma2(t) = gamma2 e^{pA(T-t)} (T - t).
inline double gamma2_at(double t, const DerivedConstants& c, const MarketParams& m) {
    return c.gamma2 * std::exp(m.p * c.A * (m.T - t)) * (m.T - t);
}

/// Power utility c^p / p; nonpositive wealth maps to U(0) (0 or -inf).
inline double utility(double wealth, double p) {
    if (wealth <= 0.0) return p < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
    return std::pow(wealth, p) / p;
}

/// Frictionless value (1/p) e^{pA(T-t)} w^p.
inline double merton_value(double t, double wealth, const MarketParams& m, const DerivedConstants& c) {
    if (wealth < 0.0) throw std::domain_error("merton_value: negative wealth");
    if (wealth == 0.0) return utility(0.0, m.p);
    return std::exp(m.p * c.A * (m.T - t)) * std::pow(wealth, m.p) / m.p;
}

/// Reduced frictionless value at unit wealth.
inline double merton_reduced(double t, const MarketParams& m, const DerivedConstants& c) {
    return std::exp(m.p * c.A * (m.T - t)) / m.p;
}

}  // namespace tcasym
