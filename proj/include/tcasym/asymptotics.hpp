#pragma once

// Free boundaries of the asymptotic no-trade region and the sub/super-
// solution surfaces w+ / w- of the reduced HJB variational inequality.

#include <tcasym/model.hpp>
#include <tcasym/pchip.hpp>
#include <tcasym/roots.hpp>

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcasym {

/// Which of the two constructions: w- (subsolution) or w+ (supersolution).
enum class Family { minus, plus };

inline double sign_of(Family f) { return f == Family::plus ? 1.0 : -1.0; }
inline const char* to_string(Family f) { return f == Family::plus ? "plus" : "minus"; }

enum class Region { buy, no_trade, sell };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::buy: return "buy";
        case Region::sell: return "sell";
        default: return "no_trade";
    }
}

/// Signals that f_i does not change sign on the widest admissible bracket,
/// i.e. lambda is too large for the asymptotic construction.
class NoBracket : public std::runtime_error {
public:
    NoBracket(const std::string& what, Family fam, int which, double t, double lambda)
        : std::runtime_error(what), family(fam), which(which), t(t), lambda(lambda) {}
    Family family;
    int which;
    double t;
    double lambda;
};

struct HValues {
    double h = 0.0;
    double dh = 0.0;
    double d2h = 0.0;
};

/// The quartic h(d) = 3/2 d^2 l^(2/3) - d^4/nu^2 + 3/2 B d^2 l^(4/3) and two derivatives.
inline HValues h_eval(double delta, double lambda, const DerivedConstants& c) {
    const double l13 = std::cbrt(lambda);
    const double l23 = l13 * l13;
    const double l43 = l23 * l23;
    const double nu2 = c.nu * c.nu;
    const double d2 = delta * delta;
    HValues out;
    out.h = 1.5 * d2 * l23 - d2 * d2 / nu2 + 1.5 * c.B * d2 * l43;
    out.dh = 3.0 * delta * l23 - 4.0 * d2 * delta / nu2 + 3.0 * c.B * delta * l43;
    out.d2h = 3.0 * l23 - 12.0 * d2 / nu2 + 3.0 * c.B * l43;
    return out;
}

/// Smooth-pasting function f_1 (which = 1, buy side) or f_2 (which = 2, sell
/// side) for one family. Returns the value and its delta-derivative.
inline std::pair<double, double> f_eval_with_derivative(int which, Family fam, double t, double delta, double lambda,
                                                        const MarketParams& m, const DerivedConstants& c) {
    if (which != 1 && which != 2) throw std::invalid_argument("f_eval: which must be 1 or 2");
    const double s = sign_of(fam);
    const double l13 = std::cbrt(lambda);
    const double l53 = lambda * l13 * l13;
    const double einv = std::exp(-m.p * c.A * (m.T - t));
    // gamma2(t) e^{-pA(T-t)} collapses to gamma2 (T - t)
    const double base = c.nu * lambda - m.p * c.nu * c.gamma2 * (m.T - t) * l53 +
                        s * m.p * c.nu * c.M * einv * lambda * lambda;
    const HValues hv = h_eval(delta, lambda, c);
    const double lead = (which == 1 ? 1.0 : -1.0) + (c.theta + delta) * lambda;
    const double f = base - m.p * hv.h * lambda + lead * hv.dh;
    const double df = -m.p * hv.dh * lambda + lambda * hv.dh + lead * hv.d2h;
    return {f, df};
}

inline double f_eval(int which, Family fam, double t, double delta, double lambda, const MarketParams& m,
                     const DerivedConstants& c) {
    return f_eval_with_derivative(which, fam, t, delta, lambda, m, c).first;
}

/// Leading-order boundary offset -/+ (1/2) nu l^(1/3) (1 - xi(t) l^(1/3)).
inline double delta_leading(int which, double t, double lambda, const MarketParams& m, const DerivedConstants& c) {
    const double l13 = std::cbrt(lambda);
    const double mag = 0.5 * c.nu * l13 * (1.0 - xi(t, c, m) * l13);
    return which == 1 ? -mag : mag;
}

struct BoundaryRoot {
    double delta = 0.0;
    double residual = 0.0;
    int widenings = 0;  // 0: found inside the unwidened bracket
};

inline constexpr int kMaxWidenings = 6;

/// Solves f_i(t, delta) = 0 for the inner root. The bracket is
///   delta = -/+ (1/2) nu l^(1/3) (1 - x l^(1/3)),  x in (sqrt(xi^2 - eta), sqrt(xi^2 + eta)),
/// with eta = min_s xi^2(s) / 2, doubled up to kMaxWidenings times while f
/// has no sign change. x is kept in [0, l^(-1/3)] so that the bracket never
/// reaches the outer root or crosses delta = 0.
inline BoundaryRoot solve_boundary_root(int which, Family fam, double t, double lambda, const MarketParams& m,
                                        const DerivedConstants& c, const RootOptions& opt = {}) {
    if (!(t >= 0.0 && t <= m.T)) throw std::out_of_range("solve_boundary_root: t outside [0, T]");
    const double l13 = std::cbrt(lambda);
    const double xi2 = xi_squared(t, c, m);
    const double eta0 = 0.5 * std::min(xi_squared(0.0, c, m), xi_squared(m.T, c, m));
    const double x_cap = 1.0 / l13;
    const double side = which == 1 ? -1.0 : 1.0;
    auto delta_of = [&](double x) { return side * 0.5 * c.nu * l13 * (1.0 - x * l13); };
    auto fdf = [&](double d) { return f_eval_with_derivative(which, fam, t, d, lambda, m, c); };

    double eta = eta0;
    for (int k = 0; k <= kMaxWidenings; ++k, eta *= 2.0) {
        const double x_lo = std::sqrt(std::max(xi2 - eta, 0.0));
        const double x_hi = std::min(std::sqrt(xi2 + eta), x_cap);
        const double d_a = delta_of(x_lo);
        const double d_b = delta_of(x_hi);
        const double fa = fdf(d_a).first;
        const double fb = fdf(d_b).first;
        if ((fa > 0.0) == (fb > 0.0) && fa != 0.0 && fb != 0.0) continue;
        const RootResult rr = newton_bisect(fdf, std::min(d_a, d_b), std::max(d_a, d_b), opt);
        if (!rr.converged)
            throw std::runtime_error("solve_boundary_root: no convergence to |f| <= " + std::to_string(opt.ftol) +
                                     " (|f| = " + std::to_string(std::abs(rr.fx)) + ")");
        return {rr.x, std::abs(rr.fx), k};
    }
    throw NoBracket("no sign change of f" + std::to_string(which) + (fam == Family::plus ? "+" : "-") +
                        " at t = " + std::to_string(t) + " for lambda = " + std::to_string(lambda) +
                        ": lambda too large for the asymptotic regime",
                    fam, which, t, lambda);
}

/// The two boundary curves of one family sampled on a time grid.
struct BoundarySet {
    Family family = Family::minus;
    double lambda = 0.0;
    double theta = 0.0;
    std::vector<double> times;
    std::vector<double> delta1, delta2;
    std::vector<double> residual1, residual2;
    std::vector<int> widenings1, widenings2;

    std::size_t size() const { return times.size(); }

    void build_interpolants() {
        interp1_ = std::make_shared<const Pchip>(times, delta1);
        interp2_ = std::make_shared<const Pchip>(times, delta2);
    }

    double delta1_at(double t) const { return (*interp1_)(t); }
    double delta2_at(double t) const { return (*interp2_)(t); }
    double zeta1(double t) const { return theta + delta1_at(t); }
    double zeta2(double t) const { return theta + delta2_at(t); }

    double max_residual() const {
        double r = 0.0;
        for (double v : residual1) r = std::max(r, v);
        for (double v : residual2) r = std::max(r, v);
        return r;
    }

    bool all_inside_lemma_bracket() const {
        for (int w : widenings1)
            if (w != 0) return false;
        for (int w : widenings2)
            if (w != 0) return false;
        return true;
    }

private:
    std::shared_ptr<const Pchip> interp1_, interp2_;
};

inline std::vector<double> uniform_times(double T, std::size_t n) {
    if (n < 2) throw std::invalid_argument("time grid needs at least 2 points");
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(n - 1);
    t.back() = T;
    return t;
}

inline BoundarySet solve_boundaries(Family fam, double lambda, const MarketParams& m, const DerivedConstants& c,
                                    std::vector<double> times, const RootOptions& opt = {}) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("solve_boundaries: lambda must be in (0, 1)");
    BoundarySet b;
    b.family = fam;
    b.lambda = lambda;
    b.theta = c.theta;
    b.times = std::move(times);
    const std::size_t n = b.times.size();
    b.delta1.resize(n);
    b.delta2.resize(n);
    b.residual1.resize(n);
    b.residual2.resize(n);
    b.widenings1.resize(n);
    b.widenings2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = b.times[i];
        const BoundaryRoot r1 = solve_boundary_root(1, fam, t, lambda, m, c, opt);
        const BoundaryRoot r2 = solve_boundary_root(2, fam, t, lambda, m, c, opt);
        if (!(r1.delta < 0.0 && r2.delta > 0.0))
            throw std::runtime_error("solve_boundaries: boundary ordering delta1 < 0 < delta2 violated");
        const double z1 = c.theta + r1.delta, z2 = c.theta + r2.delta;
        if (!(z1 > 0.0 && z2 < 1.0 / lambda))
            throw std::runtime_error("solve_boundaries: boundaries leave (0, 1/lambda)");
        b.delta1[i] = r1.delta;
        b.delta2[i] = r2.delta;
        b.residual1[i] = r1.residual;
        b.residual2[i] = r2.residual;
        b.widenings1[i] = r1.widenings;
        b.widenings2[i] = r2.widenings;
    }
    b.build_interpolants();
    return b;
}

inline constexpr std::size_t kDefaultBoundaryTimes = 2048;

inline BoundarySet solve_boundaries(Family fam, double lambda, const MarketParams& m, const DerivedConstants& c,
                                    std::size_t n_times = kDefaultBoundaryTimes) {
    return solve_boundaries(fam, lambda, m, c, uniform_times(m.T, n_times));
}

/// Value and derivatives of a surface at one point. At a boundary curve the
/// two one-sided second derivatives differ; elsewhere they coincide.
struct SurfacePoint {
    double w = 0.0;
    double w_t = 0.0;
    double w_z = 0.0;
    double w_zz_left = 0.0;
    double w_zz_right = 0.0;
    Region region = Region::no_trade;
};

/// HJB operator values at one point; `_left` / `_right` use the matching
/// one-sided second derivative.
struct OperatorResiduals {
    double parabolic_left = 0.0;
    double parabolic_right = 0.0;
    double buy = 0.0;
    double sell = 0.0;

    double parabolic() const { return parabolic_right; }
    double H_left() const { return std::min({parabolic_left, buy, sell}); }
    double H_right() const { return std::min({parabolic_right, buy, sell}); }
    double H() const { return H_right(); }
};

/// w+ or w-: the no-trade core quartic between zeta1(t) and zeta2(t), extended
/// into the buy/sell regions by the power laws that annihilate the first-order
/// trading operators.
class SubSupSurface {
public:
    SubSupSurface(const MarketParams& m, const DerivedConstants& c, BoundarySet b)
        : m_(m), c_(c), b_(std::make_shared<const BoundarySet>(std::move(b))) {
        lambda_ = b_->lambda;
        l23_ = std::cbrt(lambda_) * std::cbrt(lambda_);
        s_ = sign_of(b_->family);
    }

    static SubSupSurface build(Family fam, double lambda, const MarketParams& m, const DerivedConstants& c,
                               std::size_t n_times = kDefaultBoundaryTimes) {
        return SubSupSurface(m, c, solve_boundaries(fam, lambda, m, c, n_times));
    }

    Family family() const { return b_->family; }
    double lambda() const { return lambda_; }
    const BoundarySet& boundaries() const { return *b_; }
    const MarketParams& params() const { return m_; }
    const DerivedConstants& constants() const { return c_; }

    double zeta1(double t) const { return b_->zeta1(t); }
    double zeta2(double t) const { return b_->zeta2(t); }

    Region region(double t, double z) const {
        check_domain(t, z);
        if (z < zeta1(t)) return Region::buy;
        if (z > zeta2(t)) return Region::sell;
        return Region::no_trade;
    }

    double value(double t, double z) const {
        check_domain(t, z);
        const double z1 = zeta1(t), z2 = zeta2(t);
        if (z < z1) return core(t, z1) * transport_buy(z, z1);
        if (z > z2) return core(t, z2) * transport_sell(z, z2);
        return core(t, z);
    }

    SurfacePoint eval(double t, double z) const {
        check_domain(t, z);
        if (std::abs(z) >= 1.0 / lambda_) throw std::out_of_range("SubSupSurface::eval: derivatives need |z| < 1/lambda");
        const double z1 = zeta1(t), z2 = zeta2(t);
        const double E = std::exp(m_.p * c_.A * (m_.T - t));
        const double lp = lambda_ * m_.p;
        SurfacePoint pt;
        if (z < z1) {
            const double w1 = core(t, z1);
            const double f = transport_buy(z, z1);
            pt.region = Region::buy;
            pt.w = w1 * f;
            pt.w_z = lp * pt.w / (1.0 + lambda_ * z);
            pt.w_zz_left = pt.w_zz_right = -lambda_ * lp * (1.0 - m_.p) * pt.w / sq(1.0 + lambda_ * z);
            pt.w_t = f * core_t(t, w1);
        } else if (z > z2) {
            const double w2 = core(t, z2);
            const double f = transport_sell(z, z2);
            pt.region = Region::sell;
            pt.w = w2 * f;
            pt.w_z = -lp * pt.w / (1.0 - lambda_ * z);
            pt.w_zz_left = pt.w_zz_right = -lambda_ * lp * (1.0 - m_.p) * pt.w / sq(1.0 - lambda_ * z);
            pt.w_t = f * core_t(t, w2);
        } else {
            const HValues hv = h_eval(z - c_.theta, lambda_, c_);
            pt.region = Region::no_trade;
            pt.w = core(t, z);
            pt.w_z = -E / c_.nu * hv.dh;
            pt.w_zz_left = pt.w_zz_right = -E / c_.nu * hv.d2h;
            pt.w_t = core_t(t, pt.w);
            if (z == z1) pt.w_zz_left = -lambda_ * lp * (1.0 - m_.p) * pt.w / sq(1.0 + lambda_ * z);
            if (z == z2) pt.w_zz_right = -lambda_ * lp * (1.0 - m_.p) * pt.w / sq(1.0 - lambda_ * z);
        }
        return pt;
    }

    /// One-sided first derivative in z taken from the buy/sell formula at a
    /// boundary curve (used to measure smooth pasting).
    double w_z_outer(double t, int which) const {
        const double z = which == 1 ? zeta1(t) : zeta2(t);
        const double w = core(t, z);
        const double lp = lambda_ * m_.p;
        return which == 1 ? lp * w / (1.0 + lambda_ * z) : -lp * w / (1.0 - lambda_ * z);
    }

    /// Same, from the no-trade side.
    double w_z_inner(double t, int which) const {
        const double z = which == 1 ? zeta1(t) : zeta2(t);
        const double E = std::exp(m_.p * c_.A * (m_.T - t));
        return -E / c_.nu * h_eval(z - c_.theta, lambda_, c_).dh;
    }

    OperatorResiduals residuals(double t, double z) const { return residuals_from(eval(t, z), z); }

    OperatorResiduals residuals_from(const SurfacePoint& pt, double z) const {
        const double s2 = m_.sigma * m_.sigma;
        const double dz = z - c_.theta;
        const double zz = z * (1.0 - z);
        const double zero_order = -m_.p * (c_.A - 0.5 * s2 * (1.0 - m_.p) * dz * dz) * pt.w;
        const double first_order = (1.0 - m_.p) * s2 * zz * dz * pt.w_z;
        const double diff = 0.5 * s2 * zz * zz;
        OperatorResiduals r;
        r.parabolic_left = -pt.w_t + zero_order + first_order - diff * pt.w_zz_left;
        r.parabolic_right = -pt.w_t + zero_order + first_order - diff * pt.w_zz_right;
        r.buy = lambda_ * m_.p * pt.w - (1.0 + lambda_ * z) * pt.w_z;
        r.sell = lambda_ * m_.p * pt.w + (1.0 - lambda_ * z) * pt.w_z;
        return r;
    }

private:
    static double sq(double x) { return x * x; }

    void check_domain(double t, double z) const {
        if (!(t >= 0.0 && t <= m_.T)) throw std::out_of_range("SubSupSurface: t outside [0, T]");
        if (!(z >= -1.0 / lambda_ && z <= 1.0 / lambda_))
            throw std::out_of_range("SubSupSurface: z outside [-1/lambda, 1/lambda]");
    }

    // no-trade formula (1/p)E - gamma2(t) l^(2/3) +/- M l - (E/nu) h(z - theta)
    double core(double t, double z) const {
        const double E = std::exp(m_.p * c_.A * (m_.T - t));
        return E / m_.p - gamma2_at(t, c_, m_) * l23_ + s_ * c_.M * lambda_ -
               E / c_.nu * h_eval(z - c_.theta, lambda_, c_).h;
    }

    // time derivative of the core formula expressed through its value
    double core_t(double t, double w) const {
        const double E = std::exp(m_.p * c_.A * (m_.T - t));
        return -m_.p * c_.A * (w - s_ * c_.M * lambda_) + c_.gamma2 * E * l23_;
    }

    double transport_buy(double z, double z1) const {
        const double ratio = (1.0 + lambda_ * z) / (1.0 + lambda_ * z1);
        if (ratio <= 0.0) return m_.p > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return std::pow(ratio, m_.p);
    }

    double transport_sell(double z, double z2) const {
        const double ratio = (1.0 - lambda_ * z) / (1.0 - lambda_ * z2);
        if (ratio <= 0.0) return m_.p > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return std::pow(ratio, m_.p);
    }

    MarketParams m_;
    DerivedConstants c_;
    std::shared_ptr<const BoundarySet> b_;
    double lambda_ = 0.0;
    double l23_ = 0.0;
    double s_ = 1.0;
};

struct VerifyOptions {
    std::size_t nt = 500;          // time samples on [0, T]
    std::size_t nz = 500;          // z samples around the no-trade region
    std::size_t n_far = 100;       // geometric samples per side out to +/- 1/lambda
    std::size_t n_final = 200;     // terminal-time samples
    double core_halfwidth = 3.0;   // core z window = theta +/- core_halfwidth * nu * l^(1/3)
    double tube = 1e-8;            // excluded half-width around the boundary curves
    double rel_tol = 1e-10;
};

struct Violation {
    std::string check;
    double t = 0.0;
    double z = 0.0;
    double value = 0.0;
};

/// Outcome of scanning one surface. `worst_*` are normalized by |w|.
struct VerifyReport {
    Family family = Family::minus;
    double lambda = 0.0;
    std::size_t points = 0;
    double worst_hjb = 0.0;       // min H(w+)/|w+|, or max H(w-)/|w-|
    double worst_hjb_t = 0.0, worst_hjb_z = 0.0;
    double worst_final = 0.0;     // most adverse normalized terminal gap
    double min_g = 0.0;           // Step 4c: min of buy operator on the no-trade closure (plus only)
    double min_h = 0.0;           // same for the sell operator
    double g_at_zeta1 = 0.0;      // max |g(t, zeta1(t))| (plus only)
    std::vector<Violation> violations;
    std::string error;            // set when the surface could not be built

    bool ok() const { return error.empty() && violations.empty(); }
};

namespace detail {

inline std::vector<double> scan_z_points(const SubSupSurface& s, const VerifyOptions& o) {
    const double l = s.lambda();
    const double th = s.constants().theta;
    const double half = o.core_halfwidth * s.constants().nu * std::cbrt(l);
    std::vector<double> z;
    z.reserve(o.nz + 2 * o.n_far);
    for (std::size_t j = 0; j < o.nz; ++j)
        z.push_back(th - half + 2.0 * half * static_cast<double>(j) / static_cast<double>(o.nz - 1));
    // geometric approach to the solvency edges, stopping a relative 1e-6 short
    const double zmax = (1.0 - 1e-6) / l;
    for (std::size_t k = 0; k < o.n_far; ++k) {
        const double frac = static_cast<double>(k + 1) / static_cast<double>(o.n_far);
        const double lo_gap = th - half + zmax, hi_gap = zmax - (th + half);
        z.push_back(th - half - (std::pow(lo_gap + 1.0, frac) - 1.0));
        z.push_back(th + half + (std::pow(hi_gap + 1.0, frac) - 1.0));
    }
    return z;
}

}  // namespace detail

/// Scans the HJB operator, terminal inequalities and (for w+) the Step 4c
/// conditions. Never throws for numerical failures; they are reported.
inline VerifyReport verify_sub_super(const SubSupSurface& s, const VerifyOptions& o = {}) {
    VerifyReport rep;
    rep.family = s.family();
    rep.lambda = s.lambda();
    const MarketParams& m = s.params();
    const bool plus = s.family() == Family::plus;
    const double sgn = plus ? 1.0 : -1.0;  // plus: need H >= -tol; minus: H <= tol
    const auto zs = detail::scan_z_points(s, o);

    rep.worst_hjb = plus ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    Violation worst_hjb{"hjb", 0, 0, 0};
    for (std::size_t i = 0; i < o.nt; ++i) {
        const double t = m.T * static_cast<double>(i) / static_cast<double>(o.nt - 1);
        const double z1 = s.zeta1(t), z2 = s.zeta2(t);
        for (double z : zs) {
            if (std::abs(z - z1) <= o.tube || std::abs(z - z2) <= o.tube) continue;
            const SurfacePoint pt = s.eval(t, z);
            const OperatorResiduals r = s.residuals_from(pt, z);
            // off the curves both one-sided values coincide; take the favourable one anyway
            const double H = plus ? std::max(r.H_left(), r.H_right()) : std::min(r.H_left(), r.H_right());
            const double nrm = H / std::abs(pt.w);
            ++rep.points;
            if (sgn * nrm < sgn * rep.worst_hjb) {
                rep.worst_hjb = nrm;
                rep.worst_hjb_t = t;
                rep.worst_hjb_z = z;
            }
        }
    }
    if (sgn * rep.worst_hjb < -o.rel_tol)
        rep.violations.push_back({plus ? "H(w+) < -tol" : "H(w-) > tol", rep.worst_hjb_t, rep.worst_hjb_z, rep.worst_hjb});

    // terminal: w+(T, z) >= U_p(1 - lambda|z|) >= w-(T, z)
    const double l = s.lambda();
    rep.worst_final = std::numeric_limits<double>::infinity();
    Violation worst_final{"final", m.T, 0, 0};
    for (std::size_t k = 0; k < o.n_final; ++k) {
        const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(o.n_final);
        // half the samples across the solvency strip, half across [0, 1]
        const double z = (k % 2 == 0) ? (2.0 * u - 1.0) / l : u;
        const double w = s.value(m.T, z);
        const double U = utility(1.0 - l * std::abs(z), m.p);
        const double gap = sgn * (w - U) / std::abs(U);
        if (gap < rep.worst_final) {
            rep.worst_final = gap;
            worst_final.z = z;
            worst_final.value = gap;
        }
    }
    if (rep.worst_final < -o.rel_tol) rep.violations.push_back(worst_final);

    if (plus) {
        rep.min_g = rep.min_h = std::numeric_limits<double>::infinity();
        double g_min_val = 0.0, h_min_val = 0.0;
        Violation vg{"step4c g < 0", 0, 0, 0}, vh{"step4c h < 0", 0, 0, 0};
        for (std::size_t i = 0; i < o.nt; ++i) {
            const double t = m.T * static_cast<double>(i) / static_cast<double>(o.nt - 1);
            const double z1 = s.zeta1(t), z2 = s.zeta2(t);
            const double gz1 = s.residuals(t, z1).buy / std::abs(s.value(t, z1));
            rep.g_at_zeta1 = std::max(rep.g_at_zeta1, std::abs(gz1));
            for (std::size_t j = 0; j < o.nz; ++j) {
                const double z = z1 + (z2 - z1) * static_cast<double>(j) / static_cast<double>(o.nz - 1);
                const OperatorResiduals r = s.residuals(t, z);
                const double w = std::abs(s.value(t, z));
                if (r.buy / w < rep.min_g) {
                    rep.min_g = r.buy / w;
                    vg.t = t, vg.z = z, g_min_val = rep.min_g;
                }
                if (r.sell / w < rep.min_h) {
                    rep.min_h = r.sell / w;
                    vh.t = t, vh.z = z, h_min_val = rep.min_h;
                }
            }
        }
        vg.value = g_min_val;
        vh.value = h_min_val;
        if (rep.min_g < -o.rel_tol) rep.violations.push_back(vg);
        if (rep.min_h < -o.rel_tol) rep.violations.push_back(vh);
    }
    return rep;
}

/// Builds the surface and verifies it, folding NoBracket into the report.
inline VerifyReport verify_family(Family fam, double lambda, const MarketParams& m, const DerivedConstants& c,
                                  const VerifyOptions& o = {}, std::size_t n_times = kDefaultBoundaryTimes) {
    try {
        return verify_sub_super(SubSupSurface::build(fam, lambda, m, c, n_times), o);
    } catch (const std::exception& e) {
        VerifyReport rep;
        rep.family = fam;
        rep.lambda = lambda;
        rep.error = e.what();
        return rep;
    }
}

/// Largest lambda (to a relative tolerance in log space) at which both
/// families build and verify on a coarse scan; 0 if even lambda_lo fails.
inline double asymptotic_threshold(const MarketParams& m, const DerivedConstants& c, double lambda_lo = 1e-9,
                                   double lambda_hi = 0.5, int iters = 30) {
    VerifyOptions coarse;
    coarse.nt = 41;
    coarse.nz = 81;
    coarse.n_far = 20;
    coarse.n_final = 40;
    auto passes = [&](double l) {
        return verify_family(Family::minus, l, m, c, coarse, 257).ok() &&
               verify_family(Family::plus, l, m, c, coarse, 257).ok();
    };
    if (!passes(lambda_lo)) return 0.0;
    if (passes(lambda_hi)) return lambda_hi;
    double lo = std::log(lambda_lo), hi = std::log(lambda_hi);
    for (int k = 0; k < iters; ++k) {
        const double mid = 0.5 * (lo + hi);
        (passes(std::exp(mid)) ? lo : hi) = mid;
    }
    return std::exp(lo);
}

struct PastingReport {
    double max_value_jump = 0.0;  // |w(zeta-) - w(zeta+)| / |w|
    double max_slope_jump = 0.0;  // |w_z(zeta-) - w_z(zeta+)|
    double worst_t = 0.0;
    int worst_curve = 0;
};

/// Compares the no-trade formula with the buy/sell formula at both curves for
/// n_times uniformly spaced times (interpolated curves, so off-grid times count).
inline PastingReport smooth_pasting(const SubSupSurface& s, std::size_t n_times = 50) {
    PastingReport rep;
    const double T = s.params().T;
    const double eps = 1e-12;
    for (std::size_t i = 0; i < n_times; ++i) {
        const double t = T * (static_cast<double>(i) + 0.5) / static_cast<double>(n_times);
        for (int which : {1, 2}) {
            const double z = which == 1 ? s.zeta1(t) : s.zeta2(t);
            const double w = s.value(t, z);
            const double jump = std::abs(s.value(t, z - eps) - s.value(t, z + eps)) / std::abs(w);
            const double slope = std::abs(s.w_z_inner(t, which) - s.w_z_outer(t, which));
            rep.max_value_jump = std::max(rep.max_value_jump, jump);
            if (slope > rep.max_slope_jump) {
                rep.max_slope_jump = slope;
                rep.worst_t = t;
                rep.worst_curve = which;
            }
        }
    }
    return rep;
}

}  // namespace tcasym
