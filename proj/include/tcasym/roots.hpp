#pragma once

// Bracketed Newton iteration with bisection fallback.

#include <cmath>
#include <utility>

namespace tcasym {

struct RootOptions {
    double ftol = 1e-12;  // absolute tolerance on |f|
    int max_iter = 100;
};

struct RootResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Finds a zero of f inside [lo, hi] given f(lo) and f(hi) of opposite sign.
/// `f_df(x)` returns the pair (f(x), f'(x)). A Newton step that leaves the
/// current bracket, or fails to halve |f| relative to two steps back, is
/// replaced by bisection. The bracket is shrunk on every iteration, so the
/// iteration cannot escape it.
template <class FDF>
RootResult newton_bisect(FDF&& f_df, double lo, double hi, const RootOptions& opt = {}) {
    auto [flo, dlo] = f_df(lo);
    auto [fhi, dhi] = f_df(hi);
    (void)dlo;
    (void)dhi;
    if (flo == 0.0) return {lo, 0.0, 0, true};
    if (fhi == 0.0) return {hi, 0.0, 0, true};
    if ((flo > 0.0) == (fhi > 0.0)) return {0.5 * (lo + hi), flo, 0, false};

    // orient so that f(a) < 0 < f(b)
    double a = lo, b = hi;
    if (flo > 0.0) std::swap(a, b);

    double x = 0.5 * (lo + hi);
    double dx_old = std::abs(hi - lo);
    double dx = dx_old;
    auto [fx, dfx] = f_df(x);
    RootResult res{x, fx, 0, false};
    for (int it = 1; it <= opt.max_iter; ++it) {
        res.iterations = it;
        if (std::abs(fx) <= opt.ftol) {
            res.converged = true;
            break;
        }
        if (fx < 0.0) a = x;
        else b = x;

        const bool newton_outside = ((x - b) * dfx - fx) * ((x - a) * dfx - fx) > 0.0;
        const bool slow = std::abs(2.0 * fx) > std::abs(dx_old * dfx);
        dx_old = dx;
        if (dfx == 0.0 || newton_outside || slow) {
            dx = 0.5 * (b - a);
            x = a + dx;
        } else {
            dx = fx / dfx;
            x -= dx;
        }
        if (x == a || x == b) {
            // bracket exhausted at machine resolution
            auto [fa, da] = f_df(a);
            auto [fb, db] = f_df(b);
            (void)da;
            (void)db;
            x = std::abs(fa) < std::abs(fb) ? a : b;
            fx = std::abs(fa) < std::abs(fb) ? fa : fb;
            res.x = x;
            res.fx = fx;
            res.converged = std::abs(fx) <= opt.ftol;
            return res;
        }
        std::tie(fx, dfx) = f_df(x);
        res.x = x;
        res.fx = fx;
    }
    if (std::abs(fx) <= opt.ftol) res.converged = true;
    return res;
}

/// Plain bisection on a sign change; used where no derivative is available.
template <class F>
RootResult bisect(F&& f, double lo, double hi, double xtol, int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if ((flo > 0.0) == (fhi > 0.0)) return {0.5 * (lo + hi), flo, 0, false};
    RootResult res;
    for (int it = 1; it <= max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        res = {mid, fm, it, false};
        if (fm == 0.0 || 0.5 * (hi - lo) < xtol) {
            res.converged = true;
            return res;
        }
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return res;
}

}  // namespace tcasym
