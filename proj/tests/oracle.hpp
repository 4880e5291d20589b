#pragma once

// 50-digit reference evaluations of the closed forms, written independently
// of the library (only the double inputs are shared).

#include <tcasym/model.hpp>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <algorithm>

namespace oracle {

using Big = boost::multiprecision::cpp_dec_float_50;

struct Constants {
    Big theta, A, gamma2, nu, B, M, xi0, xiT;
};

inline Big cbrt(const Big& x) {
    using boost::multiprecision::pow;
    return x < 0 ? Big(-pow(-x, Big(1) / 3)) : Big(pow(x, Big(1) / 3));
}

inline Constants constants(const tcasym::MarketParams& m) {
    const Big mu(m.mu), sigma(m.sigma), r(m.r), p(m.p), beta(m.beta), T(m.T);
    const Big s2 = sigma * sigma;
    Constants c;
    c.theta = (mu - r) / ((1 - p) * s2);
    c.A = r - beta / p + (mu - r) * (mu - r) / (2 * (1 - p) * s2);
    const Big g = c.theta * (1 - c.theta);
    c.gamma2 = cbrt(Big(9) / 32 * (1 - p) * g * g * g * g) * s2;
    c.nu = cbrt(Big(12) / (1 - p) * g * g);
    c.B = Big(2) / 3 * abs(p) * T * c.gamma2 + 1;
    c.xi0 = sqrt(Big(2) / 3 * p * T * c.gamma2 + c.B);
    c.xiT = sqrt(c.B);
    const Big ximax = std::max(c.xi0, c.xiT);
    const Big pA = p * c.A;
    const Big one_m2t = 1 - 2 * c.theta;
    const Big prod = abs((1 - c.theta) * one_m2t);
    const Big op1 = 6 * s2 / c.nu * (2 * c.nu * c.theta * prod + 1) + 1;
    const Big op2 = s2 * (1 - p) * c.nu * c.nu * ximax / 2 + 1;
    Big mx = std::max(op1, op2);
    mx = std::max(mx, Big(1));
    c.M = c.theta + 1 + 2 / (-pA) * mx;
    return c;
}

inline Big h(const Big& d, const Big& lambda, const Constants& c) {
    const Big l23 = cbrt(lambda * lambda);
    const Big l43 = l23 * l23;
    return Big(3) / 2 * d * d * l23 - d * d * d * d / (c.nu * c.nu) + Big(3) / 2 * c.B * d * d * l43;
}

inline Big dh(const Big& d, const Big& lambda, const Constants& c) {
    const Big l23 = cbrt(lambda * lambda);
    return 3 * d * l23 - 4 * d * d * d / (c.nu * c.nu) + 3 * c.B * d * l23 * l23;
}

/// f_1 (which = 1) or f_2 (which = 2) for family sign s = +1 / -1.
inline Big f(int which, int s, const Big& t, const Big& d, const Big& lambda, const tcasym::MarketParams& m,
             const Constants& c) {
    const Big p(m.p), T(m.T);
    const Big l13 = cbrt(lambda);
    const Big tau = T - t;
    const Big E = exp(p * c.A * tau);
    const Big g2t = c.gamma2 * E * tau;
    const Big lead = Big(which == 1 ? 1 : -1) + (c.theta + d) * lambda;
    return c.nu * lambda - p * c.nu * g2t / E * lambda * l13 * l13 + Big(s) * p * c.nu * c.M / E * lambda * lambda -
           p * h(d, lambda, c) * lambda + lead * dh(d, lambda, c);
}

/// Bisection in 50-digit arithmetic on [lo, hi] (sign change required).
template <class F>
Big bisect(F&& fn, Big lo, Big hi, int iters = 160) {
    Big flo = fn(lo);
    for (int i = 0; i < iters; ++i) {
        const Big mid = (lo + hi) / 2;
        const Big fm = fn(mid);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return (lo + hi) / 2;
}

inline double rel_err(double got, const Big& want) {
    const Big d = abs(Big(got) - want) / abs(want);
    return d.convert_to<double>();
}

}  // namespace oracle
