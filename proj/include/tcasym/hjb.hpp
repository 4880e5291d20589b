#pragma once

// Reference finite-difference solver for the reduced HJB variational
// inequality  min{ -u_t + D u, S u, B u } = 0,  u(T, z) = U_p(1 - lambda|z|).

#include <tcasym/asymptotics.hpp>
#include <tcasym/model.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcasym {

enum class Scheme { explicit_projected, implicit_penalty };

inline const char* to_string(Scheme s) { return s == Scheme::explicit_projected ? "explicit" : "penalty"; }

inline Scheme parse_scheme(const std::string& s) {
    if (s == "explicit") return Scheme::explicit_projected;
    if (s == "penalty" || s == "implicit") return Scheme::implicit_penalty;
    throw std::invalid_argument("unknown scheme '" + s + "' (expected explicit or penalty)");
}

class CflError : public std::runtime_error {
public:
    CflError(const std::string& what, std::size_t required) : std::runtime_error(what), required_nt(required) {}
    std::size_t required_nt;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridSpec {
    double z_min = 0.0;
    double z_max = 1.0;
    std::size_t nz = 401;
    std::size_t nt = 1000;
    Scheme scheme = Scheme::explicit_projected;
    std::size_t max_layers = 1001;  // time layers kept in memory (thinned uniformly)
    double rho = 1e6;               // penalty weight on the continuous operators
    double newton_tol = 1e-10;  // relative change in u ending the policy iteration
    int newton_max_iter = 50;

    double dz() const { return (z_max - z_min) / static_cast<double>(nz - 1); }
    double z(std::size_t j) const { return j + 1 == nz ? z_max : z_min + dz() * static_cast<double>(j); }
};

struct SolverStats {
    std::size_t steps = 0;
    int max_projection_sweeps = 0;
    std::size_t newton_iterations = 0;
    int max_newton_iterations = 0;
    double seconds = 0.0;
};

struct GridSolution {
    GridSpec grid;
    MarketParams params;
    std::vector<double> times;          // stored layers, increasing
    std::vector<std::size_t> steps;     // time-step index of each stored layer
    std::vector<double> values;         // times.size() x nz, row-major
    std::vector<std::uint8_t> regions;  // same shape, Region as integer
    SolverStats stats;

    std::size_t layers() const { return times.size(); }
    double at(std::size_t layer, std::size_t j) const { return values[layer * grid.nz + j]; }
    Region region_at(std::size_t layer, std::size_t j) const {
        return static_cast<Region>(regions[layer * grid.nz + j]);
    }
};

/// Smallest stable step count for the explicit scheme on [t0, T].
inline std::size_t cfl_min_steps(const MarketParams& m, const DerivedConstants& c, const GridSpec& g) {
    const double s2 = m.sigma * m.sigma;
    const double dz = g.dz();
    double rate = 0.0, amax = 0.0;
    for (std::size_t j = 0; j < g.nz; ++j) {
        const double z = g.z(j);
        const double a = 0.5 * s2 * z * z * (1 - z) * (1 - z);
        const double b = (1 - m.p) * s2 * z * (1 - z) * (z - c.theta);
        amax = std::max(amax, a);
        rate = std::max(rate, 2 * a / (dz * dz) + std::abs(b) / dz);
    }
    const double dt_max = std::min(0.9 / rate, amax > 0 ? 0.45 * dz * dz / amax : 1e300);
    return static_cast<std::size_t>(std::ceil((m.T - m.t0) / dt_max));
}

/// Default truncation: [max(0.01, theta - 0.45), min(0.99, theta + 0.45)],
/// widened if needed to contain theta -/+ 2.2 nu l^(1/3); nz from the
/// resolution policy dz <= nu l^(1/3) / cells_per_width.
inline GridSpec default_grid(const MarketParams& m, const DerivedConstants& c, double cells_per_width = 40.0,
                             Scheme scheme = Scheme::explicit_projected) {
    GridSpec g;
    const double w = c.nu * std::cbrt(m.lambda);
    g.z_min = std::min(std::max(0.01, c.theta - 0.45), c.theta - 2.2 * w);
    g.z_max = std::max(std::min(0.99, c.theta + 0.45), c.theta + 2.2 * w);
    const double dz_target = w / cells_per_width;
    g.nz = static_cast<std::size_t>(std::ceil((g.z_max - g.z_min) / dz_target)) + 1;
    g.scheme = scheme;
    g.nt = scheme == Scheme::explicit_projected ? cfl_min_steps(m, c, g) : 2000;
    return g;
}

inline void check_grid(const MarketParams& m, const DerivedConstants& c, const GridSpec& g) {
    if (g.nz < 3) throw std::invalid_argument("grid: nz must be >= 3");
    if (g.nt < 1) throw std::invalid_argument("grid: nt must be >= 1");
    if (!(g.z_min < c.theta && c.theta < g.z_max)) throw std::invalid_argument("grid: need z_min < theta < z_max");
    if (!(g.z_min > -1.0 / m.lambda && g.z_max < 1.0 / m.lambda))
        throw std::invalid_argument("grid: truncation must lie inside (-1/lambda, 1/lambda)");
    const double w = 2.0 * c.nu * std::cbrt(m.lambda);
    if (!(g.z_min <= c.theta - w && g.z_max >= c.theta + w))
        throw std::invalid_argument("grid: truncation must enclose theta -/+ 2 nu lambda^(1/3)");
    if (g.max_layers < 2) throw std::invalid_argument("grid: max_layers must be >= 2");
}

namespace detail {

struct Coefficients {
    std::vector<double> z, a, b, c;
    std::vector<double> fbuy, fsell;  // (1 + l z)^(-p), (1 - l z)^(-p)
};

inline Coefficients coefficients(const MarketParams& m, const DerivedConstants& k, const GridSpec& g) {
    Coefficients co;
    const double s2 = m.sigma * m.sigma;
    co.z.resize(g.nz);
    co.a.resize(g.nz);
    co.b.resize(g.nz);
    co.c.resize(g.nz);
    co.fbuy.resize(g.nz);
    co.fsell.resize(g.nz);
    for (std::size_t j = 0; j < g.nz; ++j) {
        const double z = g.z(j), dz = z - k.theta;
        co.z[j] = z;
        co.a[j] = 0.5 * s2 * z * z * (1 - z) * (1 - z);
        co.b[j] = (1 - m.p) * s2 * z * (1 - z) * dz;
        co.c[j] = m.p * (k.A - 0.5 * s2 * (1 - m.p) * dz * dz);
        co.fbuy[j] = std::pow(1 + m.lambda * z, -m.p);
        co.fsell[j] = std::pow(1 - m.lambda * z, -m.p);
    }
    return co;
}

// u_0 <- u_1 transported along a buy, u_{n-1} <- u_{n-2} along a sell
inline void edge_transport(std::vector<double>& u, const std::vector<double>& z, double lambda, double p) {
    const std::size_t n = u.size();
    u[0] = u[1] * std::pow((1 + lambda * z[0]) / (1 + lambda * z[1]), p);
    u[n - 1] = u[n - 2] * std::pow((1 - lambda * z[n - 1]) / (1 - lambda * z[n - 2]), p);
}

// Enforces B u >= 0 and S u >= 0 exactly on the grid: u (1 + l z)^(-p) must be
// nonincreasing and u (1 - l z)^(-p) nondecreasing in z. Returns sweeps used.
inline int project(std::vector<double>& u, std::vector<std::uint8_t>& label, const std::vector<double>& fbuy,
                   const std::vector<double>& fsell) {
    const std::size_t n = u.size();
    std::fill(label.begin(), label.end(), static_cast<std::uint8_t>(Region::no_trade));
    label[0] = static_cast<std::uint8_t>(Region::buy);
    label[n - 1] = static_cast<std::uint8_t>(Region::sell);
    int sweeps = 0;
    for (; sweeps < 50;) {
        ++sweeps;
        bool changed = false;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = n; k-- > 0;) {
            const double f = fbuy[k];
            const double v = u[k] * f;
            if (v < best - 4e-16 * std::abs(best)) {
                u[k] = best / f;
                label[k] = static_cast<std::uint8_t>(Region::buy);
                changed = true;
            } else {
                best = v;
            }
        }
        best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            const double f = fsell[k];
            const double v = u[k] * f;
            if (v < best - 4e-16 * std::abs(best)) {
                u[k] = best / f;
                label[k] = static_cast<std::uint8_t>(Region::sell);
                changed = true;
            } else {
                best = v;
            }
        }
        if (!changed) break;
    }
    return sweeps;
}

// Thomas algorithm; lo[0] and up[n-1] are ignored.
inline void solve_tridiagonal(const std::vector<double>& lo, std::vector<double> di, std::vector<double> up,
                              std::vector<double>& rhs) {
    const std::size_t n = di.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lo[i] / di[i - 1];
        di[i] -= w * up[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= di[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
}

}  // namespace detail

/// Solves backward from T to t0 = params.t0 and keeps up to grid.max_layers
/// evenly thinned layers (always including t0 and T).
inline GridSolution solve_hjb(const MarketParams& m, const DerivedConstants& c, const GridSpec& g) {
    check_grid(m, c, g);
    const auto clock0 = std::chrono::steady_clock::now();
    const double span = m.T - m.t0;
    if (!(span > 0.0)) throw std::invalid_argument("solve_hjb: need t0 < T");
    const double dt = span / static_cast<double>(g.nt);
    if (g.scheme == Scheme::explicit_projected) {
        const std::size_t need = cfl_min_steps(m, c, g);
        if (g.nt < need)
            throw CflError("explicit scheme unstable: nt = " + std::to_string(g.nt) + " < required " +
                               std::to_string(need) + " (dt <= 0.45 dz^2 / max diffusion)",
                           need);
    }

    const auto co = detail::coefficients(m, c, g);
    const std::size_t n = g.nz;
    const double dz = g.dz();
    const double l = m.lambda;

    GridSolution sol;
    sol.grid = g;
    sol.params = m;
    const std::size_t stride = std::max<std::size_t>(1, (g.nt + g.max_layers - 2) / (g.max_layers - 1));

    std::vector<double> u(n), next(n);
    std::vector<std::uint8_t> label(n, static_cast<std::uint8_t>(Region::no_trade));
    for (std::size_t j = 0; j < n; ++j) u[j] = utility(1.0 - l * std::abs(co.z[j]), m.p);
    for (std::size_t j = 0; j < n; ++j) {
        // at T the liquidation value is the terminal condition; label by the sign of z - theta
        label[j] = static_cast<std::uint8_t>(co.z[j] < c.theta ? Region::buy : co.z[j] > c.theta ? Region::sell
                                                                                                  : Region::no_trade);
    }

    // layers are pushed from T backwards then reversed
    std::vector<std::vector<double>> kept_u;
    std::vector<std::vector<std::uint8_t>> kept_l;
    std::vector<double> kept_t;
    std::vector<std::size_t> kept_s;
    auto keep = [&](std::size_t step) {
        kept_u.push_back(u);
        kept_l.push_back(label);
        kept_t.push_back(step == 0 ? m.t0 : (step == g.nt ? m.T : m.t0 + dt * static_cast<double>(step)));
        kept_s.push_back(step);
    };
    keep(g.nt);

    std::vector<double> lo(n), di(n), up(n), rhs(n);
    std::vector<std::uint8_t> active(n, 0), last(n, 0);  // penalty policy, bit 1: buy, bit 2: sell
    for (std::size_t step = g.nt; step-- > 0;) {
        if (g.scheme == Scheme::explicit_projected) {
            for (std::size_t j = 1; j + 1 < n; ++j) {
                const double ux = co.b[j] > 0 ? (u[j] - u[j - 1]) / dz : (u[j + 1] - u[j]) / dz;
                const double uxx = (u[j + 1] - 2 * u[j] + u[j - 1]) / (dz * dz);
                next[j] = u[j] + dt * (co.c[j] * u[j] - co.b[j] * ux + co.a[j] * uxx);
            }
            detail::edge_transport(next, co.z, l, m.p);
            u.swap(next);
            const int sw = detail::project(u, label, co.fbuy, co.fsell);
            sol.stats.max_projection_sweeps = std::max(sol.stats.max_projection_sweeps, sw);
        } else {
            // -u_t + D u + rho min(B u, 0) + rho min(S u, 0) = 0 implicitly:
            // (I + dt D_h) u + dt rho (min(B_h u, 0) + min(S_h u, 0)) = u_prev, by policy iteration
            const std::vector<double> prev = u;
            int it = 0;
            for (;; ++it) {
                if (it >= g.newton_max_iter)
                    throw ConvergenceError("penalty Newton iteration did not converge at step " +
                                           std::to_string(step));
                for (std::size_t j = 1; j + 1 < n; ++j) {
                    const double a = co.a[j] / (dz * dz);
                    double L = -a, D = 1 + dt * (2 * a - co.c[j]), U = -a;
                    L *= dt;
                    U *= dt;
                    if (co.b[j] > 0) {
                        D += dt * co.b[j] / dz;
                        L -= dt * co.b[j] / dz;
                    } else {
                        D -= dt * co.b[j] / dz;
                        U += dt * co.b[j] / dz;
                    }
                    if (active[j] & 1) {
                        const double q = (1 + l * co.z[j]) / dz;
                        D += dt * g.rho * (l * m.p + q);
                        U -= dt * g.rho * q;
                    }
                    if (active[j] & 2) {
                        const double q = (1 - l * co.z[j]) / dz;
                        D += dt * g.rho * (l * m.p + q);
                        L -= dt * g.rho * q;
                    }
                    lo[j] = L, di[j] = D, up[j] = U, rhs[j] = prev[j];
                }
                di[0] = 1, up[0] = -std::pow((1 + l * co.z[0]) / (1 + l * co.z[1]), m.p), rhs[0] = 0, lo[0] = 0;
                lo[n - 1] = -std::pow((1 - l * co.z[n - 1]) / (1 - l * co.z[n - 2]), m.p), di[n - 1] = 1,
                       rhs[n - 1] = 0, up[n - 1] = 0;
                std::vector<double> trial = rhs;
                detail::solve_tridiagonal(lo, di, up, trial);
                double change = 0.0, scale = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    change = std::max(change, std::abs(trial[j] - u[j]));
                    scale = std::max(scale, std::abs(trial[j]));
                }
                u.swap(trial);
                last = active;
                for (std::size_t j = 1; j + 1 < n; ++j) {
                    const double Bu = l * m.p * u[j] - (1 + l * co.z[j]) * (u[j + 1] - u[j]) / dz;
                    const double Su = l * m.p * u[j] + (1 - l * co.z[j]) * (u[j] - u[j - 1]) / dz;
                    // activation needs a violation beyond rounding (the penalty weight would
                    // otherwise amplify rounding into active-set cycling); release needs any
                    // positive value
                    const double eps = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(u[j]) / dz;
                    const bool b_on = (last[j] & 1) ? Bu <= 0 : Bu < -eps;
                    const bool s_on = (last[j] & 2) ? Su <= 0 : Su < -eps;
                    active[j] = static_cast<std::uint8_t>((b_on ? 1 : 0) | (s_on ? 2 : 0));
                }
                // a repeated active set means the last linear solve was exact
                if (active == last || (it > 0 && change <= g.newton_tol * scale)) break;
            }
            sol.stats.newton_iterations += static_cast<std::size_t>(it + 1);
            sol.stats.max_newton_iterations = std::max(sol.stats.max_newton_iterations, it + 1);
            for (std::size_t j = 1; j + 1 < n; ++j)
                label[j] = static_cast<std::uint8_t>((active[j] & 1)   ? Region::buy
                                                     : (active[j] & 2) ? Region::sell
                                                                       : Region::no_trade);
            label[0] = static_cast<std::uint8_t>(Region::buy);
            label[n - 1] = static_cast<std::uint8_t>(Region::sell);
        }
        ++sol.stats.steps;
        if (step % stride == 0 || step == 0) keep(step);
    }

    const std::size_t L = kept_t.size();
    sol.times.resize(L);
    sol.steps.resize(L);
    sol.values.resize(L * n);
    sol.regions.resize(L * n);
    for (std::size_t k = 0; k < L; ++k) {
        const std::size_t src = L - 1 - k;
        sol.times[k] = kept_t[src];
        sol.steps[k] = kept_s[src];
        std::copy(kept_u[src].begin(), kept_u[src].end(), sol.values.begin() + static_cast<std::ptrdiff_t>(k * n));
        std::copy(kept_l[src].begin(), kept_l[src].end(), sol.regions.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
    sol.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
    return sol;
}

/// Bilinear interpolation over the stored layers.
inline double interpolate(const GridSolution& s, double t, double z) {
    const GridSpec& g = s.grid;
    if (!(t >= s.times.front() && t <= s.times.back() && z >= g.z_min && z <= g.z_max))
        throw std::out_of_range("interpolate: query outside the grid hull");
    std::size_t k = static_cast<std::size_t>(std::upper_bound(s.times.begin(), s.times.end(), t) - s.times.begin());
    k = k == 0 ? 0 : k - 1;
    if (k + 1 >= s.layers()) k = s.layers() - 2;
    const double dz = g.dz();
    double x = (z - g.z_min) / dz;
    std::size_t j = static_cast<std::size_t>(std::floor(x));
    if (j + 1 >= g.nz) j = g.nz - 2;
    const double fz = x - static_cast<double>(j);
    const double ft = (t - s.times[k]) / (s.times[k + 1] - s.times[k]);
    auto row = [&](std::size_t layer) { return (1 - fz) * s.at(layer, j) + fz * s.at(layer, j + 1); };
    return (1 - ft) * row(k) + ft * row(k + 1);
}

struct NumericalBoundaries {
    std::vector<double> times;
    std::vector<double> zeta1, zeta2;
    double resolution = 0.0;  // dz
    std::vector<std::size_t> degenerate_layers;
};

/// Per stored layer: the innermost buy node left of theta and the innermost
/// sell node right of it. Layers with no no-trade node at theta are reported.
inline NumericalBoundaries extract_boundaries(const GridSolution& s, double theta) {
    NumericalBoundaries nb;
    nb.resolution = s.grid.dz();
    const std::size_t n = s.grid.nz;
    const std::size_t jt = static_cast<std::size_t>(std::llround((theta - s.grid.z_min) / s.grid.dz()));
    for (std::size_t k = 0; k < s.layers(); ++k) {
        if (s.region_at(k, jt) != Region::no_trade) {
            nb.degenerate_layers.push_back(k);
            continue;
        }
        std::size_t a = jt, b = jt;
        while (a > 0 && s.region_at(k, a) != Region::buy) --a;
        while (b + 1 < n && s.region_at(k, b) != Region::sell) ++b;
        nb.times.push_back(s.times[k]);
        nb.zeta1.push_back(s.grid.z(a));
        nb.zeta2.push_back(s.grid.z(b));
    }
    return nb;
}

struct DiscreteResiduals {
    double parabolic = 0.0;  // -u_t + D_h u with the scheme's differences
    double buy = 0.0;
    double sell = 0.0;
};

/// Discrete operators at interior node j between consecutive stored layers k, k+1.
inline DiscreteResiduals discrete_residuals(const GridSolution& s, const DerivedConstants& c, std::size_t k,
                                            std::size_t j) {
    const GridSpec& g = s.grid;
    if (k + 1 >= s.layers() || j == 0 || j + 1 >= g.nz) throw std::out_of_range("discrete_residuals: bad index");
    const MarketParams& m = s.params;
    const double dz = g.dz(), z = g.z(j), s2 = m.sigma * m.sigma, l = m.lambda;
    const double a = 0.5 * s2 * z * z * (1 - z) * (1 - z);
    const double b = (1 - m.p) * s2 * z * (1 - z) * (z - c.theta);
    const double cc = m.p * (c.A - 0.5 * s2 * (1 - m.p) * (z - c.theta) * (z - c.theta));
    // explicit scheme: spatial operator at the later layer
    const std::size_t ks = g.scheme == Scheme::explicit_projected ? k + 1 : k;
    auto u = [&](std::size_t jj) { return s.at(ks, jj); };
    const double ux = b > 0 ? (u(j) - u(j - 1)) / dz : (u(j + 1) - u(j)) / dz;
    const double uxx = (u(j + 1) - 2 * u(j) + u(j - 1)) / (dz * dz);
    const double ut = (s.at(k + 1, j) - s.at(k, j)) / (s.times[k + 1] - s.times[k]);
    DiscreteResiduals r;
    r.parabolic = -ut - cc * u(j) + b * ux - a * uxx;
    const auto v = [&](std::size_t jj) { return s.at(k, jj); };
    r.buy = l * m.p * v(j) - (1 + l * z) * (v(j + 1) - v(j)) / dz;
    r.sell = l * m.p * v(j) + (1 - l * z) * (v(j) - v(j - 1)) / dz;
    return r;
}

}  // namespace tcasym
