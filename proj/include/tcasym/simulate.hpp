#pragma once

// Monte Carlo for the reflected no-trade strategy on the w- boundaries and for
// the frictionless constant-proportion portfolio.

#include <tcasym/asymptotics.hpp>
#include <tcasym/model.hpp>

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tcasym {

struct PathConfig {
    std::size_t n_paths = 100000;
    double dt = 1e-3;
    std::uint64_t seed = 20240101;
    bool antithetic = true;
    double t0 = 0.0;
    double x0 = 0.5;  // money-market holding
    double y0 = 0.5;  // stock holding
    bool keep_paths = false;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct SimulationResult {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double trade_volume = 0.0;    // mean total traded stock value
    double boundary_hits = 0.0;   // mean number of trading steps per path
    std::size_t ruin_count = 0;
    std::size_t solvency_violations = 0;
    double max_projection_error = 0.0;  // |z - target| right after a reflection trade
    std::vector<double> path_values;    // discounted utilities, if requested
};

inline void validate_path_config(const PathConfig& cfg, const MarketParams& m) {
    if (cfg.n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
    if (cfg.antithetic && cfg.n_paths % 2 != 0) throw std::invalid_argument("antithetic sampling needs an even n_paths");
    if (!(cfg.t0 >= 0.0 && cfg.t0 < m.T)) throw std::invalid_argument("t0 must lie in [0, T)");
    if (!(cfg.dt > 0.0 && cfg.dt <= m.T - cfg.t0)) throw std::invalid_argument("dt must lie in (0, T - t0]");
    const double l = m.lambda;
    if (!(cfg.x0 + (1 - l) * cfg.y0 > 0.0 && cfg.x0 + (1 + l) * cfg.y0 > 0.0))
        throw std::invalid_argument("initial position outside the solvency region");
}

namespace detail {

/// Per-path generator keyed by (seed, path index) so that results do not
/// depend on the thread count.
inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), 0x7463u};
    return std::mt19937_64(seq);
}

inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

inline std::size_t step_count(double span, double dt) {
    const auto n = static_cast<std::size_t>(std::llround(span / dt));
    return std::max<std::size_t>(n, 1);
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    unsigned k = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    k = static_cast<unsigned>(std::min<std::size_t>(k, n));
    if (k <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < k; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += k) fn(i);
        });
    for (auto& th : pool) th.join();
}

struct PathOutcome {
    double utility = 0.0;
    double volume = 0.0;
    double hits = 0.0;
    bool ruined = false;
    std::size_t solvency_violations = 0;
    double projection_error = 0.0;
};

// Aggregates per-sample outcomes; with antithetics a sample is a pair mean.
inline SimulationResult aggregate(std::vector<PathOutcome>& out, const PathConfig& cfg, double p) {
    SimulationResult r;
    r.n_paths = cfg.n_paths;
    const std::size_t per = cfg.antithetic ? 2 : 1;
    const std::size_t samples = cfg.n_paths / per;
    std::vector<double> vals(samples), vol(cfg.n_paths), hits(cfg.n_paths);
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        vol[i] = out[i].volume;
        hits[i] = out[i].hits;
        r.ruin_count += out[i].ruined ? 1 : 0;
        r.solvency_violations += out[i].solvency_violations;
        r.max_projection_error = std::max(r.max_projection_error, out[i].projection_error);
    }
    for (std::size_t s = 0; s < samples; ++s) {
        double v = 0;
        for (std::size_t k = 0; k < per; ++k) v += out[s * per + k].utility;
        vals[s] = v / static_cast<double>(per);
    }
    r.trade_volume = pairwise_sum(vol) / static_cast<double>(cfg.n_paths);
    r.boundary_hits = pairwise_sum(hits) / static_cast<double>(cfg.n_paths);
    if (r.ruin_count > 0 && p < 0) {
        r.estimate = -std::numeric_limits<double>::infinity();
        r.std_error = std::numeric_limits<double>::infinity();
    } else {
        const double mean = pairwise_sum(vals) / static_cast<double>(samples);
        for (double& v : vals) v = (v - mean) * (v - mean);
        const double var = samples > 1 ? pairwise_sum(vals) / static_cast<double>(samples - 1) : 0.0;
        r.estimate = mean;
        r.std_error = std::sqrt(var / static_cast<double>(samples));
    }
    if (cfg.keep_paths) {
        r.path_values.resize(cfg.n_paths);
        for (std::size_t i = 0; i < cfg.n_paths; ++i) r.path_values[i] = out[i].utility;
    }
    return r;
}

}  // namespace detail

/// Simulates the strategy that keeps z = Y / (X + Y) inside
/// [zeta1(t), zeta2(t)] by minimal trades at the end of each step. The stock
/// moves by the exact log-normal step over dt; the bank account grows at r.
inline SimulationResult simulate_reflected(const MarketParams& m, const BoundarySet& b, const PathConfig& cfg) {
    validate_path_config(cfg, m);
    if (b.lambda != m.lambda) throw std::invalid_argument("simulate_reflected: boundary lambda differs from params");
    const double span = m.T - cfg.t0;
    const std::size_t N = detail::step_count(span, cfg.dt);
    const double dt = span / static_cast<double>(N);
    const double l = m.lambda;
    const double bank = std::exp(m.r * dt);
    const double drift = (m.mu - 0.5 * m.sigma * m.sigma) * dt;
    const double vol = m.sigma * std::sqrt(dt);
    const double disc = std::exp(-m.beta * span);

    std::vector<double> z1(N + 1), z2(N + 1);
    for (std::size_t k = 0; k <= N; ++k) {
        const double t = k == N ? m.T : cfg.t0 + dt * static_cast<double>(k);
        z1[k] = b.zeta1(t);
        z2[k] = b.zeta2(t);
    }

    std::vector<detail::PathOutcome> out(cfg.n_paths);
    const std::size_t per = cfg.antithetic ? 2 : 1;
    detail::parallel_for(cfg.n_paths / per, cfg.threads, [&](std::size_t s) {
        for (std::size_t k = 0; k < per; ++k) {
            auto eng = detail::path_engine(cfg.seed, s);
            boost::random::normal_distribution<double> normal;
            const double sign = k == 0 ? 1.0 : -1.0;
            detail::PathOutcome o;
            double X = cfg.x0, Y = cfg.y0;
            auto reflect = [&](std::size_t step) {
                const double W = X + Y;
                if (!(W > 0.0)) return;
                const double z = Y / W;
                if (z > z2[step]) {
                    const double sell = (Y - z2[step] * W) / (1 - z2[step] * l);
                    Y -= sell;
                    X += (1 - l) * sell;
                    o.volume += sell;
                    o.hits += 1;
                    o.projection_error = std::max(o.projection_error, std::abs(Y / (X + Y) - z2[step]));
                } else if (z < z1[step]) {
                    const double buy = (z1[step] * W - Y) / (1 + z1[step] * l);
                    Y += buy;
                    X -= (1 + l) * buy;
                    o.volume += buy;
                    o.hits += 1;
                    o.projection_error = std::max(o.projection_error, std::abs(Y / (X + Y) - z1[step]));
                }
            };
            reflect(0);
            for (std::size_t step = 1; step <= N; ++step) {
                X *= bank;
                Y *= std::exp(drift + vol * sign * normal(eng));
                if (!(X + (1 - l) * Y > 0.0 && X + (1 + l) * Y > 0.0)) ++o.solvency_violations;
                reflect(step);
            }
            const double liq = X + Y - l * std::abs(Y);
            o.ruined = !(liq > 0.0);
            o.utility = disc * utility(liq, m.p);
            if (!std::isfinite(o.utility) && !o.ruined) o.ruined = true;
            out[s * per + k] = o;
        }
    });
    return detail::aggregate(out, cfg, m.p);
}

/// Frictionless Merton portfolio: wealth is log-normal with drift
/// r + theta (mu - r) and volatility theta sigma, simulated exactly per step.
inline SimulationResult simulate_merton(const MarketParams& m, const PathConfig& cfg) {
    validate_path_config(cfg, m);
    const double theta = merton_proportion(m);
    const double span = m.T - cfg.t0;
    const std::size_t N = detail::step_count(span, cfg.dt);
    const double dt = span / static_cast<double>(N);
    const double drift = (m.r + theta * (m.mu - m.r) - 0.5 * theta * theta * m.sigma * m.sigma) * dt;
    const double vol = theta * m.sigma * std::sqrt(dt);
    const double disc = std::exp(-m.beta * span);

    std::vector<detail::PathOutcome> out(cfg.n_paths);
    const std::size_t per = cfg.antithetic ? 2 : 1;
    detail::parallel_for(cfg.n_paths / per, cfg.threads, [&](std::size_t s) {
        for (std::size_t k = 0; k < per; ++k) {
            auto eng = detail::path_engine(cfg.seed, s);
            boost::random::normal_distribution<double> normal;
            const double sign = k == 0 ? 1.0 : -1.0;
            double logw = 0.0;
            for (std::size_t step = 0; step < N; ++step) logw += drift + vol * sign * normal(eng);
            detail::PathOutcome o;
            const double W = (cfg.x0 + cfg.y0) * std::exp(logw);
            o.utility = disc * utility(W, m.p);
            out[s * per + k] = o;
        }
    });
    return detail::aggregate(out, cfg, m.p);
}

}  // namespace tcasym
