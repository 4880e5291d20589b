#include <tcasym/simulate.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace tcasym;

namespace {

BoundarySet flat_boundaries(double lambda, double z1, double z2, double T) {
    BoundarySet b;
    b.lambda = lambda;
    b.theta = 0.5 * (z1 + z2);
    b.times = {0.0, T};
    b.delta1 = {z1 - b.theta, z1 - b.theta};
    b.delta2 = {z2 - b.theta, z2 - b.theta};
    b.residual1 = b.residual2 = {0.0, 0.0};
    b.widenings1 = b.widenings2 = {0, 0};
    b.build_interpolants();
    return b;
}

}  // namespace

TEST(PathConfig, Validation) {
    const MarketParams m = MarketParams::reference(1e-3);
    PathConfig cfg;
    cfg.n_paths = 0;
    EXPECT_THROW(validate_path_config(cfg, m), std::invalid_argument);
    cfg.n_paths = 3;
    EXPECT_THROW(validate_path_config(cfg, m), std::invalid_argument);
    cfg.antithetic = false;
    EXPECT_NO_THROW(validate_path_config(cfg, m));
    cfg.dt = 2.0;
    EXPECT_THROW(validate_path_config(cfg, m), std::invalid_argument);
    cfg.dt = 1e-3;
    cfg.x0 = -5.0;
    cfg.y0 = 1.0;
    EXPECT_THROW(validate_path_config(cfg, m), std::invalid_argument);
}

TEST(Reflected, SellTradeRestoresBoundary) {
    // no costs, no noise, no drift: a single sale of half the stock
    MarketParams m = MarketParams::reference(1e-3);
    m.lambda = 0.0;
    m.mu = m.r = 0.0;
    m.sigma = 0.0;
    m.beta = 0.0;
    PathConfig cfg;
    cfg.n_paths = 2;
    cfg.dt = 0.25;
    cfg.x0 = 0.0;
    cfg.y0 = 1.0;
    const SimulationResult r = simulate_reflected(m, flat_boundaries(0.0, 0.2, 0.5, m.T), cfg);
    EXPECT_DOUBLE_EQ(r.trade_volume, 0.5);
    EXPECT_DOUBLE_EQ(r.boundary_hits, 1.0);
    EXPECT_EQ(r.max_projection_error, 0.0);
    EXPECT_DOUBLE_EQ(r.estimate, utility(1.0, m.p));
}

TEST(Reflected, BuyTradeWithCosts) {
    MarketParams m = MarketParams::reference(0.01);
    m.mu = m.r = 0.0;
    m.sigma = 0.0;
    m.beta = 0.0;
    PathConfig cfg;
    cfg.n_paths = 2;
    cfg.dt = 0.5;
    cfg.x0 = 1.0;
    cfg.y0 = 0.0;
    const SimulationResult r = simulate_reflected(m, flat_boundaries(0.01, 0.4, 0.6, m.T), cfg);
    // l = (zeta1 W - Y) / (1 + zeta1 lambda)
    const double l = 0.4 / (1 + 0.4 * 0.01);
    EXPECT_NEAR(r.trade_volume, l, 1e-15);
    EXPECT_LT(r.max_projection_error, 1e-15);
    const double X = 1 - 1.01 * l, Y = l;
    EXPECT_NEAR(Y / (X + Y), 0.4, 1e-15);
    EXPECT_NEAR(r.estimate, utility(X + 0.99 * Y, m.p), 1e-15);
}

TEST(Reflected, Homothetic) {
    const MarketParams m = MarketParams::reference(1e-3);
    const DerivedConstants c = derive_constants(m);
    const BoundarySet b = solve_boundaries(Family::minus, 1e-3, m, c, std::size_t{256});
    PathConfig cfg;
    cfg.n_paths = 200;
    cfg.dt = 1e-2;
    cfg.keep_paths = true;
    cfg.x0 = 0.3;
    cfg.y0 = 0.7;
    const SimulationResult a = simulate_reflected(m, b, cfg);
    cfg.x0 *= 2;
    cfg.y0 *= 2;
    const SimulationResult d = simulate_reflected(m, b, cfg);
    const double k = std::pow(2.0, m.p);
    for (std::size_t i = 0; i < a.path_values.size(); ++i)
        EXPECT_NEAR(d.path_values[i] / a.path_values[i], k, 1e-12 * k);
}

TEST(Reflected, ThreadCountDoesNotChangeResult) {
    const MarketParams m = MarketParams::reference(1e-3);
    const DerivedConstants c = derive_constants(m);
    const BoundarySet b = solve_boundaries(Family::minus, 1e-3, m, c, std::size_t{256});
    PathConfig cfg;
    cfg.n_paths = 400;
    cfg.dt = 1e-2;
    cfg.threads = 1;
    const SimulationResult a = simulate_reflected(m, b, cfg);
    cfg.threads = 4;
    const SimulationResult d = simulate_reflected(m, b, cfg);
    EXPECT_EQ(a.estimate, d.estimate);
    EXPECT_EQ(a.std_error, d.std_error);
    EXPECT_EQ(a.trade_volume, d.trade_volume);
    EXPECT_EQ(a.solvency_violations, 0u);
    EXPECT_EQ(a.ruin_count, 0u);
    EXPECT_GT(a.boundary_hits, 0.0);
    EXPECT_LT(a.max_projection_error, 1e-14);
}

TEST(Reflected, RejectsMismatchedLambda) {
    const MarketParams m = MarketParams::reference(1e-3);
    PathConfig cfg;
    cfg.n_paths = 2;
    EXPECT_THROW(simulate_reflected(m, flat_boundaries(2e-3, 0.4, 0.6, m.T), cfg), std::invalid_argument);
}

TEST(Merton, MatchesClosedForm) {
    for (const MarketParams& m : {MarketParams::reference(1e-3), MarketParams::stress(1e-3)}) {
        const DerivedConstants c = derive_constants(m);
        PathConfig cfg;
        cfg.n_paths = 100000;
        cfg.dt = 0.05;
        const SimulationResult r = simulate_merton(m, cfg);
        const double want = merton_value(0.0, 1.0, m, c);
        EXPECT_LT(std::abs(r.estimate - want), 3 * r.std_error) << r.estimate << " vs " << want;
    }
}

TEST(Merton, NoStockExposureIsDeterministic) {
    MarketParams m = MarketParams::reference(1e-3);
    m.mu = m.r;
    PathConfig cfg;
    cfg.n_paths = 10;
    cfg.dt = 0.1;
    cfg.x0 = 0.4;
    cfg.y0 = 0.8;
    cfg.t0 = 0.25;
    cfg.keep_paths = true;
    const SimulationResult r = simulate_merton(m, cfg);
    const double W = 1.2 * std::exp(m.r * 0.75);
    const double want = std::exp(-m.beta * 0.75) * utility(W, m.p);
    for (double v : r.path_values) EXPECT_NEAR(v, want, 1e-14);
    EXPECT_NEAR(r.std_error, 0.0, 1e-15);
}

TEST(Merton, StandardErrorShrinksWithPaths) {
    const MarketParams m = MarketParams::reference(1e-3);
    PathConfig cfg;
    cfg.dt = 0.1;
    cfg.antithetic = false;
    cfg.n_paths = 40000;
    const double s1 = simulate_merton(m, cfg).std_error;
    cfg.n_paths = 80000;
    const double s2 = simulate_merton(m, cfg).std_error;
    EXPECT_NEAR(s1 / s2, std::sqrt(2.0), 0.1);
}

TEST(Merton, SeedDeterminesResult) {
    const MarketParams m = MarketParams::reference(1e-3);
    PathConfig cfg;
    cfg.n_paths = 1000;
    cfg.dt = 0.1;
    const double a = simulate_merton(m, cfg).estimate;
    EXPECT_EQ(a, simulate_merton(m, cfg).estimate);
    cfg.seed += 1;
    EXPECT_NE(a, simulate_merton(m, cfg).estimate);
}
