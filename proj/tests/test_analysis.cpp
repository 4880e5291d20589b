#include <tcasym/analysis.hpp>
#include <tcasym/io.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace tcasym;

TEST(Sweep, LambdaOrdering) {
    EXPECT_EQ(sorted_decreasing({1e-4, 1e-2, 1e-3, 1e-2}), (std::vector<double>{1e-2, 1e-3, 1e-4}));
    EXPECT_THROW(sorted_decreasing({1e-3, 0.0}), std::invalid_argument);
    EXPECT_THROW(sorted_decreasing({1.5}), std::invalid_argument);
}

TEST(Sweep, SinglePointHasNoFit) {
    const SweepReport r = expansion_study(MarketParams::reference(1e-3), {1e-2}, {10.0});
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_FALSE(r.fit);
    EXPECT_EQ(r.note, "insufficient points");
}

TEST(Sweep, LossPositiveAndIncreasing) {
    const MarketParams base = MarketParams::reference(1e-3);
    const SweepReport r = expansion_study(base, {1e-3, 1e-2, 3e-3, 3e-2}, {20.0});
    ASSERT_EQ(r.rows.size(), 4u);
    EXPECT_TRUE(r.loss_increasing);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        if (i) {
            EXPECT_LT(row.lambda, r.rows[i - 1].lambda);
        }
        EXPECT_GT(row.loss, 0.0);
        EXPECT_GT(row.u_error, 0.0);
        EXPECT_LT(row.u_error, 0.1 * row.loss);
        EXPECT_DOUBLE_EQ(row.coefficient, row.loss / std::pow(row.lambda, 2.0 / 3.0));
    }
    ASSERT_TRUE(r.fit);
    EXPECT_GT(r.fit->slope, 0.5);
    EXPECT_LT(r.fit->slope, 1.0);
    ASSERT_TRUE(r.two_term);
    const DerivedConstants c = derive_constants(base);
    EXPECT_NEAR(r.predicted_coefficient, c.gamma2 * base.T * std::exp(base.p * c.A * base.T), 1e-15);
}

TEST(Sweep, LiquidationOnlyNearMaturity) {
    MarketParams m = MarketParams::reference(1e-2);
    m.t0 = m.T - 1e-7;
    const SweepReport r = expansion_study(m, {1e-2}, {20.0});
    const double theta = derive_constants(m).theta;
    EXPECT_GT(r.rows[0].loss, 0.0);
    EXPECT_LE(r.rows[0].loss, 1e-2 * theta * 1.01);
}

TEST(Sandwich, HoldsDeepInAsymptoticRegime) {
    const MarketParams m = MarketParams::reference(3e-5);
    const DerivedConstants c = derive_constants(m);
    const SandwichRow row = sandwich_row(m, c, refined_solve(m, c), 0.3, 0.7, 256);
    EXPECT_TRUE(row.pass()) << row.error;
    EXPECT_GT(row.min_upper_margin, 0.0);
    EXPECT_GT(row.min_lower_margin, 0.0);
    EXPECT_GT(row.points, 0u);
    EXPECT_GT(row.error_estimate, 0.0);
    EXPECT_NEAR(row.max_width, 2 * c.M * 3e-5, 0.1 * c.M * 3e-5);
}

TEST(Sandwich, MissingFamilyIsReported) {
    const MarketParams m = MarketParams::reference(0.3);
    const DerivedConstants c = derive_constants(m);
    GridPolicy pol{10.0};
    const SandwichRow row = sandwich_row(m, c, refined_solve(m, c, pol), 0.3, 0.7, 16);
    EXPECT_FALSE(row.pass());
    EXPECT_NE(row.error.find("w-"), std::string::npos);
}

TEST(Gap, RowsFilledAndSignalFlagged) {
    PathConfig cfg;
    cfg.n_paths = 2000;
    cfg.dt = 1e-2;
    const GapReport g = strategy_gap(MarketParams::reference(1e-3), {1e-2}, cfg, {20.0});
    ASSERT_EQ(g.rows.size(), 1u);
    const GapRow& r = g.rows[0];
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_GT(r.std_error, 0.0);
    EXPECT_EQ(r.gap, r.u_num - r.mc);
    EXPECT_EQ(r.signal, r.gap >= 3 * r.std_error);
    EXPECT_LE(r.w_minus, r.u_num);
    EXPECT_FALSE(g.fit);
}

TEST(Export, BoundaryCsvShape) {
    const MarketParams m = MarketParams::reference(1e-4);
    const BoundarySet b = solve_boundaries(Family::minus, 1e-4, m, derive_constants(m), std::size_t{9});
    const std::string csv = boundaries_csv(b);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,delta1,delta2,zeta1,zeta2,residual1,residual2");
    const json j = to_json(b);
    EXPECT_EQ(j["family"], "minus");
    EXPECT_EQ(j["t"].size(), 9u);
}

TEST(Export, NonFiniteNumbersBecomeStrings) {
    SimulationResult r;
    r.estimate = -std::numeric_limits<double>::infinity();
    const json j = to_json(r);
    EXPECT_EQ(j["estimate"], "-inf");
    EXPECT_NO_THROW((void)j.dump());
}
