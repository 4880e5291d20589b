#include <tcasym/asymptotics.hpp>

#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tcasym;
using oracle::Big;

namespace {

struct Instance {
    explicit Instance(double lambda, bool stress = false)
        : m(stress ? MarketParams::stress(lambda) : MarketParams::reference(lambda)),
          c(derive_constants(m)),
          o(oracle::constants(m)) {}
    MarketParams m;
    DerivedConstants c;
    oracle::Constants o;
};

int fam_sign(Family f) { return f == Family::plus ? 1 : -1; }

}  // namespace

TEST(HEval, Origin) {
    const Instance s(1e-3);
    const HValues hv = h_eval(0.0, 1e-3, s.c);
    EXPECT_EQ(hv.h, 0.0);
    EXPECT_EQ(hv.dh, 0.0);
    EXPECT_NEAR(hv.d2h, 3 * std::pow(1e-3, 2.0 / 3) + 3 * s.c.B * std::pow(1e-3, 4.0 / 3), 1e-15);
}

TEST(HEval, Parity) {
    const Instance s(1e-4);
    for (double d : {0.003, 0.02, 0.1}) {
        const HValues a = h_eval(d, 1e-4, s.c), b = h_eval(-d, 1e-4, s.c);
        EXPECT_EQ(a.h, b.h);
        EXPECT_EQ(a.dh, -b.dh);
        EXPECT_EQ(a.d2h, b.d2h);
    }
}

TEST(HEval, ReferenceValue) {
    const Instance s(1e-3);
    const double got = h_eval(0.05, 1e-3, s.c).h;
    const Big want = oracle::h(Big(0.05), Big(1e-3), s.o);
    EXPECT_LT(oracle::rel_err(got, want), 1e-13);
    EXPECT_NEAR(got, 3.3107404776908676e-5, 1e-18);
}

TEST(HEval, DerivativesMatchOracle) {
    const Instance s(1e-5);
    for (double d : {-0.04, -0.01, 0.007, 0.03}) {
        const HValues hv = h_eval(d, 1e-5, s.c);
        EXPECT_LT(oracle::rel_err(hv.h, oracle::h(Big(d), Big(1e-5), s.o)), 1e-13);
        EXPECT_LT(oracle::rel_err(hv.dh, oracle::dh(Big(d), Big(1e-5), s.o)), 1e-13);
        const double e = 1e-6;
        EXPECT_NEAR(hv.d2h, (h_eval(d + e, 1e-5, s.c).dh - h_eval(d - e, 1e-5, s.c).dh) / (2 * e),
                    1e-7 * std::abs(hv.d2h) + 1e-12);
    }
}

TEST(FEval, MatchesOracle) {
    for (bool stress : {false, true}) {
        const double l = 1e-4;
        const Instance s(l, stress);
        for (Family fam : {Family::minus, Family::plus})
            for (int which : {1, 2})
                for (double t : {0.0, 0.37, 1.0})
                    for (double d : {-0.03, -0.005, 0.0, 0.012, 0.04}) {
                        const double got = f_eval(which, fam, t, d, l, s.m, s.c);
                        const Big want = oracle::f(which, fam_sign(fam), Big(t), Big(d), Big(l), s.m, s.o);
                        EXPECT_NEAR(got, want.convert_to<double>(), 1e-16)
                            << "which=" << which << " fam=" << to_string(fam) << " t=" << t << " d=" << d;
                    }
    }
}

TEST(FEval, AtOriginKeepsOnlyLambdaTerms) {
    const Instance s(1e-3);
    const double l = 1e-3, t = 0.25;
    const double E = std::exp(s.m.p * s.c.A * (s.m.T - t));
    for (Family fam : {Family::minus, Family::plus}) {
        const double want = s.c.nu * l - s.m.p * s.c.nu * gamma2_at(t, s.c, s.m) / E * std::pow(l, 5.0 / 3) +
                            sign_of(fam) * s.m.p * s.c.nu * s.c.M / E * l * l;
        EXPECT_NEAR(f_eval(1, fam, t, 0.0, l, s.m, s.c), want, 1e-17);
    }
}

TEST(FEval, SellSideDiffersByTwiceHPrime) {
    const Instance s(1e-4);
    for (double d : {-0.02, 0.01, 0.05}) {
        const double f1 = f_eval(1, Family::plus, 0.5, d, 1e-4, s.m, s.c);
        const double f2 = f_eval(2, Family::plus, 0.5, d, 1e-4, s.m, s.c);
        EXPECT_NEAR(f2, f1 - 2 * h_eval(d, 1e-4, s.c).dh, 1e-17);
    }
}

TEST(FEval, DerivativeMatchesFiniteDifference) {
    const Instance s(1e-4);
    for (double d : {-0.03, 0.02}) {
        const auto [f, df] = f_eval_with_derivative(2, Family::minus, 0.1, d, 1e-4, s.m, s.c);
        (void)f;
        const double e = 1e-7;
        const double fd = (f_eval(2, Family::minus, 0.1, d + e, 1e-4, s.m, s.c) -
                           f_eval(2, Family::minus, 0.1, d - e, 1e-4, s.m, s.c)) /
                          (2 * e);
        EXPECT_NEAR(df, fd, 1e-7 * std::abs(df));
    }
}

TEST(FEval, LeadingRootResidualIsHigherOrder) {
    // f1 at -nu l^(1/3) / 2 is O(l^(4/3)); its ratio to l must shrink with l
    double prev = std::numeric_limits<double>::infinity();
    for (double l : {1e-3, 1e-4, 1e-5, 1e-6}) {
        const Instance s(l);
        const double d0 = -0.5 * s.c.nu * std::cbrt(l);
        const double ratio = std::abs(f_eval(1, Family::minus, 0.0, d0, l, s.m, s.c)) / l;
        EXPECT_LT(ratio, prev);
        prev = ratio;
    }
    EXPECT_LT(prev, 0.1);
}

TEST(Boundaries, SellRootNearLeadingOrder) {
    const Instance s(1e-3);
    const BoundaryRoot r = solve_boundary_root(2, Family::minus, 0.0, 1e-3, s.m, s.c);
    EXPECT_LE(r.residual, 1e-12);
    const double l13 = std::cbrt(1e-3);
    const double mid = 0.5 * s.c.nu * l13 * (1 - xi(0.0, s.c, s.m) * l13);
    EXPECT_NEAR(mid, 0.0514809757628616, 1e-15);
    // the M lambda term is not yet negligible at this lambda: the root sits
    // inside the leading-order offset by about 0.1 lambda^(2/3)
    EXPECT_LT(r.delta, mid);
    EXPECT_NEAR(r.delta, mid, 0.5 * std::pow(1e-3, 2.0 / 3.0));
    // independent 50-digit bisection on the same bracket
    const Big root = oracle::bisect(
        [&](const Big& d) { return oracle::f(2, -1, Big(0), d, Big(1e-3), s.m, s.o); }, Big(r.delta - 1e-3),
        Big(r.delta + 1e-3));
    EXPECT_NEAR(r.delta, root.convert_to<double>(), 1e-12);
}

TEST(Boundaries, RootsMatchExtendedPrecision) {
    for (double l : {1e-4, 1e-5}) {
        const Instance s(l);
        for (int which : {1, 2})
            for (double t : {0.0, 0.5, 1.0}) {
                const BoundaryRoot r = solve_boundary_root(which, Family::minus, t, l, s.m, s.c);
                const double w = 0.05 * std::abs(r.delta);
                const Big root = oracle::bisect(
                    [&](const Big& d) { return oracle::f(which, -1, Big(t), d, Big(l), s.m, s.o); },
                    Big(r.delta - w), Big(r.delta + w));
                // f is flat near the root (f' = O(lambda)), so agreement in delta is only |f| / |f'|
                const double df = std::abs(f_eval_with_derivative(which, Family::minus, t, r.delta, l, s.m, s.c).second);
                EXPECT_NEAR(r.delta, root.convert_to<double>(), 2e-12 / df) << "l=" << l << " which=" << which;
                EXPECT_LE(abs(oracle::f(which, -1, Big(t), Big(r.delta), Big(l), s.m, s.o)), Big(1e-12));
            }
    }
}

TEST(Boundaries, ResidualsAndOrdering) {
    const Instance s(1e-5);
    for (Family fam : {Family::minus, Family::plus}) {
        const BoundarySet b = solve_boundaries(fam, 1e-5, s.m, s.c, std::size_t{64});
        EXPECT_LE(b.max_residual(), 1e-12);
        EXPECT_TRUE(b.all_inside_lemma_bracket());
        for (std::size_t i = 0; i < b.size(); ++i) {
            EXPECT_LT(b.delta1[i], 0.0);
            EXPECT_GT(b.delta2[i], 0.0);
        }
    }
}

TEST(Boundaries, PlusFamilyBoundariesAreInside) {
    // the +M lambda term pulls the supersolution's boundaries inward
    const Instance s(1e-5);
    const BoundarySet mb = solve_boundaries(Family::minus, 1e-5, s.m, s.c, std::size_t{16});
    const BoundarySet pb = solve_boundaries(Family::plus, 1e-5, s.m, s.c, std::size_t{16});
    for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_GT(pb.delta2[i] - pb.delta1[i], 0.0);
        EXPECT_NE(pb.delta1[i], mb.delta1[i]);
    }
}

TEST(Boundaries, InterpolationMatchesDirectSolves) {
    const Instance s(1e-4);
    const BoundarySet b = solve_boundaries(Family::minus, 1e-4, s.m, s.c);
    for (int i = 0; i < 25; ++i) {
        const double t = (i + 0.318) / 25.3;
        const double d1 = solve_boundary_root(1, Family::minus, t, 1e-4, s.m, s.c).delta;
        const double d2 = solve_boundary_root(2, Family::minus, t, 1e-4, s.m, s.c).delta;
        EXPECT_NEAR(b.delta1_at(t), d1, 1e-10);
        EXPECT_NEAR(b.delta2_at(t), d2, 1e-10);
    }
}

TEST(Boundaries, TimeDerivativeScalesWithLambda23) {
    std::vector<double> coeffs;
    for (double l : {1e-3, 1e-4, 1e-5}) {
        const Instance s(l);
        double worst = 0.0;
        for (double t : {0.1, 0.5, 0.9}) {
            const double e = 1e-4;
            const double dd = (solve_boundary_root(1, Family::minus, t + e, l, s.m, s.c).delta -
                               solve_boundary_root(1, Family::minus, t - e, l, s.m, s.c).delta) /
                              (2 * e);
            worst = std::max(worst, std::abs(dd));
        }
        coeffs.push_back(worst / std::pow(l, 2.0 / 3.0));
    }
    // one constant bounds all three: the scaled slope shrinks as lambda decreases
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        EXPECT_GT(coeffs[i], 0.0);
        EXPECT_LE(coeffs[i], coeffs[0]);
    }
    EXPECT_LT(coeffs[0], 0.05);
}

TEST(Boundaries, NoBracketForLargeLambda) {
    const Instance s(0.5);
    try {
        solve_boundaries(Family::minus, 0.5, s.m, s.c, std::size_t{8});
        FAIL() << "expected NoBracket";
    } catch (const NoBracket& e) {
        EXPECT_EQ(e.lambda, 0.5);
        EXPECT_EQ(e.family, Family::minus);
    }
}

TEST(Boundaries, RejectsBadInput) {
    const Instance s(1e-4);
    EXPECT_THROW(solve_boundary_root(1, Family::minus, 1.5, 1e-4, s.m, s.c), std::out_of_range);
    EXPECT_THROW(solve_boundaries(Family::minus, 0.0, s.m, s.c, std::size_t{8}), std::invalid_argument);
    EXPECT_THROW(f_eval(3, Family::minus, 0.0, 0.0, 1e-4, s.m, s.c), std::invalid_argument);
}

class SurfaceTest : public ::testing::Test {
protected:
    static constexpr double l = 1e-5;
    Instance s{l};
    SubSupSurface wp = SubSupSurface::build(Family::plus, l, s.m, s.c, 256);
    SubSupSurface wm = SubSupSurface::build(Family::minus, l, s.m, s.c, 256);
};

TEST_F(SurfaceTest, CoreDiffersByTwoMLambda) {
    for (double t : {0.0, 0.4, 1.0}) {
        const double diff = wp.value(t, s.c.theta) - wm.value(t, s.c.theta);
        EXPECT_NEAR(diff, 2 * s.c.M * l, 1e-14);
    }
}

TEST_F(SurfaceTest, TerminalValueAtTheta) {
    EXPECT_NEAR(wp.value(1.0, s.c.theta), 1 / s.m.p + s.c.M * l, 1e-15);
    EXPECT_NEAR(wm.value(1.0, s.c.theta), 1 / s.m.p - s.c.M * l, 1e-15);
}

TEST_F(SurfaceTest, FinalTimeOrdering) {
    for (int k = 0; k < 200; ++k) {
        const double z = (-1 + (k + 0.5) / 100.0) / l;
        const double u = utility(1 - l * std::abs(z), s.m.p);
        EXPECT_GE(wp.value(1.0, z), u) << z;
        EXPECT_LE(wm.value(1.0, z), u) << z;
    }
}

TEST_F(SurfaceTest, RegionsFollowBoundaries) {
    const double t = 0.3;
    EXPECT_EQ(wm.region(t, wm.zeta1(t) - 1e-6), Region::buy);
    EXPECT_EQ(wm.region(t, s.c.theta), Region::no_trade);
    EXPECT_EQ(wm.region(t, wm.zeta2(t) + 1e-6), Region::sell);
    EXPECT_THROW(wm.value(t, 2.0 / l), std::out_of_range);
    EXPECT_THROW(wm.value(-0.1, 0.5), std::out_of_range);
}

TEST_F(SurfaceTest, DerivativesMatchFiniteDifferences) {
    for (const SubSupSurface* w : {&wp, &wm})
        for (double t : {0.2, 0.7})
            for (double z : {w->zeta1(t) - 0.02, s.c.theta + 0.003, w->zeta2(t) + 0.05}) {
                const SurfacePoint pt = w->eval(t, z);
                const double ez = 1e-5, et = 1e-5;
                const double wz = (w->value(t, z + ez) - w->value(t, z - ez)) / (2 * ez);
                const double wzz = (w->value(t, z + ez) - 2 * pt.w + w->value(t, z - ez)) / (ez * ez);
                const double wt = (w->value(t + et, z) - w->value(t - et, z)) / (2 * et);
                EXPECT_NEAR(pt.w_z, wz, 1e-8);
                EXPECT_NEAR(pt.w_zz_right, wzz, 1e-4 * std::abs(pt.w_zz_right) + 1e-5);
                EXPECT_NEAR(pt.w_t, wt, 1e-7);
            }
}

TEST_F(SurfaceTest, TradingOperatorsVanishOutsideCore) {
    const double t = 0.5;
    const OperatorResiduals rb = wm.residuals(t, wm.zeta1(t) - 0.1);
    EXPECT_NEAR(rb.buy, 0.0, 1e-15);
    const OperatorResiduals rs = wm.residuals(t, wm.zeta2(t) + 0.1);
    EXPECT_NEAR(rs.sell, 0.0, 1e-15);
}

TEST_F(SurfaceTest, SmoothPasting) {
    for (const SubSupSurface* w : {&wp, &wm}) {
        const PastingReport r = smooth_pasting(*w, 50);
        EXPECT_LE(r.max_value_jump, 1e-9);
        EXPECT_LE(r.max_slope_jump, 1e-9);
    }
}

TEST_F(SurfaceTest, SubAndSupersolutionChecksPass) {
    VerifyOptions o;
    o.nt = 60;
    o.nz = 120;
    o.n_far = 30;
    for (const SubSupSurface* w : {&wp, &wm}) {
        const VerifyReport r = verify_sub_super(*w, o);
        EXPECT_TRUE(r.ok()) << to_string(w->family()) << " violations=" << r.violations.size();
        EXPECT_GT(r.points, 0u);
    }
}

TEST(Verify, StressConfigMinusNeedsTinyLambda) {
    const Instance s(1e-4, true);
    const VerifyReport r = verify_family(Family::minus, 1e-4, s.m, s.c, {}, 64);
    EXPECT_FALSE(r.ok());
}

TEST(Verify, ErrorsFoldedIntoReport) {
    const Instance s(0.5);
    const VerifyReport r = verify_family(Family::plus, 0.5, s.m, s.c, {}, 16);
    EXPECT_FALSE(r.ok());
    EXPECT_FALSE(r.error.empty());
}
