#include <gtest/gtest.h>

#include <cmath>

#include "ompath/io.hpp"
#include "ompath/om_action.hpp"
#include "ompath/rng.hpp"
#include "ompath/shooting.hpp"
#include "ompath/structure.hpp"
#include "oracles.hpp"

using namespace ompath;

namespace {

CarbonModel carbon() { return CarbonModel(load_params(OMPATH_CONFIG)); }

State probe(SplitMix64& rng) { return {rng.uniform(20.0, 200.0), rng.uniform(1500.0, 3500.0)}; }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// x(t) = A e^t + B e^-t through (x0 at 0, x1 at T), componentwise.
Path ou_extremal(const State& x0, const State& x1, double T, std::size_t n)
{
    auto coeff = [&](double a, double b) {
        const double B = (a * std::exp(T) - b) / (std::exp(T) - std::exp(-T));
        return std::pair{a - B, B};
    };
    const auto [ax, bx] = coeff(x0.x, x1.x);
    const auto [ay, by] = coeff(x0.y, x1.y);
    Path p;
    p.dt = T / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = p.dt * static_cast<double>(i);
        p.states.push_back({ax * std::exp(t) + bx * std::exp(-t), ay * std::exp(t) + by * std::exp(-t)});
    }
    return p;
}

}  // namespace

TEST(OuLagrangian, ValueOnDriftIsMinusTwo)
{
    const OuSystem ou;
    EXPECT_DOUBLE_EQ(lagrangian(ou, {0.3, -1.2}, {-0.3, 1.2}), -2.0);
    EXPECT_DOUBLE_EQ(lagrangian(ou, {0.0, 0.0}, {1.0, 0.0}), -1.0);
    const auto g = geometry(ou, {1.0, 2.0});
    EXPECT_EQ(g.gamma111, 0.0);
    EXPECT_EQ(g.div_b, -2.0);
    EXPECT_EQ(g.curvature, 0.0);
}

TEST(OuAction, RelaxationPathHasActionMinusT)
{
    const double T = 2.0;
    Path p;
    p.dt = 1e-3;
    for (int i = 0; i <= 2000; ++i) p.states.push_back(std::exp(-p.dt * i) * State{1.0, -0.5});
    EXPECT_NEAR(action(p, OuSystem{}), -T, 1e-5);
}

TEST(OuAction, RichardsonRatioShowsSecondOrder)
{
    auto S = [](std::size_t n) { return action(ou_extremal({0.2, 1.0}, {2.0, -1.0}, 1.0, n), OuSystem{}); };
    const double s1 = S(51), s2 = S(101), s3 = S(201);
    EXPECT_NEAR((s1 - s2) / (s2 - s3), 4.0, 0.2);
}

TEST(OuAction, AnalyticExtremalValue)
{
    // For x'' = x the action is 1/2 int (|v + x|^2 - 2) dt, evaluated in closed form
    // per component: int (x' + x)^2 = int 4 A^2 e^{2t} = 2 A^2 (e^{2T} - 1).
    const State x0{0.2, 1.0}, x1{2.0, -1.0};
    const double T = 1.0;
    auto A = [&](double a, double b) { return (b - a * std::exp(-T)) / (std::exp(T) - std::exp(-T)); };
    const double ax = A(x0.x, x1.x), ay = A(x0.y, x1.y);
    const double exact = 0.5 * (2.0 * (ax * ax + ay * ay) * (std::exp(2.0 * T) - 1.0) - 2.0 * T);
    EXPECT_NEAR(action(ou_extremal(x0, x1, T, 2001), OuSystem{}), exact, 1e-4 * std::abs(exact));
}

TEST(OuEulerLagrange, AccelerationEqualsPosition)
{
    const OuSystem ou;
    const Vec2 a = el_rhs(ou, {2.0, -1.0}, {0.7, 5.0});
    EXPECT_NEAR(a.x, 2.0, 1e-14);
    EXPECT_NEAR(a.y, -1.0, 1e-14);
}

TEST(CarbonGeometry, ChristoffelMatchesGenericFormula)
{
    const CarbonModel m = carbon();
    SplitMix64 rng(21);
    for (int i = 0; i < 50; ++i) {
        const State z = probe(rng);
        EXPECT_LT(rel(geometry(m, z).gamma111, oracle::christoffel(m, z.x, z.y)[0][0][0]), 1e-6) << z.x;
    }
}

TEST(CarbonGeometry, ModifiedDriftMatchesGenericFormula)
{
    const CarbonModel m = carbon();
    SplitMix64 rng(22);
    for (int i = 0; i < 50; ++i) {
        const State z = probe(rng);
        const Vec2 a = modified_drift(m, z);
        const Vec2 b = oracle::modified_drift(m, z.x, z.y);
        EXPECT_LT(norm(a - b) / norm(b), 1e-6) << z.x << "," << z.y;
    }
}

TEST(CarbonGeometry, DivergenceMatchesVolumeForm)
{
    const CarbonModel m = carbon();
    SplitMix64 rng(23);
    for (int i = 0; i < 50; ++i) {
        const State z = probe(rng);
        EXPECT_LT(rel(geometry(m, z).div_b, oracle::divergence(m, z.x, z.y)), 1e-6) << z.x << "," << z.y;
    }
}

TEST(CarbonGeometry, NumericCurvatureVanishes)
{
    const CarbonModel m = carbon();
    SplitMix64 rng(24);
    for (int i = 0; i < 50; ++i) {
        const State z = probe(rng);
        EXPECT_LE(std::abs(oracle::scalar_curvature(m, z.x, z.y)), 1e-4);
        EXPECT_EQ(geometry(m, z).curvature, 0.0);
    }
}

TEST(CarbonGeometry, SingularMetricIsReported)
{
    const CarbonModel m = carbon();
    EXPECT_THROW(lagrangian(m, {0.0, 2000.0}, {0.0, 0.0}), MetricSingularity);
    EXPECT_THROW(modified_drift(m, {-1.0, 2000.0}), MetricSingularity);
    Path p;
    p.dt = 0.1;
    p.states = {{2.0, 2000.0}, {1.0, 2000.0}, {0.0, 2000.0}};
    try {
        action(p, m);
        FAIL() << "expected MetricSingularity";
    } catch (const MetricSingularity& e) {
        EXPECT_NEAR(e.time(), 0.2, 1e-12);
    }
}

TEST(CarbonEulerLagrange, MatchesFiniteDifferenceLagrangian)
{
    const CarbonModel m = carbon();
    SplitMix64 rng(25);
    for (int i = 0; i < 50; ++i) {
        const State z = probe(rng);
        const Vec2 v = raw_drift(m, z) + Vec2{rng.uniform(-50.0, 50.0), rng.uniform(-200.0, 200.0)};
        const Vec2 a = el_rhs(m, z, v);
        const Vec2 b = oracle::el_acceleration_fd(m, z, v);
        EXPECT_LT(norm(a - b), 1e-4 * std::max(norm(b), 1.0)) << z.x << "," << z.y;
    }
}

TEST(CarbonEulerLagrange, JacobianMatchesCentralDifferences)
{
    const CarbonModel m = carbon();
    SplitMix64 rng(26);
    for (int i = 0; i < 50; ++i) {
        const State z = probe(rng);
        const Vec2 v = raw_drift(m, z) + Vec2{rng.uniform(-50.0, 50.0), rng.uniform(-200.0, 200.0)};
        const ElJacobian j = el_rhs_jacobian(m, z, v);
        auto col = [&](const State& dz, const Vec2& dv, double h) {
            return (el_rhs(m, z + h * dz, v + h * dv) - el_rhs(m, z - h * dz, v - h * dv)) / (2.0 * h);
        };
        const double hx = 1e-5 * z.x, hy = 1e-5 * z.y;
        const double hvx = 1e-5 * std::max(1.0, std::abs(v.x)), hvy = 1e-5 * std::max(1.0, std::abs(v.y));
        const Vec2 cx = col({1, 0}, {0, 0}, hx), cy = col({0, 1}, {0, 0}, hy);
        const Vec2 cvx = col({0, 0}, {1, 0}, hvx), cvy = col({0, 0}, {0, 1}, hvy);
        EXPECT_LT(norm(j.d_x - cx), 1e-4 * std::max(norm(cx), 1e-3));
        EXPECT_LT(norm(j.d_y - cy), 1e-4 * std::max(norm(cy), 1e-3));
        EXPECT_LT(norm(j.d_vx - cvx), 1e-6 * std::max(norm(cvx), 1e-3));
        EXPECT_LT(norm(j.d_vy - cvy), 1e-6 * std::max(norm(cvy), 1e-3));
    }
}

TEST(Stationarity, OuExtremalIsStationary)
{
    const Path p = ou_extremal({0.2, 1.0}, {2.0, -1.0}, 1.0, 1001);
    EXPECT_LE(oracle::stationarity_ratio(p, OuSystem{}), 1e-3);
}

TEST(Stationarity, PerturbedPathIsNotStationary)
{
    Path p = ou_extremal({0.2, 1.0}, {2.0, -1.0}, 1.0, 1001);
    for (std::size_t i = 1; i + 1 < p.size(); ++i) p.states[i].x += 0.05 * std::sin(3.14159 * p.time(i));
    EXPECT_GT(oracle::stationarity_ratio(p, OuSystem{}), 1e-2);
}

TEST(Stationarity, EndStencilNodeCarriesBoundaryMomentum)
{
    // The one-sided end velocity makes dS/dz_1 tend to L_v(0)/4 = (v0 + x0)/2
    // for OU instead of vanishing with dt.
    const Path p = ou_extremal({0.2, 1.0}, {2.0, -1.0}, 1.0, 1001);
    const Vec2 v0 = finite_difference_velocities(p.states, p.dt)[0];
    const Vec2 expect = 0.5 * (v0 + p.states[0]);
    const Vec2 g = oracle::action_node_gradient(p, OuSystem{}, 1);
    EXPECT_LT(norm(g - expect), 1e-2 * norm(expect));
    EXPECT_GT(oracle::stationarity_ratio(p, OuSystem{}, 1), 1.0);
}

TEST(Stationarity, CarbonEulerLagrangePathIsStationary)
{
    const CarbonModel m = carbon();
    const State z = carbon_fixed_point(m).location;
    const Path p = integrate_el(m, z, modified_drift(m, z) + Vec2{20.0, 50.0}, 0.5, 1e-4, Scheme::Rk4);
    EXPECT_LE(oracle::stationarity_ratio(p, m), 1e-3);
}
