#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "ompath/io.hpp"
#include "ompath/pinn.hpp"
#include "ompath/structure.hpp"
#include "oracles.hpp"

using namespace ompath;

namespace {

// x(t) = A e^t + B e^-t through the two boundary states.
State ou_exact(const State& x0, const State& x1, double T, double t)
{
    auto comp = [&](double a, double b) {
        const double B = (a * std::exp(T) - b) / (std::exp(T) - std::exp(-T));
        return (a - B) * std::exp(t) + B * std::exp(-t);
    };
    return {comp(x0.x, x1.x), comp(x0.y, x1.y)};
}

PinnConfig ou_config()
{
    PinnConfig cfg;
    cfg.horizon = 1.0;
    cfg.x0 = {0.5, -1.0};
    cfg.xT = {2.0, 0.3};
    return cfg;
}

template <typename S>
double worst_gradient_error(const S& sys, const PinnConfig& cfg, std::uint64_t seed)
{
    Mlp net = Mlp::init(cfg.layers, seed, 0.5);
    net.output_norm = pinn_output_scaling(cfg);
    std::vector<double> grad;
    pinn_loss(sys, net, cfg, &grad);
    SplitMix64 pick(seed + 1);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const std::size_t i = static_cast<std::size_t>(pick.next() % net.params().size());
        const double p0 = net.params()[i];
        const double h = 1e-6 * std::max(1.0, std::abs(p0));
        net.params()[i] = p0 + h;
        const double lp = pinn_loss(sys, net, cfg).total;
        net.params()[i] = p0 - h;
        const double lm = pinn_loss(sys, net, cfg).total;
        net.params()[i] = p0;
        const double fd = (lp - lm) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad[i]) / std::max(std::abs(fd), 1e-8 * std::abs(lp)));
    }
    return worst;
}

}  // namespace

TEST(Stencils, ExactOnCubics)
{
    const double h = 0.1;
    std::vector<State> z;
    for (int i = 0; i < 11; ++i) {
        const double t = h * i;
        z.push_back({t * t * t - 2.0 * t, 3.0 * t * t + 1.0});
    }
    const auto a = second_derivative(z, h);
    const auto v = first_derivative(z, h);
    for (int i = 0; i < 11; ++i) {
        const double t = h * i;
        EXPECT_NEAR(a[i].x, 6.0 * t, 1e-9) << i;
        EXPECT_NEAR(a[i].y, 6.0, 1e-9) << i;
        EXPECT_NEAR(v[i].y, 6.0 * t, 1e-9) << i;
    }
}

TEST(Stencils, AdjointsAreTransposes)
{
    SplitMix64 rng(2);
    const std::size_t n = 9;
    const double h = 0.3;
    std::vector<State> z(n);
    std::vector<Vec2> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        g[i] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    }
    auto inner = [](const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += dot(a[i], b[i]);
        return s;
    };
    std::vector<Vec2> gz1(n, Vec2{}), gz2(n, Vec2{});
    detail::first_derivative_adjoint(g, h, gz1);
    detail::second_derivative_adjoint(g, h, gz2);
    EXPECT_NEAR(inner(g, first_derivative(z, h)), inner(gz1, z), 1e-12);
    EXPECT_NEAR(inner(g, second_derivative(z, h)), inner(gz2, z), 1e-10);
}

TEST(PinnLoss, ExactOuExtremalHasTinyResidual)
{
    const PinnConfig cfg = ou_config();
    std::vector<State> z;
    for (double t : collocation_times(cfg)) z.push_back(ou_exact(cfg.x0, cfg.xT, cfg.horizon, t));
    const PinnLoss loss = pinn_loss_samples(OuSystem{}, z, cfg);
    EXPECT_LT(loss.residual, 1e-8);
    EXPECT_LT(loss.boundary, 1e-28);
    EXPECT_EQ(loss.singular_points, 0u);
}

TEST(PinnLoss, LambdaZeroDropsBoundaryTerm)
{
    PinnConfig cfg = ou_config();
    cfg.lambda = 0.0;
    std::vector<State> z(cfg.m, State{7.0, 7.0});
    const PinnLoss loss = pinn_loss_samples(FreeSystem{}, z, cfg);
    EXPECT_GT(loss.boundary, 1.0);
    EXPECT_EQ(loss.total, loss.residual);
    EXPECT_EQ(loss.residual, 0.0);
}

TEST(PinnLoss, BoundaryTermIsHalfLambdaSquaredError)
{
    PinnConfig cfg = ou_config();
    std::vector<State> z(cfg.m, State{0.5, -1.0});
    const PinnLoss loss = pinn_loss_samples(FreeSystem{}, z, cfg);
    const double e1 = 1.5 * 1.5 + 1.3 * 1.3;
    EXPECT_NEAR(loss.boundary, 0.5 * e1, 1e-14);
    EXPECT_NEAR(loss.total, 60.0 * 0.5 * e1, 1e-12);
}

TEST(PinnLoss, SingularCollocationPointsArePenalized)
{
    const CarbonModel m(load_params(OMPATH_CONFIG));
    PinnConfig cfg;
    cfg.m = 11;
    cfg.x0 = {10.0, 2000.0};
    cfg.xT = {-10.0, 2000.0};
    std::vector<State> z;
    for (int i = 0; i <= 10; ++i) z.push_back({10.0 - 2.0 * i, 2000.0});
    const PinnLoss loss = pinn_loss_samples(m, z, cfg);
    EXPECT_EQ(loss.singular_points, 6u);
    EXPECT_GE(loss.residual, 6.0 * kSingularPenalty / 11.0);
}

TEST(PinnLoss, GradientCheckOu)
{
    PinnConfig cfg = ou_config();
    cfg.m = 41;
    cfg.layers = {1, 8, 8, 2};
    EXPECT_LE(worst_gradient_error(OuSystem{}, cfg, 3), 1e-4);
}

TEST(PinnLoss, GradientCheckCarbon)
{
    const CarbonModel m(load_params(OMPATH_CONFIG));
    const CarbonStructure s = carbon_structure(m, 720);
    PinnConfig cfg;
    cfg.m = 61;
    cfg.horizon = 3.0;
    cfg.x0 = s.fixed_point.location;
    cfg.xT = s.stable_cycle.points[645];
    EXPECT_LE(worst_gradient_error(m, cfg, 4), 1e-4);
}

TEST(PinnConfig, Validation)
{
    PinnConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.lambda, 60.0);
    EXPECT_EQ(cfg.m, 501u);
    cfg.m = 3;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = PinnConfig{};
    cfg.layers = {2, 20, 2};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = PinnConfig{};
    cfg.lambda = -1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(PinnSolve, RecoversOuExtremal)
{
    const auto start = std::chrono::steady_clock::now();
    const PinnConfig cfg = ou_config();
    const PinnResult res = solve_path_pinn(OuSystem{}, cfg, 1);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_TRUE(res.converged) << res.note;
    double worst = 0.0;
    for (std::size_t i = 0; i < res.path.size(); ++i) {
        worst = std::max(worst, distance(res.path.states[i], ou_exact(cfg.x0, cfg.xT, cfg.horizon, res.path.time(i))));
    }
    EXPECT_LE(worst, 1e-2);
    EXPECT_LT(res.boundary_loss, cfg.boundary_tol);
    EXPECT_LT(secs, 30.0);
}

TEST(PinnSolve, FreeSystemGivesStraightLine)
{
    PinnConfig cfg;
    cfg.horizon = 2.0;
    cfg.m = 101;
    cfg.x0 = {0.0, 0.0};
    cfg.xT = {1.0, -2.0};
    const PinnResult res = solve_path_pinn(FreeSystem{}, cfg, 2);
    double worst = 0.0;
    for (std::size_t i = 0; i < res.path.size(); ++i) {
        const double s = res.path.time(i) / cfg.horizon;
        worst = std::max(worst, distance(res.path.states[i], State{s, -2.0 * s}));
    }
    EXPECT_LE(worst, 1e-2);
    // Straight line at constant speed: S = 1/2 * |dx|^2 / T.
    EXPECT_NEAR(res.action, 0.5 * 5.0 / 2.0, 2e-2);
}

TEST(PinnSolve, ZeroEpochsIsNotConverged)
{
    PinnConfig cfg = ou_config();
    cfg.epochs = 0;
    const PinnResult res = solve_path_pinn(OuSystem{}, cfg, 1);
    EXPECT_FALSE(res.converged);
    EXPECT_FALSE(res.note.empty());
    EXPECT_EQ(res.path.size(), cfg.m);
}

TEST(OptimalTime, UniformGrid)
{
    const auto g = uniform_grid(1.0, 11.0, 200);
    ASSERT_EQ(g.size(), 200u);
    EXPECT_EQ(g.front(), 1.0);
    EXPECT_EQ(g.back(), 11.0);
    EXPECT_THROW(uniform_grid(2.0, 1.0, 3), ConfigError);
}

TEST(OptimalTime, OuActionDecreasesWithHorizon)
{
    // For x'' = x, S(T) = (A_x^2 + A_y^2)(e^{2T} - 1) - T with
    // A = (x1 - x0 e^{-T}) / (2 sinh T); it decreases over this grid.
    PinnConfig cfg = ou_config();
    cfg.m = 101;
    const std::vector<double> horizons{0.5, 0.75, 1.0, 1.25};
    const OptimalTime best = optimal_time(OuSystem{}, cfg, horizons, 9);
    ASSERT_EQ(best.curve.size(), horizons.size());
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        const double T = horizons[i];
        auto A = [&](double a, double b) { return (b - a * std::exp(-T)) / (2.0 * std::sinh(T)); };
        const double ax = A(cfg.x0.x, cfg.xT.x), ay = A(cfg.x0.y, cfg.xT.y);
        const double exact = (ax * ax + ay * ay) * (std::exp(2.0 * T) - 1.0) - T;
        EXPECT_TRUE(best.curve[i].converged) << best.curve[i].note;
        EXPECT_NEAR(best.curve[i].action, exact, 1e-2 * std::abs(exact)) << T;
    }
    EXPECT_EQ(best.best_index, 3u);
    EXPECT_EQ(best.best_horizon, 1.25);
}

TEST(OptimalTime, NothingConvergedIsAnError)
{
    PinnConfig cfg = ou_config();
    cfg.epochs = 0;
    EXPECT_THROW(optimal_time(OuSystem{}, cfg, {1.0}, 1), ConvergenceError);
}
