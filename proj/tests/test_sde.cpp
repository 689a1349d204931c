#include <gtest/gtest.h>

#include <cmath>

#include "ompath/io.hpp"
#include "ompath/sde.hpp"
#include "ompath/structure.hpp"

using namespace ompath;

namespace {

const CarbonModel& model()
{
    static const CarbonModel m(load_params(OMPATH_CONFIG));
    return m;
}

const CarbonStructure& structure()
{
    static const CarbonStructure s = carbon_structure(model(), 720);
    return s;
}

struct Moments {
    double mean_x = 0.0, var_x = 0.0;
};

template <typename S>
Moments endpoint_moments(const S& sys, const State& z0, SimConfig cfg, std::size_t runs)
{
    std::vector<double> xs;
    for (std::size_t r = 0; r < runs; ++r) {
        SimConfig c = cfg;
        c.seed = derive_seed(cfg.seed, r);
        xs.push_back(euler_maruyama(sys, z0, c).path.back().x);
    }
    Moments m;
    for (double x : xs) m.mean_x += x;
    m.mean_x /= static_cast<double>(runs);
    for (double x : xs) m.var_x += (x - m.mean_x) * (x - m.mean_x);
    m.var_x /= static_cast<double>(runs - 1);
    return m;
}

}  // namespace

TEST(EulerMaruyama, ZeroNoiseIsBitwiseDeterministicEuler)
{
    const State z0 = structure().fixed_point.location + Vec2{20.0, 100.0};
    SimConfig cfg;
    cfg.noise_scale = 0.0;
    cfg.horizon = 3.0;
    const SimResult sim = euler_maruyama(model(), z0, cfg);
    const Path ode = integrate(model(), z0, 3.0, 1e-3, Scheme::Euler);
    ASSERT_EQ(sim.path.size(), ode.size());
    for (std::size_t i = 0; i < ode.size(); ++i) {
        ASSERT_EQ(sim.path.states[i].x, ode.states[i].x) << i;
        ASSERT_EQ(sim.path.states[i].y, ode.states[i].y) << i;
    }
    EXPECT_FALSE(sim.terminated);
}

TEST(EulerMaruyama, SameSeedSamePath)
{
    SimConfig cfg;
    cfg.seed = 77;
    const SimResult a = euler_maruyama(model(), structure().fixed_point.location, cfg);
    const SimResult b = euler_maruyama(model(), structure().fixed_point.location, cfg);
    for (std::size_t i = 0; i < a.path.size(); ++i) ASSERT_EQ(a.path.states[i].x, b.path.states[i].x);
    cfg.seed = 78;
    const SimResult c = euler_maruyama(model(), structure().fixed_point.location, cfg);
    EXPECT_NE(a.path.back().x, c.path.back().x);
}

TEST(EulerMaruyama, BrownianVarianceGrowsLinearly)
{
    SimConfig cfg;
    cfg.horizon = 2.0;
    cfg.dt = 1e-2;
    cfg.seed = 5;
    const std::size_t runs = 4000;
    const Moments m = endpoint_moments(FreeSystem{2.0, 1.0}, {0.0, 0.0}, cfg, runs);
    const double expect = 4.0 * 2.0;
    // Sample variance of a normal has relative SE sqrt(2/(n-1)) ~ 2.2%.
    EXPECT_NEAR(m.var_x, expect, 4.0 * std::sqrt(2.0 / (runs - 1)) * expect);
    EXPECT_NEAR(m.mean_x, 0.0, 4.0 * std::sqrt(expect / runs));
}

TEST(EulerMaruyama, OuMeanRelaxes)
{
    SimConfig cfg;
    cfg.horizon = 1.0;
    cfg.dt = 1e-3;
    cfg.seed = 6;
    const std::size_t runs = 2000;
    const Moments m = endpoint_moments(OuSystem{}, {3.0, 0.0}, cfg, runs);
    // Stationary-limit variance (1 - e^{-2T}) / 2.
    const double var = 0.5 * (1.0 - std::exp(-2.0));
    EXPECT_NEAR(m.mean_x, 3.0 * std::exp(-1.0), 4.0 * std::sqrt(var / runs));
    EXPECT_NEAR(m.var_x, var, 0.15 * var);
}

TEST(EulerMaruyama, LeavingTheDomainTerminates)
{
    SimConfig cfg;
    cfg.noise_scale = 50.0;
    cfg.horizon = 5.0;
    cfg.seed = 1;
    const SimResult sim = euler_maruyama(model(), {5.0, 2000.0}, cfg);
    EXPECT_TRUE(sim.terminated);
    EXPECT_LE(sim.path.back().x, 0.0);
    EXPECT_LT(sim.path.t_end(), 5.0);
}

TEST(EulerMaruyama, RejectsNegativeNoise)
{
    SimConfig cfg;
    cfg.noise_scale = -1.0;
    EXPECT_THROW(euler_maruyama(OuSystem{}, {0.0, 0.0}, cfg), ConfigError);
}

TEST(EscapeFraction, NoNoiseNoEscape)
{
    SimConfig cfg;
    cfg.noise_scale = 0.0;
    cfg.horizon = 5.0;
    const auto s = escape_fraction(model(), structure().fixed_point.location, structure().unstable_cycle.points, 20, cfg);
    EXPECT_EQ(s.escapes, 0u);
    EXPECT_EQ(s.fraction, 0.0);
}

TEST(EscapeFraction, StrongNoiseEscapes)
{
    SimConfig cfg;
    cfg.noise_scale = 10.0;
    cfg.horizon = 3.0;
    cfg.seed = 2;
    const auto s = escape_fraction(model(), structure().fixed_point.location, structure().unstable_cycle.points, 200, cfg);
    EXPECT_GE(s.fraction, 0.9);
}

TEST(EscapeFraction, MonotoneInHorizonAndWorkerIndependent)
{
    SimConfig cfg;
    cfg.noise_scale = 1.0;
    cfg.seed = 3;
    const auto& st = structure();
    double prev = -1.0;
    for (double T : {1.0, 2.0, 4.0}) {
        cfg.horizon = T;
        const auto s = escape_fraction(model(), st.fixed_point.location, st.unstable_cycle.points, 300, cfg);
        EXPECT_GE(s.fraction, prev);
        prev = s.fraction;
    }
    cfg.horizon = 2.0;
    const auto one = escape_fraction(model(), st.fixed_point.location, st.unstable_cycle.points, 100, cfg, 1);
    const auto three = escape_fraction(model(), st.fixed_point.location, st.unstable_cycle.points, 100, cfg, 3);
    EXPECT_EQ(one.escapes, three.escapes);
}
