#include <gtest/gtest.h>

#include <cmath>

#include "ompath/mlp.hpp"
#include "ompath/rng.hpp"

using namespace ompath;

namespace {

std::vector<Sample> random_samples(std::size_t n, std::size_t din, std::size_t dout, std::uint64_t seed)
{
    SplitMix64 rng(seed);
    std::vector<Sample> data(n);
    for (auto& s : data) {
        for (std::size_t j = 0; j < din; ++j) s.input.push_back(rng.uniform(-1.0, 1.0));
        for (std::size_t j = 0; j < dout; ++j) s.target.push_back(rng.uniform(-1.0, 1.0));
    }
    return data;
}

}  // namespace

TEST(Mlp, ShapesAndParameterCount)
{
    const Mlp net = Mlp::init({2, 8, 16, 8, 2}, 1);
    EXPECT_EQ(net.layers(), 4u);
    EXPECT_EQ(net.params().size(), (2 * 8 + 8) + (8 * 16 + 16) + (16 * 8 + 8) + (8 * 2 + 2));
    EXPECT_EQ(net.forward(std::vector<double>{0.1, 0.2}).size(), 2u);
    EXPECT_THROW(net.forward(std::vector<double>{0.1}), ConfigError);
    EXPECT_THROW(Mlp::init({2}, 1), ConfigError);
    EXPECT_THROW(Mlp::init({2, 0, 1}, 1), ConfigError);
}

TEST(Mlp, InitialBiasesZeroWeightsTruncated)
{
    const Mlp net = Mlp::init({2, 20, 20, 2}, 9, 0.1);
    for (std::size_t l = 0; l < net.layers(); ++l) {
        for (double b : net.biases(l)) EXPECT_EQ(b, 0.0);
        for (double w : net.weights(l)) EXPECT_LE(std::abs(w), 0.2);
    }
}

TEST(Mlp, HandComputedForward)
{
    // One tanh hidden unit, linear output.
    const Mlp net = Mlp::from_layers({1, 1, 1}, {{2.0}, {3.0}}, {{0.5}, {-1.0}});
    const double y = net.forward(std::vector<double>{0.25})[0];
    EXPECT_NEAR(y, 3.0 * std::tanh(1.0) - 1.0, 1e-15);
}

TEST(Mlp, ParameterGradientMatchesCentralDifferences)
{
    Mlp net = Mlp::init({2, 8, 16, 8, 2}, 3, 0.5);
    SplitMix64 rng(4);
    for (double& p : net.params()) p += rng.uniform(-0.1, 0.1);  // nonzero biases too
    const auto data = random_samples(16, 2, 2, 5);
    std::vector<double> grad;
    mse(net, data, &grad);
    double worst = 0.0;
    for (std::size_t i = 0; i < net.params().size(); ++i) {
        const double p0 = net.params()[i];
        const double h = 1e-6;
        net.params()[i] = p0 + h;
        const double lp = mse(net, data);
        net.params()[i] = p0 - h;
        const double lm = mse(net, data);
        net.params()[i] = p0;
        const double fd = (lp - lm) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad[i]) / std::max(std::abs(fd), 1e-6));
    }
    EXPECT_LE(worst, 1e-4);
}

TEST(Mlp, InputGradientMatchesCentralDifferences)
{
    const Mlp net = Mlp::init({1, 20, 20, 2}, 7, 0.8);
    const std::vector<double> x{0.3};
    Mlp::Tape tape;
    net.forward(x, tape);
    std::vector<double> g, gin;
    net.backward(tape, std::vector<double>{1.0, -2.0}, g, &gin);
    auto f = [&](double t) {
        const auto y = net.forward(std::vector<double>{t});
        return y[0] - 2.0 * y[1];
    };
    const double fd = (f(0.3 + 1e-6) - f(0.3 - 1e-6)) / 2e-6;
    EXPECT_NEAR(gin[0], fd, 1e-4 * std::abs(fd));
}

TEST(Mlp, LearnsIdentity)
{
    Mlp net = Mlp::init({1, 8, 1}, 11);
    std::vector<Sample> data;
    for (int i = 0; i <= 40; ++i) {
        const double x = -1.0 + 0.05 * i;
        data.push_back({{x}, {x}});
    }
    const TrainReport rep = train(net, data, 2000, 1e-2);
    EXPECT_LT(rep.train_loss, 1e-4);
    EXPECT_LT(rep.history.back(), rep.history.front());
}

TEST(Mlp, TrainingIsDeterministic)
{
    const auto data = random_samples(32, 2, 2, 8);
    Mlp a = Mlp::init({2, 8, 2}, 42), b = Mlp::init({2, 8, 2}, 42);
    train(a, data, 200, 1e-2);
    train(b, data, 200, 1e-2);
    EXPECT_EQ(a.params(), b.params());
    Mlp c = Mlp::init({2, 8, 2}, 43);
    EXPECT_NE(Mlp::init({2, 8, 2}, 42).params(), c.params());
}

TEST(Mlp, ZeroEpochsLeavesWeightsUntouched)
{
    const auto data = random_samples(8, 2, 2, 1);
    Mlp net = Mlp::init({2, 4, 2}, 5);
    const auto before = net.params();
    const TrainReport rep = train(net, data, 0, 1e-3);
    EXPECT_EQ(net.params(), before);
    EXPECT_EQ(rep.epochs, 0u);
    EXPECT_TRUE(rep.history.empty());
    EXPECT_TRUE(std::isfinite(rep.train_loss));
}

TEST(Mlp, TrainRejectsBadInput)
{
    Mlp net = Mlp::init({2, 4, 2}, 5);
    EXPECT_THROW(train(net, {}, 10, 1e-3), ConfigError);
    EXPECT_THROW(train(net, random_samples(4, 2, 2, 1), 10, 0.0), ConfigError);
    EXPECT_THROW(mse(net, random_samples(4, 3, 2, 1)), ConfigError);
}

TEST(Normalizer, FitApplyInvert)
{
    const std::vector<std::vector<double>> rows{{1.0, 5.0}, {3.0, 5.0}};
    const Normalizer n = Normalizer::fit(rows);
    EXPECT_DOUBLE_EQ(n.mean[0], 2.0);
    EXPECT_DOUBLE_EQ(n.scale[0], 1.0);
    EXPECT_DOUBLE_EQ(n.scale[1], 1.0);  // constant column
    const auto y = n.apply(std::vector<double>{3.0, 6.0});
    EXPECT_DOUBLE_EQ(y[0], 1.0);
    EXPECT_DOUBLE_EQ(y[1], 1.0);
    const auto x = n.invert(y);
    EXPECT_DOUBLE_EQ(x[0], 3.0);
    EXPECT_DOUBLE_EQ(x[1], 6.0);
}

TEST(Adam, FirstStepHasLearningRateMagnitude)
{
    Adam opt(2, 0.1);
    std::vector<double> p{1.0, -1.0};
    opt.step(p, {5.0, -0.01});
    EXPECT_NEAR(p[0], 0.9, 1e-6);
    EXPECT_NEAR(p[1], -0.9, 1e-4);
}
