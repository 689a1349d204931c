#pragma once

// Collocation solver for the Euler-Lagrange boundary value problem. A network
// h(t/T) -> z is trained on the mean squared residual el_rhs(z, z') - z''
// over m uniform points plus lambda times the boundary mismatch. z' and z''
// come from finite-difference stencils on the collocation grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ompath/errors.hpp"
#include "ompath/mlp.hpp"
#include "ompath/om_action.hpp"
#include "ompath/parallel.hpp"
#include "ompath/path.hpp"
#include "ompath/rng.hpp"
#include "ompath/system.hpp"

namespace ompath {

struct PinnConfig {
    double lambda = 60.0;
    std::size_t m = 501;
    std::vector<std::size_t> layers{1, 20, 20, 20, 20, 2};
    double lr = 1e-3;
    std::size_t epochs = 20000;
    double horizon = 1.0;
    State x0;
    State xT;
    std::size_t plateau_window = 500;
    double plateau_tol = 1e-4;
    double boundary_tol = 1e-2;

    void validate() const
    {
        if (!(lambda >= 0.0)) throw ConfigError("pinn: lambda must be non-negative");
        if (m < 4) throw ConfigError("pinn: need at least 4 collocation points");
        if (!(horizon > 0.0)) throw ConfigError("pinn: horizon must be positive");
        if (!(lr > 0.0)) throw ConfigError("pinn: learning rate must be positive");
        if (layers.size() < 2 || layers.front() != 1 || layers.back() != 2) {
            throw ConfigError("pinn: network must map 1 input to 2 outputs");
        }
    }
};

/// Residual added per collocation point that lies outside the metric domain.
inline constexpr double kSingularPenalty = 1e12;

struct PinnLoss {
    double total = 0.0;
    double residual = 0.0;
    double boundary = 0.0;
    std::size_t singular_points = 0;
};

/// Second-order derivative stencils on a uniform grid: central inside,
/// one-sided at the two ends.
inline std::vector<Vec2> first_derivative(const std::vector<State>& z, double h)
{
    return finite_difference_velocities(z, h);
}

inline std::vector<Vec2> second_derivative(const std::vector<State>& z, double h)
{
    const std::size_t n = z.size();
    if (n < 4) throw ConfigError("second_derivative: need at least 4 samples");
    std::vector<Vec2> a(n);
    const double h2 = h * h;
    for (std::size_t i = 1; i + 1 < n; ++i) a[i] = (z[i + 1] - 2.0 * z[i] + z[i - 1]) / h2;
    a[0] = (2.0 * z[0] - 5.0 * z[1] + 4.0 * z[2] - z[3]) / h2;
    a[n - 1] = (2.0 * z[n - 1] - 5.0 * z[n - 2] + 4.0 * z[n - 3] - z[n - 4]) / h2;
    return a;
}

namespace detail {

// Transposed stencils: scatter d(loss)/d(v_i) and d(loss)/d(a_i) back onto z.
inline void first_derivative_adjoint(const std::vector<Vec2>& gv, double h, std::vector<Vec2>& gz)
{
    const std::size_t n = gv.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        gz[i + 1] += gv[i] / (2.0 * h);
        gz[i - 1] -= gv[i] / (2.0 * h);
    }
    gz[0] += -3.0 * gv[0] / (2.0 * h);
    gz[1] += 4.0 * gv[0] / (2.0 * h);
    gz[2] += -1.0 * gv[0] / (2.0 * h);
    gz[n - 1] += 3.0 * gv[n - 1] / (2.0 * h);
    gz[n - 2] += -4.0 * gv[n - 1] / (2.0 * h);
    gz[n - 3] += 1.0 * gv[n - 1] / (2.0 * h);
}

inline void second_derivative_adjoint(const std::vector<Vec2>& ga, double h, std::vector<Vec2>& gz)
{
    const std::size_t n = ga.size();
    const double h2 = h * h;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        gz[i + 1] += ga[i] / h2;
        gz[i] -= 2.0 * ga[i] / h2;
        gz[i - 1] += ga[i] / h2;
    }
    const double c[4] = {2.0, -5.0, 4.0, -1.0};
    for (std::size_t k = 0; k < 4; ++k) {
        gz[k] += c[k] * ga[0] / h2;
        gz[n - 1 - k] += c[k] * ga[n - 1] / h2;
    }
}

}  // namespace detail

/// Collocation times t_j = j*T/(m-1).
inline std::vector<double> collocation_times(const PinnConfig& cfg)
{
    std::vector<double> t(cfg.m);
    for (std::size_t j = 0; j < cfg.m; ++j) {
        t[j] = cfg.horizon * static_cast<double>(j) / static_cast<double>(cfg.m - 1);
    }
    return t;
}

/// Loss of a sampled path z_j on the collocation grid. When gz is non-null
/// it receives d(loss)/d(z_j).
template <DiffusionSystem S>
PinnLoss pinn_loss_samples(const S& sys, const std::vector<State>& z, const PinnConfig& cfg,
                           std::vector<Vec2>* gz = nullptr)
{
    const std::size_t m = z.size();
    const double h = cfg.horizon / static_cast<double>(m - 1);
    const auto v = first_derivative(z, h);
    const auto a = second_derivative(z, h);

    PinnLoss out;
    std::vector<Vec2> gv, ga;
    if (gz != nullptr) {
        gz->assign(m, Vec2{0.0, 0.0});
        gv.assign(m, Vec2{0.0, 0.0});
        ga.assign(m, Vec2{0.0, 0.0});
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
        if (!sys.in_domain(z[j]) || sys.g1(z[j].x) == 0.0) {
            ++out.singular_points;
            out.residual += kSingularPenalty * inv_m;
            continue;
        }
        if (gz == nullptr) {
            const Vec2 r = el_rhs(sys, z[j], v[j]) - a[j];
            out.residual += dot(r, r) * inv_m;
            continue;
        }
        const ElJacobian J = el_rhs_jacobian(sys, z[j], v[j]);
        const Vec2 r = J.acc - a[j];
        out.residual += dot(r, r) * inv_m;
        const Vec2 g = 2.0 * inv_m * r;
        (*gz)[j] += Vec2{dot(J.d_x, g), dot(J.d_y, g)};
        gv[j] += Vec2{dot(J.d_vx, g), dot(J.d_vy, g)};
        ga[j] -= g;
    }
    const Vec2 e0 = z.front() - cfg.x0;
    const Vec2 e1 = z.back() - cfg.xT;
    out.boundary = 0.5 * (dot(e0, e0) + dot(e1, e1));
    out.total = out.residual + cfg.lambda * out.boundary;
    if (gz != nullptr) {
        detail::first_derivative_adjoint(gv, h, *gz);
        detail::second_derivative_adjoint(ga, h, *gz);
        gz->front() += cfg.lambda * e0;
        gz->back() += cfg.lambda * e1;
    }
    return out;
}

/// Fixed output scaling z = mid + half * y, from the boundary states. This
/// only rescales the network output; boundaries are still enforced through
/// the penalty.
inline Normalizer pinn_output_scaling(const PinnConfig& cfg)
{
    Normalizer n;
    const Vec2 mid = 0.5 * (cfg.x0 + cfg.xT);
    const Vec2 half = 0.5 * (cfg.xT - cfg.x0);
    n.mean = {mid.x, mid.y};
    n.scale = {std::max(std::abs(half.x), 1.0), std::max(std::abs(half.y), 1.0)};
    return n;
}

/// Network samples at the collocation points: input t/T, output in state units.
inline std::vector<State> pinn_samples(const Mlp& net, const PinnConfig& cfg, Mlp::Tape* tape = nullptr)
{
    Mlp::Matrix s(1, static_cast<Eigen::Index>(cfg.m));
    for (std::size_t j = 0; j < cfg.m; ++j) {
        s(0, static_cast<Eigen::Index>(j)) = static_cast<double>(j) / static_cast<double>(cfg.m - 1);
    }
    Mlp::Tape local;
    Mlp::Tape& tp = tape != nullptr ? *tape : local;
    net.forward_batch(s, tp);
    const Mlp::Matrix& y = tp.acts.back();
    const auto& mean = net.output_norm.mean;
    const auto& scale = net.output_norm.scale;
    std::vector<State> z(cfg.m);
    for (std::size_t j = 0; j < cfg.m; ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        z[j] = {y(0, k) * scale[0] + mean[0], y(1, k) * scale[1] + mean[1]};
    }
    return z;
}

/// Loss of the network path and, when grad is non-null, its gradient with
/// respect to the network parameters.
template <DiffusionSystem S>
PinnLoss pinn_loss(const S& sys, const Mlp& net, const PinnConfig& cfg, std::vector<double>* grad = nullptr)
{
    if (grad == nullptr) return pinn_loss_samples(sys, pinn_samples(net, cfg), cfg);
    Mlp::Tape tape;
    const auto z = pinn_samples(net, cfg, &tape);
    std::vector<Vec2> gz;
    const PinnLoss loss = pinn_loss_samples(sys, z, cfg, &gz);
    grad->assign(net.params().size(), 0.0);
    const auto& sc = net.output_norm.scale;
    Mlp::Matrix dout(2, static_cast<Eigen::Index>(cfg.m));
    for (std::size_t j = 0; j < cfg.m; ++j) {
        dout(0, static_cast<Eigen::Index>(j)) = gz[j].x * sc[0];
        dout(1, static_cast<Eigen::Index>(j)) = gz[j].y * sc[1];
    }
    net.backward_batch(tape, dout, *grad);
    return loss;
}

struct PinnResult {
    double horizon = 0.0;
    double action = std::numeric_limits<double>::quiet_NaN();
    double residual_loss = std::numeric_limits<double>::quiet_NaN();
    double boundary_loss = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    std::size_t epochs = 0;
    std::string note;  // why the result is flagged, if it is
    Path path;
};

/// Trains the path network with Adam until the boundary loss is below
/// boundary_tol and the residual loss has plateaued, or the epoch budget
/// runs out. The result is returned either way; `converged` flags which.
template <DiffusionSystem S>
PinnResult solve_path_pinn(const S& sys, const PinnConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    Mlp net = Mlp::init(cfg.layers, seed);
    net.output_norm = pinn_output_scaling(cfg);
    Adam opt(net.params().size(), cfg.lr);

    PinnResult res;
    res.horizon = cfg.horizon;
    std::vector<double> grad;
    std::vector<double> history;
    history.reserve(cfg.epochs);
    PinnLoss loss;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        loss = pinn_loss(sys, net, cfg, &grad);
        if (!std::isfinite(loss.total)) {
            res.note = "loss became non-finite at epoch " + std::to_string(e);
            break;
        }
        history.push_back(loss.residual);
        res.epochs = e + 1;
        if (history.size() > cfg.plateau_window && loss.singular_points == 0 && loss.boundary < cfg.boundary_tol) {
            const double old = history[history.size() - 1 - cfg.plateau_window];
            if (std::abs(loss.residual - old) <= cfg.plateau_tol * std::abs(old)) {
                res.converged = true;
                break;
            }
        }
        opt.step(net.params(), grad);
    }

    const auto z = pinn_samples(net, cfg);
    loss = pinn_loss_samples(sys, z, cfg);
    res.residual_loss = loss.residual;
    res.boundary_loss = loss.boundary;
    res.path.dt = cfg.horizon / static_cast<double>(cfg.m - 1);
    res.path.states = z;
    if (loss.singular_points > 0) {
        res.converged = false;
        res.note = std::to_string(loss.singular_points) + " collocation points outside the metric domain";
        return res;
    }
    res.action = action(res.path, sys);
    if (!res.converged && res.note.empty()) {
        res.note = "no plateau with boundary loss below " + std::to_string(cfg.boundary_tol) + " after "
                   + std::to_string(res.epochs) + " epochs";
    }
    return res;
}

struct OptimalTime {
    double best_horizon = std::numeric_limits<double>::quiet_NaN();
    double best_action = std::numeric_limits<double>::quiet_NaN();
    std::size_t best_index = 0;
    std::vector<PinnResult> curve;
};

inline std::vector<double> uniform_grid(double a, double b, std::size_t n)
{
    if (n < 1 || !(b >= a)) throw ConfigError("uniform_grid: need n >= 1 and b >= a");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return g;
}

/// Solves the boundary value problem at every horizon of the grid. Each solve
/// uses its own seed, so the curve does not depend on the worker count.
template <DiffusionSystem S>
std::vector<PinnResult> action_time_curve(const S& sys, const PinnConfig& base, const std::vector<double>& horizons,
                                          std::uint64_t seed, unsigned workers = 1)
{
    std::vector<PinnResult> curve(horizons.size());
    parallel_for(horizons.size(), workers, [&](std::size_t i) {
        PinnConfig cfg = base;
        cfg.horizon = horizons[i];
        curve[i] = solve_path_pinn(sys, cfg, derive_seed(seed, i));
    });
    return curve;
}

/// Least-action converged point of a curve.
inline OptimalTime pick_optimal_time(std::vector<PinnResult> curve)
{
    OptimalTime out;
    out.curve = std::move(curve);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < out.curve.size(); ++i) {
        const auto& r = out.curve[i];
        if (!r.converged || !std::isfinite(r.action)) continue;
        if (!best || r.action < out.curve[*best].action) best = i;
    }
    if (!best) throw ConvergenceError("optimal_time: no horizon of the grid converged");
    out.best_index = *best;
    out.best_horizon = out.curve[*best].horizon;
    out.best_action = out.curve[*best].action;
    return out;
}

template <DiffusionSystem S>
OptimalTime optimal_time(const S& sys, const PinnConfig& base, const std::vector<double>& horizons,
                         std::uint64_t seed, unsigned workers = 1)
{
    return pick_optimal_time(action_time_curve(sys, base, horizons, seed, workers));
}

}  // namespace ompath
