#pragma once

// Neural shooting for the Euler-Lagrange boundary value problem: sample
// initial velocities, integrate the Cauchy problem, learn the inverse map
// endpoint -> velocity, then score every cycle target by its action.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ompath/dynamics.hpp"
#include "ompath/errors.hpp"
#include "ompath/mlp.hpp"
#include "ompath/om_action.hpp"
#include "ompath/parallel.hpp"
#include "ompath/path.hpp"
#include "ompath/rng.hpp"
#include "ompath/system.hpp"

namespace ompath {

/// Integrates (z', v') = (v, el_rhs(z, v)) from (z0, v0) over [0, horizon].
template <DiffusionSystem S>
Path integrate_el(const S& sys, const State& z0, const Vec2& v0, double horizon, double dt, Scheme scheme)
{
    if (!(dt > 0.0) || !(horizon > 0.0)) {
        throw ConfigError("integrate_el: dt and horizon must be positive");
    }
    if (!sys.in_domain(z0)) {
        throw MetricSingularity("integrate_el: initial state outside the metric domain", 0.0);
    }
    const std::size_t n = std::max<std::size_t>(1, step_count(horizon, dt));
    const double h = horizon / static_cast<double>(n);
    auto rhs = [&sys](const State& z, const Vec2& v) {
        auto a = el_rhs_t(sys, z.x, z.y, v.x, v.y);
        return Vec2{a[0], a[1]};
    };

    Path path;
    path.dt = h;
    path.states.reserve(n + 1);
    path.velocities.reserve(n + 1);
    path.states.push_back(z0);
    path.velocities.push_back(v0);
    State z = z0;
    Vec2 v = v0;
    for (std::size_t i = 0; i < n; ++i) {
        State zn;
        Vec2 vn;
        if (scheme == Scheme::Euler) {
            zn = z + h * v;
            vn = v + h * rhs(z, v);
        } else {
            const Vec2 a1 = rhs(z, v);
            const State z2 = z + 0.5 * h * v;
            const Vec2 v2 = v + 0.5 * h * a1;
            if (!sys.in_domain(z2)) throw MetricSingularity("integrate_el: left the metric domain", h * (i + 0.5));
            const Vec2 a2 = rhs(z2, v2);
            const State z3 = z + 0.5 * h * v2;
            const Vec2 v3 = v + 0.5 * h * a2;
            if (!sys.in_domain(z3)) throw MetricSingularity("integrate_el: left the metric domain", h * (i + 0.5));
            const Vec2 a3 = rhs(z3, v3);
            const State z4 = z + h * v3;
            const Vec2 v4 = v + h * a3;
            if (!sys.in_domain(z4)) throw MetricSingularity("integrate_el: left the metric domain", h * (i + 1.0));
            const Vec2 a4 = rhs(z4, v4);
            zn = z + (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4);
            vn = v + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        }
        const double t = h * static_cast<double>(i + 1);
        if (!std::isfinite(zn.x) || !std::isfinite(zn.y) || !std::isfinite(vn.x) || !std::isfinite(vn.y)
            || norm(zn) > kBlowUp || norm(vn) > kBlowUp) {
            throw DivergenceError("integrate_el: trajectory diverged", t);
        }
        if (!sys.in_domain(zn)) {
            throw MetricSingularity("integrate_el: left the metric domain at t = " + std::to_string(t), t);
        }
        z = zn;
        v = vn;
        path.states.push_back(z);
        path.velocities.push_back(v);
    }
    return path;
}

/// Endpoint of integrate_el without storing the path.
template <DiffusionSystem S>
State shoot_endpoint(const S& sys, const State& z0, const Vec2& v0, double horizon, double dt, Scheme scheme)
{
    return integrate_el(sys, z0, v0, horizon, dt, scheme).back();
}

/// Reachability: strict inequality |endpoint - target| < epsilon.
inline bool reachable(const Path& path, const State& target, double epsilon)
{
    return !path.states.empty() && distance(path.back(), target) < epsilon;
}

struct VelocityBox {
    Vec2 center;
    Vec2 half_width;

    Vec2 lo() const { return center - half_width; }
    Vec2 hi() const { return center + half_width; }
};

struct ShootConfig {
    double epsilon = 0.5;
    std::size_t n_targets = 3600;
    std::optional<VelocityBox> velocity_box;  // unset: pilot calibration
    std::size_t n_samples = 2000;
    double dt = 1e-3;
    Scheme scheme = Scheme::Euler;
    double annulus_margin = 5.0;
    std::size_t pilot_samples = 200;
    std::size_t epochs = 3000;
    double learning_rate = 5e-3;
    bool refine = false;
    unsigned workers = 1;

    void validate() const
    {
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
        if (n_samples < 100) throw ConfigError("n_samples must be at least 100");
        if (n_targets < 1) throw ConfigError("n_targets must be positive");
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (!(annulus_margin > 0.0)) throw ConfigError("annulus_margin must be positive");
        if (velocity_box && !(velocity_box->half_width.x >= 0.0 && velocity_box->half_width.y >= 0.0)) {
            throw ConfigError("velocity_box half-widths must be non-negative");
        }
    }
};

struct ShootRecord {
    Vec2 v0;
    State endpoint;
};

struct ShootDataset {
    std::vector<ShootRecord> records;
    State z_star;
    double horizon = 0.0;
    double nu = 0.0;
    double dt = 0.0;
    Scheme scheme = Scheme::Euler;
    VelocityBox box;
    std::size_t drawn = 0;

    double retention() const
    {
        return drawn == 0 ? 0.0 : static_cast<double>(records.size()) / static_cast<double>(drawn);
    }
};

namespace detail {

struct Draws {
    std::vector<ShootRecord> kept;
    std::size_t drawn = 0;
};

// Draw i uses its own stream derived from (seed, i), so results do not depend
// on the worker count.
template <DiffusionSystem S>
Draws sample_box(const S& sys, const State& z_star, double horizon, const VelocityBox& box,
                 const std::vector<State>& cycle, const ShootConfig& cfg, std::size_t count, std::uint64_t seed)
{
    std::vector<std::optional<ShootRecord>> slot(count);
    parallel_for(count, cfg.workers, [&](std::size_t i) {
        SplitMix64 rng(derive_seed(seed, i));
        const Vec2 lo = box.lo();
        const Vec2 hi = box.hi();
        const Vec2 v0{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)};
        try {
            const State end = shoot_endpoint(sys, z_star, v0, horizon, cfg.dt, cfg.scheme);
            if (distance_to_polyline(cycle, end) <= cfg.annulus_margin) slot[i] = ShootRecord{v0, end};
        } catch (const NumericalError&) {
            // singular or divergent shots are simply not retained
        }
    });
    Draws d;
    d.drawn = count;
    for (auto& s : slot) {
        if (s) d.kept.push_back(*s);
    }
    return d;
}

}  // namespace detail

/// Default box: centred on the modified drift at z*, half-widths from a pilot
/// ladder. The rung with the highest retention wins.
template <DiffusionSystem S>
VelocityBox calibrate_velocity_box(const S& sys, const State& z_star, double horizon,
                                   const std::vector<State>& cycle, const ShootConfig& cfg, std::uint64_t seed)
{
    double cmin = std::numeric_limits<double>::infinity(), cmax = -cmin, wmin = cmin, wmax = -cmin;
    for (const State& p : cycle) {
        cmin = std::min(cmin, p.x);
        cmax = std::max(cmax, p.x);
        wmin = std::min(wmin, p.y);
        wmax = std::max(wmax, p.y);
    }
    // Straight-line speed needed to cross half the cycle in time T.
    const Vec2 base{0.5 * (cmax - cmin) / horizon, 0.5 * (wmax - wmin) / horizon};
    const Vec2 center = modified_drift(sys, z_star);

    VelocityBox best{center, base};
    double best_rate = -1.0;
    for (int k = -4; k <= 3; ++k) {
        const VelocityBox box{center, std::ldexp(1.0, k) * base};
        const auto d = detail::sample_box(sys, z_star, horizon, box, cycle, cfg, cfg.pilot_samples,
                                          derive_seed(seed, 1000 + static_cast<std::uint64_t>(k + 4)));
        const double rate = static_cast<double>(d.kept.size()) / static_cast<double>(d.drawn);
        if (rate > best_rate) {
            best_rate = rate;
            best = box;
        }
    }
    return best;
}

/// Samples v0 uniformly from the box and keeps shots that end within
/// annulus_margin of the cycle polyline.
template <DiffusionSystem S>
ShootDataset generate_dataset(const S& sys, const State& z_star, double horizon, double nu,
                              const std::vector<State>& cycle, const ShootConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    if (cycle.size() < 2) throw ConfigError("generate_dataset: cycle polyline needs at least two points");
    ShootDataset ds;
    ds.z_star = z_star;
    ds.horizon = horizon;
    ds.nu = nu;
    ds.dt = cfg.dt;
    ds.scheme = cfg.scheme;
    ds.box = cfg.velocity_box ? *cfg.velocity_box : calibrate_velocity_box(sys, z_star, horizon, cycle, cfg, seed);

    auto d = detail::sample_box(sys, z_star, horizon, ds.box, cycle, cfg, cfg.n_samples, seed);
    ds.records = std::move(d.kept);
    ds.drawn = d.drawn;
    if (ds.retention() < 0.01) {
        throw ConvergenceError("generate_dataset: only " + std::to_string(ds.records.size()) + " of "
                               + std::to_string(ds.drawn)
                               + " shots ended near the cycle (retention below 1%); widen or move the velocity box,"
                                 " or enlarge annulus_margin");
    }
    return ds;
}

struct ShootModel {
    Mlp net;
    TrainReport report;
    bool warning = false;  // validation loss above the 0.1 target
};

inline constexpr double kGeneralizationTarget = 0.1;

/// Fits endpoint -> v0 with a 2-8-16-8-2 network on an 80/20 split. Inputs
/// and targets are normalized with training-set statistics; losses are
/// reported in normalized units.
inline ShootModel train_shoot_net(const ShootDataset& ds, std::uint64_t seed, std::size_t epochs = 3000,
                                  double lr = 5e-3)
{
    if (ds.records.size() < 100) {
        throw ConfigError("train_shoot_net: need at least 100 records, got " + std::to_string(ds.records.size()));
    }
    std::vector<std::size_t> order(ds.records.size());
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(derive_seed(seed, 0));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.next() % i)]);
    }
    const std::size_t n_train = (order.size() * 4) / 5;

    std::vector<std::vector<double>> xin, yout;
    for (std::size_t k = 0; k < n_train; ++k) {
        const auto& r = ds.records[order[k]];
        xin.push_back({r.endpoint.x, r.endpoint.y});
        yout.push_back({r.v0.x, r.v0.y});
    }
    ShootModel m;
    m.net = Mlp::init({2, 8, 16, 8, 2}, derive_seed(seed, 1));
    m.net.input_norm = Normalizer::fit(xin);
    m.net.output_norm = Normalizer::fit(yout);

    auto to_sample = [&](const ShootRecord& r) {
        const double in[2] = {r.endpoint.x, r.endpoint.y};
        const double out[2] = {r.v0.x, r.v0.y};
        return Sample{m.net.input_norm.apply(in), m.net.output_norm.apply(out)};
    };
    std::vector<Sample> train_set, valid_set;
    for (std::size_t k = 0; k < order.size(); ++k) {
        (k < n_train ? train_set : valid_set).push_back(to_sample(ds.records[order[k]]));
    }
    m.report = train(m.net, train_set, epochs, lr, valid_set);
    m.warning = !(m.report.validation_loss <= kGeneralizationTarget);
    return m;
}

inline Vec2 predict_velocity(const Mlp& net, const State& target)
{
    const double in[2] = {target.x, target.y};
    const auto y = net.output_norm.invert(net.forward(net.input_norm.apply(in)));
    return {y[0], y[1]};
}

/// Newton on endpoint(v0) - target with a finite-difference 2x2 Jacobian.
/// Returns the best velocity seen; at most max_steps iterations.
template <DiffusionSystem S>
Vec2 refine_velocity(const S& sys, const State& z0, const State& target, Vec2 v, double horizon, double dt,
                     Scheme scheme, int max_steps = 10, double tol = 1e-8)
{
    auto residual = [&](const Vec2& u) { return shoot_endpoint(sys, z0, u, horizon, dt, scheme) - target; };
    Vec2 r;
    try {
        r = residual(v);
    } catch (const NumericalError&) {
        return v;
    }
    Vec2 best = v;
    double best_norm = norm(r);
    for (int it = 0; it < max_steps && best_norm > tol; ++it) {
        const double hx = 1e-6 * std::max(1.0, std::abs(v.x));
        const double hy = 1e-6 * std::max(1.0, std::abs(v.y));
        try {
            const Vec2 cx = (residual(v + Vec2{hx, 0.0}) - residual(v - Vec2{hx, 0.0})) / (2.0 * hx);
            const Vec2 cy = (residual(v + Vec2{0.0, hy}) - residual(v - Vec2{0.0, hy})) / (2.0 * hy);
            const double det = cx.x * cy.y - cy.x * cx.y;
            if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
            const Vec2 dv{(cy.y * r.x - cy.x * r.y) / det, (-cx.y * r.x + cx.x * r.y) / det};
            v = v - dv;
            r = residual(v);
        } catch (const NumericalError&) {
            break;
        }
        if (norm(r) < best_norm) {
            best_norm = norm(r);
            best = v;
        }
    }
    return best;
}

struct TargetRow {
    std::size_t index = 0;
    State target;
    Vec2 v0;
    State endpoint{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double distance = std::numeric_limits<double>::infinity();
    bool reachable = false;
    double action = std::numeric_limits<double>::quiet_NaN();
    std::string failure;  // empty, or why the shot has no endpoint
};

struct ActionReport {
    Path path;
    double action = std::numeric_limits<double>::quiet_NaN();
    std::size_t target_index = 0;
    bool reachable = false;
};

struct SelectionResult {
    ActionReport winner;
    std::vector<TargetRow> table;
    std::size_t reachable_count = 0;
};

/// Index of the reachable row with minimal action; ties keep the lower index.
inline std::optional<std::size_t> argmin_action(const std::vector<TargetRow>& table)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!table[i].reachable || !std::isfinite(table[i].action)) continue;
        if (!best || table[i].action < table[*best].action) best = i;
    }
    return best;
}

/// Scores every target of the cycle and returns the least-action reachable
/// path together with the per-target table.
template <DiffusionSystem S, typename Predictor>
SelectionResult select_path(const S& sys, const State& z_star, const std::vector<State>& targets,
                            Predictor&& predict, double horizon, const ShootConfig& cfg)
{
    cfg.validate();
    SelectionResult res;
    res.table.resize(targets.size());
    parallel_for(targets.size(), cfg.workers, [&](std::size_t i) {
        TargetRow& row = res.table[i];
        row.index = i;
        row.target = targets[i];
        row.v0 = predict(targets[i]);
        if (cfg.refine) {
            row.v0 = refine_velocity(sys, z_star, targets[i], row.v0, horizon, cfg.dt, cfg.scheme);
        }
        try {
            const Path p = integrate_el(sys, z_star, row.v0, horizon, cfg.dt, cfg.scheme);
            row.endpoint = p.back();
            row.distance = distance(row.endpoint, row.target);
            row.reachable = reachable(p, row.target, cfg.epsilon);
            if (row.reachable) row.action = action(p, sys);
        } catch (const NumericalError& e) {
            row.reachable = false;
            row.failure = e.what();
        }
    });
    for (const auto& r : res.table) res.reachable_count += r.reachable ? 1 : 0;

    const auto best = argmin_action(res.table);
    if (!best) {
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& r : res.table) dmin = std::min(dmin, r.distance);
        throw ConvergenceError("most_probable_path: no target reachable within epsilon = "
                               + std::to_string(cfg.epsilon) + "; closest endpoint distance "
                               + std::to_string(dmin));
    }
    const TargetRow& w = res.table[*best];
    res.winner.path = integrate_el(sys, z_star, w.v0, horizon, cfg.dt, cfg.scheme);
    res.winner.action = w.action;
    res.winner.target_index = w.index;
    res.winner.reachable = true;
    return res;
}

template <DiffusionSystem S>
SelectionResult most_probable_path(const S& sys, const State& z_star, const std::vector<State>& targets,
                                   const Mlp& model, double horizon, const ShootConfig& cfg)
{
    return select_path(
        sys, z_star, targets, [&model](const State& t) { return predict_velocity(model, t); }, horizon, cfg);
}

}  // namespace ompath
