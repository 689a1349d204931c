#pragma once

// Euler-Maruyama simulation of dz = b~(z) dt + diag(g1, g2) dB.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ompath/dynamics.hpp"
#include "ompath/errors.hpp"
#include "ompath/parallel.hpp"
#include "ompath/path.hpp"
#include "ompath/rng.hpp"
#include "ompath/system.hpp"

namespace ompath {

struct SimConfig {
    double dt = 1e-3;
    double horizon = 1.0;
    std::uint64_t seed = 1;
    double noise_scale = 1.0;
    std::size_t ensemble = 1;

    void validate() const
    {
        if (!(dt > 0.0) || !(horizon > 0.0)) {
            throw ConfigError("simulation dt and horizon must be positive");
        }
        if (!(noise_scale >= 0.0)) {
            throw ConfigError("noise_scale must be non-negative");
        }
    }
};

struct SimResult {
    Path path;
    bool terminated = false;  // left the model domain (c <= 0)
};

template <DiffusionSystem S>
SimResult euler_maruyama(const S& sys, const State& z0, const SimConfig& cfg)
{
    cfg.validate();
    const std::size_t n = std::max<std::size_t>(1, step_count(cfg.horizon, cfg.dt));
    const double h = cfg.horizon / static_cast<double>(n);
    const double sqrt_h = std::sqrt(h);
    SplitMix64 rng(cfg.seed);

    SimResult out;
    out.path.dt = h;
    out.path.states.reserve(n + 1);
    out.path.states.push_back(z0);
    State z = z0;
    for (std::size_t i = 0; i < n; ++i) {
        State next = z + h * raw_drift(sys, z);
        if (cfg.noise_scale != 0.0) {
            const double xi1 = rng.normal();
            const double xi2 = rng.normal();
            next.x += cfg.noise_scale * sys.g1(z.x) * sqrt_h * xi1;
            next.y += cfg.noise_scale * sys.g2() * sqrt_h * xi2;
        }
        if (!sys.in_domain(next) || !std::isfinite(next.x) || !std::isfinite(next.y)) {
            out.terminated = true;
            out.path.states.push_back(next);
            return out;
        }
        out.path.states.push_back(next);
        z = next;
    }
    return out;
}

struct EscapeSummary {
    std::size_t n_runs = 0;
    std::size_t escapes = 0;
    double fraction = 0.0;
};

/// Fraction of runs from z_star that leave the region bounded by `boundary`
/// (the unstable cycle) before the horizon. A run that leaves the model
/// domain counts as escaped only if it crossed the boundary first.
template <DiffusionSystem S>
EscapeSummary escape_fraction(const S& sys, const State& z_star, const std::vector<State>& boundary,
                              std::size_t n_runs, const SimConfig& cfg, unsigned workers = 1)
{
    cfg.validate();
    std::vector<char> escaped(n_runs, 0);
    parallel_for(n_runs, workers, [&](std::size_t r) {
        SimConfig run = cfg;
        run.seed = derive_seed(cfg.seed, r);
        const SimResult sim = euler_maruyama(sys, z_star, run);
        for (const State& z : sim.path.states) {
            if (!encloses(boundary, z)) {
                escaped[r] = 1;
                break;
            }
        }
    });
    EscapeSummary s;
    s.n_runs = n_runs;
    for (char e : escaped) {
        s.escapes += static_cast<std::size_t>(e);
    }
    s.fraction = n_runs == 0 ? 0.0 : static_cast<double>(s.escapes) / static_cast<double>(n_runs);
    return s;
}

}  // namespace ompath
