#pragma once

// Phase-space structure of the carbon model: the metastable fixed point and
// the two limit cycles that bound the bistable regime.

#include <cmath>

#include "ompath/carbon.hpp"
#include "ompath/dynamics.hpp"

namespace ompath {

struct CarbonStructure {
    FixedPointReport fixed_point;
    LimitCycle stable_cycle;
    LimitCycle unstable_cycle;
};

/// Newton from (c_p, w0 + mu*nu), then a relaxation run and a second Newton
/// pass so the reported point is the attractor of the inner basin.
inline FixedPointReport carbon_fixed_point(const CarbonModel& m)
{
    const CarbonParams& p = m.params;
    FixedPointReport fp = find_fixed_point(m, {p.c_p, p.w0 + p.mu * p.nu});
    if (fp.stable) {
        const Path relax = integrate(m, fp.location + Vec2{1.0, 10.0}, 50.0, 1e-3, Scheme::Rk4);
        fp = find_fixed_point(m, relax.back());
    }
    return fp;
}

/// Locates the fixed point and both cycles, each resampled to n points.
inline CarbonStructure carbon_structure(const CarbonModel& m, std::size_t n = 3600)
{
    CarbonStructure s;
    s.fixed_point = carbon_fixed_point(m);
    const State z = s.fixed_point.location;
    CycleDetectionOptions opt;
    opt.samples = n;
    opt.section_x = z.x;
    // Far outside every cycle for the attractor; just off the fixed point
    // for the repeller, which attracts in reversed time.
    s.stable_cycle = discretize_cycle(
        detect_limit_cycle(m, {2.5 * z.x, z.y}, TimeDirection::Forward, opt), n);
    s.unstable_cycle = discretize_cycle(
        detect_limit_cycle(m, z + Vec2{0.05 * z.x, 0.0}, TimeDirection::Backward, opt), n);
    return s;
}

}  // namespace ompath
