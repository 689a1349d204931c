#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ompath/vec2.hpp"

namespace ompath {

/// States on the uniform grid t0 + i*dt. Time unit is 10^4 years.
struct Path {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<State> states;
    std::vector<Vec2> velocities;  // empty, or one per state

    std::size_t size() const { return states.size(); }
    double t_end() const { return t0 + dt * static_cast<double>(states.empty() ? 0 : states.size() - 1); }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    const State& front() const { return states.front(); }
    const State& back() const { return states.back(); }
    bool has_velocities() const { return !velocities.empty(); }
};

/// Number of grid steps covering [0, horizon] with nominal step dt.
inline std::size_t step_count(double horizon, double dt)
{
    return static_cast<std::size_t>(std::llround(horizon / dt));
}

}  // namespace ompath
