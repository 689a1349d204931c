#pragma once

// Deterministic phase-space analysis: fixed-step integration, fixed points
// and their linear stability, limit cycles through a Poincare section.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "ompath/errors.hpp"
#include "ompath/path.hpp"
#include "ompath/system.hpp"
#include "ompath/vec2.hpp"

namespace ompath {

enum class Scheme { Euler, Rk4 };

inline const char* to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "rk4"; }

inline Scheme parse_scheme(const std::string& s)
{
    if (s == "euler") return Scheme::Euler;
    if (s == "rk4") return Scheme::Rk4;
    throw ConfigError("unknown scheme '" + s + "' (expected euler or rk4)");
}

inline constexpr double kBlowUp = 1e8;

template <typename F>
State step(const F& field, const State& z, double h, Scheme scheme)
{
    if (scheme == Scheme::Euler) {
        return z + h * field(z);
    }
    const Vec2 k1 = field(z);
    const Vec2 k2 = field(z + 0.5 * h * k1);
    const Vec2 k3 = field(z + 0.5 * h * k2);
    const Vec2 k4 = field(z + h * k3);
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Integrates z' = field(z) over [0, horizon]. The step is adjusted to
/// horizon / round(horizon / dt) so the grid ends exactly at the horizon.
template <typename F>
    requires std::is_invocable_r_v<Vec2, F, const State&>
Path integrate(const F& field, const State& z0, double horizon, double dt, Scheme scheme)
{
    if (!(dt > 0.0) || !(horizon > 0.0)) {
        throw ConfigError("integrate: dt and horizon must be positive");
    }
    const std::size_t n = std::max<std::size_t>(1, step_count(horizon, dt));
    const double h = horizon / static_cast<double>(n);
    Path path;
    path.dt = h;
    path.states.reserve(n + 1);
    path.states.push_back(z0);
    State z = z0;
    for (std::size_t i = 0; i < n; ++i) {
        z = step(field, z, h, scheme);
        if (!std::isfinite(z.x) || !std::isfinite(z.y) || norm(z) > kBlowUp) {
            throw DivergenceError("integrate: trajectory diverged", h * static_cast<double>(i + 1));
        }
        path.states.push_back(z);
    }
    return path;
}

template <DiffusionSystem S>
Path integrate(const S& sys, const State& z0, double horizon, double dt, Scheme scheme)
{
    return integrate([&sys](const State& z) { return raw_drift(sys, z); }, z0, horizon, dt, scheme);
}

struct Jacobian2 {
    double a11{}, a12{}, a21{}, a22{};

    std::array<std::complex<double>, 2> eigenvalues() const
    {
        const double tr = a11 + a22;
        const double det = a11 * a22 - a12 * a21;
        const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr / 4.0 - det));
        return {tr / 2.0 + disc, tr / 2.0 - disc};
    }
};

/// Central-difference Jacobian of a planar field.
template <typename F>
Jacobian2 numeric_jacobian(const F& field, const State& z)
{
    const double hx = 1e-6 * std::max(1.0, std::abs(z.x));
    const double hy = 1e-6 * std::max(1.0, std::abs(z.y));
    const Vec2 dx = (field(z + Vec2{hx, 0.0}) - field(z - Vec2{hx, 0.0})) / (2.0 * hx);
    const Vec2 dy = (field(z + Vec2{0.0, hy}) - field(z - Vec2{0.0, hy})) / (2.0 * hy);
    return {dx.x, dy.x, dx.y, dy.y};
}

struct FixedPointReport {
    State location;
    std::array<std::complex<double>, 2> eigenvalues;
    bool stable = false;
};

/// Newton iteration on the drift with a finite-difference Jacobian.
template <DiffusionSystem S>
FixedPointReport find_fixed_point(const S& sys, State guess, double tol = 1e-9, int max_iter = 100)
{
    auto field = [&sys](const State& z) { return raw_drift(sys, z); };
    State z = guess;
    for (int it = 0; it < max_iter; ++it) {
        const Vec2 r = field(z);
        if (norm(r) <= tol) {
            const auto eig = numeric_jacobian(field, z).eigenvalues();
            return {z, eig, eig[0].real() < 0.0 && eig[1].real() < 0.0};
        }
        const Jacobian2 j = numeric_jacobian(field, z);
        const double det = j.a11 * j.a22 - j.a12 * j.a21;
        if (det == 0.0 || !std::isfinite(det)) {
            throw ConvergenceError("find_fixed_point: singular Jacobian");
        }
        Vec2 delta{(j.a22 * r.x - j.a12 * r.y) / det, (-j.a21 * r.x + j.a11 * r.y) / det};
        // Damp steps that would leave the domain.
        double lambda = 1.0;
        while (!sys.in_domain(z - lambda * delta) && lambda > 1e-6) {
            lambda *= 0.5;
        }
        z -= lambda * delta;
        if (!std::isfinite(z.x) || !std::isfinite(z.y)) {
            throw ConvergenceError("find_fixed_point: iterate became non-finite");
        }
    }
    throw ConvergenceError("find_fixed_point: no convergence after " + std::to_string(max_iter) + " iterations");
}

enum class TimeDirection { Forward, Backward };

struct LimitCycle {
    double period = 0.0;
    std::vector<State> points;  // uniform in time over one period
    bool stable = true;
    std::size_t anchor_index = 0;
    double closure_gap = 0.0;  // distance between points[0] and the state one period later
};

struct CycleDetectionOptions {
    double dt = 1e-3;
    double tol = 1e-6;
    double time_budget = 2000.0;
    std::size_t samples = 3600;
    /// Section abscissa; NaN means "use the fixed point's c".
    double section_x = std::numeric_limits<double>::quiet_NaN();
    /// Fixed-point guess used to place the section when section_x is NaN.
    State section_guess{};
};

namespace detail {

// Root of x(t) = section_x inside one step, by secant iteration on the step length.
template <typename F>
std::pair<State, double> refine_crossing(const F& field, const State& z, double h, double section_x)
{
    double lo = 0.0;
    double hi = h;
    double flo = z.x - section_x;
    double fhi = step(field, z, h, Scheme::Rk4).x - section_x;
    double t = hi;
    for (int i = 0; i < 60; ++i) {
        t = (fhi == flo) ? 0.5 * (lo + hi) : lo - flo * (hi - lo) / (fhi - flo);
        if (!(t > lo && t < hi)) {
            t = 0.5 * (lo + hi);
        }
        const double ft = step(field, z, t, Scheme::Rk4).x - section_x;
        if (std::abs(ft) < 1e-13 * std::max(1.0, std::abs(section_x))) {
            break;
        }
        // Illinois-style bracket update keeps the secant from stalling.
        if ((ft < 0.0) == (flo < 0.0)) {
            lo = t;
            flo = ft;
            fhi *= 0.5;
        } else {
            hi = t;
            fhi = ft;
            flo *= 0.5;
        }
        if (hi - lo < 1e-15) {
            break;
        }
    }
    return {step(field, z, t, Scheme::Rk4), t};
}

}  // namespace detail

/// Samples one period of the cycle through `start`, uniformly in time.
template <typename F>
std::vector<State> sample_period(const F& field, const State& start, double period, std::size_t n, double dt,
                                 State* closure = nullptr)
{
    std::vector<State> pts;
    pts.reserve(n);
    const std::size_t sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(period / (static_cast<double>(n) * dt))));
    const double h = period / static_cast<double>(n * sub);
    State z = start;
    for (std::size_t i = 0; i < n; ++i) {
        pts.push_back(z);
        for (std::size_t k = 0; k < sub; ++k) {
            z = step(field, z, h, Scheme::Rk4);
        }
    }
    if (closure != nullptr) {
        *closure = z;
    }
    return pts;
}

/// Finds the limit cycle attracting z0 in the given time direction. Upward
/// crossings (x increasing along the followed flow) of the vertical section
/// are tracked until position and return time settle to `tol`.
template <DiffusionSystem S>
LimitCycle detect_limit_cycle(const S& sys, const State& z0, TimeDirection direction,
                              const CycleDetectionOptions& opt = {})
{
    const double sign = direction == TimeDirection::Forward ? 1.0 : -1.0;
    auto field = [&sys, sign](const State& z) { return sign * raw_drift(sys, z); };

    double section_x = opt.section_x;
    State fixed_point{};
    if (std::isnan(section_x)) {
        fixed_point = find_fixed_point(sys, opt.section_guess).location;
        section_x = fixed_point.x;
    }

    State z = z0;
    double t = 0.0;
    bool have_prev = false;
    State prev_cross{};
    double prev_time = 0.0;
    double prev_period = -1.0;
    const std::size_t max_steps = static_cast<std::size_t>(opt.time_budget / opt.dt);
    for (std::size_t i = 0; i < max_steps; ++i) {
        State next = step(field, z, opt.dt, Scheme::Rk4);
        if (!std::isfinite(next.x) || !std::isfinite(next.y) || norm(next) > kBlowUp || !sys.in_domain(next)) {
            throw ConvergenceError("detect_limit_cycle: trajectory left the domain at t = " + std::to_string(t));
        }
        if (z.x < section_x && next.x >= section_x) {
            auto [cross, dtc] = detail::refine_crossing(field, z, opt.dt, section_x);
            const double tc = t + dtc;
            if (have_prev) {
                const double period = tc - prev_time;
                const double moved = distance(cross, prev_cross);
                if (prev_period > 0.0 && moved <= opt.tol && std::abs(period - prev_period) <= opt.tol) {
                    State closure{};
                    auto pts = sample_period(field, cross, period, opt.samples, opt.dt, &closure);
                    LimitCycle lc;
                    lc.period = period;
                    lc.closure_gap = distance(closure, cross);
                    if (direction == TimeDirection::Backward) {
                        // Re-index along the forward flow.
                        std::reverse(pts.begin() + 1, pts.end());
                    }
                    lc.points = std::move(pts);
                    lc.stable = direction == TimeDirection::Forward;
                    return lc;
                }
                prev_period = period;
            }
            prev_cross = cross;
            prev_time = tc;
            have_prev = true;
        }
        z = next;
        t += opt.dt;
        // A trajectory settling onto a fixed point never returns to the section.
        if (i % 1000 == 999 && norm(field(z)) < 1e-10) {
            throw ConvergenceError("detect_limit_cycle: trajectory converged to a fixed point");
        }
    }
    throw ConvergenceError("detect_limit_cycle: no convergence within the time budget");
}

namespace detail {

// Trigonometric interpolant of periodic samples, evaluated at phase s in [0, 1).
class PeriodicInterpolant {
public:
    explicit PeriodicInterpolant(const std::vector<State>& pts) : n_(pts.size())
    {
        const std::size_t m = n_ / 2;
        coef_.resize(m + 1);
        for (std::size_t k = 0; k <= m; ++k) {
            std::complex<double> cx{0.0, 0.0};
            std::complex<double> cy{0.0, 0.0};
            for (std::size_t j = 0; j < n_; ++j) {
                const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * j % n_) / static_cast<double>(n_);
                const std::complex<double> e{std::cos(ang), std::sin(ang)};
                cx += pts[j].x * e;
                cy += pts[j].y * e;
            }
            coef_[k] = {cx / static_cast<double>(n_), cy / static_cast<double>(n_)};
        }
    }

    State operator()(double s) const
    {
        const std::size_t m = n_ / 2;
        State out{coef_[0].first.real(), coef_[0].second.real()};
        for (std::size_t k = 1; k <= m; ++k) {
            // The Nyquist term of an even-length series is counted once.
            const double w = (n_ % 2 == 0 && k == m) ? 1.0 : 2.0;
            const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) * s;
            const std::complex<double> e{std::cos(ang), std::sin(ang)};
            out.x += w * (coef_[k].first * e).real();
            out.y += w * (coef_[k].second * e).real();
        }
        return out;
    }

private:
    std::size_t n_;
    std::vector<std::pair<std::complex<double>, std::complex<double>>> coef_;
};

}  // namespace detail

/// Resamples a cycle to n points uniform in time, with index 0 at the point
/// of maximum c and indices increasing along the flow.
inline LimitCycle discretize_cycle(const LimitCycle& cycle, std::size_t n)
{
    if (n < 1 || cycle.points.size() < 3) {
        throw ConfigError("discretize_cycle: need at least 3 input points and n >= 1");
    }
    const detail::PeriodicInterpolant interp(cycle.points);
    const std::size_t m = cycle.points.size();

    // Locate the max-c phase: best sample, then golden-section refinement.
    std::size_t best = 0;
    for (std::size_t i = 1; i < m; ++i) {
        if (cycle.points[i].x > cycle.points[best].x) {
            best = i;
        }
    }
    const double step_phase = 1.0 / static_cast<double>(m);
    double lo = (static_cast<double>(best) - 1.0) * step_phase;
    double hi = (static_cast<double>(best) + 1.0) * step_phase;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - g * (hi - lo);
    double b = lo + g * (hi - lo);
    for (int it = 0; it < 80; ++it) {
        if (interp(a).x > interp(b).x) {
            hi = b;
        } else {
            lo = a;
        }
        a = hi - g * (hi - lo);
        b = lo + g * (hi - lo);
    }
    const double s0 = 0.5 * (lo + hi);

    LimitCycle out;
    out.period = cycle.period;
    out.stable = cycle.stable;
    out.anchor_index = 0;
    out.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.points.push_back(interp(s0 + static_cast<double>(i) / static_cast<double>(n)));
    }
    out.closure_gap = distance(interp(s0 + 1.0), out.points.front());
    return out;
}

/// Index of the cycle sample where |dc/dt| is largest.
template <DiffusionSystem S>
std::size_t steepest_index(const S& sys, const LimitCycle& cycle)
{
    std::size_t best = 0;
    double best_rate = -1.0;
    for (std::size_t i = 0; i < cycle.points.size(); ++i) {
        const double rate = std::abs(raw_drift(sys, cycle.points[i]).x);
        if (rate > best_rate) {
            best_rate = rate;
            best = i;
        }
    }
    return best;
}

/// Winding number of a closed polygon around p.
inline int winding_number(const std::vector<State>& poly, const State& p)
{
    int wn = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const State& a = poly[i];
        const State& b = poly[(i + 1) % n];
        const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if (a.y <= p.y) {
            if (b.y > p.y && cross > 0.0) ++wn;
        } else if (b.y <= p.y && cross < 0.0) {
            --wn;
        }
    }
    return wn;
}

inline bool encloses(const std::vector<State>& poly, const State& p) { return winding_number(poly, p) != 0; }

/// Distance from p to the closed polyline through the points.
inline double distance_to_polyline(const std::vector<State>& poly, const State& p)
{
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const State& a = poly[i];
        const State& b = poly[(i + 1) % n];
        const Vec2 ab = b - a;
        const double len2 = dot(ab, ab);
        double s = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
        s = std::clamp(s, 0.0, 1.0);
        best = std::min(best, distance(p, a + s * ab));
    }
    return best;
}

inline double arc_length(const std::vector<State>& poly)
{
    double len = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        len += distance(poly[i], poly[(i + 1) % poly.size()]);
    }
    return len;
}

}  // namespace ompath
