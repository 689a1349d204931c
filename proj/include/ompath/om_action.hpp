#pragma once

// Onsager-Machlup layer for diffusions diag(g1(x), g2) with g2 constant.
//
// Metric V = diag(1/g1^2, 1/g2^2). The only non-zero Christoffel symbol is
// Gamma^1_11 = -g1'/g1, the modified drift is b = (b~1 + g1 g1'/2, b~2), the
// Riemannian divergence is d_x b1 + d_y b2 - b1 g1'/g1, and the scalar
// curvature vanishes identically. The Lagrangian is
//   L(z, v) = (v - b)^T V (v - b) + div b - R/6
// and the action is S = 1/2 int L dt.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ompath/dual.hpp"
#include "ompath/errors.hpp"
#include "ompath/path.hpp"
#include "ompath/system.hpp"
#include "ompath/vec2.hpp"

namespace ompath {

struct GeometryTerms {
    double gamma111{};
    double div_b{};
    double curvature{};
};

namespace detail {

template <typename S, typename T>
std::array<T, 2> modified_drift_t(const S& sys, const T& x, const T& y)
{
    auto b = sys.drift(x, y);
    Dual<T> g = sys.g1(Dual<T>{x, T(1.0)});
    b[0] = b[0] + 0.5 * (g.v * g.d);
    return b;
}

template <typename S, typename T>
T divergence_t(const S& sys, const T& x, const T& y)
{
    using D = Dual<T>;
    auto bx = modified_drift_t(sys, D{x, T(1.0)}, D{y, T(0.0)});
    auto by = modified_drift_t(sys, D{x, T(0.0)}, D{y, T(1.0)});
    D g = sys.g1(D{x, T(1.0)});
    return bx[0].d + by[1].d - bx[0].v * (g.d / g.v);
}

template <typename S>
void require_regular(const S& sys, const State& z, const char* where)
{
    if (!sys.in_domain(z)) {
        throw MetricSingularity(std::string(where) + ": state outside the metric domain");
    }
    if (sys.g1(z.x) == 0.0 || sys.g2() == 0.0) {
        throw MetricSingularity(std::string(where) + ": diffusion vanishes");
    }
}

}  // namespace detail

template <DiffusionSystem S>
Vec2 modified_drift(const S& sys, const State& z)
{
    detail::require_regular(sys, z, "modified_drift");
    auto b = detail::modified_drift_t(sys, z.x, z.y);
    return {b[0], b[1]};
}

template <DiffusionSystem S>
GeometryTerms geometry(const S& sys, const State& z)
{
    detail::require_regular(sys, z, "geometry");
    Dual<double> g = sys.g1(Dual<double>{z.x, 1.0});
    return {-g.d / g.v, detail::divergence_t(sys, z.x, z.y), 0.0};
}

template <DiffusionSystem S>
double lagrangian(const S& sys, const State& z, const Vec2& v)
{
    detail::require_regular(sys, z, "lagrangian");
    auto b = detail::modified_drift_t(sys, z.x, z.y);
    const double g1 = sys.g1(z.x);
    const double g2 = sys.g2();
    const double dx = v.x - b[0];
    const double dy = v.y - b[1];
    return dx * dx / (g1 * g1) + dy * dy / (g2 * g2) + detail::divergence_t(sys, z.x, z.y);
}

/// Velocities of a sampled path: central differences inside, second-order
/// one-sided differences at the two ends.
inline std::vector<Vec2> finite_difference_velocities(const std::vector<State>& states, double dt)
{
    const std::size_t n = states.size();
    if (n < 3) {
        throw ConfigError("path needs at least 3 samples");
    }
    std::vector<Vec2> v(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        v[i] = (states[i + 1] - states[i - 1]) / (2.0 * dt);
    }
    v[0] = (-3.0 * states[0] + 4.0 * states[1] - states[2]) / (2.0 * dt);
    v[n - 1] = (3.0 * states[n - 1] - 4.0 * states[n - 2] + states[n - 3]) / (2.0 * dt);
    return v;
}

/// S = 1/2 int L dt by the composite trapezoid rule on the path grid.
template <DiffusionSystem S>
double action(const Path& path, const S& sys)
{
    const auto& zs = path.states;
    const auto vs = finite_difference_velocities(zs, path.dt);
    double sum = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        double w = (i == 0 || i + 1 == zs.size()) ? 0.5 : 1.0;
        double l = 0.0;
        try {
            l = lagrangian(sys, zs[i], vs[i]);
        } catch (const MetricSingularity&) {
            throw MetricSingularity("action: singular sample", path.t0 + static_cast<double>(i) * path.dt);
        }
        sum += w * l;
    }
    return 0.5 * sum * path.dt;
}

namespace detail {

// Acceleration plus its velocity partials, which are cheap in closed form.
template <typename T>
struct ElTerms {
    T ax, ay;
    T ax_vx, ax_vy, ay_vx, ay_vy;
};

template <typename S, typename T>
ElTerms<T> el_terms_t(const S& sys, const T& x, const T& y, const T& vx, const T& vy)
{
    using D = Dual<T>;
    auto bx = modified_drift_t(sys, D{x, T(1.0)}, D{y, T(0.0)});
    auto by = modified_drift_t(sys, D{x, T(0.0)}, D{y, T(1.0)});
    const T& b1 = bx[0].v;
    const T& b2 = bx[1].v;
    const T& b1_x = bx[0].d;
    const T& b2_x = bx[1].d;
    const T& b1_y = by[0].d;
    const T& b2_y = by[1].d;

    const T e_x = divergence_t(sys, D{x, T(1.0)}, D{y, T(0.0)}).d;
    const T e_y = divergence_t(sys, D{x, T(0.0)}, D{y, T(1.0)}).d;

    D g = sys.g1(D{x, T(1.0)});
    const T a = 1.0 / (g.v * g.v);
    const T a_ratio = -2.0 * g.d / g.v;  // a'/a
    const double g2 = sys.g2();
    const double k = 1.0 / (g2 * g2);

    const T rx = vx - b1;
    const T ry = vy - b2;
    ElTerms<T> out;
    out.ax = b1_x * vx + b1_y * vy - a_ratio * vx * rx + 0.5 * a_ratio * rx * rx - rx * b1_x
             - (k / a) * ry * b2_x + e_x / (2.0 * a);
    out.ay = b2_x * vx + b2_y * vy - (a / k) * rx * b1_y - ry * b2_y + e_y / (2.0 * k);
    out.ax_vx = -a_ratio * vx;
    out.ax_vy = b1_y - (k / a) * b2_x;
    out.ay_vx = b2_x - (a / k) * b1_y;
    out.ay_vy = T(0.0);
    return out;
}

}  // namespace detail

/// Euler-Lagrange acceleration written out for the diagonal class, with
/// a(x) = 1/g1^2 and e = div b. Generic in the scalar so the result can
/// itself be differentiated.
template <typename S, typename T>
std::array<T, 2> el_rhs_t(const S& sys, const T& x, const T& y, const T& vx, const T& vy)
{
    const auto t = detail::el_terms_t(sys, x, y, vx, vy);
    return {t.ax, t.ay};
}

template <DiffusionSystem S>
Vec2 el_rhs(const S& sys, const State& z, const Vec2& v)
{
    detail::require_regular(sys, z, "el_rhs");
    auto a = el_rhs_t(sys, z.x, z.y, v.x, v.y);
    return {a[0], a[1]};
}

/// Acceleration and its Jacobian. The position columns use forward
/// differences; the velocity columns are exact.
struct ElJacobian {
    Vec2 acc;
    Vec2 d_x, d_y;    // d acc / d z components
    Vec2 d_vx, d_vy;  // d acc / d v components
};

template <DiffusionSystem S>
ElJacobian el_rhs_jacobian(const S& sys, const State& z, const Vec2& v)
{
    detail::require_regular(sys, z, "el_rhs_jacobian");
    const auto t = detail::el_terms_t(sys, z.x, z.y, v.x, v.y);
    ElJacobian j;
    j.acc = {t.ax, t.ay};
    j.d_vx = {t.ax_vx, t.ay_vx};
    j.d_vy = {t.ax_vy, t.ay_vy};
    const double hx = 1e-7 * std::max(1.0, std::abs(z.x));
    const double hy = 1e-7 * std::max(1.0, std::abs(z.y));
    const auto ax = el_rhs_t(sys, z.x + hx, z.y, v.x, v.y);
    const auto ay = el_rhs_t(sys, z.x, z.y + hy, v.x, v.y);
    j.d_x = (Vec2{ax[0], ax[1]} - j.acc) / hx;
    j.d_y = (Vec2{ay[0], ay[1]} - j.acc) / hy;
    return j;
}

}  // namespace ompath
