#pragma once

// Forward-mode dual numbers. Nesting Dual<Dual<double>> etc. yields exact
// higher-order derivatives without truncation error.

#include <array>
#include <cmath>
#include <stdexcept>
#include <type_traits>

namespace ompath {

template <typename T>
struct Dual {
    using value_type = T;

    T v{};  // primal
    T d{};  // tangent

    constexpr Dual() = default;
    constexpr Dual(double x) : v(x), d(0.0) {}  // NOLINT: implicit lift of constants
    constexpr Dual(T value, T tangent) : v(std::move(value)), d(std::move(tangent)) {}

    template <typename U = T>
        requires(!std::is_same_v<U, double>)
    constexpr Dual(const U& value) : v(value), d(0.0) {}  // NOLINT

    constexpr Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    constexpr Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    constexpr Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
    constexpr Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

    friend constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
    friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
    friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
    friend constexpr Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
    friend constexpr Dual operator/(const Dual& a, const Dual& b)
    {
        T inv = T(1.0) / b.v;
        return {a.v * inv, (a.d - a.v * inv * b.d) * inv};
    }

    friend constexpr Dual operator+(const Dual& a, double s) { return {a.v + s, a.d}; }
    friend constexpr Dual operator+(double s, const Dual& a) { return {s + a.v, a.d}; }
    friend constexpr Dual operator-(const Dual& a, double s) { return {a.v - s, a.d}; }
    friend constexpr Dual operator-(double s, const Dual& a) { return {s - a.v, -a.d}; }
    friend constexpr Dual operator*(const Dual& a, double s) { return {a.v * s, a.d * s}; }
    friend constexpr Dual operator*(double s, const Dual& a) { return {s * a.v, s * a.d}; }
    friend constexpr Dual operator/(const Dual& a, double s) { return {a.v / s, a.d / s}; }
    friend constexpr Dual operator/(double s, const Dual& a) { return Dual(s) / a; }
};

template <typename T>
struct is_dual : std::false_type {};
template <typename T>
struct is_dual<Dual<T>> : std::true_type {};
template <typename T>
inline constexpr bool is_dual_v = is_dual<T>::value;

/// Innermost primal value of a (possibly nested) dual.
template <typename T>
constexpr double primal(const T& x)
{
    if constexpr (is_dual_v<T>) {
        return primal(x.v);
    } else {
        return static_cast<double>(x);
    }
}

using std::exp;
using std::log;
using std::pow;
using std::sqrt;
using std::tanh;

template <typename T>
Dual<T> exp(const Dual<T>& a)
{
    T e = exp(a.v);
    return {e, e * a.d};
}

template <typename T>
Dual<T> log(const Dual<T>& a)
{
    return {log(a.v), a.d / a.v};
}

template <typename T>
Dual<T> sqrt(const Dual<T>& a)
{
    T r = sqrt(a.v);
    return {r, a.d / (2.0 * r)};
}

template <typename T>
Dual<T> tanh(const Dual<T>& a)
{
    T t = tanh(a.v);
    return {t, a.d * (1.0 - t * t)};
}

/// x^p for a real exponent. At x == 0 the tangent is taken as 0 when p > 1,
/// which is the one-sided limit for the non-negative domains used here.
template <typename T>
Dual<T> pow(const Dual<T>& a, double p)
{
    if (p == 0.0) {
        return Dual<T>(1.0);
    }
    T base = pow(a.v, p - 1.0);
    return {base * a.v, p * base * a.d};
}

namespace detail {

template <int Order>
struct NestedDual {
    using type = Dual<typename NestedDual<Order - 1>::type>;
};
template <>
struct NestedDual<0> {
    using type = double;
};

// A variable of nesting depth Order with every tangent slot seeded by 1,
// so the all-tangent component of f(x) is the Order-th derivative.
template <int Order>
typename NestedDual<Order>::type seed_all(double x)
{
    if constexpr (Order == 0) {
        return x;
    } else {
        using Inner = typename NestedDual<Order - 1>::type;
        return {seed_all<Order - 1>(x), Inner(1.0)};
    }
}

template <int Order, typename T>
double all_tangent(const T& y)
{
    if constexpr (Order == 0) {
        return primal(y);
    } else {
        return all_tangent<Order - 1>(y.d);
    }
}

}  // namespace detail

template <int Order>
using NestedDual = typename detail::NestedDual<Order>::type;

/// Exact Order-th derivative of a generic callable at x.
template <int Order, typename F>
double derivative(F&& fn, double x)
{
    static_assert(Order >= 0 && Order <= 4);
    auto y = fn(detail::seed_all<Order>(x));
    return detail::all_tangent<Order>(y);
}

/// Derivatives of orders 0..3 of a univariate callable, computed in one pass.
template <typename F>
std::array<double, 4> taylor3(F&& fn, double x)
{
    auto y = fn(detail::seed_all<3>(x));
    // With every slot seeded, the components are f, f', f', f'', f', f'', f'', f'''.
    return {y.v.v.v, y.v.v.d, y.v.d.d, y.d.d.d};
}

}  // namespace ompath
