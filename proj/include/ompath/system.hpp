#pragma once

// A "system" is any type exposing a generic drift, a diagonal diffusion
// diag(g1(x), g2) with g2 constant, and a domain predicate. The carbon model
// is one; the rest of this header holds small analytic systems used as
// oracles.

#include <array>
#include <concepts>

#include "ompath/dual.hpp"
#include "ompath/vec2.hpp"

namespace ompath {

template <typename S>
concept DiffusionSystem = requires(const S& s, double x, Dual<double> dx, const State& z) {
    { s.drift(x, x) } -> std::same_as<std::array<double, 2>>;
    { s.drift(dx, dx) } -> std::same_as<std::array<Dual<double>, 2>>;
    { s.g1(x) } -> std::convertible_to<double>;
    { s.g2() } -> std::convertible_to<double>;
    { s.in_domain(z) } -> std::convertible_to<bool>;
};

template <DiffusionSystem S>
Vec2 raw_drift(const S& sys, const State& z)
{
    auto d = sys.drift(z.x, z.y);
    return {d[0], d[1]};
}

/// Ornstein-Uhlenbeck toy: drift -z, identity diffusion.
struct OuSystem {
    double rate = 1.0;

    template <typename T>
    std::array<T, 2> drift(const T& x, const T& y) const
    {
        return {-rate * x, -rate * y};
    }
    template <typename T>
    T g1(const T&) const
    {
        return T(1.0);
    }
    double g2() const { return 1.0; }
    bool in_domain(const State&) const { return true; }
};

/// Zero drift with constant diffusion; extremals are straight lines.
struct FreeSystem {
    double sigma1 = 1.0;
    double sigma2 = 1.0;

    template <typename T>
    std::array<T, 2> drift(const T&, const T&) const
    {
        return {T(0.0), T(0.0)};
    }
    template <typename T>
    T g1(const T&) const
    {
        return T(sigma1);
    }
    double g2() const { return sigma2; }
    bool in_domain(const State&) const { return true; }
};

/// Hopf normal form r' = r(1 - r^2), theta' = 1 in Cartesian form, with
/// constant diffusion. Its unit circle is a stable cycle of period 2*pi.
struct HopfSystem {
    double sigma = 1.0;

    template <typename T>
    std::array<T, 2> drift(const T& x, const T& y) const
    {
        T r2 = x * x + y * y;
        return {x * (1.0 - r2) - y, y * (1.0 - r2) + x};
    }
    template <typename T>
    T g1(const T&) const
    {
        return T(sigma);
    }
    double g2() const { return sigma; }
    bool in_domain(const State&) const { return true; }
};

/// Subcritical Hopf normal form r' = r(-a + 2r^2 - r^4), theta' = 1: a stable
/// focus at the origin, an unstable cycle and a stable cycle around it.
/// With a = 0.75 the radii are sqrt(0.5) and sqrt(1.5).
struct BistableHopfSystem {
    double a = 0.75;
    double sigma = 1.0;

    template <typename T>
    std::array<T, 2> drift(const T& x, const T& y) const
    {
        T r2 = x * x + y * y;
        T g = -a + 2.0 * r2 - r2 * r2;
        return {x * g - y, y * g + x};
    }
    template <typename T>
    T g1(const T&) const
    {
        return T(sigma);
    }
    double g2() const { return sigma; }
    bool in_domain(const State&) const { return true; }
};

}  // namespace ompath
