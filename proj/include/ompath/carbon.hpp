#pragma once

// Marine carbonate model: parameters, sigmoid and buffer primitives, drift
// and diagonal diffusion. All field functions are templates over the scalar
// type so nested duals can differentiate them exactly.

#include <array>
#include <string>

#include "ompath/dual.hpp"
#include "ompath/errors.hpp"
#include "ompath/vec2.hpp"

namespace ompath {

struct CarbonParams {
    double mu{};        // concentration scale
    double b_burial{};  // max burial rate
    double theta{};     // max respiration feedback
    double nu{};        // CO2 injection rate
    double c_p{};       // burial crossover
    double c_x{};       // respiration crossover
    double c_f{};       // buffering crossover
    double w0{};        // reference DIC
    double gamma{};     // sigmoid sharpness
    double beta{};      // buffer sharpness
    double f0{};        // max buffer factor

    /// Throws ConfigError naming the first offending field.
    void validate() const
    {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) {
                throw ConfigError(std::string("parameter '") + name + "' must be positive");
            }
        };
        positive(mu, "mu");
        positive(c_p, "c_p");
        positive(c_x, "c_x");
        positive(c_f, "c_f");
        positive(f0, "f0");
        positive(gamma, "gamma");
        positive(beta, "beta");
        if (!(nu >= 0.0)) {
            throw ConfigError("parameter 'nu' must be non-negative");
        }
    }

    /// The bistable window for the respiration crossover.
    bool in_bistable_window() const { return c_x > 56.0 && c_x < 62.61; }

    void require_bistable() const
    {
        if (!in_bistable_window()) {
            throw ConfigError("c_x = " + std::to_string(c_x) + " is outside the bistable window (56, 62.61)");
        }
    }
};

/// c^gamma / (c^gamma + c_half^gamma).
template <typename T>
T sigmoid(const T& c, double c_half, double gamma)
{
    if (primal(c) < 0.0) {
        throw DomainError("sigmoid: negative concentration");
    }
    T cg = pow(c, gamma);
    return cg / (cg + std::pow(c_half, gamma));
}

/// f0 * c^beta / (c^beta + c_f^beta).
template <typename T>
T buffer(const T& c, const CarbonParams& p)
{
    return p.f0 * sigmoid(c, p.c_f, p.beta);
}

/// Deterministic drift (dc/dt, dw/dt).
template <typename T>
std::array<T, 2> carbon_drift(const T& c, const T& w, const CarbonParams& p)
{
    T s_burial = sigmoid(c, p.c_p, p.gamma);
    T s_resp_bar = 1.0 - sigmoid(c, p.c_x, p.gamma);
    T dc = buffer(c, p) * (p.mu * (1.0 - p.b_burial * s_burial - p.theta * s_resp_bar - p.nu) + w - p.w0);
    T dw = p.mu * (1.0 - p.b_burial * s_burial + p.theta * s_resp_bar + p.nu) - w + p.w0;
    return {dc, dw};
}

inline Vec2 drift(const State& z, const CarbonParams& p)
{
    if (!(z.x > 0.0)) {
        throw DomainError("drift: carbonate concentration must be positive");
    }
    auto d = carbon_drift(z.x, z.y, p);
    return {d[0], d[1]};
}

/// Diagonal of the diffusion matrix.
struct DiffusionPair {
    double g1{};
    double g2{};
    /// g1 == 0 makes the induced metric singular.
    bool singular() const { return g1 == 0.0 || g2 == 0.0; }
};

inline DiffusionPair diffusion(const State& z, const CarbonParams& p)
{
    if (z.x < 0.0) {
        throw DomainError("diffusion: negative concentration");
    }
    return {-p.mu * buffer(z.x, p), p.mu};
}

enum class Primitive { SigmoidBurial, SigmoidRespiration, Buffer };

/// Exact derivative (order 1..3) of a model primitive at x.
inline double scalar_derivative(Primitive fn, double x, int order, const CarbonParams& p)
{
    if (order < 1 || order > 3) {
        throw ConfigError("scalar_derivative: order must be 1, 2 or 3");
    }
    auto eval = [&](auto c) -> decltype(c) {
        switch (fn) {
        case Primitive::SigmoidBurial:
            return sigmoid(c, p.c_p, p.gamma);
        case Primitive::SigmoidRespiration:
            return sigmoid(c, p.c_x, p.gamma);
        case Primitive::Buffer:
            return buffer(c, p);
        }
        return decltype(c)(0.0);
    };
    return taylor3(eval, x)[static_cast<std::size_t>(order)];
}

/// The carbonate model with diffusion diag(-mu f(c), mu).
struct CarbonModel {
    CarbonParams params;

    explicit CarbonModel(CarbonParams p) : params(p) { params.validate(); }

    template <typename T>
    std::array<T, 2> drift(const T& x, const T& y) const
    {
        return carbon_drift(x, y, params);
    }

    template <typename T>
    T g1(const T& x) const
    {
        return -params.mu * buffer(x, params);
    }

    double g2() const { return params.mu; }

    /// The region where the metric is defined.
    bool in_domain(const State& z) const { return z.x > 0.0; }
};

}  // namespace ompath
