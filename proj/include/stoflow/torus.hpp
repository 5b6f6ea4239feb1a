#pragma once

// Flat two-torus application: the Fourier fields A_k, B_k, divergence checks
// and the density-constancy experiment for the continuity system
//   ∂ρ/∂t + div(ρ u) = 0,  div(ρ A_k) = 0,  div(ρ B_k) = 0.

#include "stoflow/core.hpp"
#include "stoflow/forms.hpp"
#include "stoflow/sde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace stoflow::torus {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct FourierMode {
    int k1 = 0;
    int k2 = 0;

    FourierMode() = default;
    FourierMode(int a, int b) : k1(a), k2(b) {
        if (a == 0 && b == 0) throw ArgumentError("FourierMode: the zero mode is not allowed");
    }
    [[nodiscard]] double phase(const Point& theta) const noexcept { return k1 * theta[0] + k2 * theta[1]; }
};

/// Wraps each angle into [0, 2π).
inline Point canonicalize(Point theta) {
    for (double& a : theta) {
        a = std::fmod(a, kTwoPi);
        if (a < 0.0) a += kTwoPi;
        if (a >= kTwoPi) a = 0.0;
    }
    return theta;
}

/// The μ = dθ1 ∧ dθ2 volume form.
inline TimeForm area_form() { return TimeForm::top(2, ScalarField::constant(1.0)); }

namespace detail {

template <bool Cosine>
TimeVectorField fourier_field(FourierMode k) {
    const double a = k.k1, b = k.k2;
    auto value = [k, a, b](double, const Point& th) {
        const double s = k.phase(th);
        const double c = Cosine ? std::cos(s) : std::sin(s);
        return Vec{b * c, -a * c};
    };
    auto jac = [k, a, b](double, const Point& th) {
        const double s = k.phase(th);
        const double dc = Cosine ? -std::sin(s) : std::cos(s);
        Mat J(2, 2);
        J(0, 0) = b * dc * a;
        J(0, 1) = b * dc * b;
        J(1, 0) = -a * dc * a;
        J(1, 1) = -a * dc * b;
        return J;
    };
    auto second = [k, a, b](double, const Point& th, const Vec& u, const Vec& v) {
        const double s = k.phase(th);
        const double ddc = Cosine ? -std::cos(s) : -std::sin(s);
        const double ku = a * u[0] + b * u[1];
        const double kv = a * v[0] + b * v[1];
        return Vec{b * ddc * ku * kv, -a * ddc * ku * kv};
    };
    return TimeVectorField(2, value, jac, second);
}

} // namespace detail

/// A_k = k2 cos(k·θ) ∂1 - k1 cos(k·θ) ∂2.
inline TimeVectorField fourier_field_A(FourierMode k) { return detail::fourier_field<true>(k); }

/// B_k = k2 sin(k·θ) ∂1 - k1 sin(k·θ) ∂2.
inline TimeVectorField fourier_field_B(FourierMode k) { return detail::fourier_field<false>(k); }

/// Uniform res x res grid on [0, 2π)².
inline std::vector<Point> grid(int res) {
    if (res < 1) throw ArgumentError("torus::grid: resolution must be positive");
    std::vector<Point> g;
    g.reserve(static_cast<std::size_t>(res) * static_cast<std::size_t>(res));
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) g.push_back(Point{kTwoPi * i / res, kTwoPi * j / res});
    return g;
}

struct DivergenceReport {
    double max_abs_divergence = 0.0;
    Point argmax;
};

inline DivergenceReport check_divergence_free(const TimeVectorField& X, std::span<const Point> points, double t = 0.0) {
    DivergenceReport r;
    const ScalarField div = divergence_field(area_form(), X);
    for (const auto& p : points) {
        const double d = std::abs(div.value(t, p));
        if (r.argmax.size() == 0 || d > r.max_abs_divergence) {
            r.max_abs_divergence = d;
            r.argmax = p;
        }
    }
    return r;
}

/// u, A_k, B_k driven by (t, B^1, B^2).
inline SdeSystem mode_system(FourierMode k, TimeVectorField u) {
    return SdeSystem(std::move(u), {fourier_field_A(k), fourier_field_B(k)});
}

struct ConstraintMax {
    std::string name;
    double value = 0.0;
};

struct ConstancyReport {
    FourierMode mode;
    double u_divergence = 0.0;
    /// max |<∇ρ0, A_k>|, max |<∇ρ0, B_k>|, max |∇ρ0|, in that order
    std::vector<ConstraintMax> constraints;
    /// grid points where cos(k·θ) and sin(k·θ) vanish together
    int degenerate_points = 0;
    /// largest rank of the per-point system [A_k(θ); B_k(θ)] v = 0
    int max_system_rank = 0;
    /// max |<(k2, -k1), ∇ρ0>|: the single condition the two constraints reduce to
    double reduced_constraint = 0.0;
    /// max over grid and time steps of |ρ_t(θ) - ρ0(0, 0)|
    double max_deviation = 0.0;
    bool certified_constant = false;
    std::vector<std::string> violated;

    [[nodiscard]] const ConstraintMax& worst() const {
        return *std::max_element(constraints.begin(), constraints.end(),
                                 [](const ConstraintMax& a, const ConstraintMax& b) { return a.value < b.value; });
    }
};

/// Checks on the grid whether ρ0 satisfies the noise constraints and a
/// vanishing gradient; a certified ρ0 is then evolved by
/// ρ_t = ρ_0 - ∫_0^t u(ρ_s) ds (trapezoid, `time_steps` steps to `horizon`)
/// and compared with ρ0(0, 0).
inline ConstancyReport density_constancy_experiment(FourierMode k, const ScalarField& rho0, const TimeVectorField& u,
                                                    std::span<const Point> points, double horizon, int time_steps = 16,
                                                    double tol = 1e-10) {
    if (time_steps < 1 || !(horizon > 0.0)) throw ArgumentError("density_constancy_experiment: bad time grid");
    ConstancyReport rep;
    rep.mode = k;
    rep.u_divergence = check_divergence_free(u, points).max_abs_divergence;
    if (rep.u_divergence > 1e-8) throw PreconditionError("density_constancy_experiment: u is not divergence free");

    const TimeVectorField A = fourier_field_A(k);
    const TimeVectorField B = fourier_field_B(k);
    const Vec w{static_cast<double>(k.k2), static_cast<double>(-k.k1)};
    double cA = 0.0, cB = 0.0, cG = 0.0;
    for (const auto& th : points) {
        const Vec g = rho0.grad(0.0, th);
        const Vec a = A.value(0.0, th);
        const Vec b = B.value(0.0, th);
        cA = std::max(cA, std::abs(dot(g, a)));
        cB = std::max(cB, std::abs(dot(g, b)));
        cG = std::max(cG, max_abs(g));
        rep.reduced_constraint = std::max(rep.reduced_constraint, std::abs(dot(g, w)));
        const double s = k.phase(th);
        if (std::cos(s) == 0.0 && std::sin(s) == 0.0) ++rep.degenerate_points;
        Mat sys(2, 2);
        sys(0, 0) = a[0], sys(0, 1) = a[1], sys(1, 0) = b[0], sys(1, 1) = b[1];
        rep.max_system_rank = std::max(rep.max_system_rank, rank(sys, 1e-12));
    }
    rep.constraints = {{"grad_rho.A_k", cA}, {"grad_rho.B_k", cB}, {"grad_rho", cG}};
    for (const auto& c : rep.constraints)
        if (c.value > tol) rep.violated.push_back(c.name);
    rep.certified_constant = rep.violated.empty();

    const double ref = rho0.value(0.0, Point{0.0, 0.0});
    if (rep.certified_constant) {
        // u(ρ_s) = u(ρ_0) because ρ_s = ρ_0 whenever ∇ρ_0 = 0
        const ScalarField u_rho = directional_derivative(u, rho0);
        const double dt = horizon / time_steps;
        for (const auto& th : points) {
            double rho = rho0.value(0.0, th);
            double prev = u_rho.value(0.0, th);
            rep.max_deviation = std::max(rep.max_deviation, std::abs(rho - ref));
            for (int j = 1; j <= time_steps; ++j) {
                const double cur = u_rho.value(j * dt, th);
                rho -= 0.5 * (prev + cur) * dt;
                prev = cur;
                rep.max_deviation = std::max(rep.max_deviation, std::abs(rho - ref));
            }
        }
    } else {
        for (const auto& th : points) rep.max_deviation = std::max(rep.max_deviation, std::abs(rho0.value(0.0, th) - ref));
    }
    return rep;
}

} // namespace stoflow::torus
