#pragma once

// Brownian paths with bridge refinement, and Stratonovich-Heun integration
// of dx = X0(t,x) dt + Xk(t,x) o dB^k together with the tangent flow
// dJ = DX0 J dt + DXk J o dB^k.

#include "stoflow/core.hpp"
#include "stoflow/forms.hpp"
#include "stoflow/rng.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace stoflow {

// ---------------------------------------------------------------------------
// BrownianPath
// ---------------------------------------------------------------------------

class BrownianPath {
public:
    BrownianPath() = default;
    BrownianPath(int drivers, double horizon, int steps, std::uint64_t seed, int level, std::vector<double> values)
        : m_(drivers), horizon_(horizon), steps_(steps), seed_(seed), level_(level), values_(std::move(values)) {
        if (values_.size() != static_cast<std::size_t>(steps + 1) * static_cast<std::size_t>(drivers))
            throw ArgumentError("BrownianPath: value table has the wrong size");
    }

    [[nodiscard]] int drivers() const noexcept { return m_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] int steps() const noexcept { return steps_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    /// Number of bridge refinements applied since sampling.
    [[nodiscard]] int level() const noexcept { return level_; }
    [[nodiscard]] double dt() const noexcept { return horizon_ / steps_; }
    [[nodiscard]] double time(int j) const noexcept { return horizon_ * static_cast<double>(j) / steps_; }

    [[nodiscard]] double value(int j, int k) const noexcept {
        return values_[static_cast<std::size_t>(j) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(k)];
    }
    [[nodiscard]] double increment(int j, int k) const noexcept { return value(j + 1, k) - value(j, k); }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    [[nodiscard]] std::vector<double> times() const {
        std::vector<double> t(static_cast<std::size_t>(steps_) + 1);
        for (int j = 0; j <= steps_; ++j) t[static_cast<std::size_t>(j)] = time(j);
        return t;
    }

    friend bool operator==(const BrownianPath&, const BrownianPath&) = default;

private:
    int m_ = 0;
    double horizon_ = 0.0;
    int steps_ = 0;
    std::uint64_t seed_ = 0;
    int level_ = 0;
    std::vector<double> values_;
};

inline BrownianPath sample_brownian(int drivers, double horizon, int steps, std::uint64_t seed) {
    if (steps < 1) throw ArgumentError("sample_brownian: steps must be >= 1");
    if (!(horizon > 0.0)) throw ArgumentError("sample_brownian: horizon must be positive");
    if (drivers < 0) throw ArgumentError("sample_brownian: negative driver count");
    const auto m = static_cast<std::size_t>(drivers);
    std::vector<double> v((static_cast<std::size_t>(steps) + 1) * m, 0.0);
    const double sd = std::sqrt(horizon / steps);
    for (int j = 0; j < steps; ++j)
        for (std::size_t k = 0; k < m; ++k)
            v[(j + 1) * m + k] = v[j * m + k] + sd * counter_normal(seed, 0, static_cast<std::uint64_t>(j), static_cast<std::uint32_t>(k));
    return BrownianPath(drivers, horizon, steps, seed, 0, std::move(v));
}

/// Doubles the resolution; even indices keep the coarse values and each new
/// midpoint is drawn from the Brownian bridge N((B_j + B_{j+1})/2, dt/4).
inline BrownianPath refine_brownian(const BrownianPath& path) {
    const int steps = path.steps() * 2;
    const int level = path.level() + 1;
    const auto m = static_cast<std::size_t>(path.drivers());
    std::vector<double> v((static_cast<std::size_t>(steps) + 1) * m, 0.0);
    const double sd = 0.5 * std::sqrt(path.dt());
    for (int j = 0; j <= path.steps(); ++j)
        for (std::size_t k = 0; k < m; ++k) v[2 * j * m + k] = path.value(j, static_cast<int>(k));
    for (int j = 0; j < path.steps(); ++j)
        for (std::size_t k = 0; k < m; ++k) {
            const double mid = 0.5 * (path.value(j, static_cast<int>(k)) + path.value(j + 1, static_cast<int>(k)));
            v[(2 * j + 1) * m + k] = mid + sd * counter_normal(path.seed(), static_cast<std::uint32_t>(level),
                                                               static_cast<std::uint64_t>(j), static_cast<std::uint32_t>(k));
        }
    return BrownianPath(path.drivers(), path.horizon(), steps, path.seed(), level, std::move(v));
}

inline BrownianPath refine_brownian(const BrownianPath& path, int times) {
    BrownianPath p = path;
    for (int i = 0; i < times; ++i) p = refine_brownian(p);
    return p;
}

// ---------------------------------------------------------------------------
// SdeSystem and flows
// ---------------------------------------------------------------------------

struct SdeSystem {
    TimeVectorField drift;
    std::vector<TimeVectorField> diffusions;

    SdeSystem() = default;
    SdeSystem(TimeVectorField x0, std::vector<TimeVectorField> xs) : drift(std::move(x0)), diffusions(std::move(xs)) {
        for (const auto& X : diffusions)
            if (X.dim() != drift.dim()) throw ArgumentError("SdeSystem: fields have different dimensions");
    }

    [[nodiscard]] int dim() const noexcept { return drift.dim(); }
    [[nodiscard]] int drivers() const noexcept { return static_cast<int>(diffusions.size()); }
};

struct FlowTrajectory {
    std::vector<double> times;
    std::vector<Point> positions;
    std::vector<Mat> jacobians;
};

namespace detail {

struct HeunIncrement {
    Vec dx;
    Mat dJ;
};

inline HeunIncrement heun_slope(const SdeSystem& sys, double t, const Point& x, const Mat& J, double dt,
                                const BrownianPath& path, int j) {
    const int n = sys.dim();
    HeunIncrement inc{Vec(n), Mat(n, n)};
    if (!sys.drift.is_zero()) {
        inc.dx += sys.drift.value(t, x) * dt;
        inc.dJ += (sys.drift.jacobian(t, x) * J) * dt;
    }
    for (int k = 0; k < sys.drivers(); ++k) {
        const TimeVectorField& X = sys.diffusions[static_cast<std::size_t>(k)];
        if (X.is_zero()) continue;
        const double dB = path.increment(j, k);
        inc.dx += X.value(t, x) * dB;
        inc.dJ += (X.jacobian(t, x) * J) * dB;
    }
    return inc;
}

} // namespace detail

/// Stratonovich-Heun: Euler predictor, trapezoidal corrector, applied jointly
/// to the state and its Jacobian with the same increments.
inline FlowTrajectory integrate_flow(const SdeSystem& sys, const Point& x0, const BrownianPath& path) {
    const int n = sys.dim();
    if (x0.size() != n) throw ArgumentError("integrate_flow: initial point dimension mismatch");
    if (path.drivers() != sys.drivers()) throw ArgumentError("integrate_flow: driver count mismatch");

    const int steps = path.steps();
    FlowTrajectory traj;
    traj.times = path.times();
    traj.positions.reserve(static_cast<std::size_t>(steps) + 1);
    traj.jacobians.reserve(static_cast<std::size_t>(steps) + 1);
    traj.positions.push_back(x0);
    traj.jacobians.push_back(Mat::identity(n));

    const double dt = path.dt();
    Point x = x0;
    Mat J = Mat::identity(n);
    for (int j = 0; j < steps; ++j) {
        const double t0 = traj.times[static_cast<std::size_t>(j)];
        const double t1 = traj.times[static_cast<std::size_t>(j) + 1];
        const auto a = detail::heun_slope(sys, t0, x, J, dt, path, j);
        const Point xp = x + a.dx;
        const Mat Jp = J + a.dJ;
        const auto b = detail::heun_slope(sys, t1, xp, Jp, dt, path, j);
        x += 0.5 * (a.dx + b.dx);
        J += (a.dJ + b.dJ) * 0.5;
        if (!x.all_finite() || !J.all_finite()) throw BlowUpError(t0);
        traj.positions.push_back(x);
        traj.jacobians.push_back(J);
    }
    return traj;
}

/// One trajectory per point, all driven by the same path.
inline std::vector<FlowTrajectory> integrate_ensemble(const SdeSystem& sys, std::span<const Point> points,
                                                      const BrownianPath& path) {
    if (points.empty()) throw ArgumentError("integrate_ensemble: empty point list");
    std::vector<FlowTrajectory> out;
    out.reserve(points.size());
    for (std::size_t q = 0; q < points.size(); ++q) {
        try {
            out.push_back(integrate_flow(sys, points[q], path));
        } catch (const BlowUpError& e) {
            throw BlowUpError(e.last_valid_time(), static_cast<int>(q));
        }
    }
    return out;
}

} // namespace stoflow
