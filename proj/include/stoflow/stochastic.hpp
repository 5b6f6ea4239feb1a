#pragma once

// Discrete stochastic calculus on real-valued paths sharing a time grid.

#include "stoflow/core.hpp"
#include "stoflow/sde.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace stoflow {

struct RealPath {
    std::vector<double> times;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double terminal() const { return values.back(); }
};

/// Column k of a Brownian path as a real path.
inline RealPath driver(const BrownianPath& path, int k) {
    if (k < 0 || k >= path.drivers()) throw ArgumentError("driver: index out of range");
    RealPath b;
    b.times = path.times();
    b.values.resize(b.times.size());
    for (int j = 0; j <= path.steps(); ++j) b.values[static_cast<std::size_t>(j)] = path.value(j, k);
    return b;
}

namespace detail {

inline void require_shared_grid(const RealPath& y, const RealPath& b, const char* who) {
    if (y.values.size() != b.values.size() || y.times.size() != y.values.size() || b.times != y.times)
        throw ArgumentError(std::string(who) + ": paths do not share a time grid");
    if (y.values.empty()) throw ArgumentError(std::string(who) + ": empty path");
}

template <typename Summand>
RealPath cumulative(const RealPath& y, Summand&& summand) {
    RealPath out;
    out.times = y.times;
    out.values.resize(y.values.size());
    out.values[0] = 0.0;
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < y.values.size(); ++j) {
        acc += summand(j);
        out.values[j + 1] = acc;
    }
    return out;
}

} // namespace detail

/// Σ_j (Y_j + Y_{j+1})/2 · ΔB_j, cumulative.
inline RealPath stratonovich_integral(const RealPath& y, const RealPath& b) {
    detail::require_shared_grid(y, b, "stratonovich_integral");
    return detail::cumulative(y, [&](std::size_t j) {
        return 0.5 * (y.values[j] + y.values[j + 1]) * (b.values[j + 1] - b.values[j]);
    });
}

/// Σ_j Y_j · ΔB_j, cumulative (left point).
inline RealPath ito_integral(const RealPath& y, const RealPath& b) {
    detail::require_shared_grid(y, b, "ito_integral");
    return detail::cumulative(y, [&](std::size_t j) { return y.values[j] * (b.values[j + 1] - b.values[j]); });
}

/// Σ_j ΔY_j · ΔB_j, cumulative.
inline RealPath quadratic_covariation(const RealPath& y, const RealPath& b) {
    detail::require_shared_grid(y, b, "quadratic_covariation");
    return detail::cumulative(y, [&](std::size_t j) {
        return (y.values[j + 1] - y.values[j]) * (b.values[j + 1] - b.values[j]);
    });
}

/// Trapezoidal ∫_0^t Y ds on the path's own grid.
inline RealPath time_integral(const RealPath& y) {
    if (y.values.empty() || y.times.size() != y.values.size()) throw ArgumentError("time_integral: malformed path");
    return detail::cumulative(y, [&](std::size_t j) {
        return 0.5 * (y.values[j] + y.values[j + 1]) * (y.times[j + 1] - y.times[j]);
    });
}

} // namespace stoflow
