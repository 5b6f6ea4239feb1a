#pragma once

#include "stoflow/stoflow.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace testing_support {

using namespace stoflow;

/// Scalar field with numeric derivatives only.
inline ScalarField numeric(std::function<double(const Point&)> f) {
    ScalarField s;
    s.value = [f](double, const Point& x) { return f(x); };
    return s;
}

/// Vector field with numeric Jacobian only.
inline TimeVectorField numeric_field(int n, std::function<Vec(const Point&)> f) {
    return TimeVectorField(n, [f](double, const Point& x) { return f(x); });
}

inline TimeForm one_form(int n, std::vector<ScalarField> c) { return TimeForm(n, 1, std::move(c)); }

/// Deterministic sample points in [lo, hi]^n.
inline std::vector<Point> sample_points(int n, int count, double lo = -1.0, double hi = 1.0, std::uint64_t seed = 17) {
    std::vector<Point> pts;
    for (int i = 0; i < count; ++i) {
        Point p(n);
        for (int d = 0; d < n; ++d) {
            const double u = 0.5 + 0.5 * std::erf(counter_normal(seed, 3u, static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(d)) / std::sqrt(2.0));
            p[d] = lo + (hi - lo) * u;
        }
        pts.push_back(p);
    }
    return pts;
}

inline std::vector<Vec> sample_vectors(int n, int count, std::uint64_t seed = 29) {
    std::vector<Vec> vs;
    for (int i = 0; i < count; ++i) {
        Vec v(n);
        for (int d = 0; d < n; ++d) v[d] = counter_normal(seed, 4u, static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(d));
        vs.push_back(v);
    }
    return vs;
}

} // namespace testing_support
