#pragma once

// Affine p-simplices, quadrature on the standard simplex, and integration of
// pulled-back forms over simplices carried by a flow.

#include "stoflow/core.hpp"
#include "stoflow/forms.hpp"
#include "stoflow/sde.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stoflow {

/// Nodes are reference coordinates u in {u_i >= 0, Σ u_i <= 1}.
struct QuadratureRule {
    int dim = 0;
    int degree = 0;
    std::vector<Vec> nodes;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

/// Gauss-Legendre rule with m points on [0, 1] (Newton iteration on P_m).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre_unit(int m) {
    if (m < 1) throw ArgumentError("gauss_legendre_unit: need at least one point");
    // (P_m(z), P_m'(z)) by the three-term recurrence
    auto legendre = [m](double z) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= m; ++k) {
            const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        if (m == 1) p0 = 1.0;
        return std::pair{p1, m * (z * p1 - p0) / (z * z - 1.0)};
    };
    std::vector<double> x(static_cast<std::size_t>(m)), w(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(z);
            const double dz = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double dp = legendre(z).second;
        const auto idx = static_cast<std::size_t>(m - 1 - i);
        x[idx] = 0.5 * (1.0 + z);
        w[idx] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Collapsed (Duffy) tensor Gauss rule on the standard p-simplex, exact to
/// polynomial degree `degree`. All weights are positive.
inline QuadratureRule collapsed_gauss_rule(int p, int degree) {
    if (p < 1 || p > 3) throw CapabilityError("collapsed_gauss_rule: p must be 1, 2 or 3");
    if (degree < 0) throw CapabilityError("collapsed_gauss_rule: negative degree");
    QuadratureRule rule;
    rule.dim = p;
    rule.degree = degree;
    auto points_for = [](int poly_degree) { return poly_degree / 2 + 1; };
    if (p == 1) {
        auto [x, w] = gauss_legendre_unit(points_for(degree));
        for (std::size_t i = 0; i < x.size(); ++i) {
            rule.nodes.push_back(Vec{x[i]});
            rule.weights.push_back(w[i]);
        }
    } else if (p == 2) {
        auto [a, wa] = gauss_legendre_unit(points_for(degree + 1));
        auto [b, wb] = gauss_legendre_unit(points_for(degree));
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) {
                rule.nodes.push_back(Vec{a[i], (1.0 - a[i]) * b[j]});
                rule.weights.push_back(wa[i] * wb[j] * (1.0 - a[i]));
            }
    } else {
        auto [a, wa] = gauss_legendre_unit(points_for(degree + 2));
        auto [b, wb] = gauss_legendre_unit(points_for(degree + 1));
        auto [c, wc] = gauss_legendre_unit(points_for(degree));
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                for (std::size_t k = 0; k < c.size(); ++k) {
                    const double s = 1.0 - a[i];
                    rule.nodes.push_back(Vec{a[i], s * b[j], s * (1.0 - b[j]) * c[k]});
                    rule.weights.push_back(wa[i] * wb[j] * wc[k] * s * s * (1.0 - b[j]));
                }
    }
    return rule;
}

/// Grundmann-Moller rule of index s (exact to degree 2s+1) on the standard
/// p-simplex. Weights alternate in sign for s >= 1.
inline QuadratureRule grundmann_moller_rule(int p, int s) {
    if (p < 1 || p > 3) throw CapabilityError("grundmann_moller_rule: p must be 1, 2 or 3");
    if (s < 0) throw CapabilityError("grundmann_moller_rule: negative index");
    const int d = 2 * s + 1;
    QuadratureRule rule;
    rule.dim = p;
    rule.degree = d;
    std::vector<double> fact(static_cast<std::size_t>(d + p + 2), 1.0);
    for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

    for (int i = 0; i <= s; ++i) {
        const double denom = d + p - 2 * i;
        double w = std::pow(2.0, -2 * s) * std::pow(denom, d) / fact[static_cast<std::size_t>(i)] /
                   fact[static_cast<std::size_t>(d + p - i)];
        if (i % 2 == 1) w = -w;
        const int total = s - i;
        // all beta in N^{p+1} with |beta| = total; nodes use the first p entries
        std::array<int, kMaxDim + 1> beta{};
        auto emit = [&] {
            Vec u(p);
            for (int k = 0; k < p; ++k) u[k] = (2.0 * beta[static_cast<std::size_t>(k + 1)] + 1.0) / denom;
            rule.nodes.push_back(u);
            rule.weights.push_back(w);
        };
        // enumerate compositions of `total` into p+1 parts
        std::vector<int> parts(static_cast<std::size_t>(p + 1), 0);
        auto rec = [&](auto&& self, int pos, int remaining) -> void {
            if (pos == p) {
                parts[static_cast<std::size_t>(pos)] = remaining;
                for (int k = 0; k <= p; ++k) beta[static_cast<std::size_t>(k)] = parts[static_cast<std::size_t>(k)];
                emit();
                return;
            }
            for (int v = 0; v <= remaining; ++v) {
                parts[static_cast<std::size_t>(pos)] = v;
                self(self, pos + 1, remaining - v);
            }
        };
        rec(rec, 0, total);
    }
    return rule;
}

/// Rule of exactness `order` on the standard p-simplex: Gauss-Legendre on
/// [0, 1] for p = 1, collapsed Gauss for p = 2, 3.
inline QuadratureRule standard_rule(int p, int order) {
    if (p < 1 || p > 3 || order < 1 || order > 7)
        throw CapabilityError("standard_rule: unsupported (p=" + std::to_string(p) + ", order=" + std::to_string(order) + ")");
    return collapsed_gauss_rule(p, order);
}

// ---------------------------------------------------------------------------
// Simplex
// ---------------------------------------------------------------------------

class Simplex {
public:
    Simplex() = default;
    explicit Simplex(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
        if (vertices_.size() < 2) throw ArgumentError("Simplex: need at least two vertices");
        const int n = vertices_[0].size();
        const int p = static_cast<int>(vertices_.size()) - 1;
        if (p > n) throw ArgumentError("Simplex: dimension exceeds ambient dimension");
        for (const auto& v : vertices_)
            if (v.size() != n) throw ArgumentError("Simplex: vertex dimension mismatch");
        edges_.reserve(static_cast<std::size_t>(p));
        for (int i = 1; i <= p; ++i) edges_.push_back(vertices_[static_cast<std::size_t>(i)] - vertices_[0]);
        if (rank(Mat::from_columns(edges_, n)) != p) throw ArgumentError("Simplex: degenerate edge matrix");
    }

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(vertices_.size()) - 1; }
    [[nodiscard]] int ambient_dim() const noexcept { return vertices_[0].size(); }
    [[nodiscard]] const std::vector<Point>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::vector<Vec>& edges() const noexcept { return edges_; }

    [[nodiscard]] Point map(const Vec& u) const {
        Point x = vertices_[0];
        for (int i = 0; i < dim(); ++i) x += u[i] * edges_[static_cast<std::size_t>(i)];
        return x;
    }

    /// Oriented p-volume: det of the edge matrix over p! (for p = n).
    [[nodiscard]] double signed_volume() const {
        if (dim() != ambient_dim()) throw ArgumentError("signed_volume: simplex is not top-dimensional");
        double f = 1.0;
        for (int i = 2; i <= dim(); ++i) f *= i;
        return det(Mat::from_columns(edges_, ambient_dim())) / f;
    }

private:
    std::vector<Point> vertices_;
    std::vector<Vec> edges_;
};

/// Flow positions and Jacobians at the quadrature nodes, at one time.
struct FlowEnsemble {
    std::vector<Point> positions;
    std::vector<Mat> jacobians;

    [[nodiscard]] std::size_t size() const noexcept { return positions.size(); }
};

inline std::vector<Point> quadrature_points(const Simplex& sigma, const QuadratureRule& rule) {
    if (rule.dim != sigma.dim()) throw ArgumentError("quadrature_points: rule dimension differs from simplex dimension");
    std::vector<Point> pts;
    pts.reserve(rule.size());
    for (const auto& u : rule.nodes) pts.push_back(sigma.map(u));
    return pts;
}

inline FlowEnsemble identity_flow(const Simplex& sigma, const QuadratureRule& rule) {
    FlowEnsemble f;
    f.positions = quadrature_points(sigma, rule);
    f.jacobians.assign(f.positions.size(), Mat::identity(sigma.ambient_dim()));
    return f;
}

inline FlowEnsemble snapshot(std::span<const FlowTrajectory> trajectories, int step) {
    FlowEnsemble f;
    f.positions.reserve(trajectories.size());
    f.jacobians.reserve(trajectories.size());
    for (const auto& tr : trajectories) {
        f.positions.push_back(tr.positions.at(static_cast<std::size_t>(step)));
        f.jacobians.push_back(tr.jacobians.at(static_cast<std::size_t>(step)));
    }
    return f;
}

/// Σ_q w_q θ(t, φ_t(x_q))(J_q e_1, ..., J_q e_p).
inline double integrate_pulled_form(const TimeForm& theta, double t, const Simplex& sigma, const FlowEnsemble& flows,
                                    const QuadratureRule& rule) {
    if (flows.positions.size() != rule.size() || flows.jacobians.size() != rule.size())
        throw ArgumentError("integrate_pulled_form: flow ensemble does not match the rule's nodes");
    if (theta.degree() != sigma.dim() || rule.dim != sigma.dim())
        throw ArgumentError("integrate_pulled_form: form degree, rule and simplex dimension must agree");
    if (theta.dim() != sigma.ambient_dim()) throw ArgumentError("integrate_pulled_form: ambient dimension mismatch");
    if (theta.is_zero()) return 0.0;
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q)
        sum += rule.weights[q] * pullback_value(flows.positions[q], flows.jacobians[q], theta, t, sigma.edges());
    return sum;
}

struct ChainEntry {
    Simplex simplex;
    int sign = 1;
};

inline double chain_integrate(const TimeForm& theta, double t, std::span<const ChainEntry> chain,
                              std::span<const FlowEnsemble> flows, const QuadratureRule& rule) {
    if (chain.size() != flows.size()) throw ArgumentError("chain_integrate: one flow ensemble per chain entry required");
    double sum = 0.0;
    for (std::size_t i = 0; i < chain.size(); ++i)
        sum += chain[i].sign * integrate_pulled_form(theta, t, chain[i].simplex, flows[i], rule);
    return sum;
}

} // namespace stoflow
