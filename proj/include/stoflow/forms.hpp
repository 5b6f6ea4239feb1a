#pragma once

// Exterior calculus on R^n charts: scalar fields, time-dependent vector
// fields and p-forms stored as dense coefficient tables over increasing
// multi-indices, with d, interior product, Lie derivative, divergence and
// pullback evaluation.

#include "stoflow/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stoflow {

using ScalarFn = std::function<double(double, const Point&)>;
using GradientFn = std::function<Vec(double, const Point&)>;
using VectorFn = std::function<Vec(double, const Point&)>;
using JacobianFn = std::function<Mat(double, const Point&)>;
using SecondDirectionalFn = std::function<Vec(double, const Point&, const Vec&, const Vec&)>;

namespace detail {

/// Central-difference step for a coordinate of magnitude |x|. Values that
/// already contain `fd_level` layers of differencing get the coarser
/// eps^(1/4) scaling so that truncation and roundoff stay balanced.
inline double fd_step(double x, int fd_level) noexcept {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    static const double first = std::cbrt(eps);
    static const double nested = std::pow(eps, 0.25);
    return (fd_level == 0 ? first : nested) * std::max(1.0, std::abs(x));
}

} // namespace detail

// ---------------------------------------------------------------------------
// ScalarField
// ---------------------------------------------------------------------------

/// Time-dependent scalar function f(t, x), optionally with an analytic spatial
/// gradient and an analytic time derivative.
struct ScalarField {
    ScalarFn value;
    GradientFn gradient;       // empty: central differences
    ScalarFn time_derivative;  // empty: time-independent
    int fd_level = 0;          // differencing layers already inside `value`
    bool is_zero = false;

    static ScalarField zero() {
        ScalarField f;
        f.value = [](double, const Point&) { return 0.0; };
        f.gradient = [](double, const Point& x) { return Vec(x.size()); };
        f.is_zero = true;
        return f;
    }
    static ScalarField constant(double c) {
        if (c == 0.0) return zero();
        ScalarField f;
        f.value = [c](double, const Point&) { return c; };
        f.gradient = [](double, const Point& x) { return Vec(x.size()); };
        return f;
    }

    double operator()(double t, const Point& x) const { return value(t, x); }

    [[nodiscard]] bool has_analytic_gradient() const noexcept { return static_cast<bool>(gradient); }

    [[nodiscard]] double partial(double t, const Point& x, int i) const {
        if (gradient) return gradient(t, x)[i];
        const double h = detail::fd_step(x[i], fd_level);
        Point xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        return (value(t, xp) - value(t, xm)) / (xp[i] - xm[i]);
    }

    [[nodiscard]] Vec grad(double t, const Point& x) const {
        if (gradient) return gradient(t, x);
        Vec g(x.size());
        for (int i = 0; i < x.size(); ++i) g[i] = partial(t, x, i);
        return g;
    }

    [[nodiscard]] double dt(double t, const Point& x) const {
        return time_derivative ? time_derivative(t, x) : 0.0;
    }
};

/// f * g with product-rule gradient when both factors are analytic.
inline ScalarField multiply(const ScalarField& f, const ScalarField& g) {
    if (f.is_zero || g.is_zero) return ScalarField::zero();
    ScalarField h;
    h.value = [f, g](double t, const Point& x) { return f.value(t, x) * g.value(t, x); };
    if (f.gradient && g.gradient)
        h.gradient = [f, g](double t, const Point& x) {
            return g.value(t, x) * f.gradient(t, x) + f.value(t, x) * g.gradient(t, x);
        };
    if (f.time_derivative || g.time_derivative)
        h.time_derivative = [f, g](double t, const Point& x) {
            return f.dt(t, x) * g.value(t, x) + f.value(t, x) * g.dt(t, x);
        };
    h.fd_level = std::max(f.fd_level, g.fd_level);
    return h;
}

inline ScalarField add(const ScalarField& f, const ScalarField& g) {
    if (f.is_zero) return g;
    if (g.is_zero) return f;
    ScalarField h;
    h.value = [f, g](double t, const Point& x) { return f.value(t, x) + g.value(t, x); };
    if (f.gradient && g.gradient)
        h.gradient = [f, g](double t, const Point& x) { return f.gradient(t, x) + g.gradient(t, x); };
    if (f.time_derivative || g.time_derivative)
        h.time_derivative = [f, g](double t, const Point& x) { return f.dt(t, x) + g.dt(t, x); };
    h.fd_level = std::max(f.fd_level, g.fd_level);
    return h;
}

inline ScalarField scale(double c, const ScalarField& f) {
    if (c == 0.0 || f.is_zero) return ScalarField::zero();
    ScalarField h;
    h.value = [c, f](double t, const Point& x) { return c * f.value(t, x); };
    if (f.gradient) h.gradient = [c, f](double t, const Point& x) { return c * f.gradient(t, x); };
    if (f.time_derivative) h.time_derivative = [c, f](double t, const Point& x) { return c * f.time_derivative(t, x); };
    h.fd_level = f.fd_level;
    return h;
}

/// The time derivative of f promoted to a field of its own (zero if f is
/// time-independent).
inline ScalarField time_derivative_field(const ScalarField& f) {
    if (!f.time_derivative) return ScalarField::zero();
    ScalarField h;
    h.value = f.time_derivative;
    return h;
}

// ---------------------------------------------------------------------------
// TimeVectorField
// ---------------------------------------------------------------------------

class TimeVectorField {
public:
    TimeVectorField() = default;
    TimeVectorField(int dim, VectorFn value, JacobianFn jacobian = {}, SecondDirectionalFn second = {})
        : dim_(dim), value_(std::move(value)), jacobian_(std::move(jacobian)), second_(std::move(second)) {
        if (dim < 1 || dim > kMaxDim) throw ArgumentError("TimeVectorField: dimension out of range");
    }

    static TimeVectorField zero(int dim) {
        TimeVectorField X(
            dim, [dim](double, const Point&) { return Vec(dim); },
            [dim](double, const Point&) { return Mat(dim, dim); },
            [dim](double, const Point&, const Vec&, const Vec&) { return Vec(dim); });
        X.is_zero_ = true;
        return X;
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] bool is_zero() const noexcept { return is_zero_; }
    /// Differencing layers already inside value(); selects the step for
    /// numeric Jacobians.
    [[nodiscard]] int fd_level() const noexcept { return fd_level_; }
    TimeVectorField& with_fd_level(int level) noexcept {
        fd_level_ = level;
        return *this;
    }
    [[nodiscard]] bool has_analytic_jacobian() const noexcept { return static_cast<bool>(jacobian_); }

    [[nodiscard]] Vec value(double t, const Point& x) const { return value_(t, x); }
    Vec operator()(double t, const Point& x) const { return value_(t, x); }

    /// J(i, j) = dX^i / dx^j.
    [[nodiscard]] Mat jacobian(double t, const Point& x) const {
        if (jacobian_) return jacobian_(t, x);
        Mat J(dim_, dim_);
        for (int j = 0; j < dim_; ++j) {
            const double h = detail::fd_step(x[j], fd_level_);
            Point xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const Vec d = (value_(t, xp) - value_(t, xm)) * (1.0 / (xp[j] - xm[j]));
            for (int i = 0; i < dim_; ++i) J(i, j) = d[i];
        }
        return J;
    }

    /// Second derivative of X contracted with directions u and v.
    [[nodiscard]] Vec second_directional(double t, const Point& x, const Vec& u, const Vec& v) const {
        if (second_) return second_(t, x, u, v);
        double nu = max_abs(u);
        if (nu == 0.0) return Vec(dim_);
        const double h = detail::fd_step(max_abs(x), jacobian_ ? fd_level_ : fd_level_ + 1) / nu;
        const Mat Jp = jacobian(t, x + h * u);
        const Mat Jm = jacobian(t, x - h * u);
        return (Jp * v - Jm * v) * (1.0 / (2.0 * h));
    }

    /// Component i as a scalar field (gradient is row i of the Jacobian).
    [[nodiscard]] ScalarField component(int i) const {
        if (is_zero_) return ScalarField::zero();
        ScalarField f;
        auto self = *this;
        f.value = [self, i](double t, const Point& x) { return self.value_(t, x)[i]; };
        f.fd_level = fd_level_;
        if (jacobian_)
            f.gradient = [self, i](double t, const Point& x) {
                const Mat J = self.jacobian_(t, x);
                Vec g(self.dim_);
                for (int j = 0; j < self.dim_; ++j) g[j] = J(i, j);
                return g;
            };
        return f;
    }

private:
    int dim_ = 0;
    VectorFn value_;
    JacobianFn jacobian_;
    SecondDirectionalFn second_;
    bool is_zero_ = false;
    int fd_level_ = 0;
};

inline TimeVectorField scale(double c, const TimeVectorField& X) {
    if (c == 0.0 || X.is_zero()) return TimeVectorField::zero(X.dim());
    const int n = X.dim();
    TimeVectorField Y(
        n, [c, X](double t, const Point& x) { return c * X.value(t, x); },
        X.has_analytic_jacobian() ? JacobianFn([c, X](double t, const Point& x) { return X.jacobian(t, x) * c; })
                                  : JacobianFn{});
    Y.with_fd_level(X.fd_level());
    return Y;
}

inline TimeVectorField add(const TimeVectorField& X, const TimeVectorField& Y) {
    if (X.dim() != Y.dim()) throw ArgumentError("add: vector field dimension mismatch");
    if (X.is_zero()) return Y;
    if (Y.is_zero()) return X;
    JacobianFn jac;
    if (X.has_analytic_jacobian() && Y.has_analytic_jacobian())
        jac = [X, Y](double t, const Point& x) { return X.jacobian(t, x) + Y.jacobian(t, x); };
    TimeVectorField Z(
        X.dim(), [X, Y](double t, const Point& x) { return X.value(t, x) + Y.value(t, x); }, std::move(jac));
    Z.with_fd_level(std::max(X.fd_level(), Y.fd_level()));
    return Z;
}

/// The field f * X.
inline TimeVectorField scale(const ScalarField& f, const TimeVectorField& X) {
    if (f.is_zero || X.is_zero()) return TimeVectorField::zero(X.dim());
    const int n = X.dim();
    JacobianFn jac;
    if (f.has_analytic_gradient() && X.has_analytic_jacobian())
        jac = [f, X, n](double t, const Point& x) {
            Mat J = X.jacobian(t, x) * f.value(t, x);
            const Vec v = X.value(t, x);
            const Vec g = f.gradient(t, x);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) J(i, j) += v[i] * g[j];
            return J;
        };
    TimeVectorField Y(
        n, [f, X](double t, const Point& x) { return f.value(t, x) * X.value(t, x); }, std::move(jac));
    Y.with_fd_level(std::max(f.fd_level, X.fd_level()));
    return Y;
}

/// X(f) = <grad f, X>, the derivative of f along X.
inline ScalarField directional_derivative(const TimeVectorField& X, const ScalarField& f) {
    if (X.is_zero() || f.is_zero) return ScalarField::zero();
    ScalarField h;
    h.value = [X, f](double t, const Point& x) { return dot(f.grad(t, x), X.value(t, x)); };
    h.fd_level = f.has_analytic_gradient() ? f.fd_level : f.fd_level + 1;
    return h;
}

// ---------------------------------------------------------------------------
// Multi-indices
// ---------------------------------------------------------------------------

struct MultiIndex {
    std::array<int, kMaxDim> idx{};
    int size = 0;

    int operator[](int i) const noexcept { return idx[static_cast<std::size_t>(i)]; }
    friend bool operator==(const MultiIndex& a, const MultiIndex& b) noexcept {
        return a.size == b.size && std::equal(a.idx.begin(), a.idx.begin() + a.size, b.idx.begin());
    }
    [[nodiscard]] bool contains(int i) const noexcept {
        return std::find(idx.begin(), idx.begin() + size, i) != idx.begin() + size;
    }
    [[nodiscard]] MultiIndex without_position(int r) const noexcept {
        MultiIndex m;
        for (int k = 0; k < size; ++k)
            if (k != r) m.idx[static_cast<std::size_t>(m.size++)] = idx[static_cast<std::size_t>(k)];
        return m;
    }
    /// Inserts i (not present) keeping increasing order; returns its position.
    [[nodiscard]] std::pair<MultiIndex, int> with(int i) const noexcept {
        MultiIndex m;
        int pos = -1;
        for (int k = 0; k < size; ++k) {
            if (pos < 0 && i < idx[static_cast<std::size_t>(k)]) {
                pos = m.size;
                m.idx[static_cast<std::size_t>(m.size++)] = i;
            }
            m.idx[static_cast<std::size_t>(m.size++)] = idx[static_cast<std::size_t>(k)];
        }
        if (pos < 0) {
            pos = m.size;
            m.idx[static_cast<std::size_t>(m.size++)] = i;
        }
        return {m, pos};
    }
};

/// Strictly increasing multi-indices of length p over {0..n-1}, lexicographic.
inline std::vector<MultiIndex> multi_indices(int n, int p) {
    std::vector<MultiIndex> out;
    if (p < 0 || p > n) return out;
    MultiIndex m;
    m.size = p;
    for (int k = 0; k < p; ++k) m.idx[static_cast<std::size_t>(k)] = k;
    for (;;) {
        out.push_back(m);
        int k = p - 1;
        while (k >= 0 && m.idx[static_cast<std::size_t>(k)] == n - p + k) --k;
        if (k < 0) break;
        ++m.idx[static_cast<std::size_t>(k)];
        for (int j = k + 1; j < p; ++j) m.idx[static_cast<std::size_t>(j)] = m.idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

inline int binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    int r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// ---------------------------------------------------------------------------
// TimeForm
// ---------------------------------------------------------------------------

class TimeForm {
public:
    TimeForm() = default;

    /// Coefficients follow the order of multi_indices(dim, degree). A null
    /// time derivative means the form is time-independent.
    TimeForm(int dim, int degree, std::vector<ScalarField> coefficients, std::shared_ptr<const TimeForm> time_derivative = {})
        : dim_(dim), degree_(degree), coeffs_(std::move(coefficients)), dt_(std::move(time_derivative)) {
        if (dim < 1 || dim > kMaxDim) throw ArgumentError("TimeForm: dimension out of range");
        if (degree < 0 || degree > dim) throw DegreeError("TimeForm: degree must lie in [0, n]");
        if (static_cast<int>(coeffs_.size()) != binomial(dim, degree))
            throw ArgumentError("TimeForm: expected C(n,p) coefficients");
        if (dt_ && (dt_->dim_ != dim || dt_->degree_ != degree))
            throw ArgumentError("TimeForm: time derivative has a different shape");
        indices_ = multi_indices(dim, degree);
    }

    static TimeForm zero(int dim, int degree) {
        return TimeForm(dim, degree, std::vector<ScalarField>(static_cast<std::size_t>(binomial(dim, degree)), ScalarField::zero()));
    }

    /// f as a 0-form; its time derivative comes from f.time_derivative.
    static TimeForm scalar(int dim, const ScalarField& f) {
        std::shared_ptr<const TimeForm> dt;
        if (f.time_derivative)
            dt = std::make_shared<const TimeForm>(dim, 0, std::vector<ScalarField>{time_derivative_field(f)});
        return TimeForm(dim, 0, {f}, std::move(dt));
    }

    /// f dx^1 ^ ... ^ dx^n, with time derivative (df/dt) dx^1 ^ ... ^ dx^n.
    static TimeForm top(int dim, const ScalarField& f) {
        std::shared_ptr<const TimeForm> dt;
        if (f.time_derivative)
            dt = std::make_shared<const TimeForm>(dim, dim, std::vector<ScalarField>{time_derivative_field(f)});
        return TimeForm(dim, dim, {f}, std::move(dt));
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int degree() const noexcept { return degree_; }
    [[nodiscard]] const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
    [[nodiscard]] const std::vector<ScalarField>& coefficients() const noexcept { return coeffs_; }
    [[nodiscard]] const ScalarField& coefficient_field(int i) const { return coeffs_.at(static_cast<std::size_t>(i)); }

    [[nodiscard]] double coefficient(double t, const Point& x, int i) const { return coeffs_.at(static_cast<std::size_t>(i)).value(t, x); }
    [[nodiscard]] double coefficient(double t, const Point& x, const MultiIndex& I) const { return coefficient(t, x, position(I)); }

    [[nodiscard]] int position(const MultiIndex& I) const {
        for (std::size_t k = 0; k < indices_.size(); ++k)
            if (indices_[k] == I) return static_cast<int>(k);
        throw ArgumentError("TimeForm: multi-index is not strictly increasing or out of range");
    }

    [[nodiscard]] bool is_zero() const noexcept {
        return std::all_of(coeffs_.begin(), coeffs_.end(), [](const ScalarField& f) { return f.is_zero; });
    }

    [[nodiscard]] bool time_independent() const noexcept { return !dt_; }

    /// dθ/dt; the zero form when θ is time-independent.
    [[nodiscard]] TimeForm time_derivative() const { return dt_ ? *dt_ : zero(dim_, degree_); }

private:
    int dim_ = 0;
    int degree_ = 0;
    std::vector<ScalarField> coeffs_;
    std::shared_ptr<const TimeForm> dt_;
    std::vector<MultiIndex> indices_;
};

inline TimeForm add(const TimeForm& a, const TimeForm& b) {
    if (a.dim() != b.dim() || a.degree() != b.degree()) throw ArgumentError("add: form shape mismatch");
    std::vector<ScalarField> c;
    c.reserve(a.coefficients().size());
    for (std::size_t i = 0; i < a.coefficients().size(); ++i) c.push_back(add(a.coefficients()[i], b.coefficients()[i]));
    return TimeForm(a.dim(), a.degree(), std::move(c));
}

inline TimeForm scale(double s, const TimeForm& a) {
    std::vector<ScalarField> c;
    for (const auto& f : a.coefficients()) c.push_back(scale(s, f));
    return TimeForm(a.dim(), a.degree(), std::move(c));
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// θ(t, x)(v_1, ..., v_p) = Σ_I θ_I(t, x) det([v]_I).
inline double evaluate_form(const TimeForm& theta, double t, const Point& x, std::span<const Vec> vs) {
    const int n = theta.dim();
    const int p = theta.degree();
    if (static_cast<int>(vs.size()) != p) throw ArgumentError("evaluate_form: expected one vector per degree");
    if (x.size() != n) throw ArgumentError("evaluate_form: point dimension mismatch");
    for (const auto& v : vs)
        if (v.size() != n) throw ArgumentError("evaluate_form: vector dimension mismatch");

    double sum = 0.0;
    const auto& idx = theta.indices();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const ScalarField& c = theta.coefficients()[k];
        if (c.is_zero) continue;
        Mat minor(p, p);
        for (int r = 0; r < p; ++r)
            for (int col = 0; col < p; ++col) minor(r, col) = vs[static_cast<std::size_t>(col)][idx[k][r]];
        const double d = det(minor);
        if (d == 0.0) continue;
        sum += c.value(t, x) * d;
    }
    if (!std::isfinite(sum)) throw NumericError("evaluate_form: non-finite value");
    return sum;
}

inline double evaluate_form(const TimeForm& theta, double t, const Point& x, std::initializer_list<Vec> vs) {
    return evaluate_form(theta, t, x, std::span<const Vec>(vs.begin(), vs.size()));
}

/// dθ, with (dθ)_J = Σ_r (-1)^r ∂_{j_r} θ_{J \ j_r}.
inline TimeForm exterior_derivative(const TimeForm& theta) {
    const int n = theta.dim();
    const int p = theta.degree();
    if (p >= n) throw DegreeError("exterior_derivative: degree must be below the dimension");

    struct Term {
        ScalarField f;
        int dir;
        double sign;
    };
    std::vector<ScalarField> coeffs;
    for (const MultiIndex& J : multi_indices(n, p + 1)) {
        std::vector<Term> terms;
        int level = 0;
        for (int r = 0; r <= p; ++r) {
            const ScalarField& f = theta.coefficient_field(theta.position(J.without_position(r)));
            if (f.is_zero) continue;
            terms.push_back({f, J[r], (r % 2 == 0) ? 1.0 : -1.0});
            level = std::max(level, f.has_analytic_gradient() ? f.fd_level : f.fd_level + 1);
        }
        if (terms.empty()) {
            coeffs.push_back(ScalarField::zero());
            continue;
        }
        ScalarField g;
        g.value = [terms](double t, const Point& x) {
            double s = 0.0;
            for (const Term& term : terms) s += term.sign * term.f.partial(t, x, term.dir);
            return s;
        };
        g.fd_level = level;
        coeffs.push_back(std::move(g));
    }
    std::shared_ptr<const TimeForm> dt;
    if (!theta.time_independent()) dt = std::make_shared<const TimeForm>(exterior_derivative(theta.time_derivative()));
    return TimeForm(n, p + 1, std::move(coeffs), std::move(dt));
}

/// i_X θ, with (i_X θ)_K = Σ_{i ∉ K} (-1)^{pos(i)} X^i θ_{K ∪ i}.
/// The result is treated as time-independent unless X is the zero field.
inline TimeForm interior_product(const TimeVectorField& X, const TimeForm& theta) {
    const int n = theta.dim();
    const int p = theta.degree();
    if (p < 1) throw DegreeError("interior_product: degree must be at least 1");
    if (X.dim() != n) throw ArgumentError("interior_product: dimension mismatch");

    std::vector<ScalarField> coeffs;
    for (const MultiIndex& K : multi_indices(n, p - 1)) {
        ScalarField acc = ScalarField::zero();
        if (!X.is_zero()) {
            for (int i = 0; i < n; ++i) {
                if (K.contains(i)) continue;
                const auto [I, pos] = K.with(i);
                const ScalarField& f = theta.coefficient_field(theta.position(I));
                if (f.is_zero) continue;
                ScalarField term = multiply(X.component(i), f);
                term.time_derivative = {};
                acc = add(acc, pos % 2 == 0 ? term : scale(-1.0, term));
            }
        }
        coeffs.push_back(std::move(acc));
    }
    return TimeForm(n, p - 1, std::move(coeffs));
}

/// L_X θ = i_X dθ + d(i_X θ).
inline TimeForm lie_derivative(const TimeVectorField& X, const TimeForm& theta) {
    const int n = theta.dim();
    const int p = theta.degree();
    if (X.dim() != n) throw ArgumentError("lie_derivative: dimension mismatch");
    if (X.is_zero() || theta.is_zero()) return TimeForm::zero(n, p);
    if (p == 0) return interior_product(X, exterior_derivative(theta));
    if (p == n) return exterior_derivative(interior_product(X, theta));
    return add(interior_product(X, exterior_derivative(theta)), exterior_derivative(interior_product(X, theta)));
}

inline TimeForm lie_derivative_squared(const TimeVectorField& X, const TimeForm& theta) {
    return lie_derivative(X, lie_derivative(X, theta));
}

/// div_μ(X) as a scalar field: the coefficient of L_X μ over that of μ.
inline ScalarField divergence_field(const TimeForm& mu, const TimeVectorField& X) {
    if (mu.degree() != mu.dim()) throw ArgumentError("divergence: μ must be a top-degree form");
    ScalarField den = mu.coefficient_field(0);
    ScalarField d;
    if (X.is_zero()) {
        d.value = [den](double t, const Point& x) {
            if (!(den.value(t, x) > 0.0)) throw InvariantError("divergence: volume form coefficient is not positive");
            return 0.0;
        };
        d.gradient = [](double, const Point& x) { return Vec(x.size()); };
        d.time_derivative = [](double, const Point&) { return 0.0; };
        return d;
    }
    const TimeForm lie = lie_derivative(X, mu);
    ScalarField num = lie.coefficient_field(0);
    d.value = [num, den](double t, const Point& x) {
        const double m = den.value(t, x);
        if (!(m > 0.0)) throw InvariantError("divergence: volume form coefficient is not positive");
        return num.value(t, x) / m;
    };
    d.fd_level = num.fd_level;
    return d;
}

inline double divergence(const TimeForm& mu, const TimeVectorField& X, double t, const Point& x) {
    return divergence_field(mu, X).value(t, x);
}

/// θ(t, position)(J v_1, ..., J v_p): the pullback by a map with derivative J
/// at the base point, evaluated on the base-point vectors.
inline double pullback_value(const Point& position, const Mat& jacobian, const TimeForm& theta, double t,
                             std::span<const Vec> vs) {
    const int n = theta.dim();
    if (position.size() != n || jacobian.rows() != n || jacobian.cols() != n)
        throw ArgumentError("pullback_value: dimension mismatch");
    std::array<Vec, kMaxDim> pushed;
    if (vs.size() > static_cast<std::size_t>(kMaxDim)) throw ArgumentError("pullback_value: too many vectors");
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (vs[i].size() != n) throw ArgumentError("pullback_value: vector dimension mismatch");
        pushed[i] = jacobian * vs[i];
    }
    return evaluate_form(theta, t, position, std::span<const Vec>(pushed.data(), vs.size()));
}

/// The top form f·μ; its time derivative is (df/dt)·μ for time-independent μ.
inline TimeForm density_form(const ScalarField& f, const TimeForm& mu) {
    if (mu.degree() != mu.dim()) throw ArgumentError("density_form: μ must be a top-degree form");
    return TimeForm::top(mu.dim(), multiply(f, mu.coefficient_field(0)));
}

} // namespace stoflow
