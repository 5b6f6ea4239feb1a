#pragma once

// Residual verifiers for the Ito formula for forms (Stratonovich and Ito
// shapes), the stochastic transport theorem, the martingale consequence, the
// expectation-derivative formula and the continuity system.

#include "stoflow/core.hpp"
#include "stoflow/forms.hpp"
#include "stoflow/parallel.hpp"
#include "stoflow/quadrature.hpp"
#include "stoflow/sde.hpp"
#include "stoflow/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stoflow {

struct ResidualReport {
    std::string identity;
    double horizon = 0.0;
    int steps = 0;
    double max_abs_residual = 0.0;
    double terminal_residual = 0.0;
    /// Value at the horizon of each term of the identity, in display order.
    std::vector<std::pair<std::string, double>> terms;
    double max_det_deviation = 0.0;  // max |det J - 1| over all node trajectories
    RealPath lhs;
    RealPath rhs;
    RealPath residual;
};

/// t ↦ ∫_σ φ_t^* θ_t evaluated on every grid step of the trajectories.
inline RealPath pulled_integral_path(const TimeForm& theta, const Simplex& sigma, const QuadratureRule& rule,
                                     std::span<const FlowTrajectory> trajectories) {
    if (trajectories.size() != rule.size()) throw ArgumentError("pulled_integral_path: one trajectory per node required");
    RealPath out;
    out.times = trajectories.front().times;
    out.values.assign(out.times.size(), 0.0);
    if (theta.is_zero()) return out;
    for (std::size_t j = 0; j < out.times.size(); ++j)
        out.values[j] = integrate_pulled_form(theta, out.times[j], sigma, snapshot(trajectories, static_cast<int>(j)), rule);
    return out;
}

inline double max_det_deviation(std::span<const FlowTrajectory> trajectories) {
    double m = 0.0;
    for (const auto& tr : trajectories)
        for (const auto& J : tr.jacobians) m = std::max(m, std::abs(det(J) - 1.0));
    return m;
}

/// Node trajectories for σ under the rule, all on the same path.
inline std::vector<FlowTrajectory> simplex_flows(const SdeSystem& sys, const Simplex& sigma, const QuadratureRule& rule,
                                                 const BrownianPath& path) {
    const auto pts = quadrature_points(sigma, rule);
    return integrate_ensemble(sys, pts, path);
}

namespace detail {

inline void finish_report(ResidualReport& r) {
    r.residual.times = r.lhs.times;
    r.residual.values.resize(r.lhs.values.size());
    r.max_abs_residual = 0.0;
    for (std::size_t j = 0; j < r.lhs.values.size(); ++j) {
        r.residual.values[j] = r.lhs.values[j] - r.rhs.values[j];
        r.max_abs_residual = std::max(r.max_abs_residual, std::abs(r.residual.values[j]));
    }
    r.terminal_residual = r.residual.values.back();
}

inline void check_identity_inputs(const TimeForm& theta, const SdeSystem& sys, const Simplex& sigma, const BrownianPath& path) {
    if (theta.degree() != sigma.dim()) throw DegreeError("verifier: form degree must equal the simplex dimension");
    if (theta.dim() != sys.dim() || sigma.ambient_dim() != sys.dim()) throw ArgumentError("verifier: dimension mismatch");
    if (path.drivers() != sys.drivers()) throw ArgumentError("verifier: driver count mismatch");
}

inline RealPath add_paths(RealPath a, const RealPath& b, double scale = 1.0) {
    for (std::size_t j = 0; j < a.values.size(); ++j) a.values[j] += scale * b.values[j];
    return a;
}

} // namespace detail

/// ∫_{φ_t σ} θ = ∫_σ θ + ∫_0^t ∫_{φ_s σ} ∂θ/∂t ds + ∫_0^t ∫_{φ_s σ} L_{X0} θ ds
///             + Σ_k ∫_0^t (∫_{φ_s σ} L_{Xk} θ) o dB^k.
inline ResidualReport verify_ito_identity_stratonovich(const TimeForm& theta, const SdeSystem& sys, const Simplex& sigma,
                                                       const BrownianPath& path, const QuadratureRule& rule,
                                                       std::span<const FlowTrajectory> flows) {
    detail::check_identity_inputs(theta, sys, sigma, path);
    ResidualReport r;
    r.identity = "ito_identity_stratonovich";
    r.horizon = path.horizon();
    r.steps = path.steps();
    r.lhs = pulled_integral_path(theta, sigma, rule, flows);

    const RealPath dt_term = time_integral(pulled_integral_path(theta.time_derivative(), sigma, rule, flows));
    const RealPath drift_term = time_integral(pulled_integral_path(lie_derivative(sys.drift, theta), sigma, rule, flows));
    RealPath rhs = r.lhs;
    std::fill(rhs.values.begin(), rhs.values.end(), r.lhs.values.front());
    r.terms.emplace_back("initial", r.lhs.values.front());
    rhs = detail::add_paths(rhs, dt_term);
    r.terms.emplace_back("time_derivative", dt_term.terminal());
    rhs = detail::add_paths(rhs, drift_term);
    r.terms.emplace_back("drift_lie", drift_term.terminal());
    for (int k = 0; k < sys.drivers(); ++k) {
        const auto& X = sys.diffusions[static_cast<std::size_t>(k)];
        const RealPath y = pulled_integral_path(lie_derivative(X, theta), sigma, rule, flows);
        const RealPath s = stratonovich_integral(y, driver(path, k));
        rhs = detail::add_paths(rhs, s);
        r.terms.emplace_back("stratonovich_" + std::to_string(k + 1), s.terminal());
    }
    r.rhs = std::move(rhs);
    r.max_det_deviation = max_det_deviation(flows);
    detail::finish_report(r);
    return r;
}

inline ResidualReport verify_ito_identity_stratonovich(const TimeForm& theta, const SdeSystem& sys, const Simplex& sigma,
                                                       const BrownianPath& path, const QuadratureRule& rule) {
    detail::check_identity_inputs(theta, sys, sigma, path);
    const auto flows = simplex_flows(sys, sigma, rule, path);
    return verify_ito_identity_stratonovich(theta, sys, sigma, path, rule, flows);
}

/// ∫_{φ_t σ} θ = ∫_σ θ + ∫_0^t ∫_{φ_s σ} (∂/∂t + ½ Σ L²_{Xk} + L_{X0}) θ ds
///             + Σ_k ∫_0^t (∫_{φ_s σ} L_{Xk} θ) dB^k.
inline ResidualReport verify_ito_identity_ito(const TimeForm& theta, const SdeSystem& sys, const Simplex& sigma,
                                              const BrownianPath& path, const QuadratureRule& rule,
                                              std::span<const FlowTrajectory> flows) {
    detail::check_identity_inputs(theta, sys, sigma, path);
    ResidualReport r;
    r.identity = "ito_identity_ito";
    r.horizon = path.horizon();
    r.steps = path.steps();
    r.lhs = pulled_integral_path(theta, sigma, rule, flows);

    TimeForm generator = add(theta.time_derivative(), lie_derivative(sys.drift, theta));
    for (const auto& X : sys.diffusions) generator = add(generator, scale(0.5, lie_derivative_squared(X, theta)));
    const RealPath ds_term = time_integral(pulled_integral_path(generator, sigma, rule, flows));

    RealPath rhs = r.lhs;
    std::fill(rhs.values.begin(), rhs.values.end(), r.lhs.values.front());
    r.terms.emplace_back("initial", r.lhs.values.front());
    rhs = detail::add_paths(rhs, ds_term);
    r.terms.emplace_back("generator", ds_term.terminal());
    for (int k = 0; k < sys.drivers(); ++k) {
        const auto& X = sys.diffusions[static_cast<std::size_t>(k)];
        const RealPath y = pulled_integral_path(lie_derivative(X, theta), sigma, rule, flows);
        const RealPath s = ito_integral(y, driver(path, k));
        rhs = detail::add_paths(rhs, s);
        r.terms.emplace_back("ito_" + std::to_string(k + 1), s.terminal());
    }
    r.rhs = std::move(rhs);
    r.max_det_deviation = max_det_deviation(flows);
    detail::finish_report(r);
    return r;
}

inline ResidualReport verify_ito_identity_ito(const TimeForm& theta, const SdeSystem& sys, const Simplex& sigma,
                                              const BrownianPath& path, const QuadratureRule& rule) {
    detail::check_identity_inputs(theta, sys, sigma, path);
    const auto flows = simplex_flows(sys, sigma, rule, path);
    return verify_ito_identity_ito(theta, sys, sigma, path, rule, flows);
}

// ---------------------------------------------------------------------------
// Transport theorem
// ---------------------------------------------------------------------------

/// div_μ(f X) μ as a top form.
inline TimeForm divergence_density(const TimeForm& mu, const ScalarField& f, const TimeVectorField& X) {
    return density_form(divergence_field(mu, scale(f, X)), mu);
}

/// ∫_{φ_t σ} f_t μ = ∫_σ f_0 μ + ∫_0^t ∫_{φ_s σ} ∂f/∂t μ ds + ∫_0^t ∫_{φ_s σ} div_μ(f X0) μ ds
///                 + Σ_k ∫_0^t (∫_{φ_s σ} div_μ(f Xk) μ) o dB^k.
inline ResidualReport transport_residual(const ScalarField& f, const TimeForm& mu, const SdeSystem& sys, const Simplex& sigma,
                                         const BrownianPath& path, const QuadratureRule& rule,
                                         std::span<const FlowTrajectory> flows) {
    if (sigma.dim() != sigma.ambient_dim()) throw ArgumentError("transport_residual: simplex must be top-dimensional");
    if (mu.degree() != mu.dim()) throw ArgumentError("transport_residual: μ must be a volume form");
    const TimeForm fmu = density_form(f, mu);
    detail::check_identity_inputs(fmu, sys, sigma, path);

    ResidualReport r;
    r.identity = "transport";
    r.horizon = path.horizon();
    r.steps = path.steps();
    r.lhs = pulled_integral_path(fmu, sigma, rule, flows);

    const RealPath dt_term = time_integral(pulled_integral_path(density_form(time_derivative_field(f), mu), sigma, rule, flows));
    const RealPath drift_term = time_integral(pulled_integral_path(divergence_density(mu, f, sys.drift), sigma, rule, flows));
    RealPath rhs = r.lhs;
    std::fill(rhs.values.begin(), rhs.values.end(), r.lhs.values.front());
    r.terms.emplace_back("initial", r.lhs.values.front());
    rhs = detail::add_paths(rhs, dt_term);
    r.terms.emplace_back("time_derivative", dt_term.terminal());
    rhs = detail::add_paths(rhs, drift_term);
    r.terms.emplace_back("drift_divergence", drift_term.terminal());
    for (int k = 0; k < sys.drivers(); ++k) {
        const auto& X = sys.diffusions[static_cast<std::size_t>(k)];
        const RealPath y = pulled_integral_path(divergence_density(mu, f, X), sigma, rule, flows);
        const RealPath s = stratonovich_integral(y, driver(path, k));
        rhs = detail::add_paths(rhs, s);
        r.terms.emplace_back("divergence_" + std::to_string(k + 1), s.terminal());
    }
    r.rhs = std::move(rhs);
    r.max_det_deviation = max_det_deviation(flows);
    detail::finish_report(r);
    return r;
}

inline ResidualReport transport_residual(const ScalarField& f, const TimeForm& mu, const SdeSystem& sys, const Simplex& sigma,
                                         const BrownianPath& path, const QuadratureRule& rule) {
    if (path.drivers() != sys.drivers()) throw ArgumentError("transport_residual: driver count mismatch");
    const auto flows = simplex_flows(sys, sigma, rule, path);
    return transport_residual(f, mu, sys, sigma, path, rule, flows);
}

// ---------------------------------------------------------------------------
// Ensemble statistics
// ---------------------------------------------------------------------------

struct EnsembleSpec {
    int paths = 100;
    double horizon = 1.0;
    int steps = 64;
    std::uint64_t seed = 0;
    int workers = 1;
    /// bridge refinements applied to every base path
    int level = 0;

    [[nodiscard]] int fine_steps() const noexcept { return steps << level; }
};

/// Path i of an ensemble: an independent seed derived from the master seed,
/// refined `level` times by Brownian bridges.
inline BrownianPath ensemble_path(const EnsembleSpec& spec, int drivers, int i) {
    BrownianPath p = sample_brownian(drivers, spec.horizon, spec.steps, derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    for (int l = 0; l < spec.level; ++l) p = refine_brownian(p);
    return p;
}

struct CheckpointStat {
    double t = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    double target = 0.0;

    [[nodiscard]] double deviation() const noexcept { return mean - target; }
    /// |mean - target| in standard errors; 0 when both vanish.
    [[nodiscard]] double deviation_in_se() const noexcept {
        const double d = std::abs(deviation());
        if (d == 0.0) return 0.0;
        return std_error > 0.0 ? d / std_error : std::numeric_limits<double>::infinity();
    }
};

struct MartingaleReport {
    std::vector<CheckpointStat> checkpoints;
    /// max |∂θ/∂t + (½ Σ L²_{Xk} + L_{X0}) θ| coefficient over the σ nodes at t = 0
    double pde_residual = 0.0;
    int paths = 0;
    /// per-path ∫_{φ_t σ} θ_t, indexed [checkpoint][path]
    std::vector<std::vector<double>> samples;
};

/// Grid indices for t = T/4, T/2, T (nearest step).
inline std::vector<int> quarter_checkpoints(int steps) {
    return {static_cast<int>(std::lround(steps / 4.0)), static_cast<int>(std::lround(steps / 2.0)), steps};
}

/// For θ solving ∂θ/∂t = -(½ Σ L²_{Xk} + L_{X0}) θ, the ensemble mean of
/// ∫_{φ_t σ} θ_t should stay at ∫_σ θ_0.
inline MartingaleReport martingale_check(const TimeForm& theta, const SdeSystem& sys, const Simplex& sigma,
                                         const QuadratureRule& rule, const EnsembleSpec& spec) {
    if (spec.paths < 100) throw InsufficientEnsembleError("martingale_check: need at least 100 paths");
    if (theta.degree() != sigma.dim()) throw DegreeError("martingale_check: form degree must equal the simplex dimension");

    MartingaleReport rep;
    rep.paths = spec.paths;
    const auto nodes = quadrature_points(sigma, rule);

    // PDE residual at the initial nodes
    TimeForm pde = add(theta.time_derivative(), lie_derivative(sys.drift, theta));
    for (const auto& X : sys.diffusions) pde = add(pde, scale(0.5, lie_derivative_squared(X, theta)));
    for (const auto& x : nodes)
        for (int c = 0; c < static_cast<int>(pde.coefficients().size()); ++c)
            rep.pde_residual = std::max(rep.pde_residual, std::abs(pde.coefficient(0.0, x, c)));

    const int steps = spec.fine_steps();
    const auto idx = quarter_checkpoints(steps);
    const double target = integrate_pulled_form(theta, 0.0, sigma, identity_flow(sigma, rule), rule);
    rep.samples.assign(idx.size(), std::vector<double>(static_cast<std::size_t>(spec.paths)));
    parallel_for(static_cast<std::size_t>(spec.paths), spec.workers, [&](std::size_t i) {
        const auto path = ensemble_path(spec, sys.drivers(), static_cast<int>(i));
        const auto flows = integrate_ensemble(sys, nodes, path);
        for (std::size_t c = 0; c < idx.size(); ++c)
            rep.samples[c][i] = integrate_pulled_form(theta, path.time(idx[c]), sigma, snapshot(flows, idx[c]), rule);
    });
    for (std::size_t c = 0; c < idx.size(); ++c) {
        const auto st = sample_stats(rep.samples[c]);
        rep.checkpoints.push_back({spec.horizon * idx[c] / steps, st.mean, st.std_error, target});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Expectation derivative
// ---------------------------------------------------------------------------

/// ∂f/∂t + div_μ(f X0) + ½ Σ_k div_μ(div_μ(f Xk) Xk): the density whose
/// integral over φ_t σ has expectation d/dt E ∫_{φ_t σ} f μ.
inline ScalarField transport_generator_density(const ScalarField& f, const TimeForm& mu, const SdeSystem& sys) {
    ScalarField g = add(time_derivative_field(f), divergence_field(mu, scale(f, sys.drift)));
    for (const auto& X : sys.diffusions) {
        const ScalarField inner = divergence_field(mu, scale(f, X));
        g = add(g, scale(0.5, divergence_field(mu, scale(inner, X))));
    }
    return g;
}

/// The same density expanded with the divergence product rule:
/// ∂f/∂t + f (div X0 + ½ Σ (div Xk)²) + ½ Σ (Xk(f) div Xk + Xk(f div Xk)) + X0(f) + ½ Σ Xk(Xk(f)).
inline ScalarField expanded_generator_density(const ScalarField& f, const TimeForm& mu, const SdeSystem& sys) {
    ScalarField g = add(time_derivative_field(f), multiply(f, divergence_field(mu, sys.drift)));
    g = add(g, directional_derivative(sys.drift, f));
    for (const auto& X : sys.diffusions) {
        const ScalarField divX = divergence_field(mu, X);
        const ScalarField Xf = directional_derivative(X, f);
        g = add(g, scale(0.5, multiply(f, multiply(divX, divX))));
        g = add(g, scale(0.5, multiply(Xf, divX)));
        g = add(g, scale(0.5, directional_derivative(X, multiply(f, divX))));
        g = add(g, scale(0.5, directional_derivative(X, Xf)));
    }
    return g;
}

/// ∂f/∂t + X0(f) + ½ Σ Xk(Xk(f)): the generator form valid for
/// divergence-free fields.
inline ScalarField generator_density(const ScalarField& f, const SdeSystem& sys) {
    ScalarField g = add(time_derivative_field(f), directional_derivative(sys.drift, f));
    for (const auto& X : sys.diffusions) g = add(g, scale(0.5, directional_derivative(X, directional_derivative(X, f))));
    return g;
}

struct ExpectationDerivativeReport {
    double t = 0.0;
    double h = 0.0;
    int paths = 0;
    SampleStats lhs;        // five-point time derivative of ∫_{φ_t σ} f μ
    SampleStats rhs;        // ∫_{φ_t σ} (transport generator density) μ
    SampleStats generator;  // ∫_{φ_t σ} (∂f/∂t + ℒ f) μ
    SampleStats difference; // per-path lhs minus the compared right side
    double max_divergence = 0.0;
    bool divergence_free = false;
    std::vector<double> per_path_difference;
    std::string note = "right-side integrands are evaluated at the differentiation time t";

    [[nodiscard]] const SampleStats& compared() const noexcept { return divergence_free ? generator : rhs; }
    [[nodiscard]] double deviation_in_se() const noexcept {
        const double d = std::abs(difference.mean);
        if (d == 0.0) return 0.0;
        return difference.std_error > 0.0 ? d / difference.std_error : std::numeric_limits<double>::infinity();
    }
};

/// Compares d/dt E ∫_{φ_t σ} f_t μ (five-point stencil at t = T/2 with
/// h = T/16) against E ∫_{φ_t σ} of the transport generator density. Fields
/// whose divergence vanishes at every sampled node switch the comparison to
/// the generator form.
inline ExpectationDerivativeReport expectation_derivative_check(const ScalarField& f, const TimeForm& mu, const SdeSystem& sys,
                                                                const Simplex& sigma, const QuadratureRule& rule,
                                                                const EnsembleSpec& spec) {
    if (spec.paths < 100) throw InsufficientEnsembleError("expectation_derivative_check: need at least 100 paths");
    const int steps = spec.fine_steps();
    if (steps % 16 != 0) throw ArgumentError("expectation_derivative_check: steps must be a multiple of 16");
    if (sigma.dim() != sigma.ambient_dim()) throw ArgumentError("expectation_derivative_check: simplex must be top-dimensional");

    ExpectationDerivativeReport rep;
    rep.paths = spec.paths;
    const int jc = steps / 2;
    const int hj = steps / 16;
    rep.t = spec.horizon * jc / steps;
    rep.h = spec.horizon * hj / steps;

    const TimeForm fmu = density_form(f, mu);
    const TimeForm rhs_form = density_form(transport_generator_density(f, mu, sys), mu);
    const TimeForm gen_form = density_form(generator_density(f, sys), mu);
    std::vector<ScalarField> divs;
    divs.push_back(divergence_field(mu, sys.drift));
    for (const auto& X : sys.diffusions) divs.push_back(divergence_field(mu, X));

    const auto nodes = quadrature_points(sigma, rule);
    const auto n = static_cast<std::size_t>(spec.paths);
    std::vector<double> lhs(n), rhs(n), gen(n), maxdiv(n, 0.0);
    parallel_for(n, spec.workers, [&](std::size_t i) {
        const auto path = ensemble_path(spec, sys.drivers(), static_cast<int>(i));
        const auto flows = integrate_ensemble(sys, nodes, path);
        auto at = [&](const TimeForm& form, int j) {
            return integrate_pulled_form(form, path.time(j), sigma, snapshot(flows, j), rule);
        };
        lhs[i] = (-at(fmu, jc + 2 * hj) + 8.0 * at(fmu, jc + hj) - 8.0 * at(fmu, jc - hj) + at(fmu, jc - 2 * hj)) /
                 (12.0 * rep.h);
        rhs[i] = at(rhs_form, jc);
        gen[i] = at(gen_form, jc);
        const auto snap = snapshot(flows, jc);
        for (const auto& x : snap.positions)
            for (const auto& d : divs) maxdiv[i] = std::max(maxdiv[i], std::abs(d.value(rep.t, x)));
    });
    rep.max_divergence = *std::max_element(maxdiv.begin(), maxdiv.end());
    rep.divergence_free = rep.max_divergence <= 1e-8;
    rep.lhs = sample_stats(lhs);
    rep.rhs = sample_stats(rhs);
    rep.generator = sample_stats(gen);
    rep.per_path_difference.resize(n);
    const auto& cmp = rep.divergence_free ? gen : rhs;
    for (std::size_t i = 0; i < n; ++i) rep.per_path_difference[i] = lhs[i] - cmp[i];
    rep.difference = sample_stats(rep.per_path_difference);
    return rep;
}

// ---------------------------------------------------------------------------
// Continuity system and discrete Fubini
// ---------------------------------------------------------------------------

struct ContinuityReport {
    double drift_residual = 0.0;             // max |∂ρ/∂t + div_μ(ρ X0)|
    std::vector<double> noise_residuals;     // max |div_μ(ρ Xk)|, k = 1..m

    [[nodiscard]] double max_residual() const noexcept {
        double m = drift_residual;
        for (double r : noise_residuals) m = std::max(m, r);
        return m;
    }
    [[nodiscard]] bool solves(double tol) const noexcept { return max_residual() <= tol; }
};

inline ContinuityReport continuity_residual(const ScalarField& rho, const SdeSystem& sys, const TimeForm& mu,
                                            std::span<const Point> grid, std::span<const double> times) {
    ContinuityReport rep;
    const ScalarField drift_div = divergence_field(mu, scale(rho, sys.drift));
    std::vector<ScalarField> noise_div;
    for (const auto& X : sys.diffusions) noise_div.push_back(divergence_field(mu, scale(rho, X)));
    rep.noise_residuals.assign(noise_div.size(), 0.0);
    for (double t : times)
        for (const auto& x : grid) {
            rep.drift_residual = std::max(rep.drift_residual, std::abs(rho.dt(t, x) + drift_div.value(t, x)));
            for (std::size_t k = 0; k < noise_div.size(); ++k)
                rep.noise_residuals[k] = std::max(rep.noise_residuals[k], std::abs(noise_div[k].value(t, x)));
        }
    return rep;
}

struct FubiniGap {
    double node_sum = 0.0;  // Σ_q w_q (Σ_j Y_q,mid ΔB_j)
    double path_sum = 0.0;  // Σ_j (Σ_q w_q Y_q,mid) ΔB_j

    [[nodiscard]] double gap() const noexcept { return std::abs(node_sum - path_sum); }
};

/// Both orders of the weighted quadrature sum and the midpoint stochastic sum.
inline FubiniGap discrete_fubini(std::span<const double> weights, std::span<const RealPath> node_paths, const RealPath& b) {
    if (weights.size() != node_paths.size() || weights.empty()) throw ArgumentError("discrete_fubini: one path per weight required");
    FubiniGap g;
    RealPath combined;
    combined.times = node_paths.front().times;
    combined.values.assign(combined.times.size(), 0.0);
    for (std::size_t q = 0; q < weights.size(); ++q) {
        g.node_sum += weights[q] * stratonovich_integral(node_paths[q], b).terminal();
        for (std::size_t j = 0; j < combined.values.size(); ++j) combined.values[j] += weights[q] * node_paths[q].values[j];
    }
    g.path_sum = stratonovich_integral(combined, b).terminal();
    return g;
}

} // namespace stoflow
