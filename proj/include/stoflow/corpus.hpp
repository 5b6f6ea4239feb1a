#pragma once

// Named, parametrized constructors for every field, form and density used by
// experiments, so that experiment configs stay pure data.

#include "stoflow/core.hpp"
#include "stoflow/forms.hpp"
#include "stoflow/sde.hpp"
#include "stoflow/torus.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace stoflow::corpus {

using json = nlohmann::json;

struct Entry {
    std::string name;
    std::string kind;  // "field", "density" or "form"
    std::vector<std::string> params;
    std::string description;
};

inline const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries = {
        {"zero", "field", {"dim"}, "the zero vector field"},
        {"r1.linear_drift", "field", {"a", "dim"}, "a x1 d/dx1 (flow x -> e^{a t} x)"},
        {"r1.constant", "field", {"c", "dim"}, "c d/dx1"},
        {"r2.rotation", "field", {"omega"}, "omega (-x2, x1), divergence free"},
        {"torus.A", "field", {"k"}, "A_k = k2 cos(k.theta) d1 - k1 cos(k.theta) d2"},
        {"torus.B", "field", {"k"}, "B_k = k2 sin(k.theta) d1 - k1 sin(k.theta) d2"},
        {"torus.cos_theta1", "field", {}, "cos(theta1) d1, not divergence free"},
        {"density.one", "density", {}, "f = 1"},
        {"density.zero", "density", {}, "f = 0"},
        {"density.const", "density", {"value"}, "f = value"},
        {"density.exp_decay", "density", {"rate"}, "f = exp(-rate t)"},
        {"density.cos_theta1", "density", {}, "f = cos(theta1)"},
        {"density.cos_theta2", "density", {}, "f = cos(theta2)"},
        {"density.cos_mode", "density", {"k"}, "f = cos(k.theta)"},
        {"density.sin_mode", "density", {"k"}, "f = sin(k.theta)"},
        {"form.sin_dtheta1", "form", {}, "sin(theta1) dtheta1 on the torus"},
        {"form.dx", "form", {"dim", "i"}, "dx^i (i is 1-based)"},
        {"form.volume", "form", {"dim"}, "dx^1 ^ ... ^ dx^n"},
        {"form.heat_sine", "form", {"c", "phase"},
         "exp(c^2 t / 2) sin(x + phase) dx on R, solves d/dt theta = -(c^2/2) L^2_{d1} theta"},
        {"form.density", "form", {"density", "dim"}, "density f times the unit volume form"},
    };
    return entries;
}

inline const Entry& lookup(const std::string& name, const std::string& kind, const std::string& key) {
    for (const auto& e : registry())
        if (e.name == name && e.kind == kind) return e;
    throw ConfigError(key, "unknown " + kind + " '" + name + "'");
}

namespace detail {

inline const Entry& validated(const json& spec, const std::string& kind, const std::string& key) {
    if (!spec.is_object()) throw ConfigError(key, "expected an object");
    if (!spec.contains("name") || !spec["name"].is_string()) throw ConfigError(key + ".name", "missing corpus name");
    const Entry& e = lookup(spec["name"].get<std::string>(), kind, key + ".name");
    for (const auto& [k, v] : spec.items()) {
        if (k == "name" || (kind == "field" && k == "scale")) continue;
        if (std::find(e.params.begin(), e.params.end(), k) == e.params.end())
            throw ConfigError(key + "." + k, "unknown parameter for '" + e.name + "'");
    }
    return e;
}

template <typename T>
T param(const json& spec, const char* name, T fallback, const std::string& key) {
    if (!spec.contains(name)) return fallback;
    try {
        return spec[name].get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key + "." + name, "wrong type");
    }
}

inline torus::FourierMode mode(const json& spec, const std::string& key) {
    if (!spec.contains("k") || !spec["k"].is_array() || spec["k"].size() != 2)
        throw ConfigError(key + ".k", "expected a pair of integers");
    try {
        return torus::FourierMode(spec["k"][0].get<int>(), spec["k"][1].get<int>());
    } catch (const ArgumentError& e) {
        throw ConfigError(key + ".k", e.what());
    } catch (const json::exception&) {
        throw ConfigError(key + ".k", "expected a pair of integers");
    }
}

inline ScalarField analytic(ScalarFn value, GradientFn gradient, ScalarFn dt = {}) {
    ScalarField f;
    f.value = std::move(value);
    f.gradient = std::move(gradient);
    f.time_derivative = std::move(dt);
    return f;
}

} // namespace detail

inline TimeVectorField make_field(const json& spec, int dim, const std::string& key) {
    const Entry& e = detail::validated(spec, "field", key);
    TimeVectorField X;
    if (e.name == "zero") {
        X = TimeVectorField::zero(detail::param(spec, "dim", dim, key));
    } else if (e.name == "r1.linear_drift" || e.name == "r1.constant") {
        const int n = detail::param(spec, "dim", dim, key);
        if (e.name == "r1.linear_drift") {
            const double a = detail::param(spec, "a", 1.0, key);
            X = TimeVectorField(
                n, [a, n](double, const Point& x) { Vec v(n); v[0] = a * x[0]; return v; },
                [a, n](double, const Point&) { Mat J(n, n); J(0, 0) = a; return J; },
                [n](double, const Point&, const Vec&, const Vec&) { return Vec(n); });
        } else {
            const double c = detail::param(spec, "c", 1.0, key);
            X = TimeVectorField(
                n, [c, n](double, const Point&) { Vec v(n); v[0] = c; return v; },
                [n](double, const Point&) { return Mat(n, n); },
                [n](double, const Point&, const Vec&, const Vec&) { return Vec(n); });
        }
    } else if (e.name == "r2.rotation") {
        const double w = detail::param(spec, "omega", 1.0, key);
        X = TimeVectorField(
            2, [w](double, const Point& x) { return Vec{-w * x[1], w * x[0]}; },
            [w](double, const Point&) { Mat J(2, 2); J(0, 1) = -w; J(1, 0) = w; return J; });
    } else if (e.name == "torus.A") {
        X = torus::fourier_field_A(detail::mode(spec, key));
    } else if (e.name == "torus.B") {
        X = torus::fourier_field_B(detail::mode(spec, key));
    } else if (e.name == "torus.cos_theta1") {
        X = TimeVectorField(
            2, [](double, const Point& x) { return Vec{std::cos(x[0]), 0.0}; },
            [](double, const Point& x) { Mat J(2, 2); J(0, 0) = -std::sin(x[0]); return J; });
    }
    if (spec.contains("scale")) X = scale(detail::param(spec, "scale", 1.0, key), X);
    return X;
}

inline ScalarField make_density(const json& spec, const std::string& key) {
    const Entry& e = detail::validated(spec, "density", key);
    using detail::analytic;
    if (e.name == "density.one") return ScalarField::constant(1.0);
    if (e.name == "density.zero") return ScalarField::zero();
    if (e.name == "density.const") return ScalarField::constant(detail::param(spec, "value", 1.0, key));
    if (e.name == "density.exp_decay") {
        const double r = detail::param(spec, "rate", 1.0, key);
        return analytic([r](double t, const Point&) { return std::exp(-r * t); },
                        [](double, const Point& x) { return Vec(x.size()); },
                        [r](double t, const Point&) { return -r * std::exp(-r * t); });
    }
    if (e.name == "density.cos_theta1")
        return analytic([](double, const Point& x) { return std::cos(x[0]); },
                        [](double, const Point& x) { Vec g(x.size()); g[0] = -std::sin(x[0]); return g; });
    if (e.name == "density.cos_theta2")
        return analytic([](double, const Point& x) { return std::cos(x[1]); },
                        [](double, const Point& x) { Vec g(x.size()); g[1] = -std::sin(x[1]); return g; });
    const torus::FourierMode k = detail::mode(spec, key);
    if (e.name == "density.cos_mode")
        return analytic([k](double, const Point& x) { return std::cos(k.phase(x)); },
                        [k](double, const Point& x) { const double s = -std::sin(k.phase(x)); return Vec{k.k1 * s, k.k2 * s}; });
    return analytic([k](double, const Point& x) { return std::sin(k.phase(x)); },
                    [k](double, const Point& x) { const double c = std::cos(k.phase(x)); return Vec{k.k1 * c, k.k2 * c}; });
}

inline TimeForm make_form(const json& spec, int dim, const std::string& key) {
    const Entry& e = detail::validated(spec, "form", key);
    using detail::analytic;
    if (e.name == "form.sin_dtheta1") {
        return TimeForm(2, 1,
                        {analytic([](double, const Point& x) { return std::sin(x[0]); },
                                  [](double, const Point& x) { return Vec{std::cos(x[0]), 0.0}; }),
                         ScalarField::zero()});
    }
    if (e.name == "form.dx") {
        const int n = detail::param(spec, "dim", dim, key);
        const int i = detail::param(spec, "i", 1, key);
        if (i < 1 || i > n) throw ConfigError(key + ".i", "index out of range");
        std::vector<ScalarField> c(static_cast<std::size_t>(n), ScalarField::zero());
        c[static_cast<std::size_t>(i - 1)] = ScalarField::constant(1.0);
        return TimeForm(n, 1, std::move(c));
    }
    if (e.name == "form.volume") return TimeForm::top(detail::param(spec, "dim", dim, key), ScalarField::constant(1.0));
    if (e.name == "form.heat_sine") {
        const double c = detail::param(spec, "c", 1.0, key);
        const double ph = detail::param(spec, "phase", 0.0, key);
        const double r = 0.5 * c * c;
        ScalarField f = analytic([r, ph](double t, const Point& x) { return std::exp(r * t) * std::sin(x[0] + ph); },
                                 [r, ph](double t, const Point& x) { return Vec{std::exp(r * t) * std::cos(x[0] + ph)}; },
                                 [r, ph](double t, const Point& x) { return r * std::exp(r * t) * std::sin(x[0] + ph); });
        auto dt = std::make_shared<const TimeForm>(1, 1, std::vector<ScalarField>{time_derivative_field(f)});
        return TimeForm(1, 1, {f}, dt);
    }
    // form.density
    if (!spec.contains("density")) throw ConfigError(key + ".density", "missing density spec");
    const int n = detail::param(spec, "dim", dim, key);
    return density_form(make_density(spec["density"], key + ".density"), TimeForm::top(n, ScalarField::constant(1.0)));
}

/// {"drift": field, "diffusions": [fields]} or {"mode": [k1, k2], "drift": field}
/// (the latter expands to diffusions A_k, B_k on the torus).
inline SdeSystem make_system(const json& spec, const std::string& key) {
    if (!spec.is_object()) throw ConfigError(key, "expected an object");
    for (const auto& [k, v] : spec.items())
        if (k != "drift" && k != "diffusions" && k != "mode" && k != "dim") throw ConfigError(key + "." + k, "unknown key");
    int dim = spec.contains("mode") ? 2 : detail::param(spec, "dim", 2, key);
    TimeVectorField drift = spec.contains("drift") ? make_field(spec["drift"], dim, key + ".drift") : TimeVectorField::zero(dim);
    dim = drift.dim();
    std::vector<TimeVectorField> diffs;
    if (spec.contains("mode")) {
        if (spec.contains("diffusions")) throw ConfigError(key + ".diffusions", "cannot be combined with 'mode'");
        const auto k = detail::mode(json{{"k", spec["mode"]}}, key + ".mode");
        diffs = {torus::fourier_field_A(k), torus::fourier_field_B(k)};
    } else if (spec.contains("diffusions")) {
        if (!spec["diffusions"].is_array()) throw ConfigError(key + ".diffusions", "expected an array");
        for (std::size_t i = 0; i < spec["diffusions"].size(); ++i)
            diffs.push_back(make_field(spec["diffusions"][i], dim, key + ".diffusions[" + std::to_string(i) + "]"));
    }
    try {
        return SdeSystem(std::move(drift), std::move(diffs));
    } catch (const ArgumentError& e) {
        throw ConfigError(key, e.what());
    }
}

} // namespace stoflow::corpus
