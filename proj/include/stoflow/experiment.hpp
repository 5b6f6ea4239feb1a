#pragma once

// Config-driven experiment runner: JSON config in, CSV rows plus a JSON
// summary out. Rows are a pure function of the config and seed.

#include "stoflow/core.hpp"
#include "stoflow/corpus.hpp"
#include "stoflow/parallel.hpp"
#include "stoflow/quadrature.hpp"
#include "stoflow/rng.hpp"
#include "stoflow/sde.hpp"
#include "stoflow/stochastic.hpp"
#include "stoflow/torus.hpp"
#include "stoflow/verifier.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace stoflow {

using json = nlohmann::json;

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "ito_identity_stratonovich", "ito_identity_ito", "ito_identity_equivalence", "transport",
        "volume_conservation",       "martingale",       "expectation_derivative",   "continuity",
        "density_constancy",         "discrete_fubini",
    };
    return names;
}

struct ExperimentConfig {
    std::string experiment;
    json system = json::object();
    json simplex;
    json form;
    double horizon = 1.0;
    int steps = 64;
    int paths = 1;
    int levels = 1;
    std::uint64_t seed = 0;
    int quadrature_order = 5;
    std::string output;
    double tolerance = 1e-2;
    // experiment-specific extras
    int grid = 32;
    std::optional<double> min_order;
    double det_tolerance = 1e-2;
    double rel_tolerance = 0.0;
    std::string expect = "solution";  // or "rejection"
};

namespace detail {

template <typename T>
T config_value(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key, "wrong type");
    }
}

inline void require_positive(double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be positive");
}

} // namespace detail

/// Parses and validates a config; corpus names are resolved eagerly so an
/// unknown name fails here with the offending key.
inline ExperimentConfig parse_config(const json& j) {
    static const std::vector<std::string> known = {
        "experiment", "system",   "simplex", "form",      "horizon",       "steps",         "paths",
        "levels",     "seed",     "quadrature_order",     "output",        "tolerance",     "grid",
        "min_order",  "det_tolerance", "rel_tolerance",   "expect",
    };
    if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError(k, "unknown key");

    ExperimentConfig c;
    if (!j.contains("experiment")) throw ConfigError("experiment", "missing");
    c.experiment = detail::config_value<std::string>(j, "experiment");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end())
        throw ConfigError("experiment", "unknown experiment '" + c.experiment + "'");
    if (j.contains("system")) c.system = j["system"];
    if (j.contains("simplex")) c.simplex = j["simplex"];
    if (j.contains("form")) c.form = j["form"];
    if (j.contains("horizon")) c.horizon = detail::config_value<double>(j, "horizon");
    if (j.contains("steps")) c.steps = detail::config_value<int>(j, "steps");
    if (j.contains("paths")) c.paths = detail::config_value<int>(j, "paths");
    if (j.contains("levels")) c.levels = detail::config_value<int>(j, "levels");
    if (j.contains("seed")) c.seed = detail::config_value<std::uint64_t>(j, "seed");
    if (j.contains("quadrature_order")) c.quadrature_order = detail::config_value<int>(j, "quadrature_order");
    if (j.contains("output")) c.output = detail::config_value<std::string>(j, "output");
    if (j.contains("tolerance")) c.tolerance = detail::config_value<double>(j, "tolerance");
    if (j.contains("grid")) c.grid = detail::config_value<int>(j, "grid");
    if (j.contains("min_order")) c.min_order = detail::config_value<double>(j, "min_order");
    if (j.contains("det_tolerance")) c.det_tolerance = detail::config_value<double>(j, "det_tolerance");
    if (j.contains("rel_tolerance")) c.rel_tolerance = detail::config_value<double>(j, "rel_tolerance");
    if (j.contains("expect")) c.expect = detail::config_value<std::string>(j, "expect");

    detail::require_positive(c.horizon, "horizon");
    detail::require_positive(c.steps, "steps");
    detail::require_positive(c.paths, "paths");
    detail::require_positive(c.levels, "levels");
    detail::require_positive(c.tolerance, "tolerance");
    detail::require_positive(c.grid, "grid");
    detail::require_positive(c.det_tolerance, "det_tolerance");
    if (c.rel_tolerance < 0.0) throw ConfigError("rel_tolerance", "must be non-negative");
    if (c.quadrature_order < 1 || c.quadrature_order > 7) throw ConfigError("quadrature_order", "must be in 1..7");
    if (c.levels > 12) throw ConfigError("levels", "at most 12 refinement levels");
    if (c.expect != "solution" && c.expect != "rejection") throw ConfigError("expect", "must be 'solution' or 'rejection'");

    const SdeSystem sys = corpus::make_system(c.system, "system");
    if (!c.simplex.is_null()) {
        if (!c.simplex.is_object() || !c.simplex.contains("vertices")) throw ConfigError("simplex", "expected {\"vertices\": [...]}");
        for (const auto& [k, v] : c.simplex.items())
            if (k != "vertices") throw ConfigError("simplex." + k, "unknown key");
    }
    if (!c.form.is_null()) {
        const bool density_input = c.experiment == "transport" || c.experiment == "volume_conservation" ||
                                   c.experiment == "expectation_derivative" || c.experiment == "continuity" ||
                                   c.experiment == "density_constancy";
        if (density_input)
            (void)corpus::make_density(c.form, "form");
        else
            (void)corpus::make_form(c.form, sys.dim(), "form");
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

/// Command-line seed beats STOFLOW_SEED, which beats the config seed.
inline std::uint64_t resolve_seed(std::uint64_t config_seed, const char* env, std::optional<std::uint64_t> flag) {
    if (flag) return *flag;
    if (env != nullptr && *env != '\0') {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(env, &used, 0);
            if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("STOFLOW_SEED", "not an unsigned 64-bit integer");
        }
    }
    return config_seed;
}

// ---------------------------------------------------------------------------
// Rows, CSV and order estimation
// ---------------------------------------------------------------------------

struct ResultRow {
    std::string experiment;
    int level = 0;
    int path = -1;  // -1 is the "mean" row
    double t = 0.0;
    double value = 0.0;
    std::optional<double> std_error;
    std::optional<double> wall_ms;

    [[nodiscard]] bool is_mean() const noexcept { return path < 0; }
};

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

inline constexpr const char* kCsvHeader = "experiment,level,path,t,value,stderr,wall_ms";

inline void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kCsvHeader << "\r\n";
    for (const auto& r : rows) {
        out << csv_field(r.experiment) << ',' << r.level << ',' << (r.is_mean() ? std::string("mean") : std::to_string(r.path))
            << ',' << format_number(r.t) << ',' << format_number(r.value) << ','
            << (r.std_error ? format_number(*r.std_error) : std::string()) << ','
            << (r.wall_ms ? format_number(*r.wall_ms) : std::string()) << "\r\n";
    }
}

namespace detail {

inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, any = false;
    char ch;
    auto end_field = [&] { rec.push_back(field); field.clear(); };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(rec));
        rec.clear();
        any = false;
    };
    while (in.get(ch)) {
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
            any = true;
        } else if (ch == ',') {
            end_field();
            any = true;
        } else if (ch == '\r') {
            if (in.peek() == '\n') in.get(ch);
            end_record();
        } else if (ch == '\n') {
            end_record();
        } else {
            field += ch;
            any = true;
        }
    }
    if (any || !field.empty() || !rec.empty()) end_record();
    return records;
}

inline double parse_number(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ArgumentError(std::string("read_csv: malformed ") + what + " '" + s + "'");
    }
}

} // namespace detail

inline std::vector<ResultRow> read_csv(std::istream& in) {
    auto records = detail::parse_csv(in);
    if (records.empty()) throw ArgumentError("read_csv: empty input");
    std::string header;
    for (std::size_t i = 0; i < records[0].size(); ++i) header += (i ? "," : "") + records[0][i];
    if (header != kCsvHeader) throw ArgumentError("read_csv: unexpected header '" + header + "'");
    std::vector<ResultRow> rows;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& f = records[i];
        if (f.size() != 7) throw ArgumentError("read_csv: row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
        ResultRow r;
        r.experiment = f[0];
        r.level = static_cast<int>(detail::parse_number(f[1], "level"));
        r.path = f[2] == "mean" ? -1 : static_cast<int>(detail::parse_number(f[2], "path"));
        r.t = detail::parse_number(f[3], "t");
        r.value = detail::parse_number(f[4], "value");
        if (!f[5].empty()) r.std_error = detail::parse_number(f[5], "stderr");
        if (!f[6].empty()) r.wall_ms = detail::parse_number(f[6], "wall_ms");
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Least-squares slope of log(median |value|) against log(Δt) over levels,
/// with Δt halving per level. Uses the per-path rows at each level's final
/// checkpoint.
inline std::map<std::string, double> estimate_order(const std::vector<ResultRow>& rows) {
    std::map<std::string, std::map<int, std::vector<const ResultRow*>>> groups;
    for (const auto& r : rows)
        if (!r.is_mean()) groups[r.experiment][r.level].push_back(&r);
    if (groups.empty()) throw InsufficientDataError("estimate_order: no per-path rows");

    std::map<std::string, double> orders;
    for (const auto& [name, levels] : groups) {
        std::vector<double> xs, ys;
        for (const auto& [level, rs] : levels) {
            double tmax = -std::numeric_limits<double>::infinity();
            for (const auto* r : rs) tmax = std::max(tmax, r->t);
            std::vector<double> v;
            for (const auto* r : rs)
                if (r->t == tmax) v.push_back(std::abs(r->value));
            std::sort(v.begin(), v.end());
            const std::size_t n = v.size();
            const double med = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
            if (!(med > 0.0)) continue;
            xs.push_back(-static_cast<double>(level) * std::log(2.0));
            ys.push_back(std::log(med));
        }
        if (xs.size() < 3)
            throw InsufficientDataError("estimate_order: '" + name + "' needs at least 3 levels with nonzero residuals");
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= static_cast<double>(xs.size());
        my /= static_cast<double>(ys.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        orders[name] = sxy / sxx;
    }
    return orders;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct RunOptions {
    int workers = 1;
    bool timing = false;
};

struct RunResult {
    std::string experiment;
    std::vector<ResultRow> rows;
    bool pass = false;
    double max_residual = 0.0;
    std::optional<double> order_estimate;
    std::uint64_t seed = 0;
    /// why the run failed beyond tolerance, e.g. a blow-up
    std::string failure;

    [[nodiscard]] json summary() const {
        return json{{"experiment", experiment},
                    {"pass", pass},
                    {"max_residual", max_residual},
                    {"order_estimate", order_estimate ? json(*order_estimate) : json(nullptr)},
                    {"seed", seed}};
    }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

inline Simplex config_simplex(const ExperimentConfig& c) {
    if (c.simplex.is_null()) throw ConfigError("simplex", "required by '" + c.experiment + "'");
    std::vector<Point> verts;
    try {
        for (const auto& v : c.simplex["vertices"]) {
            const auto xs = v.get<std::vector<double>>();
            if (xs.empty() || xs.size() > static_cast<std::size_t>(kMaxDim)) throw ConfigError("simplex.vertices", "bad vertex size");
            verts.push_back(Point::from(xs));
        }
        return Simplex(std::move(verts));
    } catch (const json::exception&) {
        throw ConfigError("simplex.vertices", "expected an array of coordinate arrays");
    } catch (const ArgumentError& e) {
        throw ConfigError("simplex.vertices", e.what());
    }
}

inline ScalarField config_density(const ExperimentConfig& c) {
    return c.form.is_null() ? ScalarField::constant(1.0) : corpus::make_density(c.form, "form");
}

inline TimeForm config_form(const ExperimentConfig& c, int dim) {
    if (c.form.is_null()) throw ConfigError("form", "required by '" + c.experiment + "'");
    return corpus::make_form(c.form, dim, "form");
}

inline BrownianPath level_path(const ExperimentConfig& c, int drivers, int path, int level) {
    BrownianPath p = sample_brownian(drivers, c.horizon, c.steps, derive_seed(c.seed, static_cast<std::uint64_t>(path)));
    for (int l = 0; l < level; ++l) p = refine_brownian(p);
    return p;
}

struct Cell {
    std::vector<ResultRow> rows;
    double max_residual = 0.0;
    double det_deviation = 0.0;
    std::string failure;
};

inline void add_mean_rows(std::vector<ResultRow>& out, const std::string& name, int level, const std::vector<ResultRow>& rows) {
    std::map<double, std::vector<double>> by_t;
    for (const auto& r : rows) by_t[r.t].push_back(std::abs(r.value));
    for (const auto& [t, vs] : by_t) {
        const auto st = sample_stats(vs);
        out.push_back({name, level, -1, t, st.mean, st.std_error, std::nullopt});
    }
}

/// Pathwise identities: one cell per (level, path), reported at the horizon.
/// max_residual covers the whole grid of the finest level.
inline RunResult run_pathwise(const ExperimentConfig& c, const RunOptions& opt) {
    const SdeSystem sys = corpus::make_system(c.system, "system");
    const Simplex sigma = config_simplex(c);
    const QuadratureRule rule = standard_rule(sigma.dim(), c.quadrature_order);
    const TimeForm mu = TimeForm::top(sys.dim(), ScalarField::constant(1.0));
    const bool density_input = c.experiment == "transport" || c.experiment == "volume_conservation";
    const ScalarField f = density_input ? config_density(c) : ScalarField::constant(1.0);
    const TimeForm theta = density_input ? density_form(f, mu) : config_form(c, sys.dim());
    if (theta.dim() != sys.dim()) throw ConfigError("form", "dimension differs from the system");

    const auto ncell = static_cast<std::size_t>(c.levels) * static_cast<std::size_t>(c.paths);
    std::vector<Cell> cells(ncell);
    parallel_for(ncell, opt.workers, [&](std::size_t idx) {
        const int level = static_cast<int>(idx / static_cast<std::size_t>(c.paths));
        const int path_index = static_cast<int>(idx % static_cast<std::size_t>(c.paths));
        Cell& cell = cells[idx];
        const auto start = Clock::now();
        RealPath value;
        try {
            const BrownianPath path = level_path(c, sys.drivers(), path_index, level);
            const auto flows = simplex_flows(sys, sigma, rule, path);
            if (c.experiment == "ito_identity_stratonovich") {
                value = verify_ito_identity_stratonovich(theta, sys, sigma, path, rule, flows).residual;
            } else if (c.experiment == "ito_identity_ito") {
                value = verify_ito_identity_ito(theta, sys, sigma, path, rule, flows).residual;
            } else if (c.experiment == "ito_identity_equivalence") {
                const auto a = verify_ito_identity_stratonovich(theta, sys, sigma, path, rule, flows);
                const auto b = verify_ito_identity_ito(theta, sys, sigma, path, rule, flows);
                value = a.rhs;
                for (std::size_t j = 0; j < value.values.size(); ++j) value.values[j] -= b.rhs.values[j];
            } else if (c.experiment == "transport") {
                value = transport_residual(f, mu, sys, sigma, path, rule, flows).residual;
            } else {
                const auto rep = transport_residual(f, mu, sys, sigma, path, rule, flows);
                value = rep.lhs;
                for (double& v : value.values) v -= rep.lhs.values.front();
                cell.det_deviation = rep.max_det_deviation;
            }
        } catch (const BlowUpError& e) {
            cell.failure = "path " + std::to_string(path_index) + ", level " + std::to_string(level) + ": " + e.what();
            return;
        }
        for (double v : value.values) cell.max_residual = std::max(cell.max_residual, std::abs(v));
        const std::optional<double> wall = opt.timing ? std::optional<double>(elapsed_ms(start)) : std::nullopt;
        cell.rows.push_back({c.experiment, level, path_index, value.times.back(), value.values.back(), std::nullopt, wall});
    });

    RunResult res;
    res.experiment = c.experiment;
    double det_dev = 0.0;
    for (int level = 0; level < c.levels; ++level) {
        std::vector<ResultRow> level_rows;
        for (int p = 0; p < c.paths; ++p) {
            const Cell& cell = cells[static_cast<std::size_t>(level) * static_cast<std::size_t>(c.paths) + static_cast<std::size_t>(p)];
            if (!cell.failure.empty() && res.failure.empty()) res.failure = cell.failure;
            level_rows.insert(level_rows.end(), cell.rows.begin(), cell.rows.end());
            if (level == c.levels - 1) {
                res.max_residual = std::max(res.max_residual, cell.max_residual);
                det_dev = std::max(det_dev, cell.det_deviation);
            }
        }
        res.rows.insert(res.rows.end(), level_rows.begin(), level_rows.end());
        if (c.paths > 1) add_mean_rows(res.rows, c.experiment, level, level_rows);
    }
    res.pass = res.failure.empty() && res.max_residual <= c.tolerance;
    if (c.experiment == "volume_conservation" && det_dev > c.det_tolerance) {
        res.pass = false;
        res.failure = "max |det J - 1| = " + format_number(det_dev) + " exceeds det_tolerance";
    }
    if (c.levels >= 3 && res.failure.empty()) {
        try {
            res.order_estimate = estimate_order(res.rows).at(c.experiment);
        } catch (const InsufficientDataError&) {
        }
    }
    if (c.min_order && (!res.order_estimate || *res.order_estimate < *c.min_order)) res.pass = false;
    return res;
}

inline EnsembleSpec ensemble_spec(const ExperimentConfig& c, const RunOptions& opt, int level) {
    EnsembleSpec s;
    s.paths = c.paths;
    s.horizon = c.horizon;
    s.steps = c.steps;
    s.seed = c.seed;
    s.workers = opt.workers;
    s.level = level;
    return s;
}

inline RunResult run_martingale(const ExperimentConfig& c, const RunOptions& opt) {
    const SdeSystem sys = corpus::make_system(c.system, "system");
    const Simplex sigma = config_simplex(c);
    const QuadratureRule rule = standard_rule(sigma.dim(), c.quadrature_order);
    const TimeForm theta = config_form(c, sys.dim());
    RunResult res;
    res.experiment = c.experiment;
    res.pass = true;
    for (int level = 0; level < c.levels; ++level) {
        const auto start = Clock::now();
        std::optional<decltype(martingale_check(theta, sys, sigma, rule, ensemble_spec(c, opt, level)))> maybe;
        try {
            maybe.emplace(martingale_check(theta, sys, sigma, rule, ensemble_spec(c, opt, level)));
        } catch (const BlowUpError& e) {
            res.pass = false;
            res.failure = "level " + std::to_string(level) + ": " + e.what();
            break;
        }
        const auto& rep = *maybe;
        const std::optional<double> wall = opt.timing ? std::optional<double>(elapsed_ms(start)) : std::nullopt;
        for (int p = 0; p < c.paths; ++p)
            for (std::size_t k = 0; k < rep.checkpoints.size(); ++k)
                res.rows.push_back({c.experiment, level, p, rep.checkpoints[k].t, rep.samples[k][static_cast<std::size_t>(p)],
                                    std::nullopt, wall});
        for (const auto& cp : rep.checkpoints) {
            res.rows.push_back({c.experiment, level, -1, cp.t, cp.deviation(), cp.std_error, std::nullopt});
            res.max_residual = std::max(res.max_residual, std::abs(cp.deviation()));
            if (std::abs(cp.deviation()) > c.tolerance * cp.std_error + 1e-12 * (1.0 + std::abs(cp.target))) res.pass = false;
        }
    }
    return res;
}

inline RunResult run_expectation(const ExperimentConfig& c, const RunOptions& opt) {
    const SdeSystem sys = corpus::make_system(c.system, "system");
    const Simplex sigma = config_simplex(c);
    const QuadratureRule rule = standard_rule(sigma.dim(), c.quadrature_order);
    const TimeForm mu = TimeForm::top(sys.dim(), ScalarField::constant(1.0));
    const ScalarField f = config_density(c);
    RunResult res;
    res.experiment = c.experiment;
    res.pass = true;
    for (int level = 0; level < c.levels; ++level) {
        const auto start = Clock::now();
        std::optional<decltype(expectation_derivative_check(f, mu, sys, sigma, rule, ensemble_spec(c, opt, level)))> maybe;
        try {
            maybe.emplace(expectation_derivative_check(f, mu, sys, sigma, rule, ensemble_spec(c, opt, level)));
        } catch (const BlowUpError& e) {
            res.pass = false;
            res.failure = "level " + std::to_string(level) + ": " + e.what();
            break;
        }
        const auto& rep = *maybe;
        const std::optional<double> wall = opt.timing ? std::optional<double>(elapsed_ms(start)) : std::nullopt;
        for (int p = 0; p < c.paths; ++p)
            res.rows.push_back({c.experiment, level, p, rep.t, rep.per_path_difference[static_cast<std::size_t>(p)], std::nullopt, wall});
        res.rows.push_back({c.experiment, level, -1, rep.t, rep.difference.mean, rep.difference.std_error, std::nullopt});
        const double d = std::abs(rep.difference.mean);
        res.max_residual = std::max(res.max_residual, d);
        if (d > c.tolerance * rep.difference.std_error + c.rel_tolerance * std::abs(rep.compared().mean) + 1e-12) res.pass = false;
    }
    return res;
}

inline std::vector<Point> config_grid(const ExperimentConfig& c, int dim) {
    if (dim == 2) return torus::grid(c.grid);
    std::vector<Point> g;
    const int n = c.grid;
    auto coord = [n](int i) { return n == 1 ? 0.0 : -1.0 + 2.0 * i / (n - 1); };
    if (dim == 1)
        for (int i = 0; i < n; ++i) g.push_back(Point{coord(i)});
    else
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) g.push_back(Point{coord(i), coord(j), coord(k)});
    return g;
}

inline RunResult run_continuity(const ExperimentConfig& c) {
    const SdeSystem sys = corpus::make_system(c.system, "system");
    const TimeForm mu = TimeForm::top(sys.dim(), ScalarField::constant(1.0));
    const ScalarField rho = config_density(c);
    const auto grid = config_grid(c, sys.dim());
    RunResult res;
    res.experiment = c.experiment;
    for (double t : {0.0, 0.5 * c.horizon, c.horizon}) {
        const double ts[] = {t};
        const auto rep = continuity_residual(rho, sys, mu, grid, ts);
        res.rows.push_back({c.experiment, 0, 0, t, rep.drift_residual, std::nullopt, std::nullopt});
        for (std::size_t k = 0; k < rep.noise_residuals.size(); ++k)
            res.rows.push_back({c.experiment, 0, static_cast<int>(k + 1), t, rep.noise_residuals[k], std::nullopt, std::nullopt});
        res.max_residual = std::max(res.max_residual, rep.max_residual());
    }
    const bool solves = res.max_residual <= c.tolerance;
    res.pass = c.expect == "solution" ? solves : !solves;
    return res;
}

inline RunResult run_constancy(const ExperimentConfig& c) {
    if (!c.system.is_object() || !c.system.contains("mode")) throw ConfigError("system.mode", "required by 'density_constancy'");
    const auto k = corpus::detail::mode(json{{"k", c.system["mode"]}}, "system.mode");
    const SdeSystem sys = corpus::make_system(c.system, "system");
    const ScalarField rho0 = config_density(c);
    const auto grid = torus::grid(c.grid);
    RunResult res;
    res.experiment = c.experiment;
    torus::ConstancyReport rep;
    try {
        rep = torus::density_constancy_experiment(k, rho0, sys.drift, grid, c.horizon, c.steps);
    } catch (const PreconditionError& e) {
        res.failure = e.what();
        return res;
    }
    for (std::size_t i = 0; i < rep.constraints.size(); ++i)
        res.rows.push_back({c.experiment, 0, static_cast<int>(i), 0.0, rep.constraints[i].value, std::nullopt, std::nullopt});
    res.rows.push_back({c.experiment, 0, static_cast<int>(rep.constraints.size()), c.horizon, rep.max_deviation, std::nullopt,
                        std::nullopt});
    if (rep.certified_constant) {
        res.max_residual = rep.max_deviation;
        res.pass = c.expect == "solution" && rep.max_deviation <= c.tolerance;
    } else {
        res.max_residual = rep.worst().value;
        res.pass = c.expect == "rejection";
        res.failure = "violated: " + rep.worst().name;
    }
    return res;
}

/// Random cases around the configured simplex: per-node integrands of the
/// first Stratonovich term against driver 1, summed in both orders.
inline RunResult run_fubini(const ExperimentConfig& c, const RunOptions& opt) {
    const SdeSystem sys = corpus::make_system(c.system, "system");
    const Simplex base = config_simplex(c);
    const QuadratureRule rule = standard_rule(base.dim(), c.quadrature_order);
    const TimeForm theta = config_form(c, sys.dim());
    const TimeForm integrand = sys.drivers() > 0 ? lie_derivative(sys.diffusions[0], theta) : theta;
    const int drivers = std::max(1, sys.drivers());

    std::vector<FubiniGap> gaps(static_cast<std::size_t>(c.paths));
    parallel_for(gaps.size(), opt.workers, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(c.seed, i);
        std::vector<Point> verts = base.vertices();
        for (std::size_t v = 0; v < verts.size(); ++v)
            for (int d = 0; d < verts[v].size(); ++d)
                verts[v][d] += 0.05 * counter_normal(seed, 7u, v * kMaxDim + static_cast<std::size_t>(d), 0u);
        const Simplex sigma(std::move(verts));
        const BrownianPath path = sample_brownian(drivers, c.horizon, c.steps, seed);
        std::vector<FlowTrajectory> flows;
        if (sys.drivers() > 0) {
            flows = simplex_flows(sys, sigma, rule, path);
        } else {
            const auto pts = quadrature_points(sigma, rule);
            flows = integrate_ensemble(sys, pts, sample_brownian(0, c.horizon, c.steps, seed));
        }
        std::vector<RealPath> node_paths(rule.size());
        for (std::size_t q = 0; q < rule.size(); ++q) {
            node_paths[q].times = path.times();
            for (int j = 0; j <= path.steps(); ++j)
                node_paths[q].values.push_back(pullback_value(flows[q].positions[static_cast<std::size_t>(j)],
                                                              flows[q].jacobians[static_cast<std::size_t>(j)], integrand,
                                                              path.time(j), sigma.edges()));
        }
        gaps[i] = discrete_fubini(rule.weights, node_paths, driver(path, 0));
    });
    RunResult res;
    res.experiment = c.experiment;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        res.rows.push_back({c.experiment, 0, static_cast<int>(i), c.horizon, gaps[i].gap(), std::nullopt, std::nullopt});
        res.max_residual = std::max(res.max_residual, gaps[i].gap());
    }
    res.pass = res.max_residual <= c.tolerance;
    return res;
}

} // namespace detail

/// Executes the configured experiment. Blow-ups yield the rows computed so
/// far and a failing status; config problems throw ConfigError.
inline RunResult run(const ExperimentConfig& c, const RunOptions& opt = {}) {
    RunResult res;
    const std::string& e = c.experiment;
    if (e == "martingale")
        res = detail::run_martingale(c, opt);
    else if (e == "expectation_derivative")
        res = detail::run_expectation(c, opt);
    else if (e == "continuity")
        res = detail::run_continuity(c);
    else if (e == "density_constancy")
        res = detail::run_constancy(c);
    else if (e == "discrete_fubini")
        res = detail::run_fubini(c, opt);
    else
        res = detail::run_pathwise(c, opt);
    res.seed = c.seed;
    return res;
}

} // namespace stoflow
