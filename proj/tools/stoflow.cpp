// stoflow: run verification experiments from JSON configs.

#include "stoflow/stoflow.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

std::string summary_path(const std::string& csv) {
    std::filesystem::path p(csv);
    p.replace_extension(".json");
    return p.string();
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed_flag, std::string out, int workers, bool timing) {
    stoflow::ExperimentConfig cfg = stoflow::load_config(config_path);
    cfg.seed = stoflow::resolve_seed(cfg.seed, std::getenv("STOFLOW_SEED"), seed_flag);
    if (out.empty()) out = cfg.output;

    const stoflow::RunResult res = stoflow::run(cfg, {workers, timing});
    if (out.empty() || out == "-") {
        stoflow::write_csv(std::cout, res.rows);
        std::cerr << res.summary().dump() << '\n';
    } else {
        std::ofstream csv(out, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write '" + out + "'");
        stoflow::write_csv(csv, res.rows);
        std::ofstream js(summary_path(out), std::ios::binary);
        js << res.summary().dump(2) << '\n';
        std::cerr << res.experiment << ": " << (res.pass ? "pass" : "FAIL") << ", max_residual "
                  << stoflow::format_number(res.max_residual) << '\n';
    }
    if (!res.failure.empty()) std::cerr << "note: " << res.failure << '\n';
    return res.pass ? 0 : 1;
}

int cmd_order(const std::string& in_path) {
    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + in_path + "'");
    for (const auto& [name, order] : stoflow::estimate_order(stoflow::read_csv(in)))
        std::cout << name << ',' << stoflow::format_number(order) << '\n';
    return 0;
}

int cmd_list() {
    std::cout << "experiments:\n";
    for (const auto& e : stoflow::experiment_names()) std::cout << "  " << e << '\n';
    std::string kind;
    for (const auto& e : stoflow::corpus::registry()) {
        if (e.kind != kind) {
            kind = e.kind;
            std::cout << kind << "s:\n";
        }
        std::cout << "  " << e.name;
        if (!e.params.empty()) {
            std::cout << " {";
            for (std::size_t i = 0; i < e.params.size(); ++i) std::cout << (i ? ", " : "") << e.params[i];
            std::cout << '}';
        }
        std::cout << "  " << e.description << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic flow verification experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment config");
    std::string config, out;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool timing = false;
    run->add_option("--config", config, "experiment config (JSON)")->required();
    run->add_option("--seed", seed, "master seed, overrides STOFLOW_SEED and the config");
    run->add_option("--out", out, "CSV output path ('-' for stdout); the summary goes next to it as .json");
    run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    run->add_flag("--timing", timing, "fill the wall_ms column (output is then no longer reproducible)");

    auto* order = app.add_subcommand("order", "estimate convergence order from a results CSV");
    std::string in;
    order->add_option("--in", in, "results CSV")->required();

    auto* list = app.add_subcommand("list", "print the corpus registry");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config, seed, out, workers, timing);
        if (*order) return cmd_order(in);
        if (*list) return cmd_list();
    } catch (const stoflow::ConfigError& e) {
        std::cerr << "stoflow: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "stoflow: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
