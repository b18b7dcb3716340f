#include "bundlemart/config.hpp"
#include "bundlemart/models.hpp"
#include "bundlemart/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace bundlemart;
using nlohmann::json;

namespace {

constexpr int kUsageError = 2;

struct Overrides {
    std::string config_path;
    std::string experiment, model, out;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<int> paths, threads;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "TOML experiment configuration")->check(CLI::ExistingFile);
    cmd->add_option("--experiment", o.experiment, "experiment name (overrides the file)");
    cmd->add_option("--model", o.model, "model name (overrides the file)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--dt", o.dt, "time step");
    cmd->add_option("--paths", o.paths, "number of paths");
    cmd->add_option("--threads", o.threads, "worker threads (0: BUNDLEMART_THREADS or all cores)");
    cmd->add_option("--out", o.out, "output directory");
}

/// Config file plus flag overrides; all diagnostics (syntax, unknown keys, ranges) collected.
ParsedConfig load(const Overrides& o) {
    json j = json::object();
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        try {
            j = parse_toml(buf.str());
        } catch (const ConfigError& e) {
            return {ExperimentConfig{}, {{"", o.config_path + ": " + e.what()}}};
        }
    }
    if (!o.experiment.empty()) j["experiment"] = o.experiment;
    if (!o.model.empty()) j["model"] = o.model;
    if (!o.out.empty()) j["output_dir"] = o.out;
    if (o.seed) j["seed"] = *o.seed;
    if (o.dt) j["dt"] = *o.dt;
    if (o.paths) j["n_paths"] = *o.paths;
    if (o.threads) j["threads"] = *o.threads;
    ParsedConfig parsed = config_from_json(j);
    for (auto& d : validate(parsed.config)) parsed.diagnostics.push_back(std::move(d));
    return parsed;
}

void print_diagnostics(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) std::cerr << "error" << (d.field.empty() ? "" : " [" + d.field + "]") << ": " << d.message << '\n';
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

int inspect(const std::string& model, int chart, const std::string& coords) {
    const auto m = manifold_by_name(model);
    if (!m) {
        std::cerr << "error: unknown model '" << model << "'\n";
        return kUsageError;
    }
    const std::vector<double> x = parse_list(coords);
    const int charts = static_cast<int>(m->atlas().size());
    if (static_cast<int>(x.size()) != m->dim() || chart < 0 || chart >= charts) {
        std::cerr << "error: expected " << m->dim() << " coordinates and a chart in [0, " << charts << ")\n";
        return kUsageError;
    }
    const PointRef p{chart, Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()))};
    if (!m->in_domain(p)) {
        std::cerr << "error: point outside the domain of chart '" << m->chart(chart).name << "'\n";
        return kUsageError;
    }
    const Mat g = m->metric(p);
    const Christoffel gamma = m->christoffel(p);
    json metric = json::array(), christoffel = json::array();
    for (int i = 0; i < m->dim(); ++i) {
        json row = json::array(), block = json::array();
        for (int j = 0; j < m->dim(); ++j) {
            row.push_back(g(i, j));
            json inner = json::array();
            for (int k = 0; k < m->dim(); ++k) inner.push_back(gamma(i, j, k));
            block.push_back(inner);
        }
        metric.push_back(row);
        christoffel.push_back(block);
    }
    std::cout << json{{"model", model}, {"chart", chart}, {"x", x}, {"metric", metric}, {"christoffel", christoffel}}.dump(2)
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic harmonic-section experiments on charted manifolds and bundles"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    Overrides run_opts, validate_opts;
    auto* run_cmd = app.add_subcommand("run", "run an experiment and write report.json plus CSV files");
    add_overrides(run_cmd, run_opts);
    auto* validate_cmd = app.add_subcommand("validate", "check a configuration without running it");
    add_overrides(validate_cmd, validate_opts);
    app.add_subcommand("list-models", "list models and experiments");

    std::string model;
    int chart = 0;
    std::string coords;
    auto* inspect_cmd = app.add_subcommand("inspect", "metric and Christoffel symbols at a point, as JSON");
    inspect_cmd->add_option("--model", model, "manifold or bundle total space")->required();
    inspect_cmd->add_option("--chart", chart, "chart index");
    inspect_cmd->add_option("--x", coords, "comma-separated chart coordinates")->required();
    std::string manifest_model;
    auto* manifest_cmd = app.add_subcommand("manifest", "charts, group, connection and oracle formulas of a model");
    manifest_cmd->add_option("--model", manifest_model, "model name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*run_cmd) {
            const ParsedConfig parsed = load(run_opts);
            if (!parsed.diagnostics.empty()) {
                print_diagnostics(parsed.diagnostics);
                return exit_code(RunStatus::ConfigError);
            }
            const RunReport report = run(parsed.config);
            if (report.status == RunStatus::ConfigError) {
                std::cerr << "error: " << report.error << '\n';
                return exit_code(report.status);
            }
            const auto files = write_outputs(report);
            for (const auto& o : report.oracles)
                std::cout << (o.pass ? "pass  " : "FAIL  ") << o.name << "  value=" << o.value << '\n';
            std::cout << report.verdicts.size() << " verdicts, report: " << files.back() << '\n';
            if (report.status != RunStatus::Completed) std::cerr << "numerical failure: " << report.error << '\n';
            return exit_code(report.status);
        }
        if (*validate_cmd) {
            const ParsedConfig parsed = load(validate_opts);
            print_diagnostics(parsed.diagnostics);
            if (parsed.diagnostics.empty()) std::cout << "configuration is valid\n";
            return parsed.diagnostics.empty() ? 0 : exit_code(RunStatus::ConfigError);
        }
        if (app.got_subcommand("list-models")) {
            std::cout << "manifolds:";
            for (const auto& n : manifold_names()) std::cout << ' ' << n;
            std::cout << "\nbundles:";
            for (const auto& n : bundle_names()) std::cout << ' ' << n;
            std::cout << "\nexperiments:";
            for (const auto& n : experiment_names()) std::cout << ' ' << n;
            std::cout << '\n';
            return 0;
        }
        if (*inspect_cmd) return inspect(model, chart, coords);
        if (*manifest_cmd) {
            if (!is_known_model(manifest_model)) {
                std::cerr << "error: unknown model '" << manifest_model << "'\n";
                return kUsageError;
            }
            std::cout << model_manifest(manifest_model).dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(RunStatus::NumericalFailure);
    }
    return 0;
}
