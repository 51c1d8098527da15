#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "loclearn/experiment.hpp"
#include "loclearn/io.hpp"
#include "loclearn/kernels.hpp"

namespace {

using namespace loclearn;

Constants env_constants() {
    const char* path = std::getenv("LOCLEARN_CONSTANTS");
    if (path == nullptr || *path == '\0') return {};
    return Constants::from_json(load_json_file(path));
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot write output file: " + out_path);
    out << text;
}

int cmd_preprocess(Real L, Real epsilon, std::size_t dims, std::uint64_t seed,
                   const std::string& out_path) {
    const Partition p = Partition::preprocess(L, epsilon, dims, seed);
    emit(out_path, p.to_json().dump(2) + "\n");
    return 0;
}

// Session configs come in two forms: a synthetic setup
//   {"L":..,"epsilon":..,"dims":..,"seed":..,"distribution":{..}}
// or a checkpoint wrapper written by --save-session
//   {"kind":"checkpoint","distribution":{..},"session":{..}}.
QuerySession session_from_config(const nlohmann::json& cfg, const Constants& constants) {
    if (cfg.value("kind", "") == "checkpoint") {
        const auto dist = SyntheticDistribution::from_json(cfg.at("distribution"));
        const auto& snapshot = cfg.at("session");
        const auto seed = snapshot.at("pool").at("seed").get<std::uint64_t>();
        return QuerySession::restore(snapshot, synthetic_label_source(dist, seed));
    }
    const auto dist = SyntheticDistribution::from_json(cfg.at("distribution"));
    Constants c = constants;
    if (cfg.contains("constants")) c = Constants::from_json(cfg.at("constants"));
    return make_synthetic_session(cfg.at("L").get<Real>(), cfg.at("epsilon").get<Real>(),
                                  cfg.at("dims").get<std::size_t>(),
                                  dist, cfg.at("seed").get<std::uint64_t>(), c);
}

int cmd_query(const std::string& config_path, const std::string& data_path,
              const std::string& out_path, const std::string& save_session,
              const Constants& constants) {
    const nlohmann::json cfg = load_json_file(config_path);
    QuerySession session = session_from_config(cfg, constants);
    if (!data_path.empty()) {
        const CsvDataset queries = read_csv_dataset(data_path);
        if (queries.dims != session.partition().dims())
            throw ConfigError("query CSV dims do not match the session");
        std::ostringstream os;
        for (std::size_t k = 0; k < queries.dims; ++k) os << "x" << (k + 1) << ",";
        os << "answer\n";
        for (const auto& x : queries.points) {
            for (Real c : x) os << format_real(c) << ",";
            os << format_real(session.query(x)) << "\n";
        }
        emit(out_path, os.str());
    }
    if (!save_session.empty()) {
        nlohmann::json wrapper;
        wrapper["kind"] = "checkpoint";
        wrapper["distribution"] = cfg.at("distribution");
        wrapper["session"] = session.checkpoint();
        write_json_file(save_session, wrapper);
    }
    const auto budget = session.budget_report();
    std::fprintf(stderr, "distinct labels: %zu\n", budget.distinct_labels);
    return 0;
}

int cmd_estimate_error(Real L, Real epsilon, std::size_t dims, std::uint64_t seed,
                       const std::string& config_path, const std::string& out_path,
                       const Constants& constants) {
    SyntheticDistribution dist;
    if (!config_path.empty()) {
        dist = SyntheticDistribution::from_json(load_json_file(config_path));
    } else {
        dist = SyntheticDistribution::uniform_noise(dims, 0.5, 1.0);
    }
    const ErrorEstimate est = estimate_error(L, epsilon, dims, dist, seed, constants);
    emit(out_path, est.to_json().dump(2) + "\n");
    return 0;
}

int cmd_nw_error(const std::string& data_path, Real epsilon, Real delta, std::uint64_t seed,
                 const std::string& kde_mode, const std::string& out_path) {
    ExperimentConfig config;
    config.mode = ExperimentConfig::Mode::kNwEst;
    config.epsilon = epsilon;
    config.delta = delta;
    config.seeds = {seed};
    config.data_csv = data_path;
    config.kde_mode = KdeMode::parse(kde_mode);
    const ResultTable table = run_experiment(config);
    emit(out_path, table.extra.front().dump(2) + "\n");
    return 0;
}

int cmd_properties(std::uint64_t seed) {
    const auto checks = run_property_suite(seed);
    bool all = true;
    for (const auto& check : checks) {
        std::printf("%-40s %s %s\n", check.name.c_str(), check.passed ? "pass" : "FAIL",
                    check.detail.c_str());
        all = all && check.passed;
    }
    return all ? 0 : 1;
}

int cmd_experiment(const std::string& config_path, const std::string& out_override,
                   const Constants& env) {
    nlohmann::json cfg = load_json_file(config_path);
    if (!cfg.contains("constants")) cfg["constants"] = env.to_json();
    const ExperimentConfig config = ExperimentConfig::from_json(cfg);
    const ResultTable table = run_experiment(config);
    const std::string out_path = out_override.empty() ? config.out_path : out_override;
    emit(out_path, table.to_csv(config.constants));
    if (config.mode == ExperimentConfig::Mode::kNwEst && !out_path.empty()) {
        nlohmann::json per_seed = nlohmann::json::array();
        for (const auto& extra : table.extra) per_seed.push_back(extra);
        write_json_file(out_path + ".json", per_seed);
    }
    if (config.mode == ExperimentConfig::Mode::kPropertySuite && !table.all_passed) return 1;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"active local learning and distance estimation for bounded Lipschitz classes"};
    app.require_subcommand(1);

    double L = 10.0, epsilon = 0.5, delta = 0.1;
    std::size_t dims = 1;
    std::uint64_t seed = 1;
    std::string config_path, data_path, out_path, save_session, kde_mode = "exact";

    auto add_common = [&](CLI::App* cmd, bool with_scale) {
        if (with_scale) {
            cmd->add_option("--L", L, "Lipschitz constant");
            cmd->add_option("--epsilon", epsilon, "error parameter in (0,1]");
            cmd->add_option("--dims", dims, "domain dimension");
        }
        cmd->add_option("--seed", seed, "rng seed");
        cmd->add_option("--out", out_path, "output path (stdout when omitted)");
    };

    auto* pre = app.add_subcommand("preprocess", "draw a random-offset partition");
    add_common(pre, true);

    auto* qry = app.add_subcommand("query", "answer queries from a session config or checkpoint");
    add_common(qry, false);
    qry->add_option("--config", config_path, "session config or checkpoint JSON")->required();
    qry->add_option("--data", data_path, "query points CSV (x1..xd)");
    qry->add_option("--save-session", save_session, "write a restartable checkpoint JSON");

    auto* est = app.add_subcommand("estimate-error", "estimate err_D(F_L) to additive epsilon");
    add_common(est, true);
    est->add_option("--config", config_path, "distribution JSON (default: pure-noise labels)");

    auto* nwe = app.add_subcommand("nw-error", "Nadaraya-Watson minimum-error estimate");
    add_common(nwe, false);
    nwe->add_option("--data", data_path, "labeled pointset CSV (x1..xd,y)")->required();
    nwe->add_option("--epsilon", epsilon, "error parameter in (0,1]");
    nwe->add_option("--delta", delta, "failure probability in (0,1)");
    nwe->add_option("--kde-mode", kde_mode, "exact or subsample:<m>");

    auto* prp = app.add_subcommand("properties", "run the invariant suite; exit 0 iff all pass");
    prp->add_option("--seed", seed, "rng seed");

    auto* exp = app.add_subcommand("experiment", "run a seeded experiment from a config JSON");
    exp->add_option("--config", config_path, "experiment config JSON")->required();
    exp->add_option("--out", out_path, "output path override");

    CLI11_PARSE(app, argc, argv);

    try {
        const Constants env = env_constants();
        if (pre->parsed()) return cmd_preprocess(L, epsilon, dims, seed, out_path);
        if (qry->parsed()) return cmd_query(config_path, data_path, out_path, save_session, env);
        if (est->parsed())
            return cmd_estimate_error(L, epsilon, dims, seed, config_path, out_path, env);
        if (nwe->parsed()) return cmd_nw_error(data_path, epsilon, delta, seed, kde_mode, out_path);
        if (prp->parsed()) return cmd_properties(seed);
        if (exp->parsed()) return cmd_experiment(config_path, out_path, env);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
