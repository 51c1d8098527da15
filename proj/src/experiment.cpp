#include "loclearn/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "loclearn/io.hpp"

namespace loclearn {

namespace {

const char* mode_name(ExperimentConfig::Mode m) {
    switch (m) {
        case ExperimentConfig::Mode::kLocalQuery: return "local_query";
        case ExperimentConfig::Mode::kErrorEst: return "error_est";
        case ExperimentConfig::Mode::kNwEst: return "nw_est";
        case ExperimentConfig::Mode::kPropertySuite: return "property_suite";
    }
    return "error_est";
}

ExperimentConfig::Mode parse_mode(const std::string& name) {
    if (name == "local_query") return ExperimentConfig::Mode::kLocalQuery;
    if (name == "error_est") return ExperimentConfig::Mode::kErrorEst;
    if (name == "nw_est") return ExperimentConfig::Mode::kNwEst;
    if (name == "property_suite") return ExperimentConfig::Mode::kPropertySuite;
    throw ConfigError("mode must be one of local_query, error_est, nw_est, property_suite");
}

SyntheticDistribution seed_distribution(const ExperimentConfig& config, std::uint64_t seed) {
    if (config.distribution) return *config.distribution;
    // per-seed realizable target when none is configured
    Rng rng = Rng(seed).child("gt");
    auto gt = std::make_shared<const AnchoredLipschitzFn>(
        random_lipschitz_fn(config.dims, config.lipschitz, 40, rng));
    return SyntheticDistribution::uniform_gt(std::move(gt));
}

ResultRow run_local_query(const ExperimentConfig& config, std::uint64_t seed) {
    const SyntheticDistribution dist = seed_distribution(config, seed);
    QuerySession session = make_synthetic_session(config.lipschitz, config.epsilon, config.dims,
                                                  dist, seed, config.constants);
    Rng eval_rng = Rng(seed).child("measure");
    Real total = 0.0;
    for (std::size_t i = 0; i < config.eval_points; ++i) {
        const Point x = dist.sample_x(eval_rng);
        total += std::abs(session.query(x) - dist.base_value(x));
    }
    ResultRow row;
    row.seed = seed;
    row.estimate = total / static_cast<Real>(config.eval_points);
    row.baseline = 0.0;
    row.gap = row.estimate;
    row.n_pool_labels = session.budget_report().distinct_labels;
    return row;
}

ResultRow run_error_est(const ExperimentConfig& config, std::uint64_t seed) {
    const SyntheticDistribution dist = seed_distribution(config, seed);
    const ErrorEstimate est = estimate_error(config.lipschitz, config.epsilon, config.dims, dist,
                                             seed, config.constants);
    Rng oracle_rng = Rng(seed).child("oracle");
    std::vector<Point> xs;
    std::vector<Real> ys;
    xs.reserve(config.oracle_points);
    ys.reserve(config.oracle_points);
    for (std::size_t i = 0; i < config.oracle_points; ++i) {
        auto [x, y] = sample_pair(dist, oracle_rng);
        xs.push_back(std::move(x));
        ys.push_back(y);
    }
    ResultRow row;
    row.seed = seed;
    row.estimate = est.value;
    row.baseline = oracle_error(config.lipschitz, config.dims, xs, ys);
    row.gap = std::abs(row.estimate - row.baseline);
    row.n_fresh_labels = est.n_fresh_labels;
    row.n_pool_labels = est.n_pool_labels;
    return row;
}

std::pair<ResultRow, nlohmann::json> run_nw_est(const ExperimentConfig& config,
                                                std::uint64_t seed) {
    SyntheticDistribution dist;
    NwDataset dataset = [&]() -> NwDataset {
        if (!config.data_csv.empty()) {
            const CsvDataset csv = read_csv_dataset(config.data_csv);
            if (!csv.has_labels()) throw ConfigError("NW dataset CSV needs a y column");
            SoaPoints pts = SoaPoints::from_rows(csv.points, csv.dims);
            std::vector<int> labels(csv.labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (csv.labels[i] != 0.0 && csv.labels[i] != 1.0)
                    throw ConfigError("NW labels must be 0 or 1");
                labels[i] = static_cast<int>(csv.labels[i]);
            }
            if (config.distribution) {
                dist = *config.distribution;
            } else {
                // default: uniform draws over the labeled CSV rows
                dist.marginal = SyntheticDistribution::Marginal::kPointSet;
                dist.dims = csv.dims;
                dist.point_set = csv.points;
                dist.point_labels = csv.labels;
                dist.target = SyntheticDistribution::Target::kPointLabels;
            }
            return NwDataset::with_labels(std::move(pts), std::move(labels));
        }
        if (!config.distribution) throw ConfigError("nw_est needs --data or a distribution");
        dist = *config.distribution;
        return make_nw_dataset(dist, config.dataset_size, seed);
    }();

    const NwEstimate est = nw_error(dataset, dist, config.epsilon, config.delta, seed,
                                    config.kde_mode);
    ResultRow row;
    row.seed = seed;
    row.estimate = est.value;
    row.n_fresh_labels = est.n_labels;
    if (config.nw_oracle) {
        const NwEvalSet eval = make_nw_eval_set(dist, config.nw_oracle_points, seed);
        Real best = kInf;
        for (const auto& a : epsilon_net(dataset.dims(), config.epsilon))
            best = std::min(best, exact_nw_loss(a, dataset, eval));
        row.baseline = best;
        row.gap = std::abs(row.estimate - row.baseline);
    }
    return {row, est.to_json()};
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!(lipschitz > 0.0)) throw ConfigError("field L: must be positive");
    if (!(epsilon > 0.0) || epsilon > 1.0) throw ConfigError("field epsilon: must lie in (0,1]");
    if (dims < 1) throw ConfigError("field dims: must be >= 1");
    if (seeds.empty()) throw ConfigError("field seeds: must be nonempty");
    if (!(delta > 0.0) || delta >= 1.0) throw ConfigError("field delta: must lie in (0,1)");
    if (eval_points == 0) throw ConfigError("field eval_points: must be positive");
    if (mode == Mode::kNwEst && data_csv.empty() && !distribution)
        throw ConfigError("field data: nw_est needs a CSV pointset or a distribution");
    if (distribution) distribution->validate();
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["mode"] = mode_name(mode);
    j["L"] = lipschitz;
    j["epsilon"] = epsilon;
    j["dims"] = dims;
    j["seeds"] = seeds;
    j["constants"] = constants.to_json();
    if (distribution) j["distribution"] = distribution->to_json();
    if (!data_csv.empty()) j["data"] = data_csv;
    j["delta"] = delta;
    j["kde_mode"] = kde_mode.name();
    j["eval_points"] = eval_points;
    j["oracle_points"] = oracle_points;
    j["dataset_size"] = dataset_size;
    j["nw_oracle"] = nw_oracle;
    j["nw_oracle_points"] = nw_oracle_points;
    if (!out_path.empty()) j["out"] = out_path;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.mode = parse_mode(j.value("mode", "error_est"));
    c.lipschitz = j.value("L", 10.0);
    c.epsilon = j.value("epsilon", 0.5);
    c.dims = j.value("dims", std::size_t{1});
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("constants")) c.constants = Constants::from_json(j.at("constants"));
    if (j.contains("distribution"))
        c.distribution = SyntheticDistribution::from_json(j.at("distribution"));
    c.data_csv = j.value("data", "");
    c.delta = j.value("delta", 0.1);
    if (j.contains("kde_mode")) c.kde_mode = KdeMode::parse(j.at("kde_mode").get<std::string>());
    c.eval_points = j.value("eval_points", std::size_t{1000});
    c.oracle_points = j.value("oracle_points", std::size_t{10000});
    c.dataset_size = j.value("dataset_size", std::size_t{200});
    c.nw_oracle = j.value("nw_oracle", false);
    c.nw_oracle_points = j.value("nw_oracle_points", std::size_t{10000});
    c.out_path = j.value("out", "");
    c.validate();
    return c;
}

std::string ResultTable::to_csv(const Constants& constants) const {
    std::ostringstream out;
    out << "seed,estimate,baseline,gap,n_fresh_labels,n_pool_labels,"
           "pool_size_mult,sample_cap_mult,fresh_draws_mult\n";
    for (const auto& row : rows) {
        out << row.seed << ',' << format_real(row.estimate) << ',' << format_real(row.baseline)
            << ',' << format_real(row.gap) << ',' << row.n_fresh_labels << ','
            << row.n_pool_labels << ',' << format_real(constants.pool_size) << ','
            << format_real(constants.sample_cap) << ',' << format_real(constants.fresh_draws)
            << "\n";
    }
    if (success_threshold > 0.0) {
        out << "# summary successes=" << successes << "/" << rows.size()
            << " threshold=" << format_real(success_threshold) << "\n";
    }
    return out.str();
}

ResultTable run_experiment(const ExperimentConfig& config) {
    config.validate();
    ResultTable table;
    table.mode = config.mode;

    if (config.mode == ExperimentConfig::Mode::kPropertySuite) {
        const auto checks = run_property_suite(config.seeds.front());
        for (const auto& check : checks) {
            ResultRow row;
            row.seed = config.seeds.front();
            row.estimate = check.passed ? 1.0 : 0.0;
            row.gap = check.passed ? 0.0 : 1.0;
            table.rows.push_back(row);
            table.all_passed = table.all_passed && check.passed;
            std::fprintf(stderr, "[property] %-40s %s %s\n", check.name.c_str(),
                         check.passed ? "pass" : "FAIL", check.detail.c_str());
        }
        return table;
    }

    table.rows.resize(config.seeds.size());
    std::vector<nlohmann::json> extras(config.seeds.size());
    std::vector<double> wall_ms(config.seeds.size(), 0.0);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_text;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < config.seeds.size(); i = next.fetch_add(1)) {
            if (failed.load()) return;
            const auto start = std::chrono::steady_clock::now();
            try {
                switch (config.mode) {
                    case ExperimentConfig::Mode::kLocalQuery:
                        table.rows[i] = run_local_query(config, config.seeds[i]);
                        break;
                    case ExperimentConfig::Mode::kErrorEst:
                        table.rows[i] = run_error_est(config, config.seeds[i]);
                        break;
                    case ExperimentConfig::Mode::kNwEst: {
                        auto [row, extra] = run_nw_est(config, config.seeds[i]);
                        table.rows[i] = row;
                        extras[i] = std::move(extra);
                        break;
                    }
                    default:
                        break;
                }
            } catch (const std::exception& e) {
                std::scoped_lock lock(error_mutex);
                failed.store(true);
                if (error_text.empty()) error_text = e.what();
                return;
            }
            wall_ms[i] = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        }
    };

    const std::size_t workers = std::min<std::size_t>(
        std::max(1u, std::thread::hardware_concurrency()), config.seeds.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw ConfigError("experiment seed failed: " + error_text);

    for (std::size_t i = 0; i < config.seeds.size(); ++i)
        std::fprintf(stderr, "[seed %llu] %.1f ms\n",
                     static_cast<unsigned long long>(config.seeds[i]), wall_ms[i]);

    table.extra = std::move(extras);
    table.success_threshold = config.epsilon;
    for (const auto& row : table.rows)
        if (row.gap <= config.epsilon) ++table.successes;
    return table;
}

}  // namespace loclearn
