#include "loclearn/learner.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <json.hpp>

namespace loclearn {

Real LabelOracle::fetch(std::size_t index, std::span<const Real> x) {
    auto it = memo_.find(index);
    if (it != memo_.end()) return it->second;
    const Real label = source_(index, x);
    memo_.emplace(index, label);
    return label;
}

QuerySession::QuerySession(Partition partition, UnlabeledPool pool, LabelSource label_source,
                           std::size_t sample_cap)
    : partition_(std::move(partition)),
      pool_(std::move(pool)),
      oracle_(std::move(label_source)),
      sample_cap_(sample_cap),
      cell_rule_(partition_.scheme() == PartitionScheme::kOneDim ? ExtensionRule::kMidpoint
                                                                 : ExtensionRule::kUpperMcshane) {
    if (!pool_.points.empty() && pool_.points.dims() != partition_.dims())
        throw DimensionMismatch("pool dimension != partition dims");
    Point x(partition_.dims());
    for (std::size_t j = 0; j < pool_.points.size(); ++j) {
        for (std::size_t k = 0; k < partition_.dims(); ++k) x[k] = pool_.points.coord(k, j);
        buckets_[partition_.cell_key(partition_.locate(x))].push_back(
            static_cast<std::uint32_t>(j));
    }
}

QuerySession new_session(Partition partition, UnlabeledPool pool, LabelSource label_source,
                         std::size_t sample_cap) {
    return QuerySession(std::move(partition), std::move(pool), std::move(label_source), sample_cap);
}

std::size_t QuerySession::bucket_size(const CellId& cell) const {
    auto it = buckets_.find(partition_.cell_key(cell));
    return it == buckets_.end() ? 0 : it->second.size();
}

std::shared_ptr<const AnchoredLipschitzFn> QuerySession::fit_locked(
    const CellId& cell, std::vector<std::uint32_t>* fetched) {
    const std::uint64_t key = partition_.cell_key(cell);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;

    std::vector<Point> points;
    std::vector<Real> labels;
    if (auto it = buckets_.find(key); it != buckets_.end()) {
        const std::size_t use = std::min(sample_cap_, it->second.size());
        points.reserve(use);
        labels.reserve(use);
        std::size_t fresh = 0;
        for (std::size_t t = 0; t < use; ++t) {
            const std::size_t idx = it->second[t];
            Point x = pool_.points.row(idx);
            if (!oracle_.known(idx)) {
                ++fresh;
                if (fetched != nullptr) fetched->push_back(it->second[t]);
            }
            labels.push_back(oracle_.fetch(idx, x));
            points.push_back(std::move(x));
        }
        per_cell_labels_[key] += fresh;
    }
    std::shared_ptr<const AnchoredLipschitzFn> fit;
    if (points.empty()) {
        fit = std::make_shared<const AnchoredLipschitzFn>(partition_.dims(),
                                                          partition_.lipschitz(), cell_rule_);
    } else {
        ErmProblem problem{std::move(points), std::move(labels), partition_.lipschitz(),
                           partition_.cell_box(cell)};
        fit = std::make_shared<const AnchoredLipschitzFn>(erm_fit(problem).with_rule(cell_rule_));
    }
    cache_.emplace(key, fit);
    return fit;
}

std::shared_ptr<const AnchoredLipschitzFn> QuerySession::cell_fit(
    const CellId& cell, std::vector<std::uint32_t>* fetched) {
    {
        std::shared_lock lock(*mutex_);
        if (auto it = cache_.find(partition_.cell_key(cell)); it != cache_.end())
            return it->second;
    }
    std::unique_lock lock(*mutex_);
    return fit_locked(cell, fetched);
}

void QuerySession::log_query(std::span<const Real> x, std::vector<std::uint32_t> fetched) {
    if (fetched.empty()) return;
    std::unique_lock lock(*mutex_);
    per_query_log_.push_back({Point(x.begin(), x.end()), std::move(fetched)});
}

std::vector<QuerySession::QueryLogEntry> QuerySession::per_query_log() const {
    std::shared_lock lock(*mutex_);
    return per_query_log_;
}

Real QuerySession::query(std::span<const Real> x) {
    return partition_.scheme() == PartitionScheme::kOneDim ? query_1d(x[0]) : query_dd(x);
}

Real QuerySession::query_1d(Real x) {
    if (partition_.scheme() != PartitionScheme::kOneDim || partition_.dims() != 1)
        throw DimensionMismatch("query_1d needs a one-dimensional session");
    const Real point[1] = {x};
    const CellId cell = partition_.locate(std::span<const Real>(point, 1));
    const auto& axis = partition_.intervals(0);
    const auto& iv = axis[cell.index[0]];
    std::vector<std::uint32_t> fetched;
    if (iv.long_slot) {
        auto fit = cell_fit(cell, &fetched);
        log_query(std::span<const Real>(point, 1), std::move(fetched));
        return clamp01(fit->evaluate(std::span<const Real>(point, 1)));
    }
    const bool has_left = cell.index[0] > 0;
    const bool has_right = cell.index[0] + 1 < axis.size();
    Real v_lo = 0.5, v_hi = 0.5;
    if (has_left) {
        CellId left{{cell.index[0] - 1}, CellKind::kLongBox};
        const Real b[1] = {iv.lo};
        v_lo = cell_fit(left, &fetched)->evaluate(std::span<const Real>(b, 1));
    }
    if (has_right) {
        CellId right{{cell.index[0] + 1}, CellKind::kLongBox};
        const Real b[1] = {iv.hi};
        v_hi = cell_fit(right, &fetched)->evaluate(std::span<const Real>(b, 1));
    }
    if (!has_left) v_lo = v_hi;   // domain-edge fallback: copy the other endpoint
    if (!has_right) v_hi = v_lo;
    log_query(std::span<const Real>(point, 1), std::move(fetched));
    return clamp01(v_lo + (x - iv.lo) * (v_hi - v_lo) / (iv.hi - iv.lo));
}

Real QuerySession::query_dd(std::span<const Real> x) {
    if (partition_.scheme() != PartitionScheme::kMultiDim)
        throw DimensionMismatch("query_dd needs a multi-dimensional session");
    CellId cell = partition_.locate(x);
    CellId owner = cell;
    owner.kind = CellKind::kLongBox;
    const Real shell = 1.0 / partition_.lipschitz();
    if (cell.kind == CellKind::kShortBox) {
        for (std::size_t k = 0; k < partition_.dims(); ++k) {
            const auto& axis = partition_.intervals(k);
            const auto& iv = axis[cell.index[k]];
            if (iv.long_slot) continue;
            const Real mid = iv.lo + shell;  // nominal midpoint of the short slab
            if (x[k] <= mid) {
                if (cell.index[k] == 0) return 1.0;  // domain-edge slab with no long box
                owner.index[k] = cell.index[k] - 1;
            } else {
                if (cell.index[k] + 1 >= axis.size()) return 1.0;
                owner.index[k] = cell.index[k] + 1;
            }
        }
    }
    std::vector<std::uint32_t> fetched;
    auto fit = cell_fit(owner, &fetched);
    log_query(x, std::move(fetched));
    ConstrainedExtension ext(
        fit,
        [this, owner](std::span<const Real> p) { return partition_.constraint_distance(owner, p); },
        1.0);
    return ext.evaluate(x);
}

QuerySession::BudgetReport QuerySession::budget_report() const {
    std::shared_lock lock(*mutex_);
    BudgetReport report;
    report.distinct_labels = oracle_.distinct_queries();
    report.per_cell = per_cell_labels_;
    return report;
}

nlohmann::json QuerySession::checkpoint() const {
    std::shared_lock lock(*mutex_);
    nlohmann::json j;
    j["schema_version"] = 1;
    j["partition"] = partition_.to_json();
    nlohmann::json pool;
    pool["dims"] = pool_.points.dims();
    pool["count"] = pool_.points.size();
    std::vector<Real> coords;
    coords.reserve(pool_.points.dims() * pool_.points.size());
    for (std::size_t k = 0; k < pool_.points.dims(); ++k)
        for (std::size_t i = 0; i < pool_.points.size(); ++i)
            coords.push_back(pool_.points.coord(k, i));
    pool["coords"] = std::move(coords);
    pool["seed"] = pool_.provenance_seed;
    pool["sampler_id"] = pool_.sampler_id;
    j["pool"] = std::move(pool);
    j["sample_cap"] = sample_cap_;
    nlohmann::json memo = nlohmann::json::array();
    for (const auto& [idx, label] : oracle_.memo()) memo.push_back({idx, label});
    j["labels"] = std::move(memo);
    nlohmann::json cache = nlohmann::json::array();
    for (const auto& [key, fit] : cache_) {
        nlohmann::json entry;
        entry["cell"] = key;
        entry["values"] = fit->values();
        cache.push_back(std::move(entry));
    }
    j["cache"] = std::move(cache);
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& [key, count] : per_cell_labels_) counts.push_back({key, count});
    j["per_cell_labels"] = std::move(counts);
    return j;
}

QuerySession QuerySession::restore(const nlohmann::json& snapshot, LabelSource label_source) {
    Partition partition = Partition::from_json(snapshot.at("partition"));
    const auto& pj = snapshot.at("pool");
    const std::size_t dims = pj.at("dims").get<std::size_t>();
    const std::size_t count = pj.at("count").get<std::size_t>();
    const auto coords = pj.at("coords").get<std::vector<Real>>();
    if (coords.size() != dims * count) throw ConfigError("pool coords size mismatch");
    UnlabeledPool pool;
    pool.points = SoaPoints(dims, count);
    for (std::size_t k = 0; k < dims; ++k)
        for (std::size_t i = 0; i < count; ++i) pool.points.coord(k, i) = coords[k * count + i];
    pool.provenance_seed = pj.at("seed").get<std::uint64_t>();
    pool.sampler_id = pj.at("sampler_id").get<std::string>();

    QuerySession session(std::move(partition), std::move(pool), std::move(label_source),
                         snapshot.at("sample_cap").get<std::size_t>());
    for (const auto& entry : snapshot.at("labels"))
        session.oracle_.preload(entry.at(0).get<std::size_t>(), entry.at(1).get<Real>());
    for (const auto& entry : snapshot.at("per_cell_labels"))
        session.per_cell_labels_[entry.at(0).get<std::uint64_t>()] =
            entry.at(1).get<std::size_t>();
    for (const auto& entry : snapshot.at("cache")) {
        const std::uint64_t key = entry.at("cell").get<std::uint64_t>();
        const auto values = entry.at("values").get<std::vector<Real>>();
        std::shared_ptr<const AnchoredLipschitzFn> fit;
        if (values.empty()) {
            fit = std::make_shared<const AnchoredLipschitzFn>(
                session.partition_.dims(), session.partition_.lipschitz(), session.cell_rule_);
        } else {
            auto it = session.buckets_.find(key);
            if (it == session.buckets_.end() || it->second.size() < values.size())
                throw ConfigError("cached cell does not match the pool bucketing");
            std::vector<Point> points;
            points.reserve(values.size());
            for (std::size_t t = 0; t < values.size(); ++t)
                points.push_back(session.pool_.points.row(it->second[t]));
            fit = std::make_shared<const AnchoredLipschitzFn>(
                std::move(points), values, session.partition_.lipschitz(), session.cell_rule_);
        }
        session.cache_.emplace(key, std::move(fit));
    }
    return session;
}

std::size_t default_pool_size(Real lipschitz, Real epsilon, std::size_t dims, Real multiplier) {
    const Real log_term = std::log(1.0 / epsilon);
    Real size = 0.0;
    if (dims == 1) {
        size = multiplier * (lipschitz / std::pow(epsilon, 4)) * log_term;
    } else {
        size = multiplier * std::pow(lipschitz / epsilon, static_cast<Real>(dims)) *
               (1.0 / std::pow(epsilon, 3)) * log_term;
    }
    return static_cast<std::size_t>(std::ceil(std::max(size, 0.0)));
}

std::size_t default_sample_cap(Real epsilon, std::size_t dims, Real multiplier) {
    const Real log_term = std::log(1.0 / epsilon);
    Real cap = 0.0;
    if (dims == 1) {
        cap = multiplier * (1.0 / (2.0 * std::pow(epsilon, 4))) * log_term;
    } else {
        cap = multiplier * (1.0 / (epsilon * epsilon)) *
              std::pow(static_cast<Real>(dims) / (epsilon * epsilon), static_cast<Real>(dims)) *
              log_term;
    }
    return static_cast<std::size_t>(std::ceil(std::max(cap, 0.0)));
}

}  // namespace loclearn
