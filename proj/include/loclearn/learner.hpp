#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "loclearn/common.hpp"
#include "loclearn/lipschitz.hpp"
#include "loclearn/partition.hpp"

namespace loclearn {

struct UnlabeledPool {
    SoaPoints points;
    std::uint64_t provenance_seed = 0;
    std::string sampler_id;
};

// Label access for pool points. The label must be a function of the point
// identity (index) only, never of fetch order, so that memoized sessions stay
// order-independent even for randomized sources.
using LabelSource = std::function<Real(std::size_t pool_index, std::span<const Real> x)>;

class LabelOracle {
public:
    explicit LabelOracle(LabelSource source) : source_(std::move(source)) {}

    Real fetch(std::size_t index, std::span<const Real> x);
    bool known(std::size_t index) const { return memo_.count(index) != 0; }
    std::size_t distinct_queries() const { return memo_.size(); }
    const std::map<std::size_t, Real>& memo() const { return memo_; }
    void preload(std::size_t index, Real label) { memo_[index] = label; }

private:
    LabelSource source_;
    std::map<std::size_t, Real> memo_;
};

// One preprocess output plus lazily fitted per-cell functions. Every answer is
// consistent with a single global L-Lipschitz function: cells are fitted at
// most once and cached, labels are memoized, and the per-cell sample cap takes
// the first points in pool order.
//
// Thread safety: queries may run concurrently; fits and label fetches happen
// under an exclusive lock with at-most-once semantics, reads after a cache hit
// only take a shared lock.
class QuerySession {
public:
    QuerySession(Partition partition, UnlabeledPool pool, LabelSource label_source,
                 std::size_t sample_cap);

    Real query(std::span<const Real> x);
    Real query_1d(Real x);
    Real query_dd(std::span<const Real> x);

    struct BudgetReport {
        std::size_t distinct_labels = 0;
        std::map<std::uint64_t, std::size_t> per_cell;
    };
    BudgetReport budget_report() const;

    // queries that caused label fetches, with the pool indices they touched
    struct QueryLogEntry {
        Point query;
        std::vector<std::uint32_t> fetched;
    };
    std::vector<QueryLogEntry> per_query_log() const;

    const Partition& partition() const { return partition_; }
    const UnlabeledPool& pool() const { return pool_; }
    std::size_t sample_cap() const { return sample_cap_; }
    std::size_t bucket_size(const CellId& cell) const;

    // fitted function of a long cell (fits on demand)
    std::shared_ptr<const AnchoredLipschitzFn> cell_fit(const CellId& cell) {
        return cell_fit(cell, nullptr);
    }

    nlohmann::json checkpoint() const;
    static QuerySession restore(const nlohmann::json& snapshot, LabelSource label_source);

private:
    std::shared_ptr<const AnchoredLipschitzFn> cell_fit(const CellId& cell,
                                                        std::vector<std::uint32_t>* fetched);
    std::shared_ptr<const AnchoredLipschitzFn> fit_locked(const CellId& cell,
                                                          std::vector<std::uint32_t>* fetched);
    void log_query(std::span<const Real> x, std::vector<std::uint32_t> fetched);

    Partition partition_;
    UnlabeledPool pool_;
    LabelOracle oracle_;
    std::size_t sample_cap_;
    ExtensionRule cell_rule_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
    std::unordered_map<std::uint64_t, std::shared_ptr<const AnchoredLipschitzFn>> cache_;
    std::map<std::uint64_t, std::size_t> per_cell_labels_;
    std::vector<QueryLogEntry> per_query_log_;
    std::unique_ptr<std::shared_mutex> mutex_ = std::make_unique<std::shared_mutex>();
};

QuerySession new_session(Partition partition, UnlabeledPool pool, LabelSource label_source,
                         std::size_t sample_cap);

// Rate-formula sample budgets with all asymptotic constants set to one,
// scaled by a configurable multiplier.
std::size_t default_pool_size(Real lipschitz, Real epsilon, std::size_t dims, Real multiplier = 1.0);
std::size_t default_sample_cap(Real epsilon, std::size_t dims, Real multiplier = 1.0);

}  // namespace loclearn
