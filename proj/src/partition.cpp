#include "loclearn/partition.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace loclearn {

namespace {

constexpr Real kGeomTol = 1e-12;

}  // namespace

Partition Partition::preprocess(Real lipschitz, Real epsilon, std::size_t dims,
                                std::uint64_t rng_seed) {
    if (dims < 1) throw PreconditionViolated("dims must be >= 1");
    if (!(epsilon > 0.0) || epsilon > 1.0) throw InvalidEpsilon("epsilon must lie in (0,1]");
    if (!(lipschitz > 0.0)) throw PreconditionViolated("Lipschitz constant must be positive");

    const PartitionScheme scheme =
        dims == 1 ? PartitionScheme::kOneDim : PartitionScheme::kMultiDim;
    Rng rng(rng_seed);
    std::vector<Real> offsets(dims);
    if (scheme == PartitionScheme::kOneDim) {
        const std::uint64_t grid = static_cast<std::uint64_t>(std::floor(1.0 / epsilon));
        offsets[0] = static_cast<Real>(1 + rng.next_below(grid)) / lipschitz;
    } else {
        const std::uint64_t grid = static_cast<std::uint64_t>(
            std::floor(static_cast<Real>(dims) / (2.0 * epsilon)));
        for (std::size_t k = 0; k < dims; ++k)
            offsets[k] = static_cast<Real>(rng.next_below(grid + 1)) * (2.0 / lipschitz);
    }
    return build(lipschitz, epsilon, dims, offsets, scheme);
}

Partition Partition::build(Real lipschitz, Real epsilon, std::size_t dims,
                           const std::vector<Real>& offsets, PartitionScheme scheme) {
    if (dims < 1 || offsets.size() != dims) throw DimensionMismatch("offset count != dims");
    if (!(epsilon > 0.0) || epsilon > 1.0) throw InvalidEpsilon("epsilon must lie in (0,1]");

    Partition p;
    p.lipschitz_ = lipschitz;
    p.epsilon_ = epsilon;
    p.dims_ = dims;
    p.scheme_ = scheme;
    if (scheme == PartitionScheme::kOneDim) {
        p.short_len_ = 1.0 / lipschitz;
        p.long_len_ = 1.0 / (lipschitz * epsilon);
    } else {
        p.short_len_ = 2.0 / lipschitz;
        p.long_len_ = static_cast<Real>(dims) / (lipschitz * epsilon);
    }
    if (p.long_len_ >= 1.0)
        throw DegenerateScale("long interval does not fit inside the unit domain");
    p.offsets_ = offsets;
    p.build_axes();
    return p;
}

void Partition::build_axes() {
    axes_.assign(dims_, {});
    for (std::size_t k = 0; k < dims_; ++k) {
        auto& axis = axes_[k];
        const Real offset = offsets_[k];
        if (offset < -kGeomTol || offset > long_len_ + kGeomTol)
            throw PreconditionViolated("offset outside the sampling grid range");
        // first slot is long and ends at the offset; an offset of zero drops it
        bool long_slot = true;
        Real cursor = 0.0;
        Real next = std::min(offset, 1.0);
        while (true) {
            if (next > cursor + kGeomTol) {
                const Real nominal = long_slot ? long_len_ : short_len_;
                axis.push_back({cursor, next, long_slot, next - cursor < nominal - kGeomTol});
                cursor = next;
            }
            if (cursor >= 1.0 - kGeomTol) break;
            long_slot = !long_slot;
            next = std::min(cursor + (long_slot ? long_len_ : short_len_), 1.0);
        }
        axis.back().hi = 1.0;
        if (axis.empty()) throw DegenerateScale("degenerate axis");
    }
}

std::vector<Real> Partition::boundaries(std::size_t dim) const {
    std::vector<Real> b;
    b.reserve(axes_[dim].size() + 1);
    b.push_back(0.0);
    for (const auto& iv : axes_[dim]) b.push_back(iv.hi);
    return b;
}

CellId Partition::locate(std::span<const Real> x) const {
    if (x.size() != dims_) throw DimensionMismatch("point dimension != partition dims");
    CellId cell;
    cell.index.resize(dims_);
    bool any_short = false;
    for (std::size_t k = 0; k < dims_; ++k) {
        if (x[k] < 0.0 || x[k] > 1.0) throw OutOfDomain("coordinate outside [0,1]");
        const auto& axis = axes_[k];
        // boundary points belong to the interval on their right, except x = 1
        std::size_t lo = 0, hi = axis.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (x[k] >= axis[mid].hi)
                lo = mid + 1;
            else
                hi = mid;
        }
        cell.index[k] = static_cast<std::uint32_t>(lo);
        if (!axis[lo].long_slot) any_short = true;
    }
    cell.kind = any_short ? CellKind::kShortBox : CellKind::kLongBox;
    return cell;
}

Box Partition::cell_box(const CellId& cell) const {
    Box box;
    box.lo.resize(dims_);
    box.hi.resize(dims_);
    for (std::size_t k = 0; k < dims_; ++k) {
        const auto& iv = axes_[k][cell.index[k]];
        box.lo[k] = iv.lo;
        box.hi[k] = iv.hi;
    }
    return box;
}

Box Partition::extension_box(const CellId& cell) const {
    if (cell.kind != CellKind::kLongBox) throw NotLongBox("extension_box needs a long box");
    Box box = cell_box(cell);
    const Real shell = 1.0 / lipschitz_;
    for (std::size_t k = 0; k < dims_; ++k) {
        box.lo[k] = std::max(0.0, box.lo[k] - shell);
        box.hi[k] = std::min(box.hi[k] + shell, 1.0);
    }
    return box;
}

Real Partition::constraint_coordinate(const CellId& cell, std::size_t dim, bool upper_side) const {
    const auto& axis = axes_[dim];
    const std::size_t idx = cell.index[dim];
    const Real shell = 1.0 / lipschitz_;
    if (upper_side) {
        if (idx + 1 >= axis.size()) return kInf;  // domain edge, no short neighbor
        const Real mid = axis[idx].hi + shell;    // nominal midpoint of the short slab
        return mid <= 1.0 + kGeomTol ? mid : kInf;
    }
    if (idx == 0) return kInf;
    const Real mid = axis[idx].lo - shell;
    return mid >= -kGeomTol ? mid : kInf;
}

Real Partition::constraint_distance(const CellId& cell, std::span<const Real> x) const {
    if (cell.kind != CellKind::kLongBox) throw NotLongBox("constraint_distance needs a long box");
    if (x.size() != dims_) throw DimensionMismatch("point dimension != partition dims");
    Real best = kInf;
    for (std::size_t k = 0; k < dims_; ++k) {
        for (const bool upper : {false, true}) {
            const Real coord = constraint_coordinate(cell, k, upper);
            if (coord != kInf) best = std::min(best, std::abs(x[k] - coord));
        }
    }
    return best;
}

std::uint64_t Partition::cell_key(const CellId& cell) const {
    std::uint64_t key = 0;
    for (std::size_t k = 0; k < dims_; ++k)
        key = key * static_cast<std::uint64_t>(axes_[k].size() + 1) + cell.index[k];
    return key;
}

CellId Partition::cell_from_key(std::uint64_t key) const {
    CellId cell;
    cell.index.assign(dims_, 0);
    for (std::size_t k = dims_; k-- > 0;) {
        const std::uint64_t base = axes_[k].size() + 1;
        cell.index[k] = static_cast<std::uint32_t>(key % base);
        key /= base;
    }
    bool any_short = false;
    for (std::size_t k = 0; k < dims_; ++k)
        if (!axes_[k][cell.index[k]].long_slot) any_short = true;
    cell.kind = any_short ? CellKind::kShortBox : CellKind::kLongBox;
    return cell;
}

nlohmann::json Partition::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["dims"] = dims_;
    j["L"] = lipschitz_;
    j["epsilon"] = epsilon_;
    j["scheme"] = scheme_ == PartitionScheme::kOneDim ? "1d" : "multi";
    j["offsets"] = offsets_;
    nlohmann::json bounds = nlohmann::json::array();
    nlohmann::json parity = nlohmann::json::array();
    for (std::size_t k = 0; k < dims_; ++k) {
        bounds.push_back(boundaries(k));
        parity.push_back(axes_[k].front().long_slot ? 0 : 1);
    }
    j["boundaries"] = std::move(bounds);
    j["parity"] = std::move(parity);
    return j;
}

Partition Partition::from_json(const nlohmann::json& j) {
    const auto scheme =
        j.at("scheme").get<std::string>() == "1d" ? PartitionScheme::kOneDim
                                                  : PartitionScheme::kMultiDim;
    Partition p = build(j.at("L").get<Real>(), j.at("epsilon").get<Real>(),
                        j.at("dims").get<std::size_t>(),
                        j.at("offsets").get<std::vector<Real>>(), scheme);
    // boundaries/parity are derived from the offsets; verify on load
    const auto bounds = j.at("boundaries").get<std::vector<std::vector<Real>>>();
    for (std::size_t k = 0; k < p.dims_; ++k) {
        const auto own = p.boundaries(k);
        if (own.size() != bounds[k].size())
            throw ConfigError("partition boundaries do not match offsets");
        for (std::size_t t = 0; t < own.size(); ++t)
            if (std::abs(own[t] - bounds[k][t]) > 1e-9)
                throw ConfigError("partition boundaries do not match offsets");
    }
    return p;
}

Real short_mass(const Partition& partition, const std::function<Point(Rng&)>& sampler,
                std::size_t n, std::uint64_t rng_seed) {
    if (n == 0) throw PreconditionViolated("short_mass needs n >= 1");
    Rng rng(rng_seed);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const Point x = sampler(rng);
        if (partition.locate(x).kind == CellKind::kShortBox) ++hits;
    }
    return static_cast<Real>(hits) / static_cast<Real>(n);
}

}  // namespace loclearn
