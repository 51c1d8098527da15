#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "loclearn/common.hpp"
#include "loclearn/rng.hpp"

namespace loclearn {

enum class CellKind { kLongBox, kShortBox };

// 1D partitions alternate 1/(L*eps) and 1/L with offsets {1..1/eps}/L;
// multi-dim partitions alternate d/(L*eps) and 2/L with offsets {0..d/(2*eps)}*(2/L).
enum class PartitionScheme { kOneDim, kMultiDim };

struct CellId {
    std::vector<std::uint32_t> index;  // interval index per dimension
    CellKind kind = CellKind::kLongBox;

    bool operator==(const CellId& o) const { return index == o.index && kind == o.kind; }
};

// Random-offset alternating partition of [0,1]^d. Immutable after
// construction; all queries are read-only and thread-safe.
class Partition {
public:
    struct Interval {
        Real lo = 0.0;
        Real hi = 0.0;
        bool long_slot = true;  // classification is by alternation slot, not realized length
        bool truncated = false;
    };

    static Partition preprocess(Real lipschitz, Real epsilon, std::size_t dims,
                                std::uint64_t rng_seed);

    // deterministic construction from explicit offsets (offsets validated against the grid)
    static Partition build(Real lipschitz, Real epsilon, std::size_t dims,
                           const std::vector<Real>& offsets, PartitionScheme scheme);

    std::size_t dims() const { return dims_; }
    Real lipschitz() const { return lipschitz_; }
    Real epsilon() const { return epsilon_; }
    PartitionScheme scheme() const { return scheme_; }
    Real short_len() const { return short_len_; }
    Real long_len() const { return long_len_; }
    const std::vector<Real>& offsets() const { return offsets_; }

    const std::vector<Interval>& intervals(std::size_t dim) const { return axes_[dim]; }
    std::vector<Real> boundaries(std::size_t dim) const;

    CellId locate(std::span<const Real> x) const;
    Box cell_box(const CellId& cell) const;
    Box extension_box(const CellId& cell) const;

    // Exact sup-norm distance from x to the value-1 constraint set of a long
    // box: the nominal mid-hyperplanes of the adjacent short slabs, boundary
    // sides contributing +infinity.
    Real constraint_distance(const CellId& cell, std::span<const Real> x) const;

    // Constraint hyperplane coordinate of a long box on the given side of the
    // given dimension, or +infinity when that side has none.
    Real constraint_coordinate(const CellId& cell, std::size_t dim, bool upper_side) const;

    std::uint64_t cell_key(const CellId& cell) const;
    CellId cell_from_key(std::uint64_t key) const;

    nlohmann::json to_json() const;
    static Partition from_json(const nlohmann::json& j);

private:
    void build_axes();

    Real lipschitz_ = 0.0;
    Real epsilon_ = 0.0;
    std::size_t dims_ = 0;
    PartitionScheme scheme_ = PartitionScheme::kOneDim;
    Real short_len_ = 0.0;
    Real long_len_ = 0.0;
    std::vector<Real> offsets_;
    std::vector<std::vector<Interval>> axes_;
};

// Monte-Carlo estimate of the probability mass of short cells under a sampler.
Real short_mass(const Partition& partition,
                const std::function<Point(Rng&)>& sampler, std::size_t n,
                std::uint64_t rng_seed);

}  // namespace loclearn
