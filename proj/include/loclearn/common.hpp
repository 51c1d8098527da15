#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace loclearn {

using Real = double;
using Point = std::vector<Real>;

constexpr Real kInf = std::numeric_limits<Real>::infinity();

// Tolerance used everywhere a Lipschitz pair constraint is checked; absorbs
// floating-point noise from the solvers.
constexpr Real kLipschitzTol = 1e-9;

struct EmptyInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutOfDomain : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateScale : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotLongBox : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InconsistentConstraints : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidEpsilon : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PreconditionViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Real clamp01(Real v) { return std::clamp(v, 0.0, 1.0); }

// sup-norm distance between two points of equal dimension
inline Real sup_dist(std::span<const Real> a, std::span<const Real> b) {
    Real d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

// Axis-aligned box, one [lo,hi] pair per dimension.
struct Box {
    std::vector<Real> lo;
    std::vector<Real> hi;

    std::size_t dims() const { return lo.size(); }

    bool contains(std::span<const Real> x) const {
        for (std::size_t k = 0; k < lo.size(); ++k)
            if (x[k] < lo[k] || x[k] > hi[k]) return false;
        return true;
    }

    static Box unit(std::size_t d) {
        return Box{std::vector<Real>(d, 0.0), std::vector<Real>(d, 1.0)};
    }
};

// Dimension-major point storage: coordinate k of point j lives at data[k*n + j].
// Keeps per-dimension coordinates contiguous for the vectorized kernels.
class SoaPoints {
public:
    SoaPoints() = default;
    SoaPoints(std::size_t dims, std::size_t count) : dims_(dims), count_(count), data_(dims * count, 0.0) {}

    static SoaPoints from_rows(const std::vector<Point>& rows, std::size_t dims) {
        SoaPoints out(dims, rows.size());
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (rows[j].size() != dims) throw DimensionMismatch("point dimension mismatch");
            for (std::size_t k = 0; k < dims; ++k) out.data_[k * rows.size() + j] = rows[j][k];
        }
        return out;
    }

    std::size_t dims() const { return dims_; }
    std::size_t size() const { return count_; }
    bool empty() const { return count_ == 0; }

    Real coord(std::size_t dim, std::size_t idx) const { return data_[dim * count_ + idx]; }
    Real& coord(std::size_t dim, std::size_t idx) { return data_[dim * count_ + idx]; }

    const Real* dim_begin(std::size_t dim) const { return data_.data() + dim * count_; }

    Point row(std::size_t idx) const {
        Point p(dims_);
        for (std::size_t k = 0; k < dims_; ++k) p[k] = coord(k, idx);
        return p;
    }

private:
    std::size_t dims_ = 0;
    std::size_t count_ = 0;
    std::vector<Real> data_;
};

}  // namespace loclearn
