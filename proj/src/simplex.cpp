#include "loclearn/simplex.hpp"

#include <cmath>
#include <limits>

#include "loclearn/kernels.hpp"

namespace loclearn {

namespace {

constexpr Real kPivotTol = 1e-9;
constexpr Real kCostTol = 1e-9;

struct Tableau {
    std::size_t rows;  // constraint rows
    std::size_t cols;  // structural + slack + artificial columns
    std::vector<Real> a;  // (rows+1) x (cols+1); last row objective, last col rhs
    std::vector<std::size_t> basis;

    Real* row(std::size_t r) { return a.data() + r * (cols + 1); }
    const Real* row(std::size_t r) const { return a.data() + r * (cols + 1); }
    Real& at(std::size_t r, std::size_t c) { return a[r * (cols + 1) + c]; }
    Real at(std::size_t r, std::size_t c) const { return a[r * (cols + 1) + c]; }

    void pivot(std::size_t pr, std::size_t pc) {
        const auto& axpy = kernels::active().axpy;
        Real* prow = row(pr);
        const Real inv = 1.0 / prow[pc];
        for (std::size_t c = 0; c <= cols; ++c) prow[c] *= inv;
        prow[pc] = 1.0;
        for (std::size_t r = 0; r <= rows; ++r) {
            if (r == pr) continue;
            const Real factor = at(r, pc);
            if (factor == 0.0) continue;
            axpy(row(r), prow, factor, cols + 1);
            at(r, pc) = 0.0;
        }
        basis[pr] = pc;
    }

    // Returns false when the problem is unbounded in the pricing direction.
    // The objective cell holds minus the current objective, so progress means
    // the cell strictly increases.
    bool iterate(std::size_t max_iters, LpResult::Status& status) {
        std::size_t stall = 0;
        Real last_obj = at(rows, cols);
        for (std::size_t it = 0; it < max_iters; ++it) {
            const bool bland = stall > 2 * (rows + cols);
            std::size_t enter = cols;
            Real best = -kCostTol;
            for (std::size_t c = 0; c < cols; ++c) {
                const Real rc = at(rows, c);
                if (rc < -kCostTol) {
                    if (bland) {
                        enter = c;
                        break;
                    }
                    if (rc < best) {
                        best = rc;
                        enter = c;
                    }
                }
            }
            if (enter == cols) {
                status = LpResult::Status::kOptimal;
                return true;
            }
            std::size_t leave = rows;
            Real best_ratio = std::numeric_limits<Real>::infinity();
            for (std::size_t r = 0; r < rows; ++r) {
                const Real coef = at(r, enter);
                if (coef > kPivotTol) {
                    const Real ratio = at(r, cols) / coef;
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 && (leave == rows || basis[r] < basis[leave]))) {
                        best_ratio = ratio;
                        leave = r;
                    }
                }
            }
            if (leave == rows) {
                status = LpResult::Status::kUnbounded;
                return false;
            }
            pivot(leave, enter);
            const Real obj = at(rows, cols);
            if (obj < last_obj + 1e-12)
                ++stall;
            else
                stall = 0;
            last_obj = obj;
        }
        status = LpResult::Status::kIterLimit;
        return false;
    }
};

}  // namespace

LpResult solve_lp(const std::vector<std::vector<Real>>& constraint_rows,
                  const std::vector<Real>& rhs, const std::vector<Real>& cost) {
    const std::size_t m = constraint_rows.size();
    const std::size_t n = cost.size();

    std::size_t n_art = 0;
    for (Real b : rhs)
        if (b < 0.0) ++n_art;

    Tableau t;
    t.rows = m;
    t.cols = n + m + n_art;
    t.a.assign((m + 1) * (t.cols + 1), 0.0);
    t.basis.assign(m, 0);

    std::size_t art = n + m;
    for (std::size_t r = 0; r < m; ++r) {
        const bool flip = rhs[r] < 0.0;
        const Real sign = flip ? -1.0 : 1.0;
        for (std::size_t c = 0; c < n; ++c) t.at(r, c) = sign * constraint_rows[r][c];
        t.at(r, n + r) = sign;  // slack
        t.at(r, t.cols) = sign * rhs[r];
        if (flip) {
            t.at(r, art) = 1.0;
            t.basis[r] = art;
            ++art;
        } else {
            t.basis[r] = n + r;
        }
    }

    LpResult out;
    const std::size_t max_iters = 200 * (m + t.cols) + 2000;

    if (n_art > 0) {
        // Phase 1: minimize the artificial sum, expressed through the basis.
        for (std::size_t c = n + m; c < t.cols; ++c) t.at(m, c) = 1.0;
        for (std::size_t r = 0; r < m; ++r) {
            if (t.basis[r] >= n + m) {
                const Real* src = t.row(r);
                Real* obj = t.row(m);
                for (std::size_t c = 0; c <= t.cols; ++c) obj[c] -= src[c];
            }
        }
        LpResult::Status st;
        t.iterate(max_iters, st);
        if (st != LpResult::Status::kOptimal || t.at(m, t.cols) < -1e-7) {
            out.status = (st == LpResult::Status::kOptimal) ? LpResult::Status::kInfeasible : st;
            return out;
        }
        // Drive leftover basic artificials out of the basis.
        for (std::size_t r = 0; r < m; ++r) {
            if (t.basis[r] < n + m) continue;
            std::size_t pc = t.cols;
            for (std::size_t c = 0; c < n + m; ++c) {
                if (std::abs(t.at(r, c)) > kPivotTol) {
                    pc = c;
                    break;
                }
            }
            if (pc < t.cols) t.pivot(r, pc);
        }
        // Freeze artificials at zero.
        for (std::size_t r = 0; r <= m; ++r)
            for (std::size_t c = n + m; c < t.cols; ++c) t.at(r, c) = 0.0;
    }

    // Phase 2 objective row.
    for (std::size_t c = 0; c <= t.cols; ++c) t.at(m, c) = 0.0;
    for (std::size_t c = 0; c < n; ++c) t.at(m, c) = cost[c];
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t b = t.basis[r];
        if (b < n && cost[b] != 0.0) {
            const Real factor = cost[b];
            const Real* src = t.row(r);
            Real* obj = t.row(m);
            for (std::size_t c = 0; c <= t.cols; ++c) obj[c] -= factor * src[c];
        }
    }

    LpResult::Status st;
    t.iterate(max_iters, st);
    out.status = st;
    if (st != LpResult::Status::kOptimal) return out;

    out.x.assign(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        if (t.basis[r] < n) out.x[t.basis[r]] = t.at(r, t.cols);
    Real direct = 0.0;
    for (std::size_t c = 0; c < n; ++c) direct += cost[c] * out.x[c];
    out.objective = direct;
    return out;
}

}  // namespace loclearn
