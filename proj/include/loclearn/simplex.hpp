#pragma once

#include <cstddef>
#include <vector>

#include "loclearn/common.hpp"

namespace loclearn {

// Small dense two-phase simplex for  min c^T x  s.t.  A x <= b,  x >= 0.
// Rows with negative rhs get phase-1 artificials. Dantzig pricing with a
// Bland fallback once the objective stalls, so the solve always terminates.
struct LpResult {
    enum class Status { kOptimal, kInfeasible, kUnbounded, kIterLimit };
    Status status = Status::kIterLimit;
    Real objective = 0.0;
    std::vector<Real> x;
};

LpResult solve_lp(const std::vector<std::vector<Real>>& constraint_rows,
                  const std::vector<Real>& rhs, const std::vector<Real>& cost);

}  // namespace loclearn
