#pragma once

#include <vector>

#include "cbf_shield/barrier.hpp"
#include "cbf_shield/vehicle_model.hpp"

namespace cbf_shield {

/// Symmetric 2x2 weight [[aa, as], [as, ss]] over (a, steer).
struct Weight2 {
  double aa = 1.0;
  double as = 0.0;
  double ss = 10.0;

  bool positive_definite() const { return aa > 0.0 && aa * ss - as * as > 0.0; }
};

/// minimise (u - u_o)' Q (u - u_o)  s.t. every row >= 0 and u within limits.
struct QpProblem {
  Weight2 q;
  ControlInput u_o;
  std::vector<ConstraintRow> rows;
  ControlLimits limits;
};

enum class QpStatus { optimal, infeasible };

struct QpSolution {
  QpStatus status = QpStatus::infeasible;
  /// Meaningful only when optimal.
  ControlInput u;
  /// Rows (including limit rows) with zero slack at u.
  std::vector<ConstraintTag> active_set;
  double objective = 0.0;
  double kkt_residual = 0.0;
};

/// Exact solve by enumerating the unconstrained point, the projection on
/// every constraint line and every pairwise line intersection. Infeasible
/// problems are reported, never relaxed.
QpSolution solve(const QpProblem& problem);

/// Rows of the problem plus its four box-limit rows.
std::vector<ConstraintRow> all_rows(const QpProblem& problem);

/// Norm of the best reconstruction of the objective gradient at u as a
/// nonnegative combination of the active row normals.
double kkt_check(const QpProblem& problem, ControlInput u);

double objective(const QpProblem& problem, ControlInput u);

}  // namespace cbf_shield
