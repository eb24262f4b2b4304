#include "cbf_shield/qp.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace cbf_shield {

namespace {

double row_scale(const ConstraintRow& r) {
  return std::max(1.0, std::abs(r.c_a) + std::abs(r.c_steer) + std::abs(r.b));
}

constexpr double kFeasibilityTol = 1e-10;
constexpr double kActiveTol = 1e-8;

bool feasible(const std::vector<ConstraintRow>& rows, ControlInput u) {
  return std::all_of(rows.begin(), rows.end(), [u](const ConstraintRow& r) {
    return r.evaluate(u) >= -kFeasibilityTol * row_scale(r);
  });
}

std::vector<std::size_t> active_rows(const std::vector<ConstraintRow>& rows, ControlInput u) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (std::abs(rows[i].evaluate(u)) <= kActiveTol * row_scale(rows[i])) out.push_back(i);
  return out;
}

bool lex_less(ControlInput x, ControlInput y) {
  return x.a < y.a || (x.a == y.a && x.steer < y.steer);
}

}  // namespace

double objective(const QpProblem& p, ControlInput u) {
  const double da = u.a - p.u_o.a;
  const double ds = u.steer - p.u_o.steer;
  return p.q.aa * da * da + 2.0 * p.q.as * da * ds + p.q.ss * ds * ds;
}

std::vector<ConstraintRow> all_rows(const QpProblem& p) {
  std::vector<ConstraintRow> rows = p.rows;
  const auto& lim = p.limits;
  rows.push_back({1.0, 0.0, -lim.a_min, {ConstraintKind::limit, 0}});
  rows.push_back({-1.0, 0.0, lim.a_max, {ConstraintKind::limit, 1}});
  rows.push_back({0.0, 1.0, -lim.steer_min, {ConstraintKind::limit, 2}});
  rows.push_back({0.0, -1.0, lim.steer_max, {ConstraintKind::limit, 3}});
  return rows;
}

double kkt_check(const QpProblem& p, ControlInput u) {
  const auto rows = all_rows(p);
  const auto active = active_rows(rows, u);
  const double da = u.a - p.u_o.a;
  const double ds = u.steer - p.u_o.steer;
  // Stationarity of min f s.t. r_i(u) >= 0: grad f = sum lambda_i c_i, lambda >= 0.
  const Vec2 grad{2.0 * (p.q.aa * da + p.q.as * ds), 2.0 * (p.q.as * da + p.q.ss * ds)};

  double best = norm(grad);
  // In the plane a cone point is a nonnegative combination of at most two
  // generators, so singletons and pairs cover every candidate multiplier set.
  for (std::size_t ii = 0; ii < active.size(); ++ii) {
    const Vec2 ci{rows[active[ii]].c_a, rows[active[ii]].c_steer};
    const double cc = dot(ci, ci);
    if (cc > 0.0) {
      const double lambda = std::max(0.0, dot(grad, ci) / cc);
      best = std::min(best, norm(grad - ci * lambda));
    }
    for (std::size_t jj = ii + 1; jj < active.size(); ++jj) {
      const Vec2 cj{rows[active[jj]].c_a, rows[active[jj]].c_steer};
      const double det = cross(ci, cj);
      if (std::abs(det) <= 1e-14 * norm(ci) * norm(cj)) continue;
      const double li = cross(grad, cj) / det;
      const double lj = cross(ci, grad) / det;
      if (li < 0.0 || lj < 0.0) continue;
      best = std::min(best, norm(grad - ci * li - cj * lj));
    }
  }
  return best;
}

QpSolution solve(const QpProblem& p) {
  if (!p.q.positive_definite()) throw std::invalid_argument("QP weight must be positive definite");
  const auto rows = all_rows(p);

  // Q^{-1} for the metric projections.
  const double det_q = p.q.aa * p.q.ss - p.q.as * p.q.as;
  const auto q_inv = [&](Vec2 c) {
    return Vec2{(p.q.ss * c.x - p.q.as * c.y) / det_q, (-p.q.as * c.x + p.q.aa * c.y) / det_q};
  };

  QpSolution sol;
  // A feasible request is returned bit-for-bit.
  if (feasible(rows, p.u_o)) {
    sol.status = QpStatus::optimal;
    sol.u = p.u_o;
    for (const auto idx : active_rows(rows, p.u_o)) sol.active_set.push_back(rows[idx].tag);
    return sol;
  }

  bool found = false;
  ControlInput best_u;
  double best_obj = std::numeric_limits<double>::infinity();
  const auto consider = [&](ControlInput u) {
    if (!std::isfinite(u.a) || !std::isfinite(u.steer) || !feasible(rows, u)) return;
    const double obj = objective(p, u);
    const double tie = 1e-12 * std::max(1.0, best_obj);
    if (!found || obj < best_obj - tie || (obj <= best_obj + tie && lex_less(u, best_u))) {
      found = true;
      best_obj = std::min(obj, best_obj);
      best_u = u;
    }
  };

  for (const auto& r : rows) {
    const Vec2 c{r.c_a, r.c_steer};
    const Vec2 qc = q_inv(c);
    const double denom = dot(c, qc);
    if (!(denom > 0.0)) continue;
    const double t = -r.evaluate(p.u_o) / denom;
    consider({p.u_o.a + t * qc.x, p.u_o.steer + t * qc.y});
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Vec2 ci{rows[i].c_a, rows[i].c_steer};
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const Vec2 cj{rows[j].c_a, rows[j].c_steer};
      const double det = cross(ci, cj);
      if (std::abs(det) <= 1e-14 * norm(ci) * norm(cj)) continue;
      // ci.u = -bi, cj.u = -bj
      const double bi = -rows[i].b;
      const double bj = -rows[j].b;
      consider({(bi * cj.y - ci.y * bj) / det, (ci.x * bj - bi * cj.x) / det});
    }
  }

  if (!found) return sol;
  sol.status = QpStatus::optimal;
  sol.u = best_u;
  sol.objective = objective(p, best_u);
  for (const auto idx : active_rows(rows, best_u)) sol.active_set.push_back(rows[idx].tag);
  sol.kkt_residual = kkt_check(p, best_u);
  return sol;
}

}  // namespace cbf_shield
