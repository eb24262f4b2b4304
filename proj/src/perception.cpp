#include "cbf_shield/perception.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cbf_shield/collision.hpp"

namespace cbf_shield {

OccupancyGrid::OccupancyGrid(Vec2 origin, double resolution, std::size_t n_cols,
                             std::size_t n_rows, std::vector<bool> cells)
    : origin_(origin), resolution_(resolution), n_cols_(n_cols), n_rows_(n_rows),
      cells_(std::move(cells)) {
  if (!(resolution_ > 0.0) || !std::isfinite(resolution_))
    throw std::invalid_argument("occupancy grid resolution must be positive");
  if (n_cols_ == 0 || n_rows_ == 0)
    throw std::invalid_argument("occupancy grid dimensions must be positive");
  if (cells_.size() != n_cols_ * n_rows_)
    throw std::invalid_argument("occupancy grid cell count does not match its size");
}

OccupancyGrid::OccupancyGrid(Vec2 origin, double resolution, std::size_t n_cols,
                             std::size_t n_rows)
    : OccupancyGrid(origin, resolution, n_cols, n_rows,
                    std::vector<bool>(n_cols * n_rows, false)) {}

Vec2 OccupancyGrid::cell_center(std::size_t index) const {
  return {origin_.x + (static_cast<double>(col_of(index)) + 0.5) * resolution_,
          origin_.y + (static_cast<double>(row_of(index)) + 0.5) * resolution_};
}

std::array<Vec2, 4> OccupancyGrid::cell_corners(std::size_t index) const {
  const double x0 = origin_.x + static_cast<double>(col_of(index)) * resolution_;
  const double y0 = origin_.y + static_cast<double>(row_of(index)) * resolution_;
  const double x1 = origin_.x + static_cast<double>(col_of(index) + 1) * resolution_;
  const double y1 = origin_.y + static_cast<double>(row_of(index) + 1) * resolution_;
  return {Vec2{x0, y0}, Vec2{x1, y0}, Vec2{x1, y1}, Vec2{x0, y1}};
}

std::vector<std::size_t> OccupancyGrid::occupied_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cells_.size(); ++i)
    if (cells_[i]) out.push_back(i);
  return out;
}

namespace {

constexpr int kCoverageSamples = 8;

bool inside_any(Vec2 p, std::span<const BoundingBox> boxes) {
  return std::any_of(boxes.begin(), boxes.end(),
                     [p](const BoundingBox& b) { return b.contains(p, 1e-12); });
}

bool cell_covered(const OccupancyGrid& grid, std::size_t index,
                  std::span<const BoundingBox> inflated, std::span<const BoundingBox> boxes,
                  double coverage_fraction) {
  if (coverage_fraction <= 0.0) return inside_any(grid.cell_center(index), inflated);

  const auto corners = grid.cell_corners(index);
  const double step = grid.resolution() / kCoverageSamples;
  int hits = 0;
  for (int i = 0; i < kCoverageSamples; ++i)
    for (int j = 0; j < kCoverageSamples; ++j)
      if (inside_any({corners[0].x + (i + 0.5) * step, corners[0].y + (j + 0.5) * step}, boxes))
        ++hits;
  return static_cast<double>(hits) >= coverage_fraction * kCoverageSamples * kCoverageSamples;
}

std::vector<BoundingBox> inflate_all(std::span<const BoundingBox> boxes, double margin) {
  std::vector<BoundingBox> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) out.push_back(b.inflated(margin));
  return out;
}

}  // namespace

std::vector<std::size_t> subtract_covered_cells_serial(const OccupancyGrid& grid,
                                                       std::span<const BoundingBox> boxes,
                                                       double coverage_fraction) {
  const auto inflated = inflate_all(boxes, 0.5 * grid.resolution());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.occupied(i) && !cell_covered(grid, i, inflated, boxes, coverage_fraction))
      out.push_back(i);
  return out;
}

std::vector<std::size_t> subtract_covered_cells(const OccupancyGrid& grid,
                                                std::span<const BoundingBox> boxes,
                                                double coverage_fraction) {
  const auto inflated = inflate_all(boxes, 0.5 * grid.resolution());
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  std::vector<char> keep(grid.size(), 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    keep[idx] = grid.occupied(idx) && !cell_covered(grid, idx, inflated, boxes, coverage_fraction);
  }

  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

namespace {

// Union-find with path halving and union by smaller root index, so each
// root is the smallest member of its set.
struct DisjointSets {
  std::vector<std::size_t> parent;

  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b)
      parent[b] = a;
    else
      parent[a] = b;
  }
};

}  // namespace

std::vector<CellCluster> cluster_cells(std::span<const Vec2> centers, double linkage_threshold,
                                       double cell_half_size) {
  const std::size_t n = centers.size();
  DisjointSets sets(n);
  const double limit_sq = linkage_threshold * linkage_threshold;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 d = centers[j] - centers[i];
      if (dot(d, d) <= limit_sq) sets.unite(i, j);
    }

  // Roots are smallest members, so visiting in index order yields clusters
  // already sorted by their smallest member.
  std::vector<CellCluster> clusters;
  std::vector<std::size_t> slot(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] == std::numeric_limits<std::size_t>::max()) {
      slot[root] = clusters.size();
      clusters.emplace_back();
    }
    auto& cluster = clusters[slot[root]];
    cluster.members.push_back(i);
    const Vec2 c = centers[i];
    if (cell_half_size > 0.0) {
      const double h = cell_half_size;
      cluster.corners.insert(cluster.corners.end(),
                             {Vec2{c.x - h, c.y - h}, Vec2{c.x + h, c.y - h},
                              Vec2{c.x + h, c.y + h}, Vec2{c.x - h, c.y + h}});
    } else {
      cluster.corners.push_back(c);
    }
  }
  return clusters;
}

std::vector<Vec2> convex_hull(std::span<const Vec2> points) {
  std::vector<Vec2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(),
            [](Vec2 a, Vec2 b) { return a.y < b.y || (a.y == b.y && a.x < b.x); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 1) return pts;

  const Vec2 pivot = pts.front();
  std::sort(pts.begin() + 1, pts.end(), [pivot](Vec2 a, Vec2 b) {
    const double c = cross(a - pivot, b - pivot);
    if (c != 0.0) return c > 0.0;
    const Vec2 da = a - pivot;
    const Vec2 db = b - pivot;
    return dot(da, da) < dot(db, db);
  });

  // A turn counts as "left" only when it clears a tolerance scaled by the
  // edge lengths; near-collinear lattice points are dropped.
  const auto left_turn = [](Vec2 o, Vec2 a, Vec2 b) {
    const Vec2 u = a - o;
    const Vec2 v = b - o;
    return cross(u, v) > 1e-12 * norm(u) * norm(v);
  };

  std::vector<Vec2> hull;
  hull.reserve(pts.size());
  for (const Vec2 p : pts) {
    while (hull.size() >= 2 && !left_turn(hull[hull.size() - 2], hull.back(), p)) hull.pop_back();
    hull.push_back(p);
  }
  return hull;
}

BoundingBox min_area_rect(std::span<const Vec2> hull, double min_extent) {
  if (hull.empty()) throw std::invalid_argument("min_area_rect needs at least one point");
  if (hull.size() == 1) return {hull[0].x, hull[0].y, min_extent, min_extent, 0.0};

  double best_area = std::numeric_limits<double>::infinity();
  BoundingBox best;
  const std::size_t n = hull.size();
  const std::size_t n_edges = n == 2 ? 1 : n;
  for (std::size_t i = 0; i < n_edges; ++i) {
    const Vec2 edge = hull[(i + 1) % n] - hull[i];
    const double len = norm(edge);
    if (len == 0.0) continue;
    const Vec2 u = edge * (1.0 / len);
    const Vec2 v = perp(u);
    double u_lo = std::numeric_limits<double>::infinity(), u_hi = -u_lo;
    double v_lo = u_lo, v_hi = -u_lo;
    for (const Vec2 p : hull) {
      const double pu = dot(p, u);
      const double pv = dot(p, v);
      u_lo = std::min(u_lo, pu);
      u_hi = std::max(u_hi, pu);
      v_lo = std::min(v_lo, pv);
      v_hi = std::max(v_hi, pv);
    }
    const double area = (u_hi - u_lo) * (v_hi - v_lo);
    // First edge wins ties so symmetric hulls map to a stable orientation.
    if (area < best_area * (1.0 - 1e-12)) {
      best_area = area;
      const Vec2 c = u * (0.5 * (u_lo + u_hi)) + v * (0.5 * (v_lo + v_hi));
      best = {c.x, c.y, u_hi - u_lo, v_hi - v_lo, std::atan2(u.y, u.x)};
    }
  }

  best.l = std::max(best.l, min_extent);
  best.w = std::max(best.w, min_extent);
  if (best.w > best.l) {
    std::swap(best.l, best.w);
    best.theta += std::numbers::pi / 2.0;
  }
  best.theta = normalize_orientation(best.theta);
  return best;
}

std::vector<BoundingBox> convert(const OccupancyGrid& grid, std::span<const BoundingBox> boxes,
                                 const PerceptionConfig& config) {
  const auto uncovered = subtract_covered_cells(grid, boxes, config.coverage_fraction);
  if (uncovered.empty()) return {};

  std::vector<Vec2> centers;
  centers.reserve(uncovered.size());
  for (const auto idx : uncovered) centers.push_back(grid.cell_center(idx));

  const double threshold =
      config.linkage_threshold > 0.0 ? config.linkage_threshold : 1.5 * grid.resolution();
  const auto clusters = cluster_cells(centers, threshold);

  std::vector<BoundingBox> out;
  out.reserve(clusters.size());
  for (const auto& cluster : clusters) {
    std::vector<Vec2> corners;
    corners.reserve(4 * cluster.members.size());
    for (const auto m : cluster.members) {
      const auto cc = grid.cell_corners(uncovered[m]);
      corners.insert(corners.end(), cc.begin(), cc.end());
    }
    const auto hull = convex_hull(corners);
    out.push_back(min_area_rect(hull, grid.resolution()));
  }
  return out;
}

namespace {

bool cell_touches_shape(const OccupancyGrid& grid, std::size_t index,
                        std::span<const BoundingBox> shapes) {
  const Vec2 c = grid.cell_center(index);
  const BoundingBox cell{c.x, c.y, grid.resolution(), grid.resolution(), 0.0};
  return std::any_of(shapes.begin(), shapes.end(), [&](const BoundingBox& s) {
    const auto hit = detect_collision(cell, s);
    return hit.overlap && hit.penetration > 1e-9;
  });
}

}  // namespace

void rasterize_serial(OccupancyGrid& grid, std::span<const BoundingBox> shapes) {
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (cell_touches_shape(grid, i, shapes)) grid.set(grid.col_of(i), grid.row_of(i), true);
}

void rasterize(OccupancyGrid& grid, std::span<const BoundingBox> shapes) {
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  std::vector<char> hit(grid.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    hit[static_cast<std::size_t>(i)] = cell_touches_shape(grid, static_cast<std::size_t>(i), shapes);
  for (std::size_t i = 0; i < hit.size(); ++i)
    if (hit[i]) grid.set(grid.col_of(i), grid.row_of(i), true);
}

}  // namespace cbf_shield
