#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cbf_shield/geometry.hpp"

namespace cbf_shield {

/// Row-major boolean raster; row 0 holds the cells with the smallest y.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  /// Throws std::invalid_argument if resolution <= 0, a dimension is zero,
  /// or cells.size() != n_cols * n_rows.
  OccupancyGrid(Vec2 origin, double resolution, std::size_t n_cols, std::size_t n_rows,
                std::vector<bool> cells);
  /// All-free grid of the given size.
  OccupancyGrid(Vec2 origin, double resolution, std::size_t n_cols, std::size_t n_rows);

  Vec2 origin() const { return origin_; }
  double resolution() const { return resolution_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t n_rows() const { return n_rows_; }
  std::size_t size() const { return cells_.size(); }

  bool occupied(std::size_t index) const { return cells_[index]; }
  bool occupied(std::size_t col, std::size_t row) const { return cells_[row * n_cols_ + col]; }
  void set(std::size_t col, std::size_t row, bool value) { cells_[row * n_cols_ + col] = value; }

  std::size_t col_of(std::size_t index) const { return index % n_cols_; }
  std::size_t row_of(std::size_t index) const { return index / n_cols_; }
  Vec2 cell_center(std::size_t index) const;
  std::array<Vec2, 4> cell_corners(std::size_t index) const;

  std::vector<std::size_t> occupied_indices() const;

  bool operator==(const OccupancyGrid&) const = default;

 private:
  Vec2 origin_{};
  double resolution_ = 1.0;
  std::size_t n_cols_ = 0;
  std::size_t n_rows_ = 0;
  std::vector<bool> cells_;
};

/// Group of grid cells produced by clustering. `members` index into the
/// list handed to cluster_cells (or grid cell indices once convert() maps
/// them back); `corners` holds the world-frame points the hull is built on.
struct CellCluster {
  std::vector<std::size_t> members;
  std::vector<Vec2> corners;
};

struct PerceptionConfig {
  /// <= 0 selects the inflated-centre rule: a cell is covered when its
  /// centre lies inside any box grown by half a cell per side. A positive
  /// value switches to area sampling against the uninflated boxes.
  double coverage_fraction = 0.0;
  /// Single-linkage cutoff in metres; <= 0 selects 1.5 * resolution.
  double linkage_threshold = 0.0;
};

/// Occupied cells not explained by `boxes`, ascending grid index.
std::vector<std::size_t> subtract_covered_cells(const OccupancyGrid& grid,
                                                std::span<const BoundingBox> boxes,
                                                double coverage_fraction = 0.0);
/// Single-threaded reference for subtract_covered_cells.
std::vector<std::size_t> subtract_covered_cells_serial(const OccupancyGrid& grid,
                                                       std::span<const BoundingBox> boxes,
                                                       double coverage_fraction = 0.0);

/// Single-linkage agglomerative clustering: two points share a cluster iff
/// a chain of pairwise gaps <= linkage_threshold connects them. Clusters
/// are ordered by smallest member; members ascend. When
/// `cell_half_size > 0` each member contributes its four cell corners,
/// otherwise its centre.
std::vector<CellCluster> cluster_cells(std::span<const Vec2> centers, double linkage_threshold,
                                       double cell_half_size = 0.0);

/// Graham scan. Counter-clockwise, starting at the lowest (then leftmost)
/// point, collinear points dropped. One or two points for degenerate input.
std::vector<Vec2> convex_hull(std::span<const Vec2> points);

/// Minimum-area enclosing rectangle of a convex hull by trying every hull
/// edge as a side. The result has l >= w, theta in [-pi/2, pi/2) and both
/// sides at least `min_extent`.
BoundingBox min_area_rect(std::span<const Vec2> hull, double min_extent);

/// Full conversion: uncovered cells -> clusters -> hulls over cell corners
/// -> one supplementary box per cluster. Returns only the new boxes.
std::vector<BoundingBox> convert(const OccupancyGrid& grid, std::span<const BoundingBox> boxes,
                                 const PerceptionConfig& config = {});

/// Marks every cell whose square overlaps one of `shapes`. Fixture helper
/// for building grids from ground-truth geometry.
void rasterize(OccupancyGrid& grid, std::span<const BoundingBox> shapes);
void rasterize_serial(OccupancyGrid& grid, std::span<const BoundingBox> shapes);

}  // namespace cbf_shield
