#pragma once

#include <filesystem>
#include <iosfwd>

#include "cbf_shield/perception.hpp"

namespace cbf_shield {

// Text format:
//   ogm v1
//   origin <x> <y>
//   resolution <r>
//   size <n_cols> <n_rows>
//   <n_rows lines of n_cols chars, '#' occupied, '.' free, first line = row 0>

/// Throws ParseError with the offending line number.
OccupancyGrid read_occupancy_grid(std::istream& in);
OccupancyGrid read_occupancy_grid(const std::filesystem::path& path);

void write_occupancy_grid(std::ostream& out, const OccupancyGrid& grid);

}  // namespace cbf_shield
