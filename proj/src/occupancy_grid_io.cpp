#include "cbf_shield/occupancy_grid_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "cbf_shield/errors.hpp"

namespace cbf_shield {

namespace {

std::string next_line(std::istream& in, int& line_no, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(line_no + 1, std::string("missing ") + what);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// Parses "<keyword> <values...>" with nothing trailing.
template <typename... T>
void parse_header(const std::string& line, int line_no, const char* keyword, T&... values) {
  std::istringstream ss(line);
  std::string key;
  ss >> key;
  if (key != keyword)
    throw ParseError(line_no, std::string("expected '") + keyword + "' header, got '" + line + "'");
  ((ss >> values), ...);
  if (ss.fail()) throw ParseError(line_no, std::string("malformed '") + keyword + "' header");
  std::string rest;
  if (ss >> rest) throw ParseError(line_no, std::string("trailing data in '") + keyword + "' header");
}

}  // namespace

OccupancyGrid read_occupancy_grid(std::istream& in) {
  int line_no = 0;
  const std::string magic = next_line(in, line_no, "'ogm v1' header");
  if (magic != "ogm v1") throw ParseError(line_no, "expected 'ogm v1', got '" + magic + "'");

  double ox = 0.0, oy = 0.0, res = 0.0;
  long long n_cols = 0, n_rows = 0;
  // Read each line before using line_no: argument evaluation order is unspecified.
  const std::string origin = next_line(in, line_no, "'origin' header");
  parse_header(origin, line_no, "origin", ox, oy);
  const std::string resolution = next_line(in, line_no, "'resolution' header");
  parse_header(resolution, line_no, "resolution", res);
  if (!(res > 0.0)) throw ParseError(line_no, "resolution must be positive");
  const std::string size = next_line(in, line_no, "'size' header");
  parse_header(size, line_no, "size", n_cols, n_rows);
  if (n_cols <= 0 || n_rows <= 0) throw ParseError(line_no, "size must be positive");

  const auto cols = static_cast<std::size_t>(n_cols);
  const auto rows = static_cast<std::size_t>(n_rows);
  std::vector<bool> cells(cols * rows, false);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row = next_line(in, line_no, "grid row");
    if (row.size() != cols)
      throw ParseError(line_no, "expected " + std::to_string(cols) + " cells, got " +
                                    std::to_string(row.size()));
    for (std::size_t c = 0; c < cols; ++c) {
      if (row[c] == '#')
        cells[r * cols + c] = true;
      else if (row[c] != '.')
        throw ParseError(line_no, std::string("invalid cell character '") + row[c] + "'");
    }
  }
  return OccupancyGrid({ox, oy}, res, cols, rows, std::move(cells));
}

OccupancyGrid read_occupancy_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open occupancy grid file " + path.string());
  return read_occupancy_grid(in);
}

void write_occupancy_grid(std::ostream& out, const OccupancyGrid& grid) {
  out << "ogm v1\n" << std::setprecision(17);
  out << "origin " << grid.origin().x << ' ' << grid.origin().y << '\n';
  out << "resolution " << grid.resolution() << '\n';
  out << "size " << grid.n_cols() << ' ' << grid.n_rows() << '\n';
  for (std::size_t r = 0; r < grid.n_rows(); ++r) {
    for (std::size_t c = 0; c < grid.n_cols(); ++c) out << (grid.occupied(c, r) ? '#' : '.');
    out << '\n';
  }
}

}  // namespace cbf_shield
