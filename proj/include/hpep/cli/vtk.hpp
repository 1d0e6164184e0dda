#pragma once

#include "hpep/analysis.hpp"

#include <iosfwd>
#include <string>

namespace hpep::cli {

/// Legacy ASCII VTK unstructured grid. Each element of degree p is split into p x p cells, one per
/// Gauss point, so the cell values of plastic strain and multiplier are their Gauss-point values.
/// Displacement is point data at the cell corners.
void write_vtk(std::ostream& out, const DiscreteFields& fields, const std::string& title = "hpep solution");

/// Writes `content` to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

/// Shortest round-trip decimal with 17 significant digits.
std::string format_double(double v);

} // namespace hpep::cli
