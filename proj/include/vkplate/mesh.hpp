#pragma once

// Structured quadrilateral grids on axis-aligned rectangles.

#include <Eigen/Core>

#include <array>
#include <stdexcept>
#include <vector>

namespace vkplate {

/// Axis-aligned rectangular domain (x1_min, x1_max) x (x2_min, x2_max).
struct DomainSpec {
  double x1_min = -1.0;
  double x1_max = 1.0;
  double x2_min = -1.0;
  double x2_max = 1.0;

  double width() const { return x1_max - x1_min; }
  double height() const { return x2_max - x2_min; }
};

/// Which part of the boundary carries the clamped condition.
enum class BoundarySelector {
  all_edges,       ///< the whole boundary
  top_and_bottom,  ///< only the edges x2 = x2_min and x2 = x2_max
};

/// Uniform tensor-product grid of quadrilateral cells.
///
/// Nodes are numbered row-major: node (i, j) with 0 <= i <= nx, 0 <= j <= ny
/// has index j*(nx+1) + i, so x1 varies fastest.  Element k = ey*nx + ex lists
/// its corner nodes counter-clockwise starting at the lower-left one.
struct MeshGrid {
  DomainSpec domain;
  int nx = 0;  ///< number of cells along x1
  int ny = 0;  ///< number of cells along x2
  double hx = 0.0;
  double hy = 0.0;
  std::vector<Eigen::Vector2d> node_coords;
  std::vector<std::array<int, 4>> elements;

  int n_nodes() const { return static_cast<int>(node_coords.size()); }
  int n_elements() const { return static_cast<int>(elements.size()); }

  int node_index(int i, int j) const { return j * (nx + 1) + i; }

  /// Structural equality; used to detect accidental mixing of discretizations.
  bool same_grid(const MeshGrid& other) const {
    return nx == other.nx && ny == other.ny &&
           domain.x1_min == other.domain.x1_min &&
           domain.x1_max == other.domain.x1_max &&
           domain.x2_min == other.domain.x2_min &&
           domain.x2_max == other.domain.x2_max;
  }
};

/// Builds the uniform nx-by-ny grid over the given rectangle.
///
/// Throws std::invalid_argument for empty rectangles or non-positive cell
/// counts.
inline MeshGrid build_uniform_mesh(const DomainSpec& domain, int nx, int ny) {
  if (!(domain.x1_min < domain.x1_max) || !(domain.x2_min < domain.x2_max))
    throw std::invalid_argument("build_uniform_mesh: degenerate domain");
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("build_uniform_mesh: need nx >= 1 and ny >= 1");

  MeshGrid mesh;
  mesh.domain = domain;
  mesh.nx = nx;
  mesh.ny = ny;
  mesh.hx = domain.width() / nx;
  mesh.hy = domain.height() / ny;

  mesh.node_coords.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.node_coords.emplace_back(domain.x1_min + i * mesh.hx,
                                    domain.x2_min + j * mesh.hy);

  mesh.elements.reserve(static_cast<std::size_t>(nx * ny));
  for (int ey = 0; ey < ny; ++ey)
    for (int ex = 0; ex < nx; ++ex)
      mesh.elements.push_back({mesh.node_index(ex, ey),
                               mesh.node_index(ex + 1, ey),
                               mesh.node_index(ex + 1, ey + 1),
                               mesh.node_index(ex, ey + 1)});
  return mesh;
}

/// Node indices on the selected part of the boundary, ascending.
///
/// Corners belong to every edge through them, so top_and_bottom includes the
/// four corner nodes.
inline std::vector<int> boundary_nodes(const MeshGrid& mesh,
                                       BoundarySelector which) {
  std::vector<int> nodes;
  for (int j = 0; j <= mesh.ny; ++j) {
    for (int i = 0; i <= mesh.nx; ++i) {
      const bool on_vertical = (i == 0 || i == mesh.nx);
      const bool on_horizontal = (j == 0 || j == mesh.ny);
      const bool selected = which == BoundarySelector::all_edges
                                ? (on_vertical || on_horizontal)
                                : on_horizontal;
      if (selected) nodes.push_back(mesh.node_index(i, j));
    }
  }
  return nodes;
}

}  // namespace vkplate
