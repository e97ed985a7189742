#include <vkplate/mesh.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

using namespace vkplate;

TEST_CASE("uniform mesh layout") {
  const MeshGrid mesh = build_uniform_mesh({-1, 1, -1, 1}, 2, 2);
  REQUIRE(mesh.n_nodes() == 9);
  REQUIRE(mesh.n_elements() == 4);
  REQUIRE(mesh.hx == 1.0);
  REQUIRE(mesh.hy == 1.0);

  // Row-major numbering, x1 fastest.
  REQUIRE(mesh.node_coords[0] == Eigen::Vector2d(-1, -1));
  REQUIRE(mesh.node_coords[1] == Eigen::Vector2d(0, -1));
  REQUIRE(mesh.node_coords[4] == Eigen::Vector2d(0, 0));
  REQUIRE(mesh.node_coords[8] == Eigen::Vector2d(1, 1));
  REQUIRE(mesh.node_index(1, 1) == 4);

  // Counter-clockwise corners from lower-left.
  REQUIRE(mesh.elements[0] == std::array<int, 4>{0, 1, 4, 3});
  REQUIRE(mesh.elements[3] == std::array<int, 4>{4, 5, 8, 7});
}

TEST_CASE("non-square mesh element connectivity") {
  const MeshGrid mesh = build_uniform_mesh({0, 3, 0, 1}, 3, 2);
  REQUIRE(mesh.n_nodes() == 12);
  REQUIRE(mesh.n_elements() == 6);
  REQUIRE(mesh.hx == 1.0);
  REQUIRE(mesh.hy == 0.5);
  // element (ex=1, ey=1) -> index 4
  REQUIRE(mesh.elements[4] == std::array<int, 4>{5, 6, 10, 9});
}

TEST_CASE("mesh construction rejects degenerate input") {
  REQUIRE_THROWS_AS(build_uniform_mesh({1, 1, -1, 1}, 2, 2),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(build_uniform_mesh({-1, 1, 2, 1}, 2, 2),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(build_uniform_mesh({-1, 1, -1, 1}, 0, 2),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(build_uniform_mesh({-1, 1, -1, 1}, 2, -1),
                    std::invalid_argument);
}

TEST_CASE("boundary node selection") {
  const MeshGrid mesh = build_uniform_mesh({-1, 1, -1, 1}, 2, 2);

  const auto all = boundary_nodes(mesh, BoundarySelector::all_edges);
  REQUIRE(all == std::vector<int>{0, 1, 2, 3, 5, 6, 7, 8});

  const auto tb = boundary_nodes(mesh, BoundarySelector::top_and_bottom);
  REQUIRE(tb == std::vector<int>{0, 1, 2, 6, 7, 8});

  // Corners belong to the horizontal edges too.
  for (int corner : {0, 2, 6, 8})
    REQUIRE(std::count(tb.begin(), tb.end(), corner) == 1);
}

TEST_CASE("boundary nodes sit on the geometric boundary") {
  const MeshGrid mesh = build_uniform_mesh({-2, 3, 0, 1}, 5, 4);
  for (int node : boundary_nodes(mesh, BoundarySelector::all_edges)) {
    const Eigen::Vector2d& x = mesh.node_coords[node];
    const bool on = x[0] == -2 || x[0] == 3 || x[1] == 0 || x[1] == 1;
    REQUIRE(on);
  }
  for (int node : boundary_nodes(mesh, BoundarySelector::top_and_bottom)) {
    const Eigen::Vector2d& x = mesh.node_coords[node];
    REQUIRE((x[1] == 0 || x[1] == 1));
  }
}

TEST_CASE("grid identity comparison") {
  const MeshGrid a = build_uniform_mesh({-1, 1, -1, 1}, 4, 4);
  const MeshGrid b = build_uniform_mesh({-1, 1, -1, 1}, 4, 4);
  const MeshGrid c = build_uniform_mesh({-1, 1, -1, 1}, 4, 5);
  const MeshGrid d = build_uniform_mesh({-1, 2, -1, 1}, 4, 4);
  REQUIRE(a.same_grid(b));
  REQUIRE_FALSE(a.same_grid(c));
  REQUIRE_FALSE(a.same_grid(d));
}
