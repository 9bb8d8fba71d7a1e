#pragma once

#include <memory>
#include <random>

#include "polymps/block_system.hpp"
#include "polymps/mesh.hpp"
#include "polymps/space.hpp"

namespace polymps::testing {

inline std::shared_ptr<const PolyMesh> share(PolyMesh m) { return std::make_shared<const PolyMesh>(std::move(m)); }

/// n-by-n squares of the unit square, all in one domain, boundary label "b".
inline PolyMesh unit_square_grid(std::size_t n, Domain dom, bool triangles = false) {
  return structured_grid(0.0, 1.0, 0.0, 1.0, n, n, triangles, [dom](const Point&) { return dom; },
                         [](const Point&, const Point&) { return std::string("b"); });
}

/// Two unit squares side by side: elastic on (-1,0)x(0,1), fluid on (0,1)x(0,1).
inline PolyMesh two_squares() {
  std::vector<Point> xs{{-1, 0}, {0, 0}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}};
  std::vector<Element> els{{{0, 1, 4, 5}, Domain::elastic}, {{1, 2, 3, 4}, Domain::fluid}};
  BoundaryLabels labels{{edge_key(0, 1), "wall"}, {edge_key(4, 5), "wall"}, {edge_key(5, 0), "wall"},
                        {edge_key(1, 2), "wall"}, {edge_key(3, 4), "wall"}, {edge_key(2, 3), "out"}};
  return PolyMesh(xs, els, labels);
}

/// Natural (homogeneous Neumann) conditions on every boundary label.
inline BoundaryConditionMap natural_conditions(const PolyMesh& m) {
  BoundaryConditionMap bcs;
  for (const auto& [key, label] : m.boundary_labels()) bcs[label] = BoundaryCondition{};
  return bcs;
}

inline Vector random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = dist(rng);
  return x;
}

}  // namespace polymps::testing
