#pragma once

// Two-subdomain polygonal meshes: storage, validation, JSON I/O, structured
// generators and the regularity report.

#include "polymps/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace polymps {

struct Element {
  std::vector<std::size_t> vertices;  // counterclockwise loop
  Domain domain = Domain::elastic;
};

struct ElementGeometry {
  double area = 0.0;
  Point centroid = Point::Zero();
  double diameter = 0.0;  // max vertex-vertex distance
  Point bbox_min = Point::Zero();
  Point bbox_max = Point::Zero();
};

/// A straight segment between two consecutive recorded vertices of the
/// mesh, shared by at most two elements. `v` is oriented as traversed by
/// `elem[0]`; `elem[1]` is -1 on the boundary.
struct MeshEdge {
  std::array<std::size_t, 2> v{};
  std::array<long, 2> elem{-1, -1};
  // Element edge of elem[0] that contains this segment (differs from `v`
  // only at hanging nodes).
  std::array<std::size_t, 2> parent{};

  bool on_boundary() const { return elem[1] < 0; }
};

using EdgeKey = std::pair<std::size_t, std::size_t>;

inline EdgeKey edge_key(std::size_t a, std::size_t b) {
  return a < b ? EdgeKey{a, b} : EdgeKey{b, a};
}

using BoundaryLabels = std::map<EdgeKey, std::string>;

namespace detail {

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline ElementGeometry compute_geometry(const std::vector<Point>& xs,
                                        const std::vector<std::size_t>& loop) {
  ElementGeometry g;
  const std::size_t n = loop.size();
  double a2 = 0.0;
  Point c = Point::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = xs[loop[i]];
    const Point& q = xs[loop[(i + 1) % n]];
    const double w = cross(p, q);
    a2 += w;
    c += w * (p + q);
  }
  g.area = 0.5 * a2;
  g.centroid = a2 != 0.0 ? Point(c / (3.0 * a2)) : Point(xs[loop[0]]);
  g.bbox_min = g.bbox_max = xs[loop[0]];
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = xs[loop[i]];
    g.bbox_min = g.bbox_min.cwiseMin(p);
    g.bbox_max = g.bbox_max.cwiseMax(p);
    for (std::size_t j = i + 1; j < n; ++j)
      g.diameter = std::max(g.diameter, (p - xs[loop[j]]).norm());
  }
  return g;
}

// Uniform bucket grid over vertex positions for collinear-vertex queries.
class VertexGrid {
 public:
  VertexGrid(const std::vector<Point>& xs, const std::vector<char>& used, double cell)
      : xs_(xs), cell_(cell) {
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (used[i]) buckets_[key(xs[i])].push_back(i);
  }

  template <class F>
  void for_each_in_box(const Point& lo, const Point& hi, F&& f) const {
    const long i0 = coord(lo.x()), i1 = coord(hi.x());
    const long j0 = coord(lo.y()), j1 = coord(hi.y());
    for (long i = i0; i <= i1; ++i)
      for (long j = j0; j <= j1; ++j) {
        auto it = buckets_.find(pack(i, j));
        if (it == buckets_.end()) continue;
        for (std::size_t v : it->second) f(v);
      }
  }

 private:
  long coord(double x) const { return static_cast<long>(std::floor(x / cell_)); }
  static long long pack(long i, long j) {
    return (static_cast<long long>(i) << 32) ^ static_cast<long long>(static_cast<unsigned>(j));
  }
  long long key(const Point& p) const { return pack(coord(p.x()), coord(p.y())); }

  const std::vector<Point>& xs_;
  double cell_;
  std::unordered_map<long long, std::vector<std::size_t>> buckets_;
};

}  // namespace detail

/// Immutable, validated two-subdomain polygonal mesh.
class PolyMesh {
 public:
  PolyMesh(std::vector<Point> vertices, std::vector<Element> elements, BoundaryLabels labels = {})
      : vertices_(std::move(vertices)), elements_(std::move(elements)), labels_(std::move(labels)) {
    validate_and_build();
  }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Element>& elements() const { return elements_; }
  const Element& element(std::size_t k) const { return elements_[k]; }
  const ElementGeometry& geometry(std::size_t k) const { return geometry_[k]; }
  const BoundaryLabels& boundary_labels() const { return labels_; }
  const std::vector<MeshEdge>& edges() const { return edges_; }
  /// Edge ids of element k in loop order.
  const std::vector<std::size_t>& element_edges(std::size_t k) const { return element_edges_[k]; }

  std::size_t n_elements() const { return elements_.size(); }
  std::size_t n_elements(Domain d) const {
    return static_cast<std::size_t>(std::count_if(elements_.begin(), elements_.end(),
                                                  [d](const Element& e) { return e.domain == d; }));
  }
  double total_area() const {
    double a = 0.0;
    for (const auto& g : geometry_) a += g.area;
    return a;
  }
  double area(Domain d) const {
    double a = 0.0;
    for (std::size_t k = 0; k < elements_.size(); ++k)
      if (elements_[k].domain == d) a += geometry_[k].area;
    return a;
  }
  /// Largest element diameter.
  double mesh_size() const {
    double h = 0.0;
    for (const auto& g : geometry_) h = std::max(h, g.diameter);
    return h;
  }
  /// Area enclosed by the boundary segments (independent of element areas).
  double boundary_enclosed_area() const { return boundary_area_; }

  bool is_interface(const MeshEdge& e) const {
    return !e.on_boundary() && elements_[e.elem[0]].domain != elements_[e.elem[1]].domain;
  }

  /// Label of a boundary edge, looked up by its own vertex pair first and then
  /// by the element edge containing it.
  std::optional<std::string> label_of(const MeshEdge& e) const {
    if (auto it = labels_.find(edge_key(e.v[0], e.v[1])); it != labels_.end()) return it->second;
    if (auto it = labels_.find(edge_key(e.parent[0], e.parent[1])); it != labels_.end())
      return it->second;
    return std::nullopt;
  }

 private:
  void validate_and_build();

  std::vector<Point> vertices_;
  std::vector<Element> elements_;
  BoundaryLabels labels_;
  std::vector<ElementGeometry> geometry_;
  std::vector<MeshEdge> edges_;
  std::vector<std::vector<std::size_t>> element_edges_;
  double boundary_area_ = 0.0;
};

inline void PolyMesh::validate_and_build() {
  const std::size_t nv = vertices_.size();
  if (elements_.empty()) throw MeshError("mesh has no elements");
  std::vector<char> used(nv, 0);
  geometry_.reserve(elements_.size());
  double mean_edge = 0.0;
  std::size_t n_edges = 0;
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    const auto& loop = elements_[k].vertices;
    if (loop.size() < 3)
      throw MeshError("element " + std::to_string(k) + " has fewer than 3 vertices");
    for (std::size_t i = 0; i < loop.size(); ++i) {
      if (loop[i] >= nv)
        throw MeshError("element " + std::to_string(k) + " references vertex " +
                        std::to_string(loop[i]) + " out of range");
      if (loop[i] == loop[(i + 1) % loop.size()])
        throw MeshError("element " + std::to_string(k) + " repeats vertex " + std::to_string(loop[i]));
      used[loop[i]] = 1;
    }
    auto g = detail::compute_geometry(vertices_, loop);
    if (!(g.area > 0.0))
      throw MeshError("element " + std::to_string(k) + " is not counterclockwise (area " +
                      std::to_string(g.area) + ")");
    const double tol = 1e-13 * g.diameter * g.diameter;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Point& p = vertices_[loop[i]];
      const Point& q = vertices_[loop[(i + 1) % loop.size()]];
      if (!(0.5 * detail::cross(p - g.centroid, q - g.centroid) > tol))
        throw MeshError("element " + std::to_string(k) +
                        " is not star-shaped with respect to its centroid (fan triangle " +
                        std::to_string(i) + ")");
      mean_edge += (q - p).norm();
      ++n_edges;
    }
    geometry_.push_back(g);
  }
  mean_edge /= static_cast<double>(n_edges);

  detail::VertexGrid grid(vertices_, used, mean_edge);
  std::map<EdgeKey, std::size_t> index;
  element_edges_.assign(elements_.size(), {});
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    const auto& loop = elements_[k].vertices;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const std::size_t a = loop[i], b = loop[(i + 1) % loop.size()];
      const Point pa = vertices_[a], pb = vertices_[b];
      const Vec2 t = pb - pa;
      const double len2 = t.squaredNorm();
      const double len = std::sqrt(len2);
      // Vertices lying in the interior of segment a-b split it (hanging nodes).
      std::vector<std::pair<double, std::size_t>> splits;
      grid.for_each_in_box(pa.cwiseMin(pb), pa.cwiseMax(pb), [&](std::size_t v) {
        if (v == a || v == b) return;
        const Vec2 r = vertices_[v] - pa;
        const double s = r.dot(t) / len2;
        if (s <= 1e-10 || s >= 1.0 - 1e-10) return;
        if (std::abs(detail::cross(t, r)) / len > 1e-10 * len) return;
        splits.emplace_back(s, v);
      });
      std::sort(splits.begin(), splits.end());
      std::vector<std::size_t> chain{a};
      for (auto& s : splits) chain.push_back(s.second);
      chain.push_back(b);
      for (std::size_t c = 0; c + 1 < chain.size(); ++c) {
        const std::size_t u = chain[c], w = chain[c + 1];
        const EdgeKey key = edge_key(u, w);
        auto it = index.find(key);
        if (it == index.end()) {
          MeshEdge e;
          e.v = {u, w};
          e.elem = {static_cast<long>(k), -1};
          e.parent = {a, b};
          index.emplace(key, edges_.size());
          element_edges_[k].push_back(edges_.size());
          edges_.push_back(e);
        } else {
          MeshEdge& e = edges_[it->second];
          if (e.elem[1] >= 0)
            throw MeshError("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                            ") is adjacent to more than 2 elements (overlap)");
          if (e.v[0] == u)
            throw MeshError("elements " + std::to_string(e.elem[0]) + " and " + std::to_string(k) +
                            " overlap along edge (" + std::to_string(key.first) + "," +
                            std::to_string(key.second) + ")");
          e.elem[1] = static_cast<long>(k);
          element_edges_[k].push_back(it->second);
        }
      }
    }
  }

  double enclosed = 0.0;
  for (const auto& e : edges_)
    if (e.on_boundary()) enclosed += 0.5 * detail::cross(vertices_[e.v[0]], vertices_[e.v[1]]);
  boundary_area_ = enclosed;
  const double total = total_area();
  if (std::abs(total - enclosed) > 1e-10 * total)
    throw MeshError("element areas (" + std::to_string(total) +
                    ") do not match the area enclosed by the boundary (" + std::to_string(enclosed) +
                    "): gaps or overlaps");
}

// ---------------------------------------------------------------------------
// JSON I/O

inline PolyMesh mesh_from_json(const nlohmann::json& j) {
  try {
    std::vector<Point> xs;
    for (const auto& v : j.at("vertices")) {
      if (v.size() != 2) throw MeshError("vertex must have 2 coordinates");
      xs.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    std::vector<Element> els;
    for (const auto& e : j.at("elements")) {
      Element el;
      el.vertices = e.at("v").get<std::vector<std::size_t>>();
      const auto dom = e.at("domain").get<std::string>();
      if (dom == "elastic")
        el.domain = Domain::elastic;
      else if (dom == "fluid")
        el.domain = Domain::fluid;
      else
        throw MeshError("unknown domain tag '" + dom + "'");
      els.push_back(std::move(el));
    }
    BoundaryLabels labels;
    if (j.contains("boundary"))
      for (const auto& b : j.at("boundary")) {
        const auto ed = b.at("edge").get<std::array<std::size_t, 2>>();
        labels[edge_key(ed[0], ed[1])] = b.at("label").get<std::string>();
      }
    return PolyMesh(std::move(xs), std::move(els), std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("mesh JSON: ") + e.what());
  }
}

inline nlohmann::json to_json(const PolyMesh& mesh) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& p : mesh.vertices()) j["vertices"].push_back({p.x(), p.y()});
  j["elements"] = nlohmann::json::array();
  for (const auto& e : mesh.elements())
    j["elements"].push_back({{"v", e.vertices}, {"domain", to_string(e.domain)}});
  j["boundary"] = nlohmann::json::array();
  for (const auto& [key, label] : mesh.boundary_labels())
    j["boundary"].push_back({{"edge", {key.first, key.second}}, {"label", label}});
  return j;
}

inline PolyMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open mesh file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("mesh file '" + path + "': " + e.what());
  }
  return mesh_from_json(j);
}

inline void save_mesh(const PolyMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write mesh file '" + path + "'");
  out << to_json(mesh).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Structured generators

using DomainFn = std::function<Domain(const Point&)>;
using LabelFn = std::function<std::string(const Point& a, const Point& b)>;

/// nx-by-ny grid on [x0,x1]x[y0,y1]; each cell is a square or two triangles.
/// Cells are tagged by `domain_of(cell center)` and boundary edges by `label_of`.
/// Cells for which `keep` returns false are omitted.
inline PolyMesh structured_grid(double x0, double x1, double y0, double y1, std::size_t nx,
                                std::size_t ny, bool triangles, const DomainFn& domain_of,
                                const LabelFn& label_of,
                                const std::function<bool(const Point&)>& keep = {}) {
  std::vector<Point> xs;
  xs.reserve((nx + 1) * (ny + 1));
  for (std::size_t j = 0; j <= ny; ++j)
    for (std::size_t i = 0; i <= nx; ++i)
      xs.emplace_back(x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(nx),
                      y0 + (y1 - y0) * static_cast<double>(j) / static_cast<double>(ny));
  auto id = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
  std::vector<Element> els;
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      const Point center = 0.25 * (xs[a] + xs[b] + xs[c] + xs[d]);
      if (keep && !keep(center)) continue;
      const Domain dom = domain_of(center);
      if (!triangles) {
        els.push_back({{a, b, c, d}, dom});
      } else if ((i + j) % 2 == 0) {
        els.push_back({{a, b, c}, dom});
        els.push_back({{a, c, d}, dom});
      } else {
        els.push_back({{a, b, d}, dom});
        els.push_back({{b, c, d}, dom});
      }
    }
  // Compact unused vertices.
  std::vector<long> remap(xs.size(), -1);
  std::vector<Point> kept;
  for (auto& e : els)
    for (auto& v : e.vertices) {
      if (remap[v] < 0) {
        remap[v] = static_cast<long>(kept.size());
        kept.push_back(xs[v]);
      }
      v = static_cast<std::size_t>(remap[v]);
    }
  // Label boundary edges: edges used once.
  std::map<EdgeKey, int> count;
  for (const auto& e : els)
    for (std::size_t i = 0; i < e.vertices.size(); ++i)
      ++count[edge_key(e.vertices[i], e.vertices[(i + 1) % e.vertices.size()])];
  BoundaryLabels labels;
  for (const auto& [key, c] : count)
    if (c == 1) labels[key] = label_of(kept[key.first], kept[key.second]);
  return PolyMesh(std::move(kept), std::move(els), std::move(labels));
}

/// Boundary labels of the verification geometry (-1,1)x(0,1) with the
/// interface on x = 0: "outer_el" on the elastic boundary, "wall_f" on the
/// fluid top/bottom and "out" on x = 1.
inline std::string verification_label(const Point& a, const Point& b) {
  const Point m = 0.5 * (a + b);
  if (m.x() < 0.0) return "outer_el";
  if (std::abs(m.x() - 1.0) < 1e-12) return "out";
  return "wall_f";
}

inline Domain split_at_zero(const Point& c) { return c.x() < 0.0 ? Domain::elastic : Domain::fluid; }

/// Cartesian nx-by-ny grid of (-1,1)x(0,1), elastic for x<0 and fluid for x>0.
inline PolyMesh verification_grid(std::size_t nx, std::size_t ny, bool triangles = false) {
  if (nx % 2 != 0) throw InputError("verification grid needs an even number of columns");
  return structured_grid(-1.0, 1.0, 0.0, 1.0, nx, ny, triangles, split_at_zero, verification_label);
}

// ---------------------------------------------------------------------------
// Regularity report

struct MeshQualityReport {
  std::vector<double> shape_ratios;      // d |S_K^F| / |F| / h_K per (element, face)
  std::vector<double> variation_ratios;  // max(h1,h2)/min(h1,h2) per neighbour pair
  double min_diameter = 0.0;
  double max_diameter = 0.0;

  double min_shape_ratio() const {
    return shape_ratios.empty() ? 0.0 : *std::min_element(shape_ratios.begin(), shape_ratios.end());
  }
  double max_variation_ratio() const {
    return variation_ratios.empty()
               ? 1.0
               : *std::max_element(variation_ratios.begin(), variation_ratios.end());
  }
  bool all_finite_positive() const {
    auto ok = [](double x) { return std::isfinite(x) && x > 0.0; };
    return std::all_of(shape_ratios.begin(), shape_ratios.end(), ok) &&
           std::all_of(variation_ratios.begin(), variation_ratios.end(), ok) && ok(min_diameter);
  }
};

inline MeshQualityReport quality_report(const PolyMesh& mesh) {
  constexpr double dim = 2.0;
  MeshQualityReport r;
  r.min_diameter = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mesh.n_elements(); ++k) {
    const auto& g = mesh.geometry(k);
    r.min_diameter = std::min(r.min_diameter, g.diameter);
    r.max_diameter = std::max(r.max_diameter, g.diameter);
    for (std::size_t eid : mesh.element_edges(k)) {
      const auto& e = mesh.edges()[eid];
      const Point& a = mesh.vertices()[e.v[0]];
      const Point& b = mesh.vertices()[e.v[1]];
      const double tri = 0.5 * std::abs(detail::cross(a - g.centroid, b - g.centroid));
      r.shape_ratios.push_back(dim * tri / (b - a).norm() / g.diameter);
    }
  }
  for (const auto& e : mesh.edges()) {
    if (e.on_boundary()) continue;
    const double h1 = mesh.geometry(static_cast<std::size_t>(e.elem[0])).diameter;
    const double h2 = mesh.geometry(static_cast<std::size_t>(e.elem[1])).diameter;
    r.variation_ratios.push_back(std::max(h1, h2) / std::min(h1, h2));
  }
  return r;
}

}  // namespace polymps
