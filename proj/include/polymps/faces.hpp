#pragma once

// Face classification for the DG forms: interior faces of each subdomain,
// per-variable Dirichlet/Neumann boundary faces, outlet faces and the
// elastic/fluid interface.

#include "polymps/mesh.hpp"

#include <set>

namespace polymps {

enum class FaceKind : unsigned char { interior, boundary, interface };

/// Boundary condition attached to a boundary label. Variables not listed as
/// Dirichlet get a homogeneous natural condition.
struct BoundaryCondition {
  bool dirichlet_d = false;
  bool dirichlet_u = false;
  bool outlet = false;                   // fluid stress datum -pout n
  std::set<std::string> dirichlet_p;     // compartment names

  static BoundaryCondition wall() {
    BoundaryCondition bc;
    bc.dirichlet_d = bc.dirichlet_u = true;
    return bc;
  }
};

using BoundaryConditionMap = std::map<std::string, BoundaryCondition>;

struct Face {
  std::size_t edge = 0;                 // index into PolyMesh::edges()
  std::array<std::size_t, 2> v{};
  std::array<long, 2> elem{-1, -1};     // elem[0] is K+ (the elastic element on the interface)
  Vec2 normal = Vec2::Zero();           // unit normal out of elem[0]; n- = -normal
  double measure = 0.0;
  double harmonic_h = 0.0;
  FaceKind kind = FaceKind::interior;
  Domain domain = Domain::elastic;      // domain of elem[0]
  std::string label;                    // boundary faces only
  bool dirichlet_d = false;
  bool dirichlet_u = false;
  bool outlet = false;
  std::vector<char> dirichlet_p;        // per compartment

  bool is_interior() const { return kind == FaceKind::interior; }
  bool is_boundary() const { return kind == FaceKind::boundary; }
  bool is_interface() const { return kind == FaceKind::interface; }
  std::size_t plus() const { return static_cast<std::size_t>(elem[0]); }
  std::size_t minus() const { return static_cast<std::size_t>(elem[1]); }

  /// Human-readable classification for one variable ("d", "u", "p", or a
  /// compartment index via `j`).
  std::string classification(const std::string& variable, std::size_t j = 0) const {
    if (is_interface()) return "interface";
    if (is_interior()) return domain == Domain::elastic ? "interior-el" : "interior-f";
    if (domain == Domain::elastic) {
      if (variable == "d") return dirichlet_d ? "dirichlet-d" : "neumann-d";
      if (variable == "p_j") return dirichlet_p.at(j) ? "dirichlet-p" : "neumann-p";
    } else {
      if (variable == "u") return dirichlet_u ? "dirichlet-u" : (outlet ? "neumann-out" : "neumann-u");
      if (variable == "p") return "none";
    }
    return "none";
  }
};

/// Harmonic average of the two adjacent diameters; the element diameter on
/// boundary faces.
inline double harmonic_h(double h_plus, std::optional<double> h_minus) {
  if (!h_minus) return h_plus;
  return 2.0 * h_plus * *h_minus / (h_plus + *h_minus);
}

class FaceSet {
 public:
  FaceSet() = default;
  FaceSet(std::vector<Face> faces, std::size_t n_elements) : faces_(std::move(faces)) {
    by_element_.assign(n_elements, {});
    for (std::size_t f = 0; f < faces_.size(); ++f)
      for (long e : faces_[f].elem)
        if (e >= 0) by_element_[static_cast<std::size_t>(e)].push_back(f);
  }

  const std::vector<Face>& faces() const { return faces_; }
  std::size_t size() const { return faces_.size(); }
  const Face& operator[](std::size_t i) const { return faces_[i]; }
  const std::vector<std::size_t>& of_element(std::size_t k) const { return by_element_[k]; }

  std::size_t count(FaceKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(faces_.begin(), faces_.end(), [kind](const Face& f) { return f.kind == kind; }));
  }

  /// Copy with every interface face turned into a plain (natural) boundary
  /// face of each side, which decouples the subdomains.
  FaceSet without_interface() const {
    std::vector<Face> out;
    for (const auto& f : faces_) {
      if (!f.is_interface()) {
        out.push_back(f);
        continue;
      }
      Face a = f;
      a.kind = FaceKind::boundary;
      a.elem = {f.elem[0], -1};
      a.label = "interface";
      out.push_back(a);
      Face b = f;
      b.kind = FaceKind::boundary;
      b.elem = {f.elem[1], -1};
      b.normal = -f.normal;
      b.domain = Domain::fluid;
      b.label = "interface";
      out.push_back(b);
    }
    return FaceSet(std::move(out), by_element_.size());
  }

 private:
  std::vector<Face> faces_;
  std::vector<std::vector<std::size_t>> by_element_;
};

/// Classify all mesh edges. `compartments` lists the pressure compartment
/// names in DOF order; `bcs` maps every boundary label to its condition.
inline FaceSet build_faces(const PolyMesh& mesh, const BoundaryConditionMap& bcs,
                           const std::vector<std::string>& compartments) {
  std::vector<Face> faces;
  faces.reserve(mesh.edges().size());
  for (std::size_t id = 0; id < mesh.edges().size(); ++id) {
    const MeshEdge& e = mesh.edges()[id];
    Face f;
    f.edge = id;
    f.v = e.v;
    f.elem = e.elem;
    const Point& a = mesh.vertices()[e.v[0]];
    const Point& b = mesh.vertices()[e.v[1]];
    const Vec2 t = b - a;
    f.measure = t.norm();
    // Edges are traversed counterclockwise by elem[0]: outward normal is t rotated by -90 degrees.
    f.normal = Vec2(t.y(), -t.x()) / f.measure;
    f.dirichlet_p.assign(compartments.size(), 0);
    const double hp = mesh.geometry(static_cast<std::size_t>(e.elem[0])).diameter;
    if (e.on_boundary()) {
      f.kind = FaceKind::boundary;
      f.domain = mesh.element(f.plus()).domain;
      f.harmonic_h = harmonic_h(hp, std::nullopt);
      const auto label = mesh.label_of(e);
      if (!label)
        throw MeshError("boundary edge (" + std::to_string(e.v[0]) + "," + std::to_string(e.v[1]) +
                        ") has no label");
      f.label = *label;
      const auto it = bcs.find(f.label);
      if (it == bcs.end()) throw InputError("no boundary condition for label '" + f.label + "'");
      const BoundaryCondition& bc = it->second;
      if (f.domain == Domain::elastic) {
        f.dirichlet_d = bc.dirichlet_d;
        for (std::size_t j = 0; j < compartments.size(); ++j)
          f.dirichlet_p[j] = bc.dirichlet_p.count(compartments[j]) ? 1 : 0;
      } else {
        f.dirichlet_u = bc.dirichlet_u;
        f.outlet = bc.outlet && !bc.dirichlet_u;
      }
    } else {
      const double hm = mesh.geometry(static_cast<std::size_t>(e.elem[1])).diameter;
      f.harmonic_h = harmonic_h(hp, hm);
      if (mesh.is_interface(e)) {
        f.kind = FaceKind::interface;
        if (mesh.element(f.plus()).domain != Domain::elastic) {
          std::swap(f.elem[0], f.elem[1]);
          std::swap(f.v[0], f.v[1]);
          f.normal = -f.normal;
        }
        f.domain = Domain::elastic;
      } else {
        f.kind = FaceKind::interior;
        f.domain = mesh.element(f.plus()).domain;
      }
    }
    faces.push_back(std::move(f));
  }
  return FaceSet(std::move(faces), mesh.n_elements());
}

/// Boundary conditions of the manufactured verification problems: Dirichlet
/// d and p_j on the elastic boundary, Dirichlet u on the fluid walls, stress
/// datum on the outlet x = 1.
inline BoundaryConditionMap verification_conditions(const std::vector<std::string>& compartments) {
  BoundaryConditionMap m;
  BoundaryCondition el;
  el.dirichlet_d = true;
  el.dirichlet_p.insert(compartments.begin(), compartments.end());
  m["outer_el"] = el;
  BoundaryCondition wall;
  wall.dirichlet_u = true;
  m["wall_f"] = wall;
  BoundaryCondition out;
  out.outlet = true;
  m["out"] = out;
  return m;
}

}  // namespace polymps
