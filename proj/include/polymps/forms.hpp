#pragma once

// Bilinear forms of the PolyDG discretization.
//
// Conventions: jumps of vector fields are [[w]] = w+ (.) n+ + w- (.) n-,
// jumps of scalars [[q]] = q+ n+ + q- n-, averages {.} are the arithmetic
// mean on interior faces and the one-sided trace on boundary faces.
// Matrices are stored as (test dofs) x (trial dofs). Coupling blocks B, J
// have pressure-test rows and vector-field columns.

#include "polymps/params.hpp"
#include "polymps/space.hpp"

namespace polymps {

namespace detail {

/// One side of a face, tabulated at the face quadrature points.
struct FaceSide {
  std::size_t elem;
  Vec2 normal;
  BasisTable tab;
};

inline std::vector<FaceSide> face_sides(const DGSpace& space, const Face& f, const QuadratureRule& q) {
  std::vector<FaceSide> sides;
  sides.push_back({f.plus(), f.normal, space.tabulate(f.plus(), q.points)});
  if (f.elem[1] >= 0) sides.push_back({f.minus(), -f.normal, space.tabulate(f.minus(), q.points)});
  return sides;
}

inline void scatter(const Eigen::MatrixXd& local, const std::vector<Eigen::Index>& rows,
                    const std::vector<Eigen::Index>& cols, std::vector<Triplet>& out) {
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b) {
      const double v = local(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      if (v != 0.0) out.emplace_back(rows[a], cols[b], v);
    }
}

/// Global indices of the ncomp * n_basis dofs of element k, component-major.
inline std::vector<Eigen::Index> element_dofs(const DGSpace& space, std::size_t k, int ncomp) {
  std::vector<Eigen::Index> out;
  for (int c = 0; c < ncomp; ++c) {
    const auto o = static_cast<Eigen::Index>(space.dof(k, ncomp, c));
    for (std::size_t i = 0; i < space.n_basis(); ++i) out.push_back(o + static_cast<Eigen::Index>(i));
  }
  return out;
}

inline SpMat from_triplets(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& t) {
  SpMat m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.prune(0.0);
  return m;
}

/// Vector test/trial function e_c psi_i: value, symmetric gradient, divergence.
struct VecShape {
  Vec2 val;
  Mat2 eps;
  double div;
};

inline VecShape vec_shape(const BasisTable& t, Eigen::Index q, int c, Eigen::Index i) {
  VecShape s;
  s.val = Vec2::Zero();
  s.val[c] = t.val(q, i);
  Mat2 g = Mat2::Zero();
  g.row(c) = t.grad(q, i).transpose();
  s.eps = 0.5 * (g + g.transpose());
  s.div = g(c, c);
  return s;
}

inline Mat2 stress(const Mat2& eps, double mu, double lambda) {
  return 2.0 * mu * eps + lambda * eps.trace() * Mat2::Identity();
}

/// Symmetric interior penalty form for sigma(v) = 2 mu eps(v) + lambda tr eps(v) I
/// on the vector field of `dom`, face terms on faces accepted by `active`.
template <class Active, class Penalty>
SpMat sipg_vector(const DGSpace& space, const FaceSet& faces, Domain dom, double mu, double lambda,
                  Active active, Penalty penalty) {
  const auto nb = static_cast<Eigen::Index>(space.n_basis());
  const auto n = static_cast<Eigen::Index>(space.field_size(dom, 2));
  std::vector<Triplet> trip;
  for (std::size_t k : space.elements(dom)) {
    const auto q = volume_quadrature(space.mesh(), k, space.volume_order());
    const auto t = space.tabulate(k, q.points);
    Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(2 * nb, 2 * nb);
    std::vector<VecShape> sh(static_cast<std::size_t>(2 * nb));
    for (std::size_t p = 0; p < q.size(); ++p) {
      const auto pp = static_cast<Eigen::Index>(p);
      for (int c = 0; c < 2; ++c)
        for (Eigen::Index i = 0; i < nb; ++i) sh[static_cast<std::size_t>(c * nb + i)] = vec_shape(t, pp, c, i);
      for (Eigen::Index a = 0; a < 2 * nb; ++a)
        for (Eigen::Index b = 0; b < 2 * nb; ++b)
          loc(a, b) += q.weights[p] * ddot(stress(sh[static_cast<std::size_t>(b)].eps, mu, lambda),
                                           sh[static_cast<std::size_t>(a)].eps);
    }
    const auto dofs = element_dofs(space, k, 2);
    scatter(loc, dofs, dofs, trip);
  }
  for (const Face& f : faces.faces()) {
    if (f.domain != dom || !active(f)) continue;
    const auto q = face_quadrature(space.mesh(), f, space.face_order());
    const auto sides = face_sides(space, f, q);
    const double avg = sides.size() == 2 ? 0.5 : 1.0;
    const double pen = penalty(f);
    const auto nloc = static_cast<Eigen::Index>(sides.size()) * 2 * nb;
    Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(nloc, nloc);
    std::vector<Mat2> jump(static_cast<std::size_t>(nloc)), avg_s(static_cast<std::size_t>(nloc));
    for (std::size_t p = 0; p < q.size(); ++p) {
      const auto pp = static_cast<Eigen::Index>(p);
      for (std::size_t s = 0; s < sides.size(); ++s)
        for (int c = 0; c < 2; ++c)
          for (Eigen::Index i = 0; i < nb; ++i) {
            const auto a = static_cast<std::size_t>(static_cast<Eigen::Index>(s) * 2 * nb + c * nb + i);
            const VecShape v = vec_shape(sides[s].tab, pp, c, i);
            jump[a] = sym_outer(v.val, sides[s].normal);
            avg_s[a] = avg * stress(v.eps, mu, lambda);
          }
      for (Eigen::Index a = 0; a < nloc; ++a)
        for (Eigen::Index b = 0; b < nloc; ++b) {
          const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
          loc(a, b) += q.weights[p] * (-ddot(avg_s[ub], jump[ua]) - ddot(jump[ub], avg_s[ua]) +
                                       pen * ddot(jump[ub], jump[ua]));
        }
    }
    std::vector<Eigen::Index> dofs;
    for (const auto& s : sides) {
      const auto d = element_dofs(space, s.elem, 2);
      dofs.insert(dofs.end(), d.begin(), d.end());
    }
    scatter(loc, dofs, dofs, trip);
  }
  return from_triplets(n, n, trip);
}

/// Symmetric interior penalty form for kappa grad p . grad q on subdomain `dom`.
template <class Active, class Penalty>
SpMat sipg_scalar(const DGSpace& space, const FaceSet& faces, Domain dom, double kappa, Active active,
                  Penalty penalty) {
  const auto nb = static_cast<Eigen::Index>(space.n_basis());
  const auto n = static_cast<Eigen::Index>(space.field_size(dom, 1));
  std::vector<Triplet> trip;
  for (std::size_t k : space.elements(dom)) {
    const auto q = volume_quadrature(space.mesh(), k, space.volume_order());
    const auto t = space.tabulate(k, q.points);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(q.weights.data(), static_cast<Eigen::Index>(q.size()));
    const Eigen::MatrixXd loc =
        kappa * (t.dx.transpose() * w.asDiagonal() * t.dx + t.dy.transpose() * w.asDiagonal() * t.dy);
    const auto dofs = element_dofs(space, k, 1);
    scatter(loc, dofs, dofs, trip);
  }
  for (const Face& f : faces.faces()) {
    if (f.domain != dom || !active(f)) continue;
    const auto q = face_quadrature(space.mesh(), f, space.face_order());
    const auto sides = face_sides(space, f, q);
    const double avg = sides.size() == 2 ? 0.5 : 1.0;
    const double pen = penalty(f);
    const auto nloc = static_cast<Eigen::Index>(sides.size()) * nb;
    Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(nloc, nloc);
    // jump . n+ and average flux . n+ for each local function
    Eigen::VectorXd jn(nloc), fl(nloc);
    for (std::size_t p = 0; p < q.size(); ++p) {
      const auto pp = static_cast<Eigen::Index>(p);
      for (std::size_t s = 0; s < sides.size(); ++s) {
        const double sgn = s == 0 ? 1.0 : -1.0;
        for (Eigen::Index i = 0; i < nb; ++i) {
          const Eigen::Index a = static_cast<Eigen::Index>(s) * nb + i;
          jn[a] = sgn * sides[s].tab.val(pp, i);
          fl[a] = avg * kappa * sides[s].tab.grad(pp, i).dot(f.normal);
        }
      }
      loc += q.weights[p] * (-jn * fl.transpose() - fl * jn.transpose() + pen * jn * jn.transpose());
    }
    std::vector<Eigen::Index> dofs;
    for (const auto& s : sides) {
      const auto d = element_dofs(space, s.elem, 1);
      dofs.insert(dofs.end(), d.begin(), d.end());
    }
    scatter(loc, dofs, dofs, trip);
  }
  return from_triplets(n, n, trip);
}

/// Weighted mass matrix of an ncomp-component field on `dom`.
inline SpMat mass_matrix(const DGSpace& space, Domain dom, int ncomp, double coeff) {
  const auto n = static_cast<Eigen::Index>(space.field_size(dom, ncomp));
  const auto nb = static_cast<Eigen::Index>(space.n_basis());
  std::vector<Triplet> trip;
  for (std::size_t k : space.elements(dom)) {
    const auto q = volume_quadrature(space.mesh(), k, space.volume_order());
    const auto t = space.tabulate(k, q.points);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(q.weights.data(), static_cast<Eigen::Index>(q.size()));
    const Eigen::MatrixXd loc = coeff * (t.val.transpose() * w.asDiagonal() * t.val);
    for (int c = 0; c < ncomp; ++c) {
      const auto o = static_cast<Eigen::Index>(space.dof(k, ncomp, c));
      for (Eigen::Index a = 0; a < nb; ++a)
        for (Eigen::Index b = 0; b < nb; ++b) trip.emplace_back(o + a, o + b, loc(a, b));
    }
  }
  return from_triplets(n, n, trip);
}

/// Pressure-divergence coupling -int coeff q div v + sum_F int coeff {q} tr[[v]]
/// between the scalar and vector fields of `dom`.
template <class Active>
SpMat divergence_coupling(const DGSpace& space, const FaceSet& faces, Domain dom, double coeff, Active active) {
  const auto nb = static_cast<Eigen::Index>(space.n_basis());
  const auto rows = static_cast<Eigen::Index>(space.field_size(dom, 1));
  const auto cols = static_cast<Eigen::Index>(space.field_size(dom, 2));
  std::vector<Triplet> trip;
  for (std::size_t k : space.elements(dom)) {
    const auto q = volume_quadrature(space.mesh(), k, space.volume_order());
    const auto t = space.tabulate(k, q.points);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(q.weights.data(), static_cast<Eigen::Index>(q.size()));
    Eigen::MatrixXd loc(nb, 2 * nb);
    loc.leftCols(nb) = -coeff * (t.val.transpose() * w.asDiagonal() * t.dx);
    loc.rightCols(nb) = -coeff * (t.val.transpose() * w.asDiagonal() * t.dy);
    scatter(loc, element_dofs(space, k, 1), element_dofs(space, k, 2), trip);
  }
  for (const Face& f : faces.faces()) {
    if (f.domain != dom || !active(f)) continue;
    const auto q = face_quadrature(space.mesh(), f, space.face_order());
    const auto sides = face_sides(space, f, q);
    const double avg = sides.size() == 2 ? 0.5 : 1.0;
    const auto ns = static_cast<Eigen::Index>(sides.size());
    Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(ns * nb, ns * 2 * nb);
    Eigen::VectorXd qv(ns * nb), vn(ns * 2 * nb);
    for (std::size_t p = 0; p < q.size(); ++p) {
      const auto pp = static_cast<Eigen::Index>(p);
      for (Eigen::Index s = 0; s < ns; ++s) {
        const auto& side = sides[static_cast<std::size_t>(s)];
        for (Eigen::Index i = 0; i < nb; ++i) {
          qv[s * nb + i] = avg * side.tab.val(pp, i);
          for (int c = 0; c < 2; ++c) vn[s * 2 * nb + c * nb + i] = side.tab.val(pp, i) * side.normal[c];
        }
      }
      loc += q.weights[p] * coeff * qv * vn.transpose();
    }
    std::vector<Eigen::Index> rdofs, cdofs;
    for (const auto& s : sides) {
      const auto r = element_dofs(space, s.elem, 1);
      const auto c = element_dofs(space, s.elem, 2);
      rdofs.insert(rdofs.end(), r.begin(), r.end());
      cdofs.insert(cdofs.end(), c.begin(), c.end());
    }
    scatter(loc, rdofs, cdofs, trip);
  }
  return from_triplets(rows, cols, trip);
}

}  // namespace detail

struct ElasticForms {
  SpMat A;  // A_el
  SpMat M;  // rho_el mass
};

struct PressureForms {
  SpMat A;               // A_j
  SpMat M;               // c_j mass
  SpMat B;               // B_j: p_j test rows, displacement columns
  std::vector<SpMat> C;  // C_jk for every k
};

struct FluidForms {
  SpMat A;  // A_f
  SpMat M;  // rho_f mass
  SpMat B;  // B_f: pressure test rows, velocity columns
  SpMat S;  // pressure stabilization
};

struct InterfaceForms {
  SpMat J_el;  // int_Sigma q_E (w . n_el)
  SpMat J_f;   // int_Sigma q_E (v . n_f)
};

inline ElasticForms assemble_elastic(const DGSpace& space, const PhysicalParams& p, const FaceSet& faces) {
  const int sp_deg = space.degree();
  auto active = [](const Face& f) { return f.is_interior() || (f.is_boundary() && f.dirichlet_d); };
  auto eta = [&p, sp_deg](const Face& f) { return penalty_coefficients(f, p, sp_deg).eta; };
  return {detail::sipg_vector(space, faces, Domain::elastic, p.mu_el, p.lambda, active, eta),
          detail::mass_matrix(space, Domain::elastic, 2, p.rho_el)};
}

inline PressureForms assemble_pressure(const DGSpace& space, const PhysicalParams& p, const FaceSet& faces,
                                       std::size_t j) {
  if (j >= p.n_compartments()) throw InputError("compartment index out of range");
  const int sp_deg = space.degree();
  const Compartment& c = p.compartments[j];
  PressureForms out;
  auto a_active = [j](const Face& f) { return f.is_interior() || (f.is_boundary() && f.dirichlet_p.at(j)); };
  auto zeta = [&p, j, sp_deg](const Face& f) { return penalty_coefficients(f, p, sp_deg).zeta[j]; };
  out.A = detail::sipg_scalar(space, faces, Domain::elastic, c.k / c.mu, a_active, zeta);
  out.M = detail::mass_matrix(space, Domain::elastic, 1, c.c);
  auto b_active = [](const Face& f) { return f.is_interior() || (f.is_boundary() && f.dirichlet_d); };
  out.B = detail::divergence_coupling(space, faces, Domain::elastic, c.alpha, b_active);
  const SpMat mass = detail::mass_matrix(space, Domain::elastic, 1, 1.0);
  const auto J = static_cast<Eigen::Index>(p.n_compartments());
  const auto jj = static_cast<Eigen::Index>(j);
  for (Eigen::Index k = 0; k < J; ++k) {
    double coeff = 0.0;
    if (k == jj) {
      coeff = c.beta_ext;
      for (Eigen::Index l = 0; l < J; ++l)
        if (l != jj) coeff += p.beta(l, jj);
    } else {
      coeff = -p.beta(k, jj);
    }
    out.C.push_back(coeff * mass);
  }
  return out;
}

inline FluidForms assemble_fluid(const DGSpace& space, const PhysicalParams& p, const FaceSet& faces) {
  const int sp_deg = space.degree();
  FluidForms out;
  auto active = [](const Face& f) { return f.is_interior() || (f.is_boundary() && f.dirichlet_u); };
  auto gv = [&p, sp_deg](const Face& f) { return penalty_coefficients(f, p, sp_deg).gamma_v; };
  out.A = detail::sipg_vector(space, faces, Domain::fluid, p.mu_f, 0.0, active, gv);
  out.M = detail::mass_matrix(space, Domain::fluid, 2, p.rho_f);
  out.B = detail::divergence_coupling(space, faces, Domain::fluid, 1.0, active);
  // S: gamma_p [[p]].[[q]] on interior fluid faces only.
  auto interior = [](const Face& f) { return f.is_interior(); };
  auto gp = [&p, sp_deg](const Face& f) { return penalty_coefficients(f, p, sp_deg).gamma_p; };
  const auto nb = static_cast<Eigen::Index>(space.n_basis());
  std::vector<Triplet> trip;
  for (const Face& f : faces.faces()) {
    if (f.domain != Domain::fluid || !interior(f)) continue;
    const auto q = face_quadrature(space.mesh(), f, space.face_order());
    const auto sides = detail::face_sides(space, f, q);
    Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(2 * nb, 2 * nb);
    Eigen::VectorXd jn(2 * nb);
    for (std::size_t pt = 0; pt < q.size(); ++pt) {
      const auto pp = static_cast<Eigen::Index>(pt);
      jn.head(nb) = sides[0].tab.val.row(pp).transpose();
      jn.tail(nb) = -sides[1].tab.val.row(pp).transpose();
      loc += q.weights[pt] * gp(f) * jn * jn.transpose();
    }
    auto dofs = detail::element_dofs(space, sides[0].elem, 1);
    const auto m = detail::element_dofs(space, sides[1].elem, 1);
    dofs.insert(dofs.end(), m.begin(), m.end());
    detail::scatter(loc, dofs, dofs, trip);
  }
  const auto np = static_cast<Eigen::Index>(space.field_size(Domain::fluid, 1));
  out.S = detail::from_triplets(np, np, trip);
  return out;
}

inline InterfaceForms assemble_interface(const DGSpace& space, const FaceSet& faces) {
  const auto nb = static_cast<Eigen::Index>(space.n_basis());
  std::vector<Triplet> tel, tf;
  for (const Face& f : faces.faces()) {
    if (!f.is_interface()) continue;
    const auto q = face_quadrature(space.mesh(), f, space.face_order());
    const auto sides = detail::face_sides(space, f, q);  // [0] elastic, [1] fluid
    Eigen::MatrixXd lel = Eigen::MatrixXd::Zero(nb, 2 * nb), lf = Eigen::MatrixXd::Zero(nb, 2 * nb);
    for (std::size_t pt = 0; pt < q.size(); ++pt) {
      const auto pp = static_cast<Eigen::Index>(pt);
      const Eigen::VectorXd qe = sides[0].tab.val.row(pp).transpose();
      for (int c = 0; c < 2; ++c) {
        lel.middleCols(c * nb, nb) += q.weights[pt] * sides[0].normal[c] * qe * sides[0].tab.val.row(pp);
        lf.middleCols(c * nb, nb) += q.weights[pt] * sides[1].normal[c] * qe * sides[1].tab.val.row(pp);
      }
    }
    const auto rows = detail::element_dofs(space, sides[0].elem, 1);
    detail::scatter(lel, rows, detail::element_dofs(space, sides[0].elem, 2), tel);
    detail::scatter(lf, rows, detail::element_dofs(space, sides[1].elem, 2), tf);
  }
  const auto np = static_cast<Eigen::Index>(space.field_size(Domain::elastic, 1));
  return {detail::from_triplets(np, static_cast<Eigen::Index>(space.field_size(Domain::elastic, 2)), tel),
          detail::from_triplets(np, static_cast<Eigen::Index>(space.field_size(Domain::fluid, 2)), tf)};
}

}  // namespace polymps
