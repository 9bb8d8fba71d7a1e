#pragma once

// Right-hand sides: volume sources, outlet stress datum and the weak
// imposition of nonhomogeneous Dirichlet traces.

#include "polymps/forms.hpp"

namespace polymps {

using ScalarTimeFn = std::function<double(const Point&, double)>;
using VectorTimeFn = std::function<Vec2(const Point&, double)>;

/// Data of a run. Empty closures stand for zero.
struct ProblemData {
  VectorTimeFn f_el;                // elastic body force
  std::vector<ScalarTimeFn> g;      // per-compartment source
  VectorTimeFn f_f;                 // fluid body force
  ScalarTimeFn p_out;               // outlet normal stress datum
  VectorTimeFn d_D;                 // displacement trace
  VectorTimeFn dt_d_D;              // its time derivative
  std::vector<ScalarTimeFn> p_D;    // per-compartment pressure trace
  VectorTimeFn u_D;                 // velocity trace
};

struct LoadVectors {
  Vector F_el;
  std::vector<Vector> F_p;  // one per compartment
  Vector F_f;
  Vector G;                 // continuity row
};

namespace detail {

inline Vec2 eval(const VectorTimeFn& f, const Point& x, double t) { return f ? f(x, t) : Vec2::Zero(); }
inline double eval(const ScalarTimeFn& f, const Point& x, double t) { return f ? f(x, t) : 0.0; }
inline const ScalarTimeFn* pick(const std::vector<ScalarTimeFn>& v, std::size_t j) {
  return j < v.size() && v[j] ? &v[j] : nullptr;
}

/// Adds int f . v over the elements of `dom` to a vector-field load.
inline void add_vector_source(const DGSpace& space, Domain dom, const VectorTimeFn& f, double t, Vector& F) {
  if (!f) return;
  const auto nb = static_cast<Eigen::Index>(space.n_basis());
  for (std::size_t k : space.elements(dom)) {
    const auto q = volume_quadrature(space.mesh(), k, space.volume_order());
    const auto tab = space.tabulate(k, q.points);
    for (std::size_t p = 0; p < q.size(); ++p) {
      const Vec2 v = f(q.points[p], t);
      for (int c = 0; c < 2; ++c)
        F.segment(static_cast<Eigen::Index>(space.dof(k, 2, c)), nb) +=
            q.weights[p] * v[c] * tab.val.row(static_cast<Eigen::Index>(p)).transpose();
    }
  }
}

inline void add_scalar_source(const DGSpace& space, Domain dom, const ScalarTimeFn& f, double t, Vector& F) {
  if (!f) return;
  const auto nb = static_cast<Eigen::Index>(space.n_basis());
  for (std::size_t k : space.elements(dom)) {
    const auto q = volume_quadrature(space.mesh(), k, space.volume_order());
    const auto tab = space.tabulate(k, q.points);
    for (std::size_t p = 0; p < q.size(); ++p)
      F.segment(static_cast<Eigen::Index>(space.dof(k, 1, 0)), nb) +=
          q.weights[p] * f(q.points[p], t) * tab.val.row(static_cast<Eigen::Index>(p)).transpose();
  }
}

/// Lifting of a vector Dirichlet trace g for sigma = 2 mu eps + lambda tr eps I:
/// -int (g (.) n) : sigma(v) + pen int (g (.) n) : (v (.) n).
inline void add_vector_lifting(const DGSpace& space, const Face& f, const VectorTimeFn& g, double t, double mu,
                               double lambda, double pen, Vector& F) {
  const auto nb = static_cast<Eigen::Index>(space.n_basis());
  const auto q = face_quadrature(space.mesh(), f, space.face_order());
  const auto tab = space.tabulate(f.plus(), q.points);
  for (std::size_t p = 0; p < q.size(); ++p) {
    const auto pp = static_cast<Eigen::Index>(p);
    const Mat2 gn = sym_outer(g(q.points[p], t), f.normal);
    for (int c = 0; c < 2; ++c)
      for (Eigen::Index i = 0; i < nb; ++i) {
        const VecShape v = vec_shape(tab, pp, c, i);
        F[static_cast<Eigen::Index>(space.dof(f.plus(), 2, c)) + i] +=
            q.weights[p] * (-ddot(gn, stress(v.eps, mu, lambda)) + pen * ddot(gn, sym_outer(v.val, f.normal)));
      }
  }
}

}  // namespace detail

inline LoadVectors assemble_loads(const DGSpace& space, const PhysicalParams& params, const FaceSet& faces,
                                  const ProblemData& data, double t) {
  const std::size_t J = params.n_compartments();
  LoadVectors L;
  L.F_el = Vector::Zero(static_cast<Eigen::Index>(space.field_size(Domain::elastic, 2)));
  L.F_p.assign(J, Vector::Zero(static_cast<Eigen::Index>(space.field_size(Domain::elastic, 1))));
  L.F_f = Vector::Zero(static_cast<Eigen::Index>(space.field_size(Domain::fluid, 2)));
  L.G = Vector::Zero(static_cast<Eigen::Index>(space.field_size(Domain::fluid, 1)));

  detail::add_vector_source(space, Domain::elastic, data.f_el, t, L.F_el);
  detail::add_vector_source(space, Domain::fluid, data.f_f, t, L.F_f);
  for (std::size_t j = 0; j < J; ++j)
    if (const auto* g = detail::pick(data.g, j)) detail::add_scalar_source(space, Domain::elastic, *g, t, L.F_p[j]);

  const auto nb = static_cast<Eigen::Index>(space.n_basis());
  for (const Face& f : faces.faces()) {
    if (!f.is_boundary()) continue;
    const PenaltyValues pen = penalty_coefficients(f, params, space.degree());
    const std::size_t k = f.plus();
    if (f.domain == Domain::elastic) {
      if (f.dirichlet_d && data.d_D)
        detail::add_vector_lifting(space, f, data.d_D, t, params.mu_el, params.lambda, pen.eta, L.F_el);
      const bool moving = f.dirichlet_d && data.dt_d_D;
      for (std::size_t j = 0; j < J; ++j) {
        const auto* pd = f.dirichlet_p[j] ? detail::pick(data.p_D, j) : nullptr;
        if (!pd && !moving) continue;
        const Compartment& c = params.compartments[j];
        const double kappa = c.k / c.mu;
        const auto q = face_quadrature(space.mesh(), f, space.face_order());
        const auto tab = space.tabulate(k, q.points);
        const auto o = static_cast<Eigen::Index>(space.dof(k, 1, 0));
        for (std::size_t p = 0; p < q.size(); ++p) {
          const auto pp = static_cast<Eigen::Index>(p);
          double coef_val = 0.0, coef_flux = 0.0;
          if (pd) {
            const double gD = (*pd)(q.points[p], t);
            coef_val += pen.zeta[j] * gD;
            coef_flux -= gD * kappa;
          }
          if (moving) coef_val -= c.alpha * data.dt_d_D(q.points[p], t).dot(f.normal);
          for (Eigen::Index i = 0; i < nb; ++i)
            L.F_p[j][o + i] += q.weights[p] * (coef_val * tab.val(pp, i) +
                                               coef_flux * tab.grad(pp, i).dot(f.normal));
        }
      }
    } else {
      if (f.dirichlet_u && data.u_D) {
        detail::add_vector_lifting(space, f, data.u_D, t, params.mu_f, 0.0, pen.gamma_v, L.F_f);
        const auto q = face_quadrature(space.mesh(), f, space.face_order());
        const auto tab = space.tabulate(k, q.points);
        const auto o = static_cast<Eigen::Index>(space.dof(k, 1, 0));
        for (std::size_t p = 0; p < q.size(); ++p) {
          const double un = data.u_D(q.points[p], t).dot(f.normal);
          L.G.segment(o, nb) -= q.weights[p] * un * tab.val.row(static_cast<Eigen::Index>(p)).transpose();
        }
      }
      if (f.outlet && data.p_out) {
        const auto q = face_quadrature(space.mesh(), f, space.face_order());
        const auto tab = space.tabulate(k, q.points);
        for (std::size_t p = 0; p < q.size(); ++p) {
          const Vec2 tr = -data.p_out(q.points[p], t) * f.normal;
          for (int c = 0; c < 2; ++c)
            L.F_f.segment(static_cast<Eigen::Index>(space.dof(k, 2, c)), nb) +=
                q.weights[p] * tr[c] * tab.val.row(static_cast<Eigen::Index>(p)).transpose();
        }
      }
    }
  }
  return L;
}

}  // namespace polymps
