#pragma once

// Broken DG norms, energy norms and observed convergence rates.

#include "polymps/time_integration.hpp"

namespace polymps {

using MatrixTimeFn = std::function<Mat2(const Point&, double)>;

/// Exact fields with first derivatives. grad_d(x)(i, k) = d d_i / d x_k.
struct ExactSolution {
  VectorTimeFn d, dt_d;
  MatrixTimeFn grad_d;
  std::vector<ScalarTimeFn> p;
  std::vector<VectorTimeFn> grad_p;
  VectorTimeFn u;
  MatrixTimeFn grad_u;
  ScalarTimeFn p_f;
};

/// Squared volume and jump parts of a broken norm.
struct NormParts {
  double volume = 0.0;
  double jump = 0.0;
  double total() const { return volume + jump; }
};

namespace detail {

inline int error_order(const DGSpace& s) { return s.volume_order() + 2; }

/// Discrete vector field value and gradient at the rows of a table.
inline std::pair<Vec2, Mat2> vec_at(const DGSpace& sp, const Vector& x, std::size_t k, const BasisTable& t,
                                    Eigen::Index q) {
  const auto nb = t.val.cols();
  Vec2 v;
  Mat2 g;
  for (int c = 0; c < 2; ++c) {
    const auto seg = x.segment(static_cast<Eigen::Index>(sp.dof(k, 2, c)), nb);
    v[c] = t.val.row(q).dot(seg);
    g(c, 0) = t.dx.row(q).dot(seg);
    g(c, 1) = t.dy.row(q).dot(seg);
  }
  return {v, g};
}

inline std::pair<double, Vec2> scal_at(const DGSpace& sp, const Vector& x, std::size_t k, const BasisTable& t,
                                       Eigen::Index q) {
  const auto seg = x.segment(static_cast<Eigen::Index>(sp.dof(k, 1, 0)), t.val.cols());
  return {t.val.row(q).dot(seg), Vec2(t.dx.row(q).dot(seg), t.dy.row(q).dot(seg))};
}

/// Broken norm of (exact - x) for a vector field with stress 2 mu eps + lambda tr eps I.
template <class Active, class Penalty>
NormParts vector_norm(const DGSpace& sp, const FaceSet& faces, Domain dom, const Vector& x,
                      const VectorTimeFn& ex, const MatrixTimeFn& gex, double t, double mu, double lambda,
                      Active active, Penalty penalty) {
  NormParts n;
  for (std::size_t k : sp.elements(dom)) {
    const auto q = volume_quadrature(sp.mesh(), k, error_order(sp));
    const auto tab = sp.tabulate(k, q.points);
    for (std::size_t p = 0; p < q.size(); ++p) {
      Mat2 g = -vec_at(sp, x, k, tab, static_cast<Eigen::Index>(p)).second;
      if (gex) g += gex(q.points[p], t);
      const Mat2 e = 0.5 * (g + g.transpose());
      n.volume += q.weights[p] * ddot(stress(e, mu, lambda), e);
    }
  }
  for (const Face& f : faces.faces()) {
    if (f.domain != dom || !active(f)) continue;
    const auto q = face_quadrature(sp.mesh(), f, sp.face_order() + 2);
    const auto sides = face_sides(sp, f, q);
    const double pen = penalty(f);
    for (std::size_t p = 0; p < q.size(); ++p) {
      Mat2 jump = Mat2::Zero();
      for (const auto& s : sides) {
        Vec2 e = -vec_at(sp, x, s.elem, s.tab, static_cast<Eigen::Index>(p)).first;
        if (ex) e += ex(q.points[p], t);
        jump += sym_outer(e, s.normal);
      }
      n.jump += q.weights[p] * pen * ddot(jump, jump);
    }
  }
  return n;
}

template <class Active, class Penalty>
NormParts scalar_norm(const DGSpace& sp, const FaceSet& faces, Domain dom, const Vector& x,
                      const ScalarTimeFn& ex, const VectorTimeFn& gex, double t, double kappa, bool l2_volume,
                      Active active, Penalty penalty) {
  NormParts n;
  for (std::size_t k : sp.elements(dom)) {
    const auto q = volume_quadrature(sp.mesh(), k, error_order(sp));
    const auto tab = sp.tabulate(k, q.points);
    for (std::size_t p = 0; p < q.size(); ++p) {
      const auto [v, g] = scal_at(sp, x, k, tab, static_cast<Eigen::Index>(p));
      if (l2_volume) {
        const double e = (ex ? ex(q.points[p], t) : 0.0) - v;
        n.volume += q.weights[p] * e * e;
      } else {
        const Vec2 e = (gex ? gex(q.points[p], t) : Vec2::Zero()) - g;
        n.volume += q.weights[p] * kappa * e.squaredNorm();
      }
    }
  }
  for (const Face& f : faces.faces()) {
    if (f.domain != dom || !active(f)) continue;
    const auto q = face_quadrature(sp.mesh(), f, sp.face_order() + 2);
    const auto sides = face_sides(sp, f, q);
    const double pen = penalty(f);
    for (std::size_t p = 0; p < q.size(); ++p) {
      Vec2 jump = Vec2::Zero();
      for (const auto& s : sides) {
        const double e = (ex ? ex(q.points[p], t) : 0.0) - scal_at(sp, x, s.elem, s.tab, static_cast<Eigen::Index>(p)).first;
        jump += e * s.normal;
      }
      n.jump += q.weights[p] * pen * jump.squaredNorm();
    }
  }
  return n;
}

/// Weighted squared L2 norm of (exact - x) for an ncomp field.
inline double l2_sq(const DGSpace& sp, Domain dom, int ncomp, const Vector& x,
                    const std::function<Eigen::VectorXd(const Point&)>& ex) {
  double s = 0.0;
  for (std::size_t k : sp.elements(dom)) {
    const auto q = volume_quadrature(sp.mesh(), k, error_order(sp));
    const auto tab = sp.tabulate(k, q.points);
    for (std::size_t p = 0; p < q.size(); ++p) {
      Eigen::VectorXd e = ex ? ex(q.points[p]) : Eigen::VectorXd::Zero(ncomp);
      for (int c = 0; c < ncomp; ++c)
        e[c] -= tab.val.row(static_cast<Eigen::Index>(p))
                    .dot(x.segment(static_cast<Eigen::Index>(sp.dof(k, ncomp, c)), tab.val.cols()));
      s += q.weights[p] * e.squaredNorm();
    }
  }
  return s;
}

inline std::function<Eigen::VectorXd(const Point&)> as_dyn(const VectorTimeFn& f, double t) {
  if (!f) return {};
  return [f, t](const Point& x) { return Eigen::VectorXd(f(x, t)); };
}

inline std::function<Eigen::VectorXd(const Point&)> as_dyn(const ScalarTimeFn& f, double t) {
  if (!f) return {};
  return [f, t](const Point& x) { return Eigen::VectorXd::Constant(1, f(x, t)); };
}

}  // namespace detail

/// Squared broken norms of each field (of exact - discrete when `exact` is
/// given, of the discrete fields otherwise) and the L2 terms of the energy norm.
struct BrokenNorms {
  NormParts d;               // ||.||_DG,d
  std::vector<NormParts> p;  // ||.||_DG,j
  NormParts u;               // ||.||_DG,u
  NormParts pf;              // ||.||_DG,p
  double kinetic_el = 0.0;   // ||sqrt(rho_el) dt d||^2 (Newmark Z)
  std::vector<double> storage;    // ||sqrt(c_j) p_j||^2
  std::vector<double> exchange;   // ||sqrt(beta_j^e) p_j||^2
  double kinetic_f = 0.0;    // ||sqrt(rho_f) u||^2
};

inline BrokenNorms broken_norms(const TimeState& s, const DGSpace& sp, const FaceSet& faces, const PhysicalParams& prm,
                                const ExactSolution* exact = nullptr) {
  const ExactSolution none;
  const ExactSolution& ex = exact ? *exact : none;
  const double t = s.t;
  const int sp_deg = sp.degree();
  BrokenNorms n;
  auto el_active = [](const Face& f) { return f.is_interior() || (f.is_boundary() && f.dirichlet_d); };
  n.d = detail::vector_norm(sp, faces, Domain::elastic, s.d, ex.d, ex.grad_d, t, prm.mu_el, prm.lambda, el_active,
                            [&prm, sp_deg](const Face& f) { return penalty_coefficients(f, prm, sp_deg).eta; });
  n.kinetic_el = prm.rho_el * detail::l2_sq(sp, Domain::elastic, 2, s.z, detail::as_dyn(ex.dt_d, t));
  for (std::size_t j = 0; j < prm.n_compartments(); ++j) {
    const Compartment& c = prm.compartments[j];
    const ScalarTimeFn pe = j < ex.p.size() ? ex.p[j] : ScalarTimeFn{};
    const VectorTimeFn ge = j < ex.grad_p.size() ? ex.grad_p[j] : VectorTimeFn{};
    auto active = [j](const Face& f) { return f.is_interior() || (f.is_boundary() && f.dirichlet_p.at(j)); };
    n.p.push_back(detail::scalar_norm(sp, faces, Domain::elastic, s.pj[j], pe, ge, t, c.k / c.mu, false, active,
                                      [&prm, j, sp_deg](const Face& f) { return penalty_coefficients(f, prm, sp_deg).zeta[j]; }));
    const double l2 = detail::l2_sq(sp, Domain::elastic, 1, s.pj[j], detail::as_dyn(pe, t));
    n.storage.push_back(c.c * l2);
    n.exchange.push_back(c.beta_ext * l2);
  }
  auto u_active = [](const Face& f) { return f.is_interior(); };
  n.u = detail::vector_norm(sp, faces, Domain::fluid, s.u, ex.u, ex.grad_u, t, prm.mu_f, 0.0, u_active,
                            [&prm, sp_deg](const Face& f) { return penalty_coefficients(f, prm, sp_deg).gamma_v; });
  n.kinetic_f = prm.rho_f * detail::l2_sq(sp, Domain::fluid, 2, s.u, detail::as_dyn(ex.u, t));
  auto p_active = [](const Face& f) { return f.is_interior() || (f.is_boundary() && f.dirichlet_u); };
  n.pf = detail::scalar_norm(sp, faces, Domain::fluid, s.p, ex.p_f, VectorTimeFn{}, t, 1.0, true, p_active,
                             [&prm, sp_deg](const Face& f) { return penalty_coefficients(f, prm, sp_deg).gamma_p; });
  return n;
}

/// Energy norm split into instantaneous and time-integrated squared terms.
struct EnergyNorm {
  double instantaneous = 0.0;
  double integrated = 0.0;
  double value() const { return std::sqrt(instantaneous + integrated); }
};

inline double instantaneous_sq(const BrokenNorms& n) {
  double s = n.kinetic_el + n.d.total() + n.kinetic_f;
  for (double v : n.storage) s += v;
  return s;
}

inline double dissipation_sq(const BrokenNorms& n) {
  double s = n.u.total() + n.pf.total();
  for (std::size_t j = 0; j < n.p.size(); ++j) s += n.p[j].total() + n.exchange[j];
  return s;
}

/// Energy norm over a trajectory: instantaneous terms at the last state, time
/// integrals by the composite trapezoid rule over the stored states.
inline EnergyNorm energy_norm(const std::vector<TimeState>& traj, const DGSpace& sp, const FaceSet& faces,
                              const PhysicalParams& prm, const ExactSolution* exact = nullptr) {
  if (traj.empty()) throw InputError("energy_norm: empty trajectory");
  EnergyNorm e;
  double prev = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const BrokenNorms n = broken_norms(traj[i], sp, faces, prm, exact);
    const double diss = dissipation_sq(n);
    if (i > 0) e.integrated += 0.5 * (traj[i].t - traj[i - 1].t) * (diss + prev);
    prev = diss;
    if (i + 1 == traj.size()) e.instantaneous = instantaneous_sq(n);
  }
  return e;
}

/// Steady convention: the state is constant on [0, t_span], so the integrals
/// equal t_span times the instantaneous dissipation terms.
inline EnergyNorm steady_energy_norm(const TimeState& s, const DGSpace& sp, const FaceSet& faces,
                                     const PhysicalParams& prm, const ExactSolution* exact = nullptr,
                                     double t_span = 1.0) {
  const BrokenNorms n = broken_norms(s, sp, faces, prm, exact);
  return {instantaneous_sq(n), t_span * dissipation_sq(n)};
}

struct Rate {
  double value = 0.0;
  bool saturated = false;
};

/// Slopes log(e_i / e_{i+1}) / log(h_i / h_{i+1}) between consecutive entries.
inline std::vector<Rate> convergence_rates(const std::vector<double>& errors, const std::vector<double>& hs,
                                           double floor = 1e-11) {
  if (errors.size() != hs.size() || errors.size() < 2)
    throw InputError("convergence_rates: need at least two (error, h) pairs of equal length");
  std::vector<Rate> out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    if (!(hs[i + 1] < hs[i])) throw InputError("convergence_rates: mesh sizes must be strictly decreasing");
    Rate r;
    if (errors[i] <= floor || errors[i + 1] <= floor) {
      r.saturated = true;
      r.value = std::numeric_limits<double>::quiet_NaN();
    } else {
      r.value = std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace polymps
