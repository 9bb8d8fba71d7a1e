#pragma once

// Block layout of the semidiscrete system
//
//   [ M_el dtt + A_el         B_k^T       0           0     ] [D  ]   [F_el]
//   [ -(B_j + [E] J_el) dt    M_j dt + K  -[E] J_f    0     ] [P_j] = [F_j ]
//   [ 0                       [E] J_f^T   M_f dt + A_f B_f^T] [U  ]   [F_f ]
//   [ 0                       0           -B_f        S     ] [P  ]   [G   ]
//
// with K_jk = [j=k] A_j + C_jk and J_el^T added to the momentum row in the
// E column. Unknowns are stacked field-major: D, P_1..P_J, U, P.

#include "polymps/loads.hpp"

#include <unsupported/Eigen/SparseExtra>

#include <random>

namespace polymps {

struct Layout {
  std::size_t n_d = 0, n_pj = 0, n_u = 0, n_p = 0, n_comp = 0;

  std::size_t off_d() const { return 0; }
  std::size_t off_pj(std::size_t j) const { return n_d + j * n_pj; }
  std::size_t off_u() const { return n_d + n_comp * n_pj; }
  std::size_t off_p() const { return off_u() + n_u; }
  std::size_t size() const { return off_p() + n_p; }
};

struct SystemMatrices {
  Layout layout;
  std::optional<std::size_t> e_index;  // compartment exchanging with the fluid
  ElasticForms el;
  std::vector<PressureForms> pj;
  FluidForms fl;
  InterfaceForms in;

  std::size_t n_compartments() const { return pj.size(); }
};

inline SystemMatrices build_system(const DGSpace& space, const PhysicalParams& params, const FaceSet& faces) {
  params.validate();
  SystemMatrices s;
  s.layout.n_d = space.field_size(Domain::elastic, 2);
  s.layout.n_pj = space.field_size(Domain::elastic, 1);
  s.layout.n_u = space.field_size(Domain::fluid, 2);
  s.layout.n_p = space.field_size(Domain::fluid, 1);
  s.layout.n_comp = params.n_compartments();
  s.e_index = params.index_E();
  s.el = assemble_elastic(space, params, faces);
  for (std::size_t j = 0; j < params.n_compartments(); ++j) s.pj.push_back(assemble_pressure(space, params, faces, j));
  s.fl = assemble_fluid(space, params, faces);
  s.in = assemble_interface(space, faces);
  if (!s.e_index && (s.in.J_el.nonZeros() > 0 || s.in.J_f.nonZeros() > 0))
    throw InputError("an interface is present but no compartment is named 'E'");

  auto check = [](const SpMat& m, std::size_t r, std::size_t c, const char* what) {
    if (static_cast<std::size_t>(m.rows()) != r || static_cast<std::size_t>(m.cols()) != c)
      throw InputError(std::string("block dimension mismatch: ") + what);
  };
  const Layout& L = s.layout;
  check(s.el.A, L.n_d, L.n_d, "A_el");
  check(s.el.M, L.n_d, L.n_d, "M_el");
  for (const auto& p : s.pj) {
    check(p.A, L.n_pj, L.n_pj, "A_j");
    check(p.B, L.n_pj, L.n_d, "B_j");
    for (const auto& c : p.C) check(c, L.n_pj, L.n_pj, "C_jk");
  }
  check(s.fl.A, L.n_u, L.n_u, "A_f");
  check(s.fl.B, L.n_p, L.n_u, "B_f");
  check(s.fl.S, L.n_p, L.n_p, "S");
  check(s.in.J_el, L.n_pj, L.n_d, "J_el");
  check(s.in.J_f, L.n_pj, L.n_u, "J_f");
  return s;
}

namespace detail {

inline void add_block(std::vector<Triplet>& t, const SpMat& m, std::size_t r0, std::size_t c0, double scale,
                      bool transpose = false) {
  if (scale == 0.0) return;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      const auto r = static_cast<Eigen::Index>(transpose ? it.col() : it.row());
      const auto c = static_cast<Eigen::Index>(transpose ? it.row() : it.col());
      t.emplace_back(static_cast<Eigen::Index>(r0) + r, static_cast<Eigen::Index>(c0) + c, scale * it.value());
    }
}

}  // namespace detail

/// Coefficient placement of the global operator. Sign and transpose pattern
/// follow the layout above; individual couplings can be overridden to build
/// negative controls.
struct OperatorSigns {
  double jf_momentum = 1.0;  // +J_f^T in the fluid momentum row
};

/// Global operator with dt replaced by s and dtt by s^2.
inline SpMat global_operator(const SystemMatrices& sys, double s, OperatorSigns signs = {}) {
  const Layout& L = sys.layout;
  std::vector<Triplet> t;
  detail::add_block(t, sys.el.A, L.off_d(), L.off_d(), 1.0);
  detail::add_block(t, sys.el.M, L.off_d(), L.off_d(), s * s);
  for (std::size_t j = 0; j < sys.n_compartments(); ++j) {
    const auto& p = sys.pj[j];
    const bool is_e = sys.e_index && *sys.e_index == j;
    detail::add_block(t, p.B, L.off_d(), L.off_pj(j), 1.0, true);
    detail::add_block(t, p.B, L.off_pj(j), L.off_d(), -s);
    detail::add_block(t, p.A, L.off_pj(j), L.off_pj(j), 1.0);
    detail::add_block(t, p.M, L.off_pj(j), L.off_pj(j), s);
    for (std::size_t k = 0; k < sys.n_compartments(); ++k) detail::add_block(t, p.C[k], L.off_pj(j), L.off_pj(k), 1.0);
    if (is_e) {
      detail::add_block(t, sys.in.J_el, L.off_d(), L.off_pj(j), 1.0, true);
      detail::add_block(t, sys.in.J_el, L.off_pj(j), L.off_d(), -s);
      detail::add_block(t, sys.in.J_f, L.off_pj(j), L.off_u(), -1.0);
      detail::add_block(t, sys.in.J_f, L.off_u(), L.off_pj(j), signs.jf_momentum, true);
    }
  }
  detail::add_block(t, sys.fl.A, L.off_u(), L.off_u(), 1.0);
  detail::add_block(t, sys.fl.M, L.off_u(), L.off_u(), s);
  detail::add_block(t, sys.fl.B, L.off_u(), L.off_p(), 1.0, true);
  detail::add_block(t, sys.fl.B, L.off_p(), L.off_u(), -1.0);
  detail::add_block(t, sys.fl.S, L.off_p(), L.off_p(), 1.0);
  const auto n = static_cast<Eigen::Index>(L.size());
  return detail::from_triplets(n, n, t);
}

/// Stacks per-field vectors into the global ordering.
inline Vector stack(const Layout& L, const Vector& d, const std::vector<Vector>& pj, const Vector& u, const Vector& p) {
  Vector x(static_cast<Eigen::Index>(L.size()));
  x.segment(static_cast<Eigen::Index>(L.off_d()), static_cast<Eigen::Index>(L.n_d)) = d;
  for (std::size_t j = 0; j < L.n_comp; ++j)
    x.segment(static_cast<Eigen::Index>(L.off_pj(j)), static_cast<Eigen::Index>(L.n_pj)) = pj[j];
  x.segment(static_cast<Eigen::Index>(L.off_u()), static_cast<Eigen::Index>(L.n_u)) = u;
  x.segment(static_cast<Eigen::Index>(L.off_p()), static_cast<Eigen::Index>(L.n_p)) = p;
  return x;
}

inline Vector stack(const Layout& L, const LoadVectors& f) { return stack(L, f.F_el, f.F_p, f.F_f, f.G); }

/// Field views into a stacked vector.
struct Fields {
  Vector d;
  std::vector<Vector> pj;
  Vector u;
  Vector p;
};

inline Fields unstack(const Layout& L, const Vector& x) {
  Fields f;
  f.d = x.segment(static_cast<Eigen::Index>(L.off_d()), static_cast<Eigen::Index>(L.n_d));
  for (std::size_t j = 0; j < L.n_comp; ++j)
    f.pj.push_back(x.segment(static_cast<Eigen::Index>(L.off_pj(j)), static_cast<Eigen::Index>(L.n_pj)));
  f.u = x.segment(static_cast<Eigen::Index>(L.off_u()), static_cast<Eigen::Index>(L.n_u));
  f.p = x.segment(static_cast<Eigen::Index>(L.off_p()), static_cast<Eigen::Index>(L.n_p));
  return f;
}

struct SteadySystem {
  SpMat matrix;
  Vector rhs;
  Layout layout;
};

inline SteadySystem build_steady(const SystemMatrices& sys, const LoadVectors& loads) {
  return {global_operator(sys, 0.0), stack(sys.layout, loads), sys.layout};
}

/// Sub-block [r0, r0+nr) x [c0, c0+nc) of a sparse matrix.
inline SpMat block_of(const SpMat& m, std::size_t r0, std::size_t nr, std::size_t c0, std::size_t nc) {
  return m.block(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(c0), static_cast<Eigen::Index>(nr),
                 static_cast<Eigen::Index>(nc));
}

inline double max_abs(const SpMat& m) {
  double v = 0.0;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

/// max|A - A^T| / max|A| (0 for an empty matrix).
inline double symmetry_residual(const SpMat& a) {
  const double scale = max_abs(a);
  if (scale == 0.0) return 0.0;
  const SpMat at = a.transpose();
  return max_abs(SpMat(a - at)) / scale;
}

/// Smallest x^T A x / (|x|^2 max|A|) over random Gaussian vectors.
inline double psd_sample(const SpMat& a, int samples, std::uint64_t seed) {
  if (a.rows() == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  const double scale = std::max(max_abs(a), 1e-300);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vector x(a.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = dist(rng);
    worst = std::min(worst, x.dot(a * x) / (x.squaredNorm() * scale));
  }
  return worst;
}

struct StructuralReport {
  std::map<std::string, double> symmetry;  // relative residuals
  std::map<std::string, double> psd;       // min normalized Rayleigh quotient over samples
  std::map<std::string, double> pairing;   // transpose-pairing residuals
  double coupling_energy = 0.0;            // |z^T Off z| normalized, z random

  bool ok(double sym_tol = 1e-12, double psd_tol = -1e-10, double pair_tol = 1e-12) const {
    for (const auto& [k, v] : symmetry)
      if (!(v < sym_tol)) return false;
    for (const auto& [k, v] : psd)
      if (!(v >= psd_tol)) return false;
    for (const auto& [k, v] : pairing)
      if (!(v < pair_tol)) return false;
    return coupling_energy < pair_tol;
  }
};

/// Checks of the operator `op` (dt -> 1) against the blocks of `sys`.
inline StructuralReport structural_checks(const SystemMatrices& sys, const SpMat& op, int samples = 200,
                                          std::uint64_t seed = 7) {
  StructuralReport r;
  r.symmetry["A_el"] = symmetry_residual(sys.el.A);
  r.symmetry["M_el"] = symmetry_residual(sys.el.M);
  for (std::size_t j = 0; j < sys.n_compartments(); ++j) {
    const std::string tag = std::to_string(j);
    r.symmetry["A_" + tag] = symmetry_residual(sys.pj[j].A);
    r.symmetry["M_" + tag] = symmetry_residual(sys.pj[j].M);
    r.psd["A_" + tag] = psd_sample(sys.pj[j].A, samples, seed + j);
  }
  r.symmetry["A_f"] = symmetry_residual(sys.fl.A);
  r.symmetry["M_f"] = symmetry_residual(sys.fl.M);
  r.symmetry["S"] = symmetry_residual(sys.fl.S);
  r.psd["A_el"] = psd_sample(sys.el.A, samples, seed + 100);
  r.psd["A_f"] = psd_sample(sys.fl.A, samples, seed + 101);
  r.psd["S"] = psd_sample(sys.fl.S, samples, seed + 102);

  const Layout& L = sys.layout;
  auto pairing = [&](std::size_t r0, std::size_t nr, std::size_t c0, std::size_t nc) {
    const SpMat upper = block_of(op, r0, nr, c0, nc);
    const SpMat lower = block_of(op, c0, nc, r0, nr);
    const double scale = std::max(max_abs(upper), max_abs(lower));
    if (scale == 0.0) return 0.0;
    return max_abs(SpMat(upper + SpMat(lower.transpose()))) / scale;
  };
  for (std::size_t j = 0; j < sys.n_compartments(); ++j)
    r.pairing["d-p" + std::to_string(j)] = pairing(L.off_d(), L.n_d, L.off_pj(j), L.n_pj);
  if (sys.e_index) r.pairing["u-pE"] = pairing(L.off_u(), L.n_u, L.off_pj(*sys.e_index), L.n_pj);
  r.pairing["u-p"] = pairing(L.off_u(), L.n_u, L.off_p(), L.n_p);

  // Coupling part of the operator: everything outside the diagonal field blocks.
  std::vector<std::pair<std::size_t, std::size_t>> ranges{{L.off_d(), L.n_d}};
  for (std::size_t j = 0; j < L.n_comp; ++j) ranges.emplace_back(L.off_pj(j), L.n_pj);
  ranges.emplace_back(L.off_u(), L.n_u);
  ranges.emplace_back(L.off_p(), L.n_p);
  std::vector<int> field(L.size());
  for (std::size_t f = 0; f < ranges.size(); ++f)
    for (std::size_t i = 0; i < ranges[f].second; ++i) field[ranges[f].first + i] = static_cast<int>(f);
  std::vector<Triplet> off;
  for (Eigen::Index k = 0; k < op.outerSize(); ++k)
    for (SpMat::InnerIterator it(op, k); it; ++it) {
      const auto fr = field[static_cast<std::size_t>(it.row())], fc = field[static_cast<std::size_t>(it.col())];
      // C_jk couples compartments symmetrically and is part of the dissipation, not of the exchange.
      const bool pressures = fr >= 1 && fr <= static_cast<int>(L.n_comp) && fc >= 1 && fc <= static_cast<int>(L.n_comp);
      if (fr != fc && !pressures) off.emplace_back(it.row(), it.col(), it.value());
    }
  SpMat offm(op.rows(), op.cols());
  offm.setFromTriplets(off.begin(), off.end());
  std::mt19937_64 rng(seed + 999);
  std::normal_distribution<double> dist;
  const double scale = std::max(max_abs(offm), 1e-300);
  for (int s = 0; s < 20 && op.rows() > 0; ++s) {
    Vector z(op.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = dist(rng);
    r.coupling_energy = std::max(r.coupling_energy, std::abs(z.dot(offm * z)) / (z.squaredNorm() * scale));
  }
  return r;
}

inline StructuralReport structural_checks(const SystemMatrices& sys, int samples = 200, std::uint64_t seed = 7) {
  return structural_checks(sys, global_operator(sys, 1.0), samples, seed);
}

/// Penalty terms act on jumps only, so on a globally continuous field they
/// must vanish. With natural conditions on every boundary label only interior
/// faces carry jumps; doubling the penalty constants must then leave A x
/// unchanged for linear fields x. Entries are max|A'x - Ax| / (max|A| max|x|),
/// and max|S x| / (max|S| max|x|) for the pressure stabilization.
inline std::map<std::string, double> jump_annihilation(const DGSpace& space, const PhysicalParams& p) {
  BoundaryConditionMap natural;
  for (const auto& [key, label] : space.mesh().boundary_labels()) natural[label] = BoundaryCondition{};
  const FaceSet faces = build_faces(space.mesh(), natural, p.names());
  PhysicalParams q = p;
  q.eta_bar *= 2.0;
  q.gamma_v_bar *= 2.0;
  q.gamma_p_bar *= 2.0;
  for (auto& c : q.compartments) c.zeta_bar *= 2.0;

  const Vector d = l2_project(space, Domain::elastic, VectorFn([](const Point& x) {
                                return Vec2(1.0 + x.x() + 2.0 * x.y(), 3.0 * x.x() - x.y());
                              }));
  const Vector pe = l2_project(space, Domain::elastic, ScalarFn([](const Point& x) { return 1.0 + x.x() - x.y(); }));
  const Vector u = l2_project(space, Domain::fluid, VectorFn([](const Point& x) {
                                return Vec2(x.y() - 2.0, 0.5 * x.x() + x.y());
                              }));
  const Vector pf = l2_project(space, Domain::fluid, ScalarFn([](const Point& x) { return 2.0 - x.x() + 3.0 * x.y(); }));

  auto change = [](const SpMat& a, const SpMat& b, const Vector& x) {
    if (x.size() == 0) return 0.0;
    const double scale = max_abs(a) * x.cwiseAbs().maxCoeff();
    return scale > 0.0 ? (b * x - a * x).cwiseAbs().maxCoeff() / scale : 0.0;
  };
  std::map<std::string, double> r;
  r["A_el"] = change(assemble_elastic(space, p, faces).A, assemble_elastic(space, q, faces).A, d);
  for (std::size_t j = 0; j < p.n_compartments(); ++j)
    r["A_" + std::to_string(j)] =
        change(assemble_pressure(space, p, faces, j).A, assemble_pressure(space, q, faces, j).A, pe);
  const FluidForms f = assemble_fluid(space, p, faces);
  r["A_f"] = change(f.A, assemble_fluid(space, q, faces).A, u);
  const double s_scale = max_abs(f.S) * (pf.size() ? pf.cwiseAbs().maxCoeff() : 0.0);
  r["S"] = s_scale > 0.0 ? (f.S * pf).cwiseAbs().maxCoeff() / s_scale : 0.0;
  return r;
}

/// Writes a matrix in Matrix Market coordinate format.
inline void export_matrix_market(const SpMat& m, const std::string& path) {
  if (!Eigen::saveMarket(m, path)) throw InputError("cannot write " + path);
}

}  // namespace polymps
