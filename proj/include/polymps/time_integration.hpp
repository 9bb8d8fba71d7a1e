#pragma once

// Fully discrete scheme: Newmark-beta on the elastic momentum equation,
// theta-method on the pressure and fluid rows, written as
//   A1 X^{n+1} = A2 X^n + F^{n+1},   X = (D, Z, A, P_1..P_J, U, P),
// where Z and A are the Newmark velocity and acceleration.

#include "polymps/block_system.hpp"
#include "polymps/linear_solver.hpp"

namespace polymps {

struct SchemeParams {
  double dt = 1e-3;
  double beta = 0.25;
  double gamma = 0.5;
  double theta = 0.5;
  std::size_t startup_steps = 0;  // initial steps taken with theta = 1

  void validate() const {
    if (!(dt > 0.0)) throw InputError("dt must be positive");
    if (!(beta > 0.0 && beta <= 0.5)) throw InputError("beta must lie in (0, 1/2]");
    if (!(gamma >= 0.5 && gamma <= 1.0)) throw InputError("gamma must lie in [1/2, 1]");
    if (!(theta >= 0.5 && theta <= 1.0)) throw InputError("theta must lie in [1/2, 1]");
  }
};

/// Offsets of the stepping vector X.
struct StepLayout {
  Layout base;

  std::size_t off_d() const { return 0; }
  std::size_t off_z() const { return base.n_d; }
  std::size_t off_a() const { return 2 * base.n_d; }
  std::size_t off_pj(std::size_t j) const { return 3 * base.n_d + j * base.n_pj; }
  std::size_t off_u() const { return 3 * base.n_d + base.n_comp * base.n_pj; }
  std::size_t off_p() const { return off_u() + base.n_u; }
  std::size_t size() const { return off_p() + base.n_p; }
};

struct TimeState {
  double t = 0.0;
  Vector d, z, a;
  std::vector<Vector> pj;
  Vector u, p;

  Vector pack(const StepLayout& L) const {
    Vector x(static_cast<Eigen::Index>(L.size()));
    auto put = [&x](std::size_t off, const Vector& v) { x.segment(static_cast<Eigen::Index>(off), v.size()) = v; };
    put(L.off_d(), d);
    put(L.off_z(), z);
    put(L.off_a(), a);
    for (std::size_t j = 0; j < pj.size(); ++j) put(L.off_pj(j), pj[j]);
    put(L.off_u(), u);
    put(L.off_p(), p);
    return x;
  }

  static TimeState unpack(const StepLayout& L, const Vector& x, double t) {
    auto get = [&x](std::size_t off, std::size_t n) {
      return Vector(x.segment(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(n)));
    };
    TimeState s;
    s.t = t;
    s.d = get(L.off_d(), L.base.n_d);
    s.z = get(L.off_z(), L.base.n_d);
    s.a = get(L.off_a(), L.base.n_d);
    for (std::size_t j = 0; j < L.base.n_comp; ++j) s.pj.push_back(get(L.off_pj(j), L.base.n_pj));
    s.u = get(L.off_u(), L.base.n_u);
    s.p = get(L.off_p(), L.base.n_p);
    return s;
  }

  static TimeState zero(const Layout& L, double t = 0.0) {
    TimeState s;
    s.t = t;
    s.d = s.z = s.a = Vector::Zero(static_cast<Eigen::Index>(L.n_d));
    s.pj.assign(L.n_comp, Vector::Zero(static_cast<Eigen::Index>(L.n_pj)));
    s.u = Vector::Zero(static_cast<Eigen::Index>(L.n_u));
    s.p = Vector::Zero(static_cast<Eigen::Index>(L.n_p));
    return s;
  }
};

struct SteppingMatrices {
  SpMat A1;
  SpMat A2;
  StepLayout layout;
};

inline SteppingMatrices build_stepping_matrices(const SystemMatrices& sys, const SchemeParams& sp) {
  sp.validate();
  const StepLayout L{sys.layout};
  const double dt = sp.dt, be = sp.beta, ga = sp.gamma, th = sp.theta;
  const auto nd = static_cast<Eigen::Index>(L.base.n_d);
  SpMat I(nd, nd);
  I.setIdentity();
  std::vector<Triplet> t1, t2;
  using detail::add_block;

  // Momentum row at t_{n+1}.
  add_block(t1, sys.el.A, L.off_d(), L.off_d(), 1.0);
  add_block(t1, sys.el.M, L.off_d(), L.off_a(), 1.0);
  for (std::size_t j = 0; j < sys.n_compartments(); ++j) {
    add_block(t1, sys.pj[j].B, L.off_d(), L.off_pj(j), 1.0, true);
    if (sys.e_index == j) add_block(t1, sys.in.J_el, L.off_d(), L.off_pj(j), 1.0, true);
  }
  // Newmark velocity update.
  add_block(t1, I, L.off_z(), L.off_z(), 1.0);
  add_block(t1, I, L.off_z(), L.off_a(), -ga * dt);
  add_block(t2, I, L.off_z(), L.off_z(), 1.0);
  add_block(t2, I, L.off_z(), L.off_a(), (1.0 - ga) * dt);
  // Newmark displacement update, solved for the acceleration.
  add_block(t1, I, L.off_a(), L.off_d(), -1.0 / (be * dt * dt));
  add_block(t1, I, L.off_a(), L.off_a(), 1.0);
  add_block(t2, I, L.off_a(), L.off_d(), -1.0 / (be * dt * dt));
  add_block(t2, I, L.off_a(), L.off_z(), -1.0 / (be * dt));
  add_block(t2, I, L.off_a(), L.off_a(), (2.0 * be - 1.0) / (2.0 * be));

  // Pressure rows: theta-method with the d-coupling acting on theta Z^{n+1} + (1-theta) Z^n.
  for (std::size_t j = 0; j < sys.n_compartments(); ++j) {
    const auto& pj = sys.pj[j];
    const bool is_e = sys.e_index == j;
    auto coupling = [&](double scale, std::size_t col, std::vector<Triplet>& t) {
      add_block(t, pj.B, L.off_pj(j), col, scale);
      if (is_e) add_block(t, sys.in.J_el, L.off_pj(j), col, scale);
    };
    coupling(-th * ga / (be * dt), L.off_d(), t1);
    coupling(-th * ga / (be * dt), L.off_d(), t2);
    coupling(1.0 - th * ga / be, L.off_z(), t2);
    coupling(th * dt * (1.0 - ga / (2.0 * be)), L.off_a(), t2);
    add_block(t1, pj.M, L.off_pj(j), L.off_pj(j), 1.0 / dt);
    add_block(t2, pj.M, L.off_pj(j), L.off_pj(j), 1.0 / dt);
    add_block(t1, pj.A, L.off_pj(j), L.off_pj(j), th);
    add_block(t2, pj.A, L.off_pj(j), L.off_pj(j), -(1.0 - th));
    for (std::size_t k = 0; k < sys.n_compartments(); ++k) {
      add_block(t1, pj.C[k], L.off_pj(j), L.off_pj(k), th);
      add_block(t2, pj.C[k], L.off_pj(j), L.off_pj(k), -(1.0 - th));
    }
    if (is_e) {
      add_block(t1, sys.in.J_f, L.off_pj(j), L.off_u(), -th);
      add_block(t2, sys.in.J_f, L.off_pj(j), L.off_u(), 1.0 - th);
      add_block(t1, sys.in.J_f, L.off_u(), L.off_pj(j), th, true);
      add_block(t2, sys.in.J_f, L.off_u(), L.off_pj(j), -(1.0 - th), true);
    }
  }
  // Fluid momentum and continuity.
  add_block(t1, sys.fl.M, L.off_u(), L.off_u(), 1.0 / dt);
  add_block(t2, sys.fl.M, L.off_u(), L.off_u(), 1.0 / dt);
  add_block(t1, sys.fl.A, L.off_u(), L.off_u(), th);
  add_block(t2, sys.fl.A, L.off_u(), L.off_u(), -(1.0 - th));
  add_block(t1, sys.fl.B, L.off_u(), L.off_p(), th, true);
  add_block(t2, sys.fl.B, L.off_u(), L.off_p(), -(1.0 - th), true);
  add_block(t1, sys.fl.B, L.off_p(), L.off_u(), -th);
  add_block(t2, sys.fl.B, L.off_p(), L.off_u(), 1.0 - th);
  add_block(t1, sys.fl.S, L.off_p(), L.off_p(), th);
  add_block(t2, sys.fl.S, L.off_p(), L.off_p(), -(1.0 - th));

  const auto n = static_cast<Eigen::Index>(L.size());
  return {detail::from_triplets(n, n, t1), detail::from_triplets(n, n, t2), L};
}

/// Right-hand side of one step from the loads at t_n and t_{n+1}.
inline Vector stepping_rhs(const StepLayout& L, const LoadVectors& fn, const LoadVectors& fn1, double theta) {
  Vector F = Vector::Zero(static_cast<Eigen::Index>(L.size()));
  auto put = [&F](std::size_t off, const Vector& v) { F.segment(static_cast<Eigen::Index>(off), v.size()) = v; };
  put(L.off_d(), fn1.F_el);
  for (std::size_t j = 0; j < L.base.n_comp; ++j) put(L.off_pj(j), theta * fn1.F_p[j] + (1.0 - theta) * fn.F_p[j]);
  put(L.off_u(), theta * fn1.F_f + (1.0 - theta) * fn.F_f);
  put(L.off_p(), theta * fn1.G + (1.0 - theta) * fn.G);
  return F;
}

/// Initial data; empty closures stand for zero.
struct InitialData {
  VectorFn d0, v0;
  std::vector<ScalarFn> p0;
  VectorFn u0;
  ScalarFn p_f0;
};

/// Projected initial state; the acceleration balances the momentum equation at t0.
inline TimeState initial_state(const DGSpace& space, const SystemMatrices& sys, const InitialData& data,
                               const LoadVectors& loads0, double t0 = 0.0) {
  TimeState s = TimeState::zero(sys.layout, t0);
  if (data.d0) s.d = l2_project(space, Domain::elastic, data.d0);
  if (data.v0) s.z = l2_project(space, Domain::elastic, data.v0);
  for (std::size_t j = 0; j < s.pj.size() && j < data.p0.size(); ++j)
    if (data.p0[j]) s.pj[j] = l2_project(space, Domain::elastic, data.p0[j]);
  if (data.u0) s.u = l2_project(space, Domain::fluid, data.u0);
  if (data.p_f0) s.p = l2_project(space, Domain::fluid, data.p_f0);
  if (sys.layout.n_u > 0 && sys.layout.n_p > 0) {
    // The continuity row is algebraic and the theta-blend never damps its
    // residual, so (U, P) are corrected to satisfy it exactly at t0:
    //   [M_f  B_f^T] [U]   [M_f U_proj    ]
    //   [-B_f S    ] [L] = [G - S P_proj  ],   P = P_proj + L.
    const auto nu = static_cast<Eigen::Index>(sys.layout.n_u), np = static_cast<Eigen::Index>(sys.layout.n_p);
    std::vector<Triplet> t;
    detail::add_block(t, sys.fl.M, 0, 0, 1.0);
    detail::add_block(t, sys.fl.B, 0, static_cast<std::size_t>(nu), 1.0, true);
    detail::add_block(t, sys.fl.B, static_cast<std::size_t>(nu), 0, -1.0);
    detail::add_block(t, sys.fl.S, static_cast<std::size_t>(nu), static_cast<std::size_t>(nu), 1.0);
    Vector rhs(nu + np);
    rhs << sys.fl.M * s.u, loads0.G - sys.fl.S * s.p;
    const Vector x = Factorization(detail::from_triplets(nu + np, nu + np, t)).solve(rhs);
    s.u = x.head(nu);
    s.p += x.tail(np);
  }
  if (sys.layout.n_d == 0) return s;
  Vector r = loads0.F_el - sys.el.A * s.d;
  for (std::size_t j = 0; j < s.pj.size(); ++j) {
    r -= sys.pj[j].B.transpose() * s.pj[j];
    if (sys.e_index == j) r -= sys.in.J_el.transpose() * s.pj[j];
  }
  Eigen::SimplicialLDLT<SpMat> mass(sys.el.M);
  if (mass.info() != Eigen::Success) throw SolverError("initial_state: singular elastic mass matrix");
  s.a = mass.solve(r);
  return s;
}

/// Discrete energy Z^T M_el Z + D^T A_el D + sum_j P_j^T M_j P_j + U^T M_f U.
inline double discrete_energy(const SystemMatrices& sys, const TimeState& s) {
  double e = s.z.dot(sys.el.M * s.z) + s.d.dot(sys.el.A * s.d) + s.u.dot(sys.fl.M * s.u);
  for (std::size_t j = 0; j < s.pj.size(); ++j) e += s.pj[j].dot(sys.pj[j].M * s.pj[j]);
  return e;
}

class TimeIntegrator {
 public:
  TimeIntegrator(const SystemMatrices& sys, SchemeParams sp)
      : sp_(sp), mats_(build_stepping_matrices(sys, sp)), lu_(mats_.A1) {
    if (sp_.startup_steps > 0 && sp_.theta != 1.0) {
      SchemeParams be = sp_;
      be.theta = 1.0;
      startup_ = std::make_shared<const Stage>(build_stepping_matrices(sys, be));
    }
  }

  const SchemeParams& scheme() const { return sp_; }
  const SteppingMatrices& matrices() const { return mats_; }

  /// One step from t_n to t_{n+1} = t_n + dt; `startup` selects theta = 1.
  TimeState advance(const TimeState& s, const LoadVectors& loads_n, const LoadVectors& loads_n1,
                    bool startup = false) const {
    if (startup && startup_) return step(startup_->mats, startup_->lu, 1.0, s, loads_n, loads_n1);
    return step(mats_, lu_, startup ? 1.0 : sp_.theta, s, loads_n, loads_n1);
  }

 private:
  struct Stage {
    explicit Stage(SteppingMatrices m) : mats(std::move(m)), lu(mats.A1) {}
    SteppingMatrices mats;
    Factorization lu;
  };

  TimeState step(const SteppingMatrices& m, const Factorization& lu, double theta, const TimeState& s,
                 const LoadVectors& ln, const LoadVectors& ln1) const {
    const StepLayout& L = m.layout;
    const Vector rhs = m.A2 * s.pack(L) + stepping_rhs(L, ln, ln1, theta);
    return TimeState::unpack(L, lu.solve(rhs), s.t + sp_.dt);
  }

  SchemeParams sp_;
  SteppingMatrices mats_;
  Factorization lu_;
  std::shared_ptr<const Stage> startup_;
};

using LoadFn = std::function<LoadVectors(double)>;

/// Runs n_steps from `init`; states at t_n = t0 + n dt are kept every
/// `stride` steps (the initial state is always kept, and so is the last).
inline std::vector<TimeState> simulate(const TimeIntegrator& integ, const TimeState& init, std::size_t n_steps,
                                       const LoadFn& loads, std::size_t stride = 1,
                                       const std::function<void(const TimeState&, std::size_t)>& observer = {}) {
  if (stride == 0) throw InputError("snapshot stride must be >= 1");
  std::vector<TimeState> traj{init};
  TimeState s = init;
  const double t0 = init.t, dt = integ.scheme().dt;
  LoadVectors fn = loads(t0);
  for (std::size_t n = 1; n <= n_steps; ++n) {
    const double t1 = t0 + static_cast<double>(n) * dt;
    LoadVectors fn1 = loads(t1);
    s = integ.advance(s, fn, fn1, n <= integ.scheme().startup_steps);
    s.t = t1;
    fn = std::move(fn1);
    if (observer) observer(s, n);
    if (n % stride == 0 || n == n_steps) traj.push_back(s);
  }
  return traj;
}

}  // namespace polymps
