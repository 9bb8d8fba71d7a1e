#pragma once

// Manufactured solutions on (-1,0)x(0,1) u (0,1)x(0,1) with one pressure
// compartment E, and a finite-difference residual oracle for the strong
// equations and the interface conditions.
//
// With C = cos(pi (x+y)) and S = sin(pi (x+y)) the steady fields are
//   d   = pi mu_f K/mu_E^2 (1-alpha) C (-1, 1)
//   u   = pi K/mu_E C (1, -1)
//   p_E = -pi x cos(pi y) - 2 pi^2 mu_f K/mu_E sin(pi y)
//   p   = -x cos(pi y) - 4 pi^2 mu_f K/mu_E sin(pi y)
// The unsteady case scales them by g_el(t), g_u(t), g_el(t), g_p(t).

#include "polymps/norms.hpp"

#include <numbers>
#include <random>

namespace polymps {

/// Coefficients entering the closed forms.
struct CaseCoefficients {
  double rho_el, mu_el, lambda, rho_f, mu_f, alpha, c, K, mu_E, beta_e;

  static CaseCoefficients from(const PhysicalParams& p) {
    if (p.n_compartments() != 1 || !p.index_E())
      throw InputError("manufactured cases need exactly one compartment named 'E'");
    const Compartment& e = p.compartments[0];
    return {p.rho_el, p.mu_el, p.lambda, p.rho_f, p.mu_f, e.alpha, e.c, e.k, e.mu, e.beta_ext};
  }
};

/// Exact fields templated on the scalar type (long double for the oracle).
template <class T>
struct ClosedForms {
  CaseCoefficients k;
  bool steady = true;

  static constexpr T pi = std::numbers::pi_v<T>;

  T eta_time() const { return T(k.mu_el) / (T(k.mu_f) * (1 - T(k.alpha))); }
  T A_d() const { return pi * T(k.mu_f) * T(k.K) / (T(k.mu_E) * T(k.mu_E)) * (1 - T(k.alpha)); }
  T A_u() const { return pi * T(k.K) / T(k.mu_E); }
  T B_E() const { return 2 * pi * pi * T(k.mu_f) * T(k.K) / T(k.mu_E); }
  T B_p() const { return 4 * pi * pi * T(k.mu_f) * T(k.K) / T(k.mu_E); }

  // Time factors and their derivatives.
  T g_el(T t) const { return steady ? T(1) : std::cos(eta_time() * t) - std::sin(eta_time() * t); }
  T dg_el(T t) const {
    const T e = eta_time();
    return steady ? T(0) : -e * (std::sin(e * t) + std::cos(e * t));
  }
  T ddg_el(T t) const { return steady ? T(0) : -eta_time() * eta_time() * g_el(t); }
  T g_u(T t) const { return steady ? T(1) : g_el(t) - dg_el(t) / eta_time(); }
  T dg_u(T t) const { return steady ? T(0) : dg_el(t) - ddg_el(t) / eta_time(); }
  T g_p(T t) const { return steady ? T(1) : (g_el(t) + g_u(t)) / 2; }

  T C(T x, T y) const { return std::cos(pi * (x + y)); }
  T S(T x, T y) const { return std::sin(pi * (x + y)); }

  std::array<T, 2> d(T x, T y, T t) const {
    const T v = g_el(t) * A_d() * C(x, y);
    return {-v, v};
  }
  std::array<T, 2> u(T x, T y, T t) const {
    const T v = g_u(t) * A_u() * C(x, y);
    return {v, -v};
  }
  T pE(T x, T y, T t) const { return g_el(t) * (-pi * x * std::cos(pi * y) - B_E() * std::sin(pi * y)); }
  T p(T x, T y, T t) const { return g_p(t) * (-x * std::cos(pi * y) - B_p() * std::sin(pi * y)); }
};

/// A manufactured test problem: data for the solver, exact fields for the
/// error norms, and the long-double closed forms for the oracle.
struct ManufacturedCase {
  std::string name;
  PhysicalParams params;
  ClosedForms<long double> forms;
  ProblemData data;
  ExactSolution exact;
  InitialData initial;
};

namespace detail {

inline ManufacturedCase make_case(const std::string& name, const PhysicalParams& params, bool steady) {
  ManufacturedCase mc;
  mc.name = name;
  mc.params = params;
  const CaseCoefficients k = CaseCoefficients::from(params);
  mc.forms = ClosedForms<long double>{k, steady};
  const ClosedForms<double> f{k, steady};
  constexpr double pi = std::numbers::pi;

  auto d = [f](const Point& x, double t) {
    const auto v = f.d(x.x(), x.y(), t);
    return Vec2(v[0], v[1]);
  };
  auto dt_d = [f](const Point& x, double t) {
    const double v = f.dg_el(t) * f.A_d() * f.C(x.x(), x.y());
    return Vec2(-v, v);
  };
  auto grad_d = [f](const Point& x, double t) {
    const double s = -pi * f.g_el(t) * f.A_d() * f.S(x.x(), x.y());
    Mat2 g;
    g << -s, -s, s, s;
    return g;
  };
  auto pE = [f](const Point& x, double t) { return f.pE(x.x(), x.y(), t); };
  auto grad_pE = [f](const Point& x, double t) {
    const double cy = std::cos(pi * x.y()), sy = std::sin(pi * x.y());
    return Vec2(f.g_el(t) * (-pi * cy), f.g_el(t) * (pi * pi * x.x() * sy - pi * f.B_E() * cy));
  };
  auto lap_pE = [f](const Point& x, double t) { return -pi * pi * f.pE(x.x(), x.y(), t); };
  auto u = [f](const Point& x, double t) {
    const auto v = f.u(x.x(), x.y(), t);
    return Vec2(v[0], v[1]);
  };
  auto grad_u = [f](const Point& x, double t) {
    const double s = -pi * f.g_u(t) * f.A_u() * f.S(x.x(), x.y());
    Mat2 g;
    g << s, s, -s, -s;
    return g;
  };
  auto p = [f](const Point& x, double t) { return f.p(x.x(), x.y(), t); };
  auto grad_p = [f](const Point& x, double t) {
    const double cy = std::cos(pi * x.y()), sy = std::sin(pi * x.y());
    return Vec2(f.g_p(t) * (-cy), f.g_p(t) * (pi * x.x() * sy - pi * f.B_p() * cy));
  };

  // Sources from the strong equations. d and u are divergence free and
  // their Laplacians are -2 pi^2 times the fields.
  mc.data.f_el = [=](const Point& x, double t) {
    const Vec2 dd = f.ddg_el(t) * f.A_d() * f.C(x.x(), x.y()) * Vec2(-1.0, 1.0);
    const Vec2 div_sigma = k.mu_el * (-2.0 * pi * pi) * d(x, t);
    return Vec2(k.rho_el * dd - div_sigma + k.alpha * grad_pE(x, t));
  };
  mc.data.g = {[=](const Point& x, double t) {
    const double dt_pE = f.dg_el(t) * (-pi * x.x() * std::cos(pi * x.y()) - f.B_E() * std::sin(pi * x.y()));
    return k.c * dt_pE - k.K / k.mu_E * lap_pE(x, t) + k.beta_e * pE(x, t);
  }};
  mc.data.f_f = [=](const Point& x, double t) {
    const Vec2 du = f.dg_u(t) * f.A_u() * f.C(x.x(), x.y()) * Vec2(1.0, -1.0);
    const Vec2 div_sigma = k.mu_f * (-2.0 * pi * pi) * u(x, t);
    return Vec2(k.rho_f * du - div_sigma + grad_p(x, t));
  };
  // Outlet datum p - n . sigma_f(u) n on x = 1 with n = (1, 0).
  mc.data.p_out = [=](const Point& x, double t) { return p(x, t) - 2.0 * k.mu_f * grad_u(x, t)(0, 0); };
  mc.data.d_D = d;
  mc.data.dt_d_D = dt_d;
  mc.data.p_D = {pE};
  mc.data.u_D = u;

  mc.exact.d = d;
  mc.exact.dt_d = dt_d;
  mc.exact.grad_d = grad_d;
  mc.exact.p = {pE};
  mc.exact.grad_p = {grad_pE};
  mc.exact.u = u;
  mc.exact.grad_u = grad_u;
  mc.exact.p_f = p;

  mc.initial.d0 = [d](const Point& x) { return d(x, 0.0); };
  mc.initial.v0 = [dt_d](const Point& x) { return dt_d(x, 0.0); };
  mc.initial.p0 = {[pE](const Point& x) { return pE(x, 0.0); }};
  mc.initial.u0 = [u](const Point& x) { return u(x, 0.0); };
  mc.initial.p_f0 = [p](const Point& x) { return p(x, 0.0); };
  return mc;
}

}  // namespace detail

/// Steady case; all parameters 1 and alpha_E = 0.5 unless overridden.
inline ManufacturedCase steady_case(PhysicalParams params = PhysicalParams::unit()) {
  return detail::make_case("steady", params, true);
}

inline ManufacturedCase unsteady_case(PhysicalParams params = PhysicalParams::unit()) {
  return detail::make_case("unsteady", params, false);
}

/// Negative control: the same case with one source negated.
inline ManufacturedCase flip_source(ManufacturedCase mc, const std::string& which) {
  if (which == "f_el") {
    auto f = mc.data.f_el;
    mc.data.f_el = [f](const Point& x, double t) { return Vec2(-f(x, t)); };
  } else if (which == "f_f") {
    auto f = mc.data.f_f;
    mc.data.f_f = [f](const Point& x, double t) { return Vec2(-f(x, t)); };
  } else if (which == "g") {
    auto f = mc.data.g.at(0);
    mc.data.g[0] = [f](const Point& x, double t) { return -f(x, t); };
  } else {
    throw InputError("unknown source '" + which + "'");
  }
  mc.name += "(flipped " + which + ")";
  return mc;
}

/// Max absolute residual per strong equation / interface condition.
struct ResidualReport {
  std::map<std::string, double> max_residual;
  std::size_t n_points = 0;

  double worst() const {
    double w = 0.0;
    for (const auto& [k, v] : max_residual) w = std::max(w, v);
    return w;
  }
};

namespace detail {

using LD = long double;

/// Central-difference derivatives of the closed forms (step h, long double).
struct FiniteDifferences {
  const ClosedForms<LD>& f;
  LD h;

  template <class F>
  LD dx(F g, LD x, LD y) const { return (g(x + h, y) - g(x - h, y)) / (2 * h); }
  template <class F>
  LD dy(F g, LD x, LD y) const { return (g(x, y + h) - g(x, y - h)) / (2 * h); }
  template <class F>
  LD dxx(F g, LD x, LD y) const { return (g(x + h, y) - 2 * g(x, y) + g(x - h, y)) / (h * h); }
  template <class F>
  LD dyy(F g, LD x, LD y) const { return (g(x, y + h) - 2 * g(x, y) + g(x, y - h)) / (h * h); }
  template <class F>
  LD dxy(F g, LD x, LD y) const {
    return (g(x + h, y + h) - g(x + h, y - h) - g(x - h, y + h) + g(x - h, y - h)) / (4 * h * h);
  }
  template <class F>
  LD dt(F g, LD t) const { return (g(t + h) - g(t - h)) / (2 * h); }
  template <class F>
  LD dtt(F g, LD t) const { return (g(t + h) - 2 * g(t) + g(t - h)) / (h * h); }

  /// Gradient (i, k) = d v_i / d x_k of a vector field at time t.
  template <class V>
  std::array<std::array<LD, 2>, 2> grad(V v, LD x, LD y, LD t) const {
    std::array<std::array<LD, 2>, 2> g{};
    for (int i = 0; i < 2; ++i) {
      auto c = [&](LD a, LD b) { return (f.*v)(a, b, t)[static_cast<std::size_t>(i)]; };
      g[static_cast<std::size_t>(i)] = {dx(c, x, y), dy(c, x, y)};
    }
    return g;
  }

  /// div(2 mu eps(v) + lambda div v I) from second differences.
  template <class V>
  std::array<LD, 2> div_stress(V v, LD x, LD y, LD t, LD mu, LD lambda) const {
    auto c0 = [&](LD a, LD b) { return (f.*v)(a, b, t)[0]; };
    auto c1 = [&](LD a, LD b) { return (f.*v)(a, b, t)[1]; };
    const LD v0xx = dxx(c0, x, y), v0yy = dyy(c0, x, y), v0xy = dxy(c0, x, y);
    const LD v1xx = dxx(c1, x, y), v1yy = dyy(c1, x, y), v1xy = dxy(c1, x, y);
    return {mu * (2 * v0xx + v0yy + v1xy) + lambda * (v0xx + v1xy),
            mu * (v1xx + 2 * v1yy + v0xy) + lambda * (v0xy + v1yy)};
  }
};

}  // namespace detail

/// Evaluates the strong equations at n_points random points per subdomain
/// and the interface conditions at n_points random points on x = 0, using
/// central differences of step `h` on the exact fields and the case sources.
inline ResidualReport residual_oracle(const ManufacturedCase& mc, std::size_t n_points, double t,
                                      std::uint64_t seed = 2024, double h = 1e-5) {
  if (n_points < 1) throw InputError("residual_oracle: n_points must be >= 1");
  using detail::LD;
  const auto& f = mc.forms;
  const CaseCoefficients& k = f.k;
  const detail::FiniteDifferences fd{f, static_cast<LD>(h)};
  const LD T = t;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ResidualReport rep;
  rep.n_points = n_points;
  auto record = [&rep](const std::string& key, LD v) {
    auto& slot = rep.max_residual[key];
    slot = std::max(slot, static_cast<double>(std::abs(v)));
  };
  auto pE = [&](LD x, LD y) { return f.pE(x, y, T); };
  auto pf = [&](LD x, LD y) { return f.p(x, y, T); };

  for (std::size_t i = 0; i < n_points; ++i) {
    // Poroelastic interior point.
    {
      const LD x = -unit(rng), y = unit(rng);
      const Point X(static_cast<double>(x), static_cast<double>(y));
      const auto ds = fd.div_stress(&ClosedForms<LD>::d, x, y, T, k.mu_el, k.lambda);
      const Vec2 src = mc.data.f_el(X, t);
      for (int c = 0; c < 2; ++c) {
        auto dc = [&](LD s) { return f.d(x, y, s)[static_cast<std::size_t>(c)]; };
        const LD gp = c == 0 ? fd.dx(pE, x, y) : fd.dy(pE, x, y);
        record("momentum_el", k.rho_el * fd.dtt(dc, T) - ds[static_cast<std::size_t>(c)] + k.alpha * gp - src[c]);
      }
      // c dt p + div(alpha dt d - K/mu grad p) + beta_e p = g
      auto div_d = [&](LD s) {
        auto d0 = [&](LD a, LD b) { return f.d(a, b, s)[0]; };
        auto d1 = [&](LD a, LD b) { return f.d(a, b, s)[1]; };
        return fd.dx(d0, x, y) + fd.dy(d1, x, y);
      };
      const LD lap = fd.dxx(pE, x, y) + fd.dyy(pE, x, y);
      auto pt = [&](LD s) { return f.pE(x, y, s); };
      record("mass_E", k.c * fd.dt(pt, T) + k.alpha * fd.dt(div_d, T) - k.K / k.mu_E * lap +
                           k.beta_e * f.pE(x, y, T) - mc.data.g.at(0)(X, t));
    }
    // Fluid interior point.
    {
      const LD x = unit(rng), y = unit(rng);
      const Point X(static_cast<double>(x), static_cast<double>(y));
      const auto ds = fd.div_stress(&ClosedForms<LD>::u, x, y, T, k.mu_f, 0.0L);
      const Vec2 src = mc.data.f_f(X, t);
      for (int c = 0; c < 2; ++c) {
        auto uc = [&](LD s) { return f.u(x, y, s)[static_cast<std::size_t>(c)]; };
        const LD gp = c == 0 ? fd.dx(pf, x, y) : fd.dy(pf, x, y);
        record("momentum_f", k.rho_f * fd.dt(uc, T) - ds[static_cast<std::size_t>(c)] + gp - src[c]);
      }
      const auto g = fd.grad(&ClosedForms<LD>::u, x, y, T);
      record("continuity", g[0][0] + g[1][1]);
    }
    // Interface point (0, y): n_el = (1, 0), n_f = (-1, 0).
    {
      const LD x = 0, y = unit(rng);
      const auto gd = fd.grad(&ClosedForms<LD>::d, x, y, T);
      const auto gu = fd.grad(&ClosedForms<LD>::u, x, y, T);
      const LD divd = gd[0][0] + gd[1][1];
      // sigma_el n_el with n_el = e_x: first column; sigma_f n_f = -first column.
      const LD sel_x = 2 * k.mu_el * gd[0][0] + k.lambda * divd;
      const LD sel_y = k.mu_el * (gd[0][1] + gd[1][0]);
      const LD sf_x = 2 * k.mu_f * gu[0][0];
      const LD sf_y = k.mu_f * (gu[0][1] + gu[1][0]);
      const LD pe = f.pE(x, y, T), pp = f.p(x, y, T);
      // sigma_el n_el - alpha p_E n_el + sigma_f n_f - p n_f = 0
      record("interface_total_stress", sel_x - k.alpha * pe - sf_x + pp);
      record("interface_total_stress", sel_y - sf_y);
      // u . n_f + (dt d - K/mu grad p_E) . n_el = 0
      auto d0 = [&](LD s) { return f.d(x, y, s)[0]; };
      record("interface_normal_flux", -f.u(x, y, T)[0] + fd.dt(d0, T) - k.K / k.mu_E * fd.dx(pE, x, y));
      // p_E = p - (sigma_f n_f) . n_f
      record("interface_normal_stress", pe - (pp - sf_x));
      // tangential fluid stress vanishes: (sigma_f n_f - p n_f) x n_f
      record("interface_tangential_stress", sf_y);
    }
    // Outlet point (1, y): (sigma_f - p I) n = -p_out n.
    {
      const LD x = 1, y = unit(rng);
      const auto gu = fd.grad(&ClosedForms<LD>::u, x, y, T);
      const LD pp = f.p(x, y, T);
      const double po = mc.data.p_out(Point(1.0, static_cast<double>(y)), t);
      record("outlet_stress", 2 * k.mu_f * gu[0][0] - pp + po);
      record("outlet_stress", k.mu_f * (gu[0][1] + gu[1][0]));
    }
  }
  return rep;
}

}  // namespace polymps
