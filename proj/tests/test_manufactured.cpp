#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "polymps/manufactured.hpp"

using namespace polymps;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(ClosedForms, SteadyPointValues) {
  const ManufacturedCase mc = steady_case();
  EXPECT_NEAR(mc.exact.p_f({0.0, 0.5}, 0.0), -4 * pi * pi, 1e-12);
  const Vec2 u = mc.exact.u({0.0, 0.0}, 0.0);
  EXPECT_NEAR(u.x(), pi, 1e-14);
  EXPECT_NEAR(u.y(), -pi, 1e-14);
  const Vec2 d = mc.exact.d({0.0, 0.0}, 0.0);
  EXPECT_NEAR(d.x(), -pi / 2, 1e-14);
  EXPECT_NEAR(d.y(), pi / 2, 1e-14);
  EXPECT_NEAR(mc.exact.p[0]({-1.0, 0.0}, 0.0), pi, 1e-14);
}

TEST(ClosedForms, UnsteadyTimeFactors) {
  const ManufacturedCase mc = unsteady_case();
  EXPECT_NEAR(mc.forms.g_el(0.0), 1.0, 1e-15);
  EXPECT_NEAR(mc.forms.g_u(0.0), 2.0, 1e-15);
  EXPECT_NEAR(mc.forms.g_p(0.0), 1.5, 1e-15);
  EXPECT_NEAR(mc.forms.eta_time(), 2.0, 1e-15);
  EXPECT_TRUE(steady_case().forms.steady);
  EXPECT_DOUBLE_EQ(steady_case().forms.g_u(0.7), 1.0);
}

TEST(ClosedForms, VelocityIsDivergenceFree) {
  for (const ManufacturedCase& mc : {steady_case(), unsteady_case()})
    for (double x : {0.1, 0.5, 0.9})
      for (double y : {0.2, 0.7}) {
        const Mat2 g = mc.exact.grad_u({x, y}, 0.3);
        EXPECT_NEAR(g.trace(), 0.0, 1e-13);
      }
}

TEST(ClosedForms, SpaceTimeSeparable) {
  const ManufacturedCase un = unsteady_case(), st = steady_case();
  for (double t : {0.0, 0.1, 0.37, 1.0}) {
    const Point x{-0.3, 0.6};
    EXPECT_NEAR(un.exact.d(x, t).x(), un.forms.g_el(t) * st.exact.d(x, 0.0).x(), 1e-14);
    const Point y{0.4, 0.2};
    EXPECT_NEAR(un.exact.u(y, t).y(), un.forms.g_u(t) * st.exact.u(y, 0.0).y(), 1e-13);
  }
}

TEST(ClosedForms, GradientsMatchFiniteDifferences) {
  const ManufacturedCase mc = unsteady_case();
  const double h = 1e-6, t = 0.2;
  const Point x{-0.4, 0.3};
  const Mat2 g = mc.exact.grad_d(x, t);
  const Vec2 gx = (mc.exact.d(x + Vec2(h, 0), t) - mc.exact.d(x - Vec2(h, 0), t)) / (2 * h);
  const Vec2 gy = (mc.exact.d(x + Vec2(0, h), t) - mc.exact.d(x - Vec2(0, h), t)) / (2 * h);
  EXPECT_NEAR(g(0, 0), gx.x(), 1e-7);
  EXPECT_NEAR(g(1, 0), gx.y(), 1e-7);
  EXPECT_NEAR(g(0, 1), gy.x(), 1e-7);
  const Vec2 vt = (mc.exact.d(x, t + h) - mc.exact.d(x, t - h)) / (2 * h);
  EXPECT_NEAR(mc.exact.dt_d(x, t).x(), vt.x(), 1e-7);
}

TEST(ResidualOracle, BothCasesSatisfyTheStrongProblem) {
  for (const auto& [mc, t] : {std::pair{steady_case(), 0.0}, std::pair{unsteady_case(), 0.37}}) {
    const ResidualReport r = residual_oracle(mc, 100, t);
    EXPECT_EQ(r.n_points, 100u);
    EXPECT_LT(r.worst(), 1e-4) << mc.name;
    for (const char* key : {"momentum_el", "mass_E", "momentum_f", "continuity", "interface_total_stress",
                            "interface_normal_flux", "interface_normal_stress", "interface_tangential_stress",
                            "outlet_stress"})
      EXPECT_EQ(r.max_residual.count(key), 1u) << key;
  }
}

TEST(ResidualOracle, FlippedSourcesAreDetected) {
  for (const auto& [mc, t] : {std::pair{steady_case(), 0.0}, std::pair{unsteady_case(), 0.37}})
    for (const char* src : {"f_el", "g", "f_f"})
      EXPECT_GT(residual_oracle(flip_source(mc, src), 100, t).worst(), 1e-1) << mc.name << " " << src;
  EXPECT_THROW(flip_source(steady_case(), "p_out"), InputError);
}

TEST(ResidualOracle, NonUnitParameters) {
  // mu_el stays 1: the closed forms balance the interface stress only then.
  PhysicalParams p;
  p.lambda = 5.0;
  p.mu_f = 0.5;
  p.rho_f = 3.0;
  p.compartments[0].k = 0.3;
  p.compartments[0].c = 2.0;
  p.compartments[0].beta_ext = 0.1;
  EXPECT_LT(residual_oracle(unsteady_case(p), 50, 0.2).worst(), 1e-4);
}

TEST(ManufacturedCase, RequiresSingleCompartmentE) {
  PhysicalParams p;
  p.compartments = {Compartment{"A"}};
  EXPECT_THROW(steady_case(p), InputError);
}
