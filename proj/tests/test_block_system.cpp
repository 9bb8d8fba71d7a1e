#include <gtest/gtest.h>

#include "helpers.hpp"
#include "polymps/block_system.hpp"
#include "polymps/io.hpp"
#include "polymps/linear_solver.hpp"

using namespace polymps;
using namespace polymps::testing;

namespace {

/// Block-wise product of the operator with dt -> s, written row by row.
Vector apply_blocks(const SystemMatrices& sys, double s, const Vector& x) {
  const Layout& L = sys.layout;
  const Fields f = unstack(L, x);
  const std::size_t J = sys.n_compartments();
  const std::size_t e = sys.e_index.value_or(J);
  Vector rd = (s * s * sys.el.M + sys.el.A) * f.d;
  for (std::size_t k = 0; k < J; ++k) rd += sys.pj[k].B.transpose() * f.pj[k];
  if (e < J) rd += sys.in.J_el.transpose() * f.pj[e];
  std::vector<Vector> rp;
  for (std::size_t j = 0; j < J; ++j) {
    Vector r = -s * (sys.pj[j].B * f.d) + s * (sys.pj[j].M * f.pj[j]) + sys.pj[j].A * f.pj[j];
    for (std::size_t k = 0; k < J; ++k) r += sys.pj[j].C[k] * f.pj[k];
    if (j == e) r += -s * (sys.in.J_el * f.d) - sys.in.J_f * f.u;
    rp.push_back(r);
  }
  Vector ru = s * (sys.fl.M * f.u) + sys.fl.A * f.u + sys.fl.B.transpose() * f.p;
  if (e < J) ru += sys.in.J_f.transpose() * f.pj[e];
  const Vector rq = -(sys.fl.B * f.u) + sys.fl.S * f.p;
  return stack(L, rd, rp, ru, rq);
}

struct Problem {
  std::shared_ptr<const PolyMesh> mesh;
  DGSpace space;
  FaceSet faces;
  SystemMatrices sys;
  Problem(PolyMesh m, int degree, const PhysicalParams& p, const BoundaryConditionMap& bcs)
      : mesh(share(std::move(m))), space(mesh, degree), faces(build_faces(*mesh, bcs, p.names())),
        sys(build_system(space, p, faces)) {}
  Problem(PolyMesh m, int degree, const PhysicalParams& p = {})
      : Problem(std::move(m), degree, p, verification_conditions(p.names())) {}
};

PhysicalParams four_compartments() {
  PhysicalParams p;
  p.compartments = {Compartment{"A"}, Compartment{"C"}, Compartment{"V"}, Compartment{"E"}};
  p.beta = Eigen::MatrixXd::Constant(4, 4, 0.3);
  p.beta.diagonal().setZero();
  return p;
}

}  // namespace

TEST(BuildSystem, LayoutOnEightyElements) {
  const Problem pr(agglomerated_verification_mesh(80, 1), 2);
  const Layout& L = pr.sys.layout;
  EXPECT_EQ(L.n_d, 2u * 40u * 6u);
  EXPECT_EQ(L.n_pj, 40u * 6u);
  EXPECT_EQ(L.n_u, 2u * 40u * 6u);
  EXPECT_EQ(L.n_p, 40u * 6u);
  EXPECT_EQ(L.size(), 1440u);
}

TEST(BuildSystem, EmptyFluidSubdomainIsSolvable) {
  BoundaryCondition bc;
  bc.dirichlet_d = true;
  bc.dirichlet_p = {"E"};
  const PhysicalParams p;
  const Problem pr(unit_square_grid(3, Domain::elastic), 2, p, {{"b", bc}});
  EXPECT_EQ(pr.sys.layout.n_u, 0u);
  EXPECT_EQ(pr.sys.layout.n_p, 0u);
  ProblemData data;
  data.f_el = [](const Point& x, double) { return Vec2(x.y(), 1.0); };
  const SteadySystem st = build_steady(pr.sys, assemble_loads(pr.space, p, pr.faces, data, 0.0));
  const Factorization lu(st.matrix);
  const Vector x = lu.solve(st.rhs);
  EXPECT_LT(lu.relative_residual(x, st.rhs), 1e-10);
  EXPECT_GT(x.norm(), 0.0);
}

TEST(BuildSystem, FourCompartmentsCoupleAllPressures) {
  const PhysicalParams p = four_compartments();
  const Problem pr(verification_grid(4, 2, false), 1, p);
  const Layout& L = pr.sys.layout;
  EXPECT_EQ(L.n_comp, 4u);
  const SpMat op = global_operator(pr.sys, 1.0);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t k = 0; k < 4; ++k)
      EXPECT_GT(max_abs(block_of(op, L.off_pj(j), L.n_pj, L.off_pj(k), L.n_pj)), 0.0) << j << "," << k;
  EXPECT_TRUE(structural_checks(pr.sys, op).ok());
}

TEST(BuildSystem, InterfaceWithoutCompartmentEIsRejected) {
  PhysicalParams p;
  p.compartments = {Compartment{"A"}};
  EXPECT_THROW(Problem(verification_grid(4, 2, false), 1, p), InputError);
}

TEST(BuildSystem, OperatorEqualsBlockwiseProducts) {
  for (const PhysicalParams& p : {PhysicalParams{}, four_compartments()}) {
    const Problem pr(agglomerated_verification_mesh(20, 1), 2, p);
    for (double s : {0.0, 0.7, 3.0}) {
      const SpMat op = global_operator(pr.sys, s);
      const Vector x = random_vector(op.cols(), 42);
      const Vector ref = apply_blocks(pr.sys, s, x);
      EXPECT_LT((op * x - ref).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(BuildSystem, NoInterfaceMeansDecoupledSubdomains) {
  const auto mesh = share(verification_grid(6, 3, false));
  const DGSpace sp(mesh, 2);
  const PhysicalParams p;
  const FaceSet faces = build_faces(*mesh, verification_conditions(p.names()), p.names()).without_interface();
  const SystemMatrices sys = build_system(sp, p, faces);
  EXPECT_EQ(sys.in.J_el.nonZeros(), 0);
  EXPECT_EQ(sys.in.J_f.nonZeros(), 0);
  const SpMat op = global_operator(sys, 1.0);
  const Layout& L = sys.layout;
  const std::size_t n_el = L.off_u(), n_f = L.n_u + L.n_p;
  EXPECT_EQ(max_abs(block_of(op, 0, n_el, L.off_u(), n_f)), 0.0);
  EXPECT_EQ(max_abs(block_of(op, L.off_u(), n_f, 0, n_el)), 0.0);
}

TEST(StructuralChecks, VerificationSetupPasses) {
  for (int m : {1, 2, 3}) {
    const Problem pr(verification_grid(6, 3, true), m);
    const StructuralReport r = structural_checks(pr.sys);
    EXPECT_TRUE(r.ok()) << "m = " << m;
    for (const auto& [k, v] : r.symmetry) EXPECT_LT(v, 1e-12) << k;
    for (const auto& [k, v] : r.psd) EXPECT_GE(v, -1e-10) << k;
    for (const auto& [k, v] : r.pairing) EXPECT_LT(v, 1e-12) << k;
  }
}

TEST(StructuralChecks, CorruptedInterfaceSignIsFlagged) {
  const Problem pr(verification_grid(6, 3, false), 1);
  OperatorSigns bad;
  bad.jf_momentum = -1.0;
  const StructuralReport r = structural_checks(pr.sys, global_operator(pr.sys, 1.0, bad));
  EXPECT_FALSE(r.ok());
  EXPECT_GT(r.pairing.at("u-pE"), 0.5);
}

TEST(StructuralChecks, StabilizationFormVanishesOnContinuousPressure) {
  const Problem pr(verification_grid(6, 3, true), 2);
  const Vector q = l2_project(pr.space, Domain::fluid, ScalarFn([](const Point& x) { return x.x() * x.y() - 3.0; }));
  EXPECT_LT(std::abs(q.dot(pr.sys.fl.S * q)), 1e-12);
}

TEST(BuildSteady, ZeroLoadsGiveZeroSolution) {
  const Problem pr(verification_grid(4, 2, false), 2);
  const SteadySystem st = build_steady(pr.sys, assemble_loads(pr.space, PhysicalParams{}, pr.faces, {}, 0.0));
  EXPECT_EQ(Factorization(st.matrix).solve(st.rhs).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildSteady, NoBiotCouplingIsPureElasticity) {
  BoundaryCondition bc;
  bc.dirichlet_d = true;
  bc.dirichlet_p = {"E"};
  PhysicalParams p;
  p.compartments[0].alpha = 0.0;
  const Problem pr(unit_square_grid(4, Domain::elastic, true), 2, p, {{"b", bc}});
  ProblemData data;
  data.f_el = [](const Point& x, double) { return Vec2(std::sin(3 * x.x()), x.x() * x.y()); };
  data.g = {[](const Point& x, double) { return 1.0 + x.y(); }};
  const LoadVectors f = assemble_loads(pr.space, p, pr.faces, data, 0.0);
  const SteadySystem st = build_steady(pr.sys, f);
  const Fields sol = unstack(pr.sys.layout, Factorization(st.matrix).solve(st.rhs));
  const Vector d = Factorization(pr.sys.el.A).solve(f.F_el);
  EXPECT_LT((sol.d - d).cwiseAbs().maxCoeff(), 1e-10 * d.cwiseAbs().maxCoeff());
}
