#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "polymps/io.hpp"
#include "polymps/quadrature.hpp"
#include "polymps/space.hpp"

using namespace polymps;
using namespace polymps::testing;

namespace {

constexpr double pi = std::numbers::pi;

/// Exact integral of x^a y^b over a polygon through the divergence theorem,
/// ∫ x^a y^b = ∮ x^{a+1} y^b / (a+1) dy, with each edge parametrized by s
/// and the resulting polynomial in s integrated term by term.
double monomial_integral(const std::vector<Point>& loop, int a, int b) {
  auto poly_pow = [](double c0, double c1, int n) {
    std::vector<double> p{1.0};
    for (int i = 0; i < n; ++i) {
      std::vector<double> q(p.size() + 1, 0.0);
      for (std::size_t k = 0; k < p.size(); ++k) {
        q[k] += c0 * p[k];
        q[k + 1] += c1 * p[k];
      }
      p = q;
    }
    return p;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Point& p0 = loop[i];
    const Point& p1 = loop[(i + 1) % loop.size()];
    const auto px = poly_pow(p0.x(), p1.x() - p0.x(), a + 1);
    const auto py = poly_pow(p0.y(), p1.y() - p0.y(), b);
    double s = 0.0;
    for (std::size_t k = 0; k < px.size(); ++k)
      for (std::size_t l = 0; l < py.size(); ++l) s += px[k] * py[l] / static_cast<double>(k + l + 1);
    total += s * (p1.y() - p0.y()) / (a + 1);
  }
  return total;
}

double shoelace(const std::vector<Point>& loop) {
  double s = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Point& p = loop[i];
    const Point& q = loop[(i + 1) % loop.size()];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

const std::vector<Point> kLShape{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};

PolyMesh single(const std::vector<Point>& loop) {
  std::vector<std::size_t> ids(loop.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return PolyMesh(loop, {{ids, Domain::elastic}});
}

/// Element of an n-by-n unit-square grid containing x (row-major cells).
std::size_t locate(std::size_t n, const Point& x) {
  const auto i = std::min(n - 1, static_cast<std::size_t>(x.x() * static_cast<double>(n)));
  const auto j = std::min(n - 1, static_cast<std::size_t>(x.y() * static_cast<double>(n)));
  return j * n + i;
}

}  // namespace

TEST(DGSpace, UnitSquareDegreeOneIsOrthonormal) {
  const auto mesh = share(single({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
  const DGSpace sp(mesh, 1);
  EXPECT_EQ(sp.n_basis(), 3u);
  const auto q = volume_quadrature(*mesh, 0, sp.volume_order());
  const auto t = sp.tabulate(0, q.points);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(3, 3);
  for (std::size_t p = 0; p < q.size(); ++p)
    gram += q.weights[p] * t.val.row(static_cast<Eigen::Index>(p)).transpose() * t.val.row(static_cast<Eigen::Index>(p));
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DGSpace, GramIsIdentityOnAgglomeratedElements) {
  const auto mesh = share(agglomerated_verification_mesh(20, 1));
  for (int m : {1, 3, 5}) {
    const DGSpace sp(mesh, m);
    const auto nb = static_cast<Eigen::Index>(sp.n_basis());
    EXPECT_EQ(sp.n_basis(), static_cast<std::size_t>((m + 1) * (m + 2) / 2));
    for (std::size_t k = 0; k < mesh->n_elements(); ++k) {
      const auto q = volume_quadrature(*mesh, k, sp.volume_order());
      const auto t = sp.tabulate(k, q.points);
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nb, nb);
      for (std::size_t p = 0; p < q.size(); ++p) {
        const auto r = t.val.row(static_cast<Eigen::Index>(p));
        gram += q.weights[p] * r.transpose() * r;
      }
      EXPECT_LT((gram - Eigen::MatrixXd::Identity(nb, nb)).cwiseAbs().maxCoeff(), 1e-10) << "element " << k;
    }
  }
}

TEST(DGSpace, DegreeTwoOnEightyElementsHas480ScalarDofs) {
  const auto mesh = share(agglomerated_verification_mesh(80, 1));
  ASSERT_EQ(mesh->n_elements(), 80u);
  const DGSpace sp(mesh, 2);
  EXPECT_EQ(sp.field_size(Domain::elastic, 1) + sp.field_size(Domain::fluid, 1), 480u);
}

TEST(DGSpace, DegreeZeroIsRejected) {
  EXPECT_THROW(DGSpace(share(unit_square_grid(1, Domain::elastic)), 0), InputError);
}

TEST(DGSpace, BasisGradientsMatchFiniteDifferences) {
  const auto mesh = share(agglomerated_verification_mesh(20, 1));
  const DGSpace sp(mesh, 3);
  const double h = 1e-6;
  for (std::size_t k = 0; k < mesh->n_elements(); k += 3) {
    const Point c = mesh->geometry(k).centroid;
    const auto t = sp.tabulate(k, {c, c + Vec2(h, 0), c - Vec2(h, 0), c + Vec2(0, h), c - Vec2(0, h)});
    for (Eigen::Index b = 0; b < t.val.cols(); ++b) {
      const double fx = (t.val(1, b) - t.val(2, b)) / (2 * h), fy = (t.val(3, b) - t.val(4, b)) / (2 * h);
      const double scale = std::max(1.0, std::hypot(t.dx(0, b), t.dy(0, b)));
      EXPECT_NEAR(fx, t.dx(0, b), 1e-6 * scale);
      EXPECT_NEAR(fy, t.dy(0, b), 1e-6 * scale);
    }
  }
}

TEST(Quadrature, UnitSquareExamples) {
  const PolyMesh m = single({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_NEAR(volume_quadrature(m, 0, 1).measure(), 1.0, 1e-15);
  const auto q = volume_quadrature(m, 0, 4);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * std::pow(q.points[i].x() * q.points[i].y(), 2);
  EXPECT_NEAR(s, 1.0 / 9.0, 1e-14);
}

TEST(Quadrature, LShapeAreaMatchesShoelace) {
  const PolyMesh m = single(kLShape);
  EXPECT_NEAR(volume_quadrature(m, 0, 2).measure(), shoelace(kLShape), 1e-14);
  EXPECT_NEAR(shoelace(kLShape), 3.0, 1e-15);
}

TEST(Quadrature, RandomPolynomialsAreIntegratedExactly) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> coef;
  const std::vector<std::vector<Point>> polys{
      kLShape, {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0.1, 0.2}, {1.3, -0.1}, {1.9, 0.8}, {0.9, 1.7}, {-0.2, 1.1}}};
  for (const auto& loop : polys) {
    const PolyMesh m = single(loop);
    for (int order = 1; order <= 9; ++order) {
      const auto q = volume_quadrature(m, 0, order);
      double exact = 0.0, num = 0.0;
      for (int a = 0; a <= order; ++a)
        for (int b = 0; a + b <= order; ++b) {
          const double c = coef(rng);
          exact += c * monomial_integral(loop, a, b);
          for (std::size_t i = 0; i < q.size(); ++i)
            num += c * q.weights[i] * std::pow(q.points[i].x(), a) * std::pow(q.points[i].y(), b);
        }
      EXPECT_NEAR(num, exact, 1e-12 * std::max(1.0, std::abs(exact))) << "order " << order;
    }
  }
}

TEST(Quadrature, SegmentExamples) {
  EXPECT_NEAR(segment_quadrature({0, 0}, {1, 0}, 1).measure(), 1.0, 1e-15);
  const auto q = segment_quadrature({0, 0}, {1, 0}, 3);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * std::pow(q.points[i].x(), 3);
  EXPECT_NEAR(s, 0.25, 1e-15);
  EXPECT_NEAR(segment_quadrature({0.3, 0.1}, {0.3 + 2.0 / 15.0, 0.1}, 5).measure(), 2.0 / 15.0, 1e-15);
}

TEST(L2Project, ZeroAndLinearReproduction) {
  const auto mesh = share(verification_grid(4, 2, true));
  const DGSpace sp(mesh, 1);
  EXPECT_EQ(l2_project(sp, Domain::elastic, ScalarFn([](const Point&) { return 0.0; })).cwiseAbs().maxCoeff(), 0.0);
  const Vector c = l2_project(sp, Domain::fluid, ScalarFn([](const Point& x) { return x.x() + x.y(); }));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k : sp.elements(Domain::fluid))
    for (int i = 0; i < 5; ++i) {
      // random point of the triangle by barycentric coordinates
      const auto& v = mesh->element(k).vertices;
      double a = u(rng), b = u(rng);
      if (a + b > 1.0) a = 1.0 - a, b = 1.0 - b;
      const Point x = mesh->vertices()[v[0]] + a * (mesh->vertices()[v[1]] - mesh->vertices()[v[0]]) +
                      b * (mesh->vertices()[v[2]] - mesh->vertices()[v[0]]);
      EXPECT_NEAR(evaluate(sp, c, 1, k, x)[0], x.x() + x.y(), 1e-10);
    }
}

TEST(L2Project, Idempotent) {
  const std::size_t n = 4;
  const auto mesh = share(unit_square_grid(n, Domain::elastic));
  const DGSpace sp(mesh, 2);
  const Vector c = l2_project(sp, Domain::elastic, ScalarFn([](const Point& x) { return std::exp(x.x()) * std::sin(3 * x.y()); }));
  const Vector again = l2_project(sp, Domain::elastic, ScalarFn([&](const Point& x) {
                                    return evaluate(sp, c, 1, locate(n, x), x)[0];
                                  }));
  EXPECT_LT((again - c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(L2Project, SineErrorDecaysAsHCubedForDegreeTwo) {
  auto f = [](const Point& x) { return std::sin(pi * x.x()); };
  std::vector<double> errs;
  for (std::size_t n : {4, 8, 16}) {
    const auto mesh = share(unit_square_grid(n, Domain::elastic));
    const DGSpace sp(mesh, 2);
    const Vector c = l2_project(sp, Domain::elastic, ScalarFn(f));
    double e2 = 0.0;
    for (std::size_t k = 0; k < mesh->n_elements(); ++k) {
      const auto q = volume_quadrature(*mesh, k, 10);
      for (std::size_t i = 0; i < q.size(); ++i)
        e2 += q.weights[i] * std::pow(evaluate(sp, c, 1, k, q.points[i])[0] - f(q.points[i]), 2);
    }
    errs.push_back(std::sqrt(e2));
  }
  for (std::size_t i = 0; i + 1 < errs.size(); ++i) EXPECT_NEAR(std::log2(errs[i] / errs[i + 1]), 3.0, 0.1);
}
