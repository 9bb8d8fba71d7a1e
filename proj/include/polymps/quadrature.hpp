#pragma once

// Gauss rules on segments, collapsed (Duffy) rules on triangles and
// composite rules on polygons built from the centroid fan.

#include "polymps/mesh.hpp"

#include <numbers>

namespace polymps {

struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  double measure() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// n-point Gauss-Legendre nodes and weights on [0,1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      // Legendre recurrence: p1 = P_n(z), p0 = P_{n-1}(z).
      double p1 = 1.0, p0 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double pm = p0;
        p0 = p1;
        p1 = ((2.0 * k - 1.0) * z * p0 - (k - 1.0) * pm) / k;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
    w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Points needed for a Gauss rule exact to polynomial degree `order`.
inline int gauss_points_for(int order) { return std::max(1, (order + 2) / 2); }

/// Gauss rule on segment a-b exact for polynomials of degree `order`.
inline QuadratureRule segment_quadrature(const Point& a, const Point& b, int order) {
  const auto [x, w] = gauss_legendre(gauss_points_for(order));
  const double len = (b - a).norm();
  QuadratureRule q;
  for (std::size_t i = 0; i < x.size(); ++i) {
    q.points.push_back(a + x[i] * (b - a));
    q.weights.push_back(w[i] * len);
  }
  return q;
}

/// Collapsed Gauss rule on triangle (a,b,c), exact to degree `order`.
inline void append_triangle_quadrature(const Point& a, const Point& b, const Point& c, int order,
                                       QuadratureRule& q) {
  // p(s,t) = (1-s) a + s [(1-t) b + t c], Jacobian 2|T| s.
  const auto [xs, ws] = gauss_legendre(gauss_points_for(order + 1));
  const auto [xt, wt] = gauss_legendre(gauss_points_for(order));
  const double area2 = std::abs(detail::cross(b - a, c - a));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xt.size(); ++j) {
      const double s = xs[i], t = xt[j];
      q.points.push_back((1.0 - s) * a + s * ((1.0 - t) * b + t * c));
      q.weights.push_back(ws[i] * wt[j] * area2 * s);
    }
}

/// Composite rule on a polygon (vertex loop) from the fan about `center`.
inline QuadratureRule polygon_quadrature(const std::vector<Point>& loop, const Point& center,
                                         int order) {
  QuadratureRule q;
  for (std::size_t i = 0; i < loop.size(); ++i)
    append_triangle_quadrature(center, loop[i], loop[(i + 1) % loop.size()], order, q);
  return q;
}

/// Volume rule on element k, exact for polynomials up to `order`.
inline QuadratureRule volume_quadrature(const PolyMesh& mesh, std::size_t k, int order) {
  if (order < 1) throw std::invalid_argument("volume_quadrature: order must be >= 1");
  std::vector<Point> loop;
  for (std::size_t v : mesh.element(k).vertices) loop.push_back(mesh.vertices()[v]);
  return polygon_quadrature(loop, mesh.geometry(k).centroid, order);
}

/// Face rule exact for polynomials up to `order`, oriented from v[0] to v[1].
template <class FaceT>
QuadratureRule face_quadrature(const PolyMesh& mesh, const FaceT& face, int order) {
  return segment_quadrature(mesh.vertices()[face.v[0]], mesh.vertices()[face.v[1]], order);
}

}  // namespace polymps
