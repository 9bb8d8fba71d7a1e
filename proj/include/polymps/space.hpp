#pragma once

// Discontinuous polynomial spaces of total degree m on polygons.
//
// Each element carries monomials in coordinates scaled to its bounding box,
// orthonormalized in L2(K) by modified Gram-Schmidt (two passes). Vector
// fields use the same scalar basis per component. DOF blocks are local to a
// subdomain: entry (e, c, i) of an ncomp-component field lives at
// (e * ncomp + c) * n_basis + i, e being the element's index within its
// subdomain.

#include "polymps/quadrature.hpp"

#include <memory>

namespace polymps {

/// Values and gradients of the n_basis functions at a set of points.
struct BasisTable {
  Eigen::MatrixXd val;  // n_points x n_basis
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;

  Vec2 grad(Eigen::Index q, Eigen::Index i) const { return {dx(q, i), dy(q, i)}; }
};

class DGSpace {
 public:
  DGSpace(std::shared_ptr<const PolyMesh> mesh, int degree)
      : mesh_(std::move(mesh)), degree_(degree) {
    if (degree_ < 1) throw InputError("polynomial degree must be >= 1 (got " + std::to_string(degree_) + ")");
    for (int total = 0; total <= degree_; ++total)
      for (int py = 0; py <= total; ++py) exponents_.emplace_back(total - py, py);
    const std::size_t n = mesh_->n_elements();
    local_.resize(n);
    center_.resize(n);
    scale_.resize(n);
    coeff_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      auto& list = mesh_->element(k).domain == Domain::elastic ? elastic_ : fluid_;
      local_[k] = list.size();
      list.push_back(k);
      const auto& g = mesh_->geometry(k);
      center_[k] = 0.5 * (g.bbox_min + g.bbox_max);
      scale_[k] = 0.5 * (g.bbox_max - g.bbox_min);
      if (!(scale_[k].minCoeff() > 1e-14 * g.diameter))
        throw MeshError("element " + std::to_string(k) + " has a degenerate bounding box");
      orthonormalize(k);
    }
  }

  const PolyMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const PolyMesh> mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  std::size_t n_basis() const { return exponents_.size(); }
  int volume_order() const { return 2 * degree_ + 2; }
  int face_order() const { return 2 * degree_ + 3; }

  const std::vector<std::size_t>& elements(Domain d) const {
    return d == Domain::elastic ? elastic_ : fluid_;
  }
  std::size_t n_elements(Domain d) const { return elements(d).size(); }
  /// Index of element k within its subdomain.
  std::size_t local_index(std::size_t k) const { return local_[k]; }
  Domain domain(std::size_t k) const { return mesh_->element(k).domain; }

  /// Size of an ncomp-component field block on subdomain d.
  std::size_t field_size(Domain d, int ncomp) const {
    return n_elements(d) * static_cast<std::size_t>(ncomp) * n_basis();
  }
  /// First DOF of component c of element k in its field block.
  std::size_t dof(std::size_t k, int ncomp, int c) const {
    return (local_[k] * static_cast<std::size_t>(ncomp) + static_cast<std::size_t>(c)) * n_basis();
  }

  BasisTable tabulate(std::size_t k, const std::vector<Point>& points) const {
    const auto nq = static_cast<Eigen::Index>(points.size());
    const auto nb = static_cast<Eigen::Index>(n_basis());
    Eigen::MatrixXd mv(nq, nb), mx(nq, nb), my(nq, nb);
    for (Eigen::Index q = 0; q < nq; ++q) monomials(k, points[static_cast<std::size_t>(q)], mv, mx, my, q);
    return {mv * coeff_[k], mx * coeff_[k], my * coeff_[k]};
  }

  /// Coefficients R with basis = monomials * R (upper triangular).
  const Eigen::MatrixXd& coefficients(std::size_t k) const { return coeff_[k]; }

 private:
  void monomials(std::size_t k, const Point& x, Eigen::MatrixXd& v, Eigen::MatrixXd& dx,
                 Eigen::MatrixXd& dy, Eigen::Index row) const {
    const double sx = scale_[k].x(), sy = scale_[k].y();
    const double xi = (x.x() - center_[k].x()) / sx;
    const double et = (x.y() - center_[k].y()) / sy;
    std::vector<double> px(static_cast<std::size_t>(degree_) + 1), py(px.size());
    px[0] = py[0] = 1.0;
    for (std::size_t i = 1; i < px.size(); ++i) {
      px[i] = px[i - 1] * xi;
      py[i] = py[i - 1] * et;
    }
    for (std::size_t b = 0; b < exponents_.size(); ++b) {
      const auto [a, c] = exponents_[b];
      const auto ia = static_cast<std::size_t>(a), ic = static_cast<std::size_t>(c);
      const auto col = static_cast<Eigen::Index>(b);
      v(row, col) = px[ia] * py[ic];
      dx(row, col) = a > 0 ? a * px[ia - 1] * py[ic] / sx : 0.0;
      dy(row, col) = c > 0 ? c * px[ia] * py[ic - 1] / sy : 0.0;
    }
  }

  void orthonormalize(std::size_t k) {
    const auto q = volume_quadrature(*mesh_, k, volume_order());
    const auto nq = static_cast<Eigen::Index>(q.size());
    const auto nb = static_cast<Eigen::Index>(n_basis());
    Eigen::MatrixXd mv(nq, nb), mx(nq, nb), my(nq, nb);
    for (Eigen::Index i = 0; i < nq; ++i) monomials(k, q.points[static_cast<std::size_t>(i)], mv, mx, my, i);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(q.weights.data(), nq);
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(nb, nb);
    Eigen::MatrixXd vals = mv;  // columns: current basis values at the points
    for (Eigen::Index j = 0; j < nb; ++j) {
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i < j; ++i) {
          const double proj = (vals.col(i).array() * vals.col(j).array() * w.array()).sum();
          vals.col(j) -= proj * vals.col(i);
          r.col(j) -= proj * r.col(i);
        }
      const double norm = std::sqrt((vals.col(j).array().square() * w.array()).sum());
      if (!(norm > 1e-13)) throw MeshError("basis orthonormalization failed on element " + std::to_string(k));
      vals.col(j) /= norm;
      r.col(j) /= norm;
    }
    coeff_[k] = r;
  }

  std::shared_ptr<const PolyMesh> mesh_;
  int degree_;
  std::vector<std::pair<int, int>> exponents_;
  std::vector<std::size_t> elastic_, fluid_, local_;
  std::vector<Point> center_, scale_;
  std::vector<Eigen::MatrixXd> coeff_;
};

using ScalarFn = std::function<double(const Point&)>;
using VectorFn = std::function<Vec2(const Point&)>;

/// L2 projection of a scalar field onto the DG space of subdomain d.
inline Vector l2_project(const DGSpace& space, Domain d, const ScalarFn& f) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(space.field_size(d, 1)));
  for (std::size_t k : space.elements(d)) {
    const auto q = volume_quadrature(space.mesh(), k, space.volume_order());
    const auto t = space.tabulate(k, q.points);
    const auto o = static_cast<Eigen::Index>(space.dof(k, 1, 0));
    for (std::size_t p = 0; p < q.size(); ++p)
      x.segment(o, t.val.cols()) += q.weights[p] * f(q.points[p]) * t.val.row(static_cast<Eigen::Index>(p)).transpose();
  }
  return x;
}

/// L2 projection of a vector field (two components) onto subdomain d.
inline Vector l2_project(const DGSpace& space, Domain d, const VectorFn& f) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(space.field_size(d, 2)));
  for (std::size_t k : space.elements(d)) {
    const auto q = volume_quadrature(space.mesh(), k, space.volume_order());
    const auto t = space.tabulate(k, q.points);
    const auto nb = t.val.cols();
    for (std::size_t p = 0; p < q.size(); ++p) {
      const Vec2 v = f(q.points[p]);
      for (int c = 0; c < 2; ++c)
        x.segment(static_cast<Eigen::Index>(space.dof(k, 2, c)), nb) +=
            q.weights[p] * v[c] * t.val.row(static_cast<Eigen::Index>(p)).transpose();
    }
  }
  return x;
}

/// Value of an ncomp-component discrete field on element k at point x.
inline Eigen::VectorXd evaluate(const DGSpace& space, const Vector& coeffs, int ncomp, std::size_t k,
                                const Point& x) {
  const auto t = space.tabulate(k, {x});
  Eigen::VectorXd out(ncomp);
  for (int c = 0; c < ncomp; ++c)
    out[c] = t.val.row(0).dot(coeffs.segment(static_cast<Eigen::Index>(space.dof(k, ncomp, c)), t.val.cols()));
  return out;
}

/// Mean value of component c over element k.
inline double element_mean(const DGSpace& space, const Vector& coeffs, int ncomp, int c, std::size_t k) {
  const auto q = volume_quadrature(space.mesh(), k, space.volume_order());
  const auto t = space.tabulate(k, q.points);
  const auto seg = coeffs.segment(static_cast<Eigen::Index>(space.dof(k, ncomp, c)), t.val.cols());
  double s = 0.0;
  for (std::size_t p = 0; p < q.size(); ++p) s += q.weights[p] * t.val.row(static_cast<Eigen::Index>(p)).dot(seg);
  return s / space.mesh().geometry(k).area;
}

}  // namespace polymps
