#pragma once

// Sparse direct solves: Eigen::SparseLU with COLAMD ordering and a few
// steps of iterative refinement.

#include "polymps/common.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

#include <memory>

namespace polymps {

class Factorization {
 public:
  Factorization() = default;

  explicit Factorization(SpMat a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols())
      throw SolverError("factorize: matrix is not square (" + std::to_string(a_.rows()) + "x" +
                        std::to_string(a_.cols()) + ")");
    a_.makeCompressed();
    if (a_.rows() == 0) return;
    lu_ = std::make_shared<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(a_);
    lu_->factorize(a_);
    if (lu_->info() != Eigen::Success)
      throw SolverError("factorize: singular matrix (" + lu_->lastErrorMessage() + ")");
  }

  Eigen::Index size() const { return a_.rows(); }
  const SpMat& matrix() const { return a_; }

  /// Solves A x = b; refines until the relative residual drops below `tol`.
  Vector solve(const Vector& b, double tol = 1e-12, int max_refine = 3) const {
    if (b.size() != a_.rows())
      throw SolverError("solve: dimension mismatch (" + std::to_string(b.size()) + " vs " +
                        std::to_string(a_.rows()) + ")");
    if (b.size() == 0) return b;
    Vector x = lu_->solve(b);
    if (lu_->info() != Eigen::Success) throw SolverError("solve: back substitution failed");
    const double bn = b.norm();
    if (bn == 0.0) return Vector::Zero(b.size());
    for (int it = 0; it < max_refine; ++it) {
      const Vector r = b - a_ * x;
      if (r.norm() <= tol * bn) break;
      x += lu_->solve(r);
    }
    if (!x.allFinite()) throw SolverError("solve: non-finite solution (numerically singular matrix)");
    return x;
  }

  double relative_residual(const Vector& x, const Vector& b) const {
    const double bn = b.norm();
    return bn == 0.0 ? (a_ * x).norm() : (b - a_ * x).norm() / bn;
  }

 private:
  SpMat a_;
  std::shared_ptr<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>> lu_;
};

inline Factorization factorize(const SpMat& a) { return Factorization(a); }

inline Vector solve(const Factorization& f, const Vector& b) { return f.solve(b); }

}  // namespace polymps
