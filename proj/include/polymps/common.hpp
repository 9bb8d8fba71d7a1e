#pragma once

// Shared vocabulary types and error classes.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polymps {

using Point = Eigen::Vector2d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class Domain : unsigned char { elastic, fluid };

inline const char* to_string(Domain d) {
  return d == Domain::elastic ? "elastic" : "fluid";
}

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (mesh files, configuration).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Mesh invariant violation.
class MeshError : public InputError {
 public:
  using InputError::InputError;
};

/// Singular or failed linear solve.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Symmetric outer product a (.) b = (a b^T + b a^T) / 2.
inline Mat2 sym_outer(const Vec2& a, const Vec2& b) {
  return 0.5 * (a * b.transpose() + b * a.transpose());
}

inline double ddot(const Mat2& a, const Mat2& b) {
  return (a.array() * b.array()).sum();
}

}  // namespace polymps
