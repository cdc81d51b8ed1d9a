#pragma once

// Dense symmetric linear algebra used throughout the library: the SymMat
// carrier type, full eigendecomposition, PSD/NSD splitting, an iterative
// minimum eigenpair solver and the Frobenius inner product.

#include <cstdint>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "tripscreen/errors.hpp"

namespace tripscreen {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Dense symmetric d x d matrix. Construction from an arbitrary matrix checks
// finiteness and rejects asymmetry above 1e-6 (relative); smaller asymmetry is
// removed by averaging with the transpose.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(Index order);
  explicit SymMat(const MatrixXd& entries);

  static SymMat zero(Index order) { return SymMat(order); }
  static SymMat identity(Index order);
  static SymMat diagonal(const VectorXd& diag);
  // For results that are symmetric by construction. Averages with the
  // transpose but skips the tolerance check.
  static SymMat assume_symmetric(MatrixXd entries);

  Index order() const noexcept { return m_.rows(); }
  const MatrixXd& matrix() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  double squared_norm() const { return m_.squaredNorm(); }
  double norm() const { return m_.norm(); }
  bool is_diagonal(double tol = 0.0) const;

  SymMat& operator+=(const SymMat& other);
  SymMat& operator-=(const SymMat& other);
  SymMat& operator*=(double s);

  friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
  friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
  friend SymMat operator*(SymMat a, double s) { return a *= s; }
  friend SymMat operator*(double s, SymMat a) { return a *= s; }
  friend SymMat operator-(SymMat a) { return a *= -1.0; }

 private:
  struct Trusted {};
  SymMat(MatrixXd entries, Trusted) : m_(std::move(entries)) {}

  MatrixXd m_;
};

// Eigenvalues sorted descending, eigenvectors as orthonormal columns.
struct EigDecomp {
  VectorXd eigenvalues;
  MatrixXd eigenvectors;
};

struct PsdSplit {
  SymMat plus;
  SymMat minus;
};

EigDecomp eig_sym(const SymMat& a);

// a = plus + minus with plus the Frobenius projection onto the PSD cone.
PsdSplit psd_split(const SymMat& a);

// Shorthand for psd_split(a).plus.
SymMat project_psd(const SymMat& a);

struct MinEigOptions {
  // Residual target relative to ||A||_F.
  double tolerance = 1e-10;
  // 0 selects max(200, 20 d).
  int max_iterations = 0;
  std::uint64_t seed = 0x5eed'1234ULL;
  // Warm start; must have size d if set.
  std::optional<VectorXd> start;
};

struct MinEigPair {
  double value;
  VectorXd vector;
  int iterations;
  double residual;
};

// Smallest eigenpair by locally optimal conjugate-gradient minimisation of the
// Rayleigh quotient. Throws ConvergenceError carrying the best iterate when the
// budget runs out.
MinEigPair min_eigpair(const SymMat& a, const MinEigOptions& options = {});

double frob_inner(const SymMat& a, const SymMat& b);

}  // namespace tripscreen
