#include "tripscreen/core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace tripscreen {

namespace {

void require_finite(const MatrixXd& a) {
  if (!a.allFinite()) throw InputError("matrix has non-finite entries");
}

}  // namespace

SymMat::SymMat(Index order) : m_(MatrixXd::Zero(order, order)) {
  if (order < 0) throw DimensionError("negative matrix order");
}

SymMat::SymMat(const MatrixXd& entries) {
  if (entries.rows() != entries.cols()) throw DimensionError("matrix is not square");
  require_finite(entries);
  const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
  const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
  if (entries.size() > 0 && asym > 1e-6 * scale)
    throw InputError("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  m_ = 0.5 * (entries + entries.transpose());
}

SymMat SymMat::identity(Index order) { return SymMat(MatrixXd::Identity(order, order), Trusted{}); }

SymMat SymMat::diagonal(const VectorXd& diag) {
  if (!diag.allFinite()) throw InputError("diagonal has non-finite entries");
  return SymMat(MatrixXd(diag.asDiagonal()), Trusted{});
}

SymMat SymMat::assume_symmetric(MatrixXd entries) {
  if (entries.rows() != entries.cols()) throw DimensionError("matrix is not square");
  MatrixXd sym = 0.5 * (entries + entries.transpose());
  return SymMat(std::move(sym), Trusted{});
}

bool SymMat::is_diagonal(double tol) const {
  for (Index j = 0; j < m_.cols(); ++j)
    for (Index i = 0; i < m_.rows(); ++i)
      if (i != j && std::abs(m_(i, j)) > tol) return false;
  return true;
}

SymMat& SymMat::operator+=(const SymMat& other) {
  if (other.order() != order()) throw DimensionError("order mismatch in SymMat addition");
  m_ += other.m_;
  return *this;
}

SymMat& SymMat::operator-=(const SymMat& other) {
  if (other.order() != order()) throw DimensionError("order mismatch in SymMat subtraction");
  m_ -= other.m_;
  return *this;
}

SymMat& SymMat::operator*=(double s) {
  m_ *= s;
  return *this;
}

EigDecomp eig_sym(const SymMat& a) {
  require_finite(a.matrix());
  const Index d = a.order();
  if (d == 0) return {};
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(a.matrix());
  if (solver.info() != Eigen::Success) throw InputError("eigendecomposition failed");
  // Eigen returns ascending order.
  EigDecomp out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

PsdSplit psd_split(const SymMat& a) {
  const EigDecomp e = eig_sym(a);
  const Index d = a.order();
  const VectorXd pos = e.eigenvalues.cwiseMax(0.0);
  MatrixXd plus = e.eigenvectors * pos.asDiagonal() * e.eigenvectors.transpose();
  if (d == 0) return {};
  // Both halves come from the same eigenbasis so each is (semi)definite up to
  // rounding.
  const VectorXd neg = e.eigenvalues.cwiseMin(0.0);
  MatrixXd minus = e.eigenvectors * neg.asDiagonal() * e.eigenvectors.transpose();
  return {SymMat::assume_symmetric(std::move(plus)), SymMat::assume_symmetric(std::move(minus))};
}

SymMat project_psd(const SymMat& a) { return psd_split(a).plus; }

MinEigPair min_eigpair(const SymMat& a, const MinEigOptions& options) {
  require_finite(a.matrix());
  const Index d = a.order();
  if (d == 0) throw DimensionError("min_eigpair of an empty matrix");
  const MatrixXd& A = a.matrix();
  const double anorm = A.norm();
  if (anorm == 0.0) {
    VectorXd e = VectorXd::Zero(d);
    e(0) = 1.0;
    return {0.0, e, 0, 0.0};
  }
  if (d == 1) return {A(0, 0), VectorXd::Ones(1), 0, 0.0};

  VectorXd x;
  if (options.start && options.start->size() == d && options.start->norm() > 0) {
    x = *options.start;
  } else {
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss;
    x.resize(d);
    for (Index i = 0; i < d; ++i) x(i) = gauss(rng);
  }
  x.normalize();

  const int budget =
      options.max_iterations > 0 ? options.max_iterations : std::max<int>(200, 20 * static_cast<int>(d));
  const double target = options.tolerance * anorm;

  VectorXd ax = A * x;
  double rho = x.dot(ax);
  VectorXd r = ax - rho * x;
  double res = r.norm();
  VectorXd p;  // previous search direction, empty on the first step

  double best_rho = rho;
  double best_res = res;
  VectorXd best_x = x;

  for (int it = 0; it < budget; ++it) {
    if (res <= target) return {rho, x, it, res};

    // Orthonormal basis of span{x, r, p} by twice-iterated Gram-Schmidt.
    MatrixXd basis(d, 3);
    int m = 0;
    auto append = [&](VectorXd w) {
      const double w0 = w.norm();
      if (w0 == 0.0) return;
      for (int pass = 0; pass < 2; ++pass)
        for (int c = 0; c < m; ++c) w -= basis.col(c).dot(w) * basis.col(c);
      const double wn = w.norm();
      if (wn > 1e-10 * w0) basis.col(m++) = w / wn;
    };
    append(x);
    append(r);
    if (p.size() == d) append(p);
    if (m < 2) break;

    const MatrixXd s = basis.leftCols(m);
    const MatrixXd as = A * s;
    const MatrixXd gram = s.transpose() * as;
    Eigen::SelfAdjointEigenSolver<MatrixXd> ritz(0.5 * (gram + gram.transpose()));
    const VectorXd c = ritz.eigenvectors().col(0);

    VectorXd x_new = s * c;
    const double nrm = x_new.norm();
    x_new /= nrm;
    // Direction = new iterate minus its component along the old one.
    p = x_new - x.dot(x_new) * x;
    x = x_new;
    ax = A * x;
    rho = x.dot(ax);
    r = ax - rho * x;
    res = r.norm();
    if (res < best_res) {
      best_res = res;
      best_rho = rho;
      best_x = x;
    }
  }
  if (res <= target) return {rho, x, budget, res};
  throw ConvergenceError("min_eigpair: iteration budget exhausted", best_rho, best_x, best_res);
}

double frob_inner(const SymMat& a, const SymMat& b) {
  if (a.order() != b.order()) throw DimensionError("order mismatch in frob_inner");
  return a.matrix().cwiseProduct(b.matrix()).sum();
}

}  // namespace tripscreen
