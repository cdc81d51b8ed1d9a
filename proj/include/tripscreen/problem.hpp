#pragma once

// Datasets, triplets, the (smoothed) hinge triplet loss and the
// primal/dual objective pair of the regularized metric learning problem.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "tripscreen/core.hpp"

namespace tripscreen {

struct Dataset {
  MatrixXd features;        // n x d
  std::vector<int> labels;  // n

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  // Throws InputError unless n >= 2, labels match, >= 2 classes, finite.
  void validate() const;
};

// Anchor i, same-class j, different-class l. H = u u^T - v v^T with
// u = x_i - x_l (pair u_pair) and v = x_i - x_j (pair v_pair).
struct Triplet {
  Index i = -1;
  Index j = -1;
  Index l = -1;
  Index u_pair = -1;
  Index v_pair = -1;
  double hnorm = 0.0;       // ||H||_F
  double hnorm_diag = 0.0;  // ||diag(H)||_2, used when M is restricted to diagonals
};

class TripletSet;

// A subset of triplets with its own compacted copy of the pair differences,
// so that bulk kernels only touch the pairs the subset needs.
class Workset {
 public:
  Workset() = default;
  Workset(const TripletSet& set, std::vector<Index> members);

  const std::vector<Index>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }

  // <M, H_t> for every member, in member order.
  VectorXd inner(const SymMat& m, bool diagonal = false) const;
  // sum_k c_k H_{members[k]}; diagonal part only when diagonal is true.
  SymMat weighted_sum(const VectorXd& c, bool diagonal = false) const;

 private:
  std::vector<Index> members_;
  MatrixXd pairs_;            // d x p, only the pairs referenced by members
  std::vector<Index> lu_, lv_;  // local pair slot of u and v per member
};

class TripletSet {
 public:
  TripletSet() = default;
  // pairs: d x P difference vectors; triplets reference them by column.
  TripletSet(MatrixXd pairs, std::vector<Triplet> triplets);
  // One triplet per column of U and V, each with private pairs.
  static TripletSet from_vectors(const MatrixXd& u, const MatrixXd& v);

  std::size_t size() const noexcept { return triplets_.size(); }
  Index dim() const noexcept { return pairs_.rows(); }
  Index pair_count() const noexcept { return pairs_.cols(); }
  const Triplet& operator[](std::size_t t) const { return triplets_[t]; }
  const std::vector<Triplet>& triplets() const noexcept { return triplets_; }
  const MatrixXd& pairs() const noexcept { return pairs_; }

  VectorXd u(std::size_t t) const { return pairs_.col(triplets_[t].u_pair); }
  VectorXd v(std::size_t t) const { return pairs_.col(triplets_[t].v_pair); }
  double hnorm(std::size_t t, bool diagonal) const {
    return diagonal ? triplets_[t].hnorm_diag : triplets_[t].hnorm;
  }

  const Workset& all() const { return *all_; }

 private:
  MatrixXd pairs_;
  std::vector<Triplet> triplets_;
  std::shared_ptr<const Workset> all_;
};

// k = 0 selects all neighbours. Nearest neighbours by Euclidean distance with
// ties broken by the smaller sample index.
TripletSet build_triplets(const Dataset& data, int k);

struct LossSpec {
  double gamma = 0.05;
  void validate() const;  // ParameterError unless gamma in [0, 1]
};

double loss_value(const LossSpec& spec, double x);
// Derivative in [-1, 0]; the hinge kink at x = 1 takes the value 0.
double loss_grad(const LossSpec& spec, double x);
// Convex conjugate evaluated at -a for a in [0, 1]: gamma/2 a^2 - a.
double loss_conj_neg(const LossSpec& spec, double a);

struct Problem {
  std::shared_ptr<const TripletSet> triplets;
  LossSpec loss;
  // Restrict M to diagonal matrices (H effectively replaced by diag(H)).
  bool diagonal = false;

  Problem() = default;
  Problem(TripletSet set, LossSpec spec, bool diag = false);

  std::size_t size() const { return triplets->size(); }
  Index dim() const { return triplets->dim(); }
  const TripletSet& set() const { return *triplets; }
  double hnorm(std::size_t t) const { return triplets->hnorm(t, diagonal); }
  // Projection onto the feasible cone (PSD, or non-negative diagonals).
  SymMat project(const SymMat& a) const;
  PsdSplit split(const SymMat& a) const;
};

struct DualState {
  VectorXd alpha;
  SymMat gamma_matrix;  // -[sum alpha H]_-
};

enum class Category { L, C, R };

struct Partition {
  std::vector<Category> category;
  std::size_t n_l = 0;
  std::size_t n_c = 0;
  std::size_t n_r = 0;
};

double triplet_inner(const SymMat& m, const TripletSet& set, std::size_t t);
VectorXd triplet_inner_all(const Problem& p, const SymMat& m);

void require_lambda(double lambda);

// Loss term only, without the regularizer.
double loss_sum(const Problem& p, const SymMat& m);
double primal_value(const Problem& p, const SymMat& m, double lambda);
SymMat gradient(const Problem& p, const SymMat& m, double lambda);

DualState dual_from_primal(const Problem& p, const SymMat& m);
// sum_t alpha_t H_t (diagonal part in diagonal mode).
SymMat alpha_sum(const Problem& p, const VectorXd& alpha);
SymMat m_of_alpha(const Problem& p, const VectorXd& alpha, double lambda);
double dual_value(const Problem& p, const VectorXd& alpha, double lambda);
double duality_gap(const Problem& p, const SymMat& m, const VectorXd& alpha, double lambda);

// Dual objective given a precomputed alpha_sum, for callers that reuse it.
double dual_value_from_sum(const Problem& p, const VectorXd& alpha, const SymMat& sum,
                           double lambda, SymMat* m_out = nullptr);

Partition categorize(const Problem& p, const SymMat& mstar);
Partition categorize_values(const VectorXd& inner, const LossSpec& spec);

}  // namespace tripscreen
