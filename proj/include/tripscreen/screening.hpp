#pragma once

// Sphere bounds on the optimal metric and the triplet screening rules that
// consume them.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tripscreen/problem.hpp"

namespace tripscreen {

// Q(lambda) = A + B / lambda, r^2(lambda) = a + b / lambda + c / lambda^2.
struct GeneralForm {
  SymMat A;
  SymMat B;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  SymMat center_at(double lambda) const { return A + (1.0 / lambda) * B; }
  double radius_sq_at(double lambda) const { return a + b / lambda + c / (lambda * lambda); }
};

struct Sphere {
  SymMat center;
  double radius = 0.0;
  double lambda = 0.0;
  std::optional<GeneralForm> general;
  // Set when a negative squared radius was clamped to zero.
  bool clamped = false;
  // Center known to lie in the feasible cone; enables the rank-1 SDLS path.
  bool center_psd = false;
};

struct HalfSpace {
  SymMat normal;  // {X : <normal, X> >= 0}
  bool vacuous = true;
};

enum class TripletStatus : std::uint8_t { Unknown = 0, ScreenedL = 1, ScreenedR = 2 };

struct LambdaRange {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = true;
  bool contains(double lambda) const { return !empty && lambda > lo && lambda < hi; }
};

struct TripletRanges {
  LambdaRange r;  // verdict ScreenedR on r
  LambdaRange l;  // verdict ScreenedL on l
};

enum class Bound { None, GB, PGB, DGB, CDGB, RRPB, RRPB_PGB };
enum class Rule { Sphere, Linear, SDLS, Diag };

// Sphere constructors.
Sphere gb(const SymMat& m, const SymMat& grad, double lambda);
Sphere pgb(const Sphere& gb_sphere, bool diagonal = false);
Sphere dgb(const SymMat& m, double gap, double lambda);
Sphere dgb(const Problem& p, const SymMat& m, const VectorXd& alpha, double lambda);
Sphere cdgb(const Problem& p, const VectorXd& alpha, double lambda);
Sphere rpb(const SymMat& m0star, double lambda0, double lambda1);
Sphere rrpb(const SymMat& m0, double eps, double lambda0, double lambda1);

// Gradient of the primal using -sum alpha H as the loss subgradient.
SymMat gradient_with_alpha(const Problem& p, const SymMat& m, const VectorXd& alpha, double lambda);

HalfSpace halfspace_from_iterate(const SymMat& a);

// Scalar verdict of the sphere rule from <H,Q>, ||H|| and r.
TripletStatus sphere_verdict(double hq, double hnorm, double radius, double gamma);

// Lower bound of <H,X> over the ball B(Q,r) cut by {<P,X> >= 0}; NaN when no
// safe value is available. Arguments are <H,Q>, ||H||, <P,H>, <P,Q>, ||P||^2.
double linear_min(double hq, double hn, double ph, double pq, double pn2, double r);

// Exact min of <h,x> over ||x - q|| <= r, x >= 0; nullopt if the set looks empty.
std::optional<double> diag_min(const VectorXd& h, const VectorXd& q, double r);

struct SdlsResult {
  bool fired = false;
  bool converged = false;
  int iterations = 0;
  double y = 0.0;
  double dual = 0.0;
  // <[Q - yH']_+, H'> - C at the last iterate.
  double residual = 0.0;
};

// Dual ascent certificate that no PSD X with ||X - Q|| <= r satisfies
// <X, H'> <= C, where H' = sign * (u u^T - v v^T).
SdlsResult sdls_dual_ascent(const SymMat& q, const VectorXd& u, const VectorXd& v, double sign, double c,
                            double r, int budget = 30, bool center_psd = false);

// Per-triplet rules.
TripletStatus rule_sphere(const Sphere& s, const Problem& p, std::size_t t);
TripletStatus rule_linear(const Sphere& s, const HalfSpace& h, const Problem& p, std::size_t t);
TripletStatus rule_sdls(const Sphere& s, const Problem& p, std::size_t t, int budget = 30);
TripletStatus rule_diag(const Sphere& s, const Problem& p, std::size_t t);

// Ranges of lambda on which the RRPB sphere rule built from (m0, eps, lambda0)
// fires, given <H, M0>, ||H|| and ||M0||.
TripletRanges lambda_range_rrpb(double hm0, double hnorm, double m0norm, double eps, double lambda0,
                                double gamma);
TripletRanges lambda_range_rrpb(const SymMat& m0, double eps, double lambda0, const Problem& p, std::size_t t);

struct RuleOptions {
  Rule rule = Rule::Sphere;
  int sdls_budget = 30;
  // Needed by the linear rule; the sphere rule is used when vacuous or absent.
  const HalfSpace* halfspace = nullptr;
};

struct ScreenCounts {
  std::size_t new_l = 0;
  std::size_t new_r = 0;
  std::size_t remaining = 0;
};

// Evaluates the rule on every Unknown triplet. Screened entries are never
// revisited.
ScreenCounts screen_all(const Problem& p, const Sphere& s, const RuleOptions& opts,
                        std::vector<TripletStatus>& statuses);

// Same, restricted to members with precomputed <H_t, Q> (hq) values.
ScreenCounts screen_members(const Problem& p, const Sphere& s, const RuleOptions& opts,
                            std::span<const Index> members, const VectorXd& hq,
                            std::vector<TripletStatus>& statuses);

const char* to_string(Bound b);
const char* to_string(Rule r);
Bound parse_bound(const std::string& name);
Rule parse_rule(const std::string& name);

}  // namespace tripscreen
