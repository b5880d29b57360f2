#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "isentrope/families.hpp"

namespace isentrope {

// One-parameter family t -> g_t.
using MapPath = std::function<IntervalMap(double)>;

enum class Stability { superattracting, attracting, parabolic, repelling };

std::string to_string(Stability s);

struct PeriodicOrbit {
  double point = 0.0;
  int period = 1;           // minimal period of `point`
  double multiplier = 0.0;  // derivative of f^period along the orbit
  Stability stability = Stability::repelling;
};

nlohmann::json to_json(const PeriodicOrbit& orbit);

Stability classify_multiplier(double multiplier);

// Derivative of f^n at x by the chain rule; zero once the orbit meets a plateau.
double orbit_multiplier(const IntervalMap& map, double x, int n);

struct PeriodicOrbitList {
  std::vector<PeriodicOrbit> points;  // every x with f^N(x) = x, ascending
  bool partial = false;               // branch budget exceeded; grid fallback used
};

// Solutions of f^N(x) = x: one bisection per monotone branch of f^N crossing
// the diagonal (increasing branches are additionally sampled, since they can
// cross more than once), one representative per plateau of f^N on the diagonal.
PeriodicOrbitList periodic_orbits(const IntervalMap& map, int N,
                                  std::size_t budget = 200'000);

struct CriticalFate {
  enum class Verdict { attracted, eventually_periodic_repelling, undecided };

  int index = 1;
  Verdict verdict = Verdict::undecided;
  int period = 0;           // period of the target cycle, 0 when undecided
  double cycle_point = 0.0; // polished point of the target cycle
  double multiplier = 0.0;
  int entry_step = -1;      // first n where f^n(v_i) is within tol of the cycle
  double boundary_distance = 0.0;  // min distance of the cycle to {-1, 1}
};

std::string to_string(CriticalFate::Verdict v);
nlohmann::json to_json(const CriticalFate& fate);

// Follows the orbit of v_i = f(c_i) (1-based i).
CriticalFate critical_fate(const IntervalMap& map, int i, int horizon = 4096,
                           double tol = 1e-9);

// Parameter t in the bracket with g_t^p(c_i(t)) = c_i(t) to within tol.
// Throws BracketError when the residual has the same sign at both ends.
double solve_superattracting(const MapPath& path, int i, int p, Interval bracket,
                             double tol = 1e-12);

struct SaddleNode {
  double t_star = 0.0;
  double q_star = 0.0;
  double multiplier = 0.0;  // D g^N at q_star
  double residual = 0.0;    // g^N(q_star) - q_star
};

// Parameter where a fixed-point pair of g_t^N inside `window` merges. The pair
// must be present at one end of the bracket and absent at the other.
SaddleNode detect_saddle_node(const MapPath& path, int N, Interval bracket, Interval window,
                              double tol = 1e-10);

// True when the fixed points of g_t^N inside `window` come as at least one
// attracting/repelling pair (two or more sign changes of g^N(x) - x).
bool has_orbit_pair(const IntervalMap& map, int N, Interval window);

struct FundamentalDomain {
  Interval domain;      // [x0, f^N(x0)] in ascending order
  Interval image;       // f^N(domain)
  bool single_point_overlap = false;
  bool boundary_to_boundary = false;

  bool verified() const noexcept { return single_point_overlap && boundary_to_boundary; }
};

// Throws NotABasin when the f^N-orbit of x0 does not approach q_star
// monotonically from one side.
FundamentalDomain fundamental_domain(const IntervalMap& map, double q_star, int N, double x0);

// Expected fate of one critical point for window membership: attracted to a
// cycle of the given period, or landing on a boundary fixed point.
struct ExpectedFate {
  int period = 0;  // 0 means "lands on -1 or 1"

  static ExpectedFate attracted(int p) { return {p}; }
  static ExpectedFate boundary() { return {0}; }
};

enum class Membership { no, yes, indeterminate };

std::string to_string(Membership m);

// Proxy for membership in a hyperbolic window: each critical fate must match.
// Boundary fixed points never count as attractors.
Membership window_membership(const IntervalMap& map, const std::vector<ExpectedFate>& expected,
                             int horizon = 4096);

struct TransferData {
  double qhat = 0.0;
  Interval Jhat;
  double xhat = 0.0;
  Interval Vhat;
  int N = 1;
  int k = 1;
};

struct TransferReport {
  bool periodic = false;         // T^N(qhat) = qhat, qhat in Jhat
  bool monotone_return = false;  // T^N monotone on Jhat
  bool transfer = false;         // xhat in T^N(Jhat), T^k maps Vhat monotonically onto Jhat
  bool avoids_turning = false;   // orbit of qhat misses the turning points
  int depth = 0;                 // preimage depth actually reached
  std::size_t preimages = 0;
  double density_gap = 0.0;      // every point of [-1,1] is this close to a preimage
  std::vector<std::string> violations;

  bool passed() const noexcept { return violations.empty(); }
  std::string text() const;
};

// Checks the transfer conditions for a piecewise-linear map exactly, and the
// density of the backward orbit of qhat up to the given depth.
TransferReport verify_transfer_data(const IntervalMap& T, const TransferData& data,
                                    int depth = 12, std::size_t budget = 2'000'000);

}  // namespace isentrope
