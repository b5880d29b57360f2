#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "isentrope/families.hpp"

namespace isentrope {

enum class Method { automatic, lap, kneading, markov };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

// Topological entropy in nats with an honest bracket.
struct EntropyEstimate {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  Method method = Method::lap;
  int depth = 0;         // lap depth n, series order, or partition size
  bool flagged = false;  // bracket wider than requested

  double width() const noexcept { return upper - lower; }
};

nlohmann::json to_json(const EntropyEstimate& e);

struct EntropySettings {
  // Non-positive means the family default: 1e-6 for PL maps, 1e-4 for polynomials.
  double tol = 0.0;
  int order = 256;
  int n_max = 24;
  int horizon = 4096;
  double pcf_tol = 1e-9;
};

double default_tolerance(const IntervalMap& map);

// Lap-growth bracket: the upper bound is min_n (1/n) log l(f^n), also capped
// by log Lip(f); the lower bound is the larger of a horseshoe count on explicit
// branches and the spectral radius of the explored part of the image-group
// graph. Depth is raised beyond n_max while the bracket exceeds tol.
EntropyEstimate entropy_lap(const IntervalMap& map, int n_max = 24, double tol = 1e-6);

// Smallest zero of the Milnor-Thurston kneading determinant. Throws
// NotApplicable for maps with plateaus and NeedsHigherOrder when the series
// truncation cannot certify the root at the requested tolerance.
EntropyEstimate entropy_kneading(const IntervalMap& map, int order = 256, double tol = 1e-6);

// Exact Markov partition for post-critically finite maps. Throws NotApplicable
// if some critical orbit is not eventually periodic within the horizon.
EntropyEstimate entropy_markov(const IntervalMap& map, double tol = 1e-6, int horizon = 4096,
                               double pcf_tol = 1e-9);

// Dispatcher. Automatic selection prefers markov, then kneading, then lap;
// a PCF map is also run through a second method and the two must agree
// within their combined brackets (InconsistentEstimates otherwise).
EntropyEstimate entropy(const IntervalMap& map, Method method = Method::automatic,
                        const EntropySettings& settings = {});

// 2^-r log(lambda_p), lambda_p the largest root of x^p - 2x^(p-2) - 1.
double renormalization_floor(int p, int r);

}  // namespace isentrope
