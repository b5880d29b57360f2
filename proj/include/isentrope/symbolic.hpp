#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "isentrope/families.hpp"

namespace isentrope {

// Symbol names: "L0", "C1", "L1", ...
std::string symbol_name(int symbol);

struct Itinerary {
  std::vector<int> symbols;

  std::string str() const;
  friend bool operator==(const Itinerary&, const Itinerary&) = default;
};

Itinerary itinerary(const IntervalMap& map, double x, int n);

struct Branch {
  double left = 0.0;
  double right = 0.0;
  double image_left = 0.0;   // f^n(left)
  double image_right = 0.0;  // f^n(right)
  bool constant = false;
};

struct BranchDecomposition {
  int depth = 0;
  std::vector<Branch> branches;  // sorted, covering [-1,1]
  std::uint64_t laps = 0;        // maximal intervals of monotonicity of f^n
  double variation = 0.0;

  void write_csv(std::ostream& out) const;
};

inline constexpr std::size_t kDefaultBranchBudget = 2'000'000;

// Exact maximal strictly-monotone and constant pieces of f^n. Throws
// BudgetExceeded if the piece count would exceed `budget`.
BranchDecomposition branch_decomposition(const IntervalMap& map, int n,
                                         std::size_t budget = kDefaultBranchBudget);

// Lap and variation growth without enumerating pieces: strictly monotone
// pieces of f^n are grouped by their image interval, and a group with image J
// spawns one child per lap of f meeting J in a non-degenerate interval.
// The groups and their child relation form a directed graph whose path counts
// from the root are the lap numbers.
class LapCounter {
 public:
  explicit LapCounter(IntervalMap map, std::size_t node_budget = 200'000);

  // Advances to depth n+1. Returns false (and leaves the state unchanged) if
  // the node budget would be exceeded.
  bool step();

  int depth() const noexcept { return depth_; }
  // log of the number of strictly monotone pieces of f^depth (-inf if none).
  double log_laps() const;
  double log_variation() const;
  std::size_t node_count() const noexcept { return nodes_.size(); }
  // Exact counts while they fit in a double mantissa.
  std::uint64_t laps() const;
  double count_preimages(double x) const;
  // Images of all live groups at the current depth.
  std::vector<Interval> live_images() const;

  // Child lists of every node whose children have been expanded.
  const std::vector<Interval>& nodes() const noexcept { return nodes_; }
  const std::vector<std::vector<int>>& children() const noexcept { return children_; }
  std::vector<bool> expanded() const;

 private:
  int node_of(const Interval& image);
  const std::vector<int>& expand(int node);

  IntervalMap map_;
  std::size_t budget_;
  int depth_ = 0;
  std::vector<Interval> nodes_;
  std::map<std::pair<double, double>, int> index_;
  std::vector<std::vector<int>> children_;
  std::vector<bool> expanded_;
  std::vector<double> weight_;  // scaled counts per node
  double log_scale_ = 0.0;
};

// |f^{-n}(x)|. Throws RetargetError when x lies within `tol` of a value
// f^k(p) with p a critical-piece endpoint or boundary point.
std::uint64_t preimage_count(const IntervalMap& map, double x, int n, double tol = 1e-12);

struct KneadingData {
  std::vector<Itinerary> per_critical;  // itinerary of v_i, i = 1..b
  std::vector<int> lap_signs;           // orientation of L_0..L_b
};

KneadingData kneading_data(const IntervalMap& map, int n);

}  // namespace isentrope
