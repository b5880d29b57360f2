#include "isentrope/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "isentrope/errors.hpp"
#include "isentrope/format.hpp"

namespace isentrope {

namespace {

// Images that land within roundoff of the boundary fixed structure are put
// back on it, so the anchored endpoints do not spawn spurious groups.
double snap_boundary(double y) {
  if (std::abs(y - 1.0) < 1e-12) return 1.0;
  if (std::abs(y + 1.0) < 1e-12) return -1.0;
  return y;
}

// x in [a,b] with f^k(x) = y, given f^k monotone on [a,b].
double pull_back(const IntervalMap& f, int k, double a, double b, double y, bool increasing) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const double v = f.iterate(mid, k);
    if ((v < y) == increasing)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

bool inside_plateau(const IntervalMap& f, double y) {
  for (const auto& c : f.critical_pieces())
    if (c.hi > c.lo && c.lo < y && y < c.hi) return true;
  return false;
}

}  // namespace

std::string symbol_name(int symbol) {
  if (symbol % 2 == 0) return "L" + std::to_string(symbol / 2);
  return "C" + std::to_string((symbol + 1) / 2);
}

std::string Itinerary::str() const {
  std::string out;
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    if (k) out += ' ';
    out += symbol_name(symbols[k]);
  }
  return out;
}

Itinerary itinerary(const IntervalMap& map, double x, int n) {
  Itinerary it;
  it.symbols.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int t = 0; t < n; ++t) {
    it.symbols.push_back(map.address(x));
    x = map(x);
  }
  return it;
}

void BranchDecomposition::write_csv(std::ostream& out) const {
  out << "left,right,image_left,image_right\n";
  for (const auto& b : branches)
    out << format_double(b.left) << ',' << format_double(b.right) << ','
        << format_double(b.image_left) << ',' << format_double(b.image_right) << '\n';
}

BranchDecomposition branch_decomposition(const IntervalMap& map, int n, std::size_t budget) {
  if (n < 1) throw DomainError("branch decomposition needs n >= 1");
  std::vector<Branch> pieces{{-1.0, 1.0, -1.0, 1.0, false}};
  std::vector<double> cuts;
  for (const auto& c : map.critical_pieces()) {
    cuts.push_back(c.lo);
    if (c.hi > c.lo) cuts.push_back(c.hi);
  }

  for (int k = 0; k < n; ++k) {
    std::vector<Branch> next;
    next.reserve(pieces.size() * 2);
    auto push = [&](Branch b) {
      if (b.constant && !next.empty() && next.back().constant &&
          next.back().image_right == b.image_left) {
        next.back().right = b.right;
        return;
      }
      next.push_back(b);
    };
    for (const auto& p : pieces) {
      if (p.constant) {
        const double y = snap_boundary(map(p.image_left));
        push({p.left, p.right, y, y, true});
        continue;
      }
      const bool increasing = p.image_right > p.image_left;
      const double lo = std::min(p.image_left, p.image_right);
      const double hi = std::max(p.image_left, p.image_right);
      std::vector<double> ys{p.image_left};
      std::vector<double> xs{p.left};
      std::vector<double> inner;
      for (double c : cuts)
        if (lo < c && c < hi) inner.push_back(c);
      if (!increasing) std::reverse(inner.begin(), inner.end());
      double a = p.left;
      for (double y : inner) {
        const double x = k == 0 ? y : pull_back(map, k, a, p.right, y, increasing);
        ys.push_back(y);
        xs.push_back(x);
        a = x;
      }
      ys.push_back(p.image_right);
      xs.push_back(p.right);
      for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
        const double y0 = ys[j], y1 = ys[j + 1];
        const double f0 = snap_boundary(map(y0)), f1 = snap_boundary(map(y1));
        if (inside_plateau(map, 0.5 * (y0 + y1)))
          push({xs[j], xs[j + 1], f0, f0, true});
        else
          push({xs[j], xs[j + 1], f0, f1, false});
      }
      if (next.size() > budget)
        throw BudgetExceeded("branch budget of " + std::to_string(budget) +
                                 " exceeded at depth " + std::to_string(k + 1),
                             k);
    }
    pieces = std::move(next);
  }

  BranchDecomposition d;
  d.depth = n;
  for (const auto& p : pieces) {
    if (p.constant) continue;
    ++d.laps;
    d.variation += std::abs(p.image_right - p.image_left);
  }
  if (d.laps == 0) d.laps = 1;
  d.branches = std::move(pieces);
  return d;
}

// ---------------------------------------------------------------------------
// LapCounter

LapCounter::LapCounter(IntervalMap map, std::size_t node_budget)
    : map_(std::move(map)), budget_(node_budget) {
  node_of({-1.0, 1.0});
  weight_.assign(1, 1.0);
}

int LapCounter::node_of(const Interval& image) {
  const auto key = std::make_pair(image.lo, image.hi);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(image);
  children_.emplace_back();
  expanded_.push_back(false);
  index_.emplace(key, id);
  return id;
}

const std::vector<int>& LapCounter::expand(int node) {
  if (expanded_[node]) return children_[node];
  const Interval j = nodes_[node];
  std::vector<int> kids;
  for (const auto& lap : map_.laps()) {
    const double a = std::max(lap.lo, j.lo), b = std::min(lap.hi, j.hi);
    if (!(a < b)) continue;
    const double fa = snap_boundary(map_(a)), fb = snap_boundary(map_(b));
    if (fa == fb) continue;
    kids.push_back(node_of({std::min(fa, fb), std::max(fa, fb)}));
  }
  children_[node] = std::move(kids);
  expanded_[node] = true;
  return children_[node];
}

bool LapCounter::step() {
  std::vector<double> next;
  for (std::size_t u = 0; u < weight_.size(); ++u) {
    if (weight_[u] == 0.0) continue;
    const auto& kids = expand(static_cast<int>(u));
    if (next.size() < nodes_.size()) next.resize(nodes_.size(), 0.0);
    for (int k : kids) next[static_cast<std::size_t>(k)] += weight_[u];
    // Discovered nodes stay valid graph facts; only the depth is not advanced.
    if (nodes_.size() > budget_) return false;
  }
  next.resize(nodes_.size(), 0.0);
  double total = 0.0;
  for (double w : next) total += w;
  if (total > 1e15) {
    // Counts stay exact integers until they approach the mantissa limit.
    for (double& w : next) w /= total;
    log_scale_ += std::log(total);
  }
  weight_ = std::move(next);
  ++depth_;
  return true;
}

double LapCounter::log_laps() const {
  double total = 0.0;
  for (double w : weight_) total += w;
  if (total <= 0.0) return 0.0;  // f^n constant: a single lap
  return log_scale_ + std::log(total);
}

double LapCounter::log_variation() const {
  double total = 0.0;
  for (std::size_t u = 0; u < weight_.size(); ++u) total += weight_[u] * nodes_[u].length();
  if (total <= 0.0) return -std::numeric_limits<double>::infinity();
  return log_scale_ + std::log(total);
}

std::uint64_t LapCounter::laps() const {
  if (log_scale_ != 0.0) throw DomainError("lap number exceeds exact integer range");
  double total = 0.0;
  for (double w : weight_) total += w;
  return total > 0.0 ? static_cast<std::uint64_t>(total) : 1;
}

double LapCounter::count_preimages(double x) const {
  double total = 0.0;
  for (std::size_t u = 0; u < weight_.size(); ++u)
    if (weight_[u] > 0.0 && nodes_[u].lo < x && x < nodes_[u].hi) total += weight_[u];
  return std::exp(log_scale_) * total;
}

std::vector<Interval> LapCounter::live_images() const {
  std::vector<Interval> out;
  for (std::size_t u = 0; u < weight_.size(); ++u)
    if (weight_[u] > 0.0) out.push_back(nodes_[u]);
  return out;
}

std::vector<bool> LapCounter::expanded() const { return expanded_; }

std::uint64_t preimage_count(const IntervalMap& map, double x, int n, double tol) {
  if (n < 0) throw DomainError("preimage count needs n >= 0");
  LapCounter counter(map);
  for (int k = 0; k < n; ++k)
    if (!counter.step())
      throw BudgetExceeded("preimage count exceeded the group budget", k);
  auto near_endpoint = [&](double y) {
    for (const auto& j : counter.live_images())
      if (std::abs(y - j.lo) <= tol || std::abs(y - j.hi) <= tol) return true;
    for (const auto& z : map.plateaus()) {
      double v = map(z.lo);
      for (int k = 1; k < n; ++k) {
        if (std::abs(y - v) <= tol) return true;
        v = map(v);
      }
      if (std::abs(y - v) <= tol) return true;
    }
    return false;
  };
  if (near_endpoint(x)) {
    double suggestion = x;
    for (double delta = 1e-6; delta < 0.5; delta *= 2.0) {
      const double cand = x + (x < 0.9 ? delta : -delta);
      if (!near_endpoint(cand)) {
        suggestion = cand;
        break;
      }
    }
    throw RetargetError("target lies on a critical orbit; try a perturbed value", suggestion);
  }
  return static_cast<std::uint64_t>(std::llround(counter.count_preimages(x)));
}

KneadingData kneading_data(const IntervalMap& map, int n) {
  KneadingData k;
  for (double v : map.critical_values()) k.per_critical.push_back(itinerary(map, v, n));
  k.lap_signs.assign(map.lap_orientation().begin(), map.lap_orientation().end());
  return k;
}

}  // namespace isentrope
