#include "isentrope/entropy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "isentrope/errors.hpp"
#include "isentrope/spectral.hpp"
#include "isentrope/symbolic.hpp"

namespace isentrope {

std::string to_string(Method m) {
  switch (m) {
    case Method::automatic: return "auto";
    case Method::lap: return "lap";
    case Method::kneading: return "kneading";
    case Method::markov: return "markov";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "auto") return Method::automatic;
  if (name == "lap") return Method::lap;
  if (name == "kneading") return Method::kneading;
  if (name == "markov") return Method::markov;
  throw UsageError("unknown method '" + name + "'");
}

nlohmann::json to_json(const EntropyEstimate& e) {
  return {{"value", e.value},   {"lower", e.lower},          {"upper", e.upper},
          {"method", to_string(e.method)}, {"depth", e.depth}};
}

double default_tolerance(const IntervalMap& map) {
  return map.is_piecewise_linear() ? 1e-6 : 1e-4;
}

// ---------------------------------------------------------------------------
// Lap growth

namespace {

// Largest k/n-horseshoe over explicit branches of f^n for small n: k
// branches inside an interval H, each mapped over H, give h >= log(k)/n.
double horseshoe_bound(const IntervalMap& map, int max_depth, std::size_t budget) {
  double best = 0.0;
  for (int n = 1; n <= max_depth; ++n) {
    BranchDecomposition d;
    try {
      d = branch_decomposition(map, n, budget);
    } catch (const BudgetExceeded&) {
      break;
    }
    std::vector<Interval> hulls;
    for (const auto& b : d.branches) {
      if (b.constant) continue;
      hulls.push_back({std::min(b.image_left, b.image_right), std::max(b.image_left, b.image_right)});
    }
    std::sort(hulls.begin(), hulls.end(),
              [](const Interval& a, const Interval& b) { return std::tie(a.lo, a.hi) < std::tie(b.lo, b.hi); });
    hulls.erase(std::unique(hulls.begin(), hulls.end()), hulls.end());
    if (hulls.size() > 400) hulls.resize(400);
    for (const auto& h : hulls) {
      int k = 0;
      for (const auto& b : d.branches) {
        if (b.constant || b.left < h.lo || b.right > h.hi) continue;
        const double lo = std::min(b.image_left, b.image_right);
        const double hi = std::max(b.image_left, b.image_right);
        if (lo <= h.lo && hi >= h.hi) ++k;
      }
      if (k >= 2) best = std::max(best, std::log(static_cast<double>(k)) / n);
    }
  }
  return best;
}

double tower_bound(const LapCounter& counter, double rel_tol) {
  const auto exp = counter.expanded();
  std::vector<std::vector<int>> adj(counter.nodes().size());
  for (std::size_t u = 0; u < adj.size(); ++u)
    if (exp[u]) adj[u] = counter.children()[u];
  const auto r = spectral_radius(adj, rel_tol);
  return r.lower > 1.0 ? std::log(r.lower) : 0.0;
}

bool is_checkpoint(int n, int n_max) {
  static constexpr std::array<int, 16> marks{4, 8, 12, 16, 24, 32, 48, 64, 96,
                                             128, 160, 192, 256, 320, 384, 512};
  return n == n_max || std::find(marks.begin(), marks.end(), n) != marks.end();
}

}  // namespace

EntropyEstimate entropy_lap(const IntervalMap& map, int n_max, double tol) {
  if (n_max < 2) throw DomainError("entropy_lap needs n_max >= 2");
  EntropyEstimate e;
  e.method = Method::lap;
  double upper = std::max(0.0, std::log(map.lipschitz()));
  double lower = horseshoe_bound(map, 6, 4096);
  const int n_limit = std::max(n_max, 512);
  LapCounter counter(map);
  int n = 0;
  bool exhausted = false;
  while (n < n_limit) {
    if (!counter.step()) {
      exhausted = true;
      break;
    }
    ++n;
    upper = std::min(upper, counter.log_laps() / n);
    if (is_checkpoint(n, n_max)) {
      lower = std::max(lower, tower_bound(counter, tol * 0.1));
      if (upper - lower < tol) break;
      if (n >= n_max && counter.node_count() > 50'000) break;
    }
  }
  if (exhausted) lower = std::max(lower, tower_bound(counter, tol * 0.1));
  lower = std::min(lower, upper);
  e.lower = lower;
  e.upper = upper;
  e.depth = n;
  e.value = lower <= 1e-12 ? 0.0 : 0.5 * (lower + upper);
  e.flagged = (upper - lower) >= tol;
  return e;
}

// ---------------------------------------------------------------------------
// Kneading determinant

namespace {

// Signed lap addresses of the one-sided orbit of a critical value.
struct SignedSeries {
  std::vector<int> lap;
  std::vector<int> sign;
  // When the sequence is eventually periodic (preperiod `pre`, period
  // `period`, sign factor `twist` per period) the series is summed exactly.
  int pre = 0;
  int period = 0;
  int twist = 1;
};

// Detects an eventually periodic tail backed by the real orbit: the tail
// symbols repeat for many periods and the orbit either closes up exactly or
// contracts along one period.
void detect_periodic_tail(const IntervalMap& map, const std::vector<double>& ys, SignedSeries& s) {
  const int last = static_cast<int>(s.lap.size()) - 1;
  for (int p = 1; p <= 64 && p <= last / 4; ++p) {
    const int twist = s.sign[last] * s.sign[last - p];
    int m = last - p;
    while (m > 0 && s.lap[m - 1] == s.lap[m - 1 + p] && s.sign[m - 1] * twist == s.sign[m - 1 + p])
      --m;
    if (last - m < std::max(4 * p, 64)) continue;
    bool closes = ys[last] == ys[last - p];
    if (!closes && std::abs(ys[last] - ys[last - p]) <= 1e-9) {
      double contraction = 1.0;
      for (int k = last - p; k < last; ++k) contraction *= std::abs(map.derivative(ys[k]));
      closes = contraction < 0.999;
    }
    if (!closes) continue;
    s.pre = m;
    s.period = p;
    s.twist = twist;
    return;
  }
}

SignedSeries one_sided_orbit(const IntervalMap& map, int i, int order) {
  const auto turning = map.critical_points();
  const auto values = map.critical_values();
  const auto orient = map.lap_orientation();
  SignedSeries s;
  std::vector<double> ys;
  double y = values[i];
  int side = orient[i + 1];  // sigma = orientation of the lap right of c_i
  int cum = 1;
  for (int k = 0; k <= order; ++k) {
    int lap = -1;
    bool snapped = false;
    // The boundary points are exact fixed or prefixed points of every family.
    if (std::abs(y - 1.0) <= 1e-11) y = 1.0;
    if (std::abs(y + 1.0) <= 1e-11) y = -1.0;
    ys.push_back(y);
    for (std::size_t j = 0; j < turning.size(); ++j) {
      if (std::abs(y - turning[j]) <= 1e-11) {
        lap = side > 0 ? static_cast<int>(j) + 1 : static_cast<int>(j);
        y = values[j];
        snapped = true;
        break;
      }
    }
    if (!snapped) {
      lap = map.address(y) / 2;
      y = map(y);
    }
    s.lap.push_back(lap);
    s.sign.push_back(cum);
    side *= orient[lap];
    cum *= orient[lap];
  }
  detect_periodic_tail(map, ys, s);
  return s;
}

class KneadingDeterminant {
 public:
  KneadingDeterminant(const IntervalMap& map, int order) : b_(map.modality()), order_(order) {
    for (int i = 0; i < b_; ++i) series_.push_back(one_sided_orbit(map, i, order));
    orient_.assign(map.lap_orientation().begin(), map.lap_orientation().end());
  }

  struct Value {
    double det;
    double error;  // truncation bound
  };

  Value operator()(double t) const {
    Eigen::MatrixXd n = Eigen::MatrixXd::Zero(b_, b_ + 1);
    std::vector<double> row_error(static_cast<std::size_t>(b_), 0.0);
    for (int i = 0; i < b_; ++i) {
      const auto& s = series_[i];
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(b_ + 1);
      double tk = 1.0;
      if (s.period > 0) {
        for (int k = 0; k < s.pre; ++k) {
          theta[s.lap[k]] += tk * s.sign[k];
          tk *= t;
        }
        Eigen::VectorXd cycle = Eigen::VectorXd::Zero(b_ + 1);
        double tj = 1.0;
        for (int k = s.pre; k < s.pre + s.period; ++k) {
          cycle[s.lap[k]] += tj * s.sign[k];
          tj *= t;
        }
        theta += (tk / (1.0 - s.twist * tj)) * cycle;
      } else {
        for (int k = 0; k <= order_; ++k) {
          theta[s.lap[k]] += tk * s.sign[k];
          tk *= t;
        }
        // The truncated row moves by at most 2t * t^(order+1) / (1-t) in l1.
        row_error[static_cast<std::size_t>(i)] = 2.0 * t * std::pow(t, order_ + 1) / (1.0 - t);
      }
      n.row(i) = (2.0 * t * orient_[i + 1]) * theta.transpose();
      n(i, i + 1) += 1.0;
      n(i, i) -= 1.0;
    }
    const Eigen::MatrixXd d0 = n.rightCols(b_);
    const double det = d0.determinant();
    double with = 1.0, without = 1.0;
    for (int i = 0; i < b_; ++i) {
      const double r = d0.row(i).norm();
      with *= r + row_error[static_cast<std::size_t>(i)];
      without *= r;
    }
    return {det, with - without};
  }

  // All rows are summed in closed form.
  bool exact() const {
    return std::all_of(series_.begin(), series_.end(),
                       [](const SignedSeries& s) { return s.period > 0; });
  }

 private:
  int b_;
  int order_;
  std::vector<SignedSeries> series_;
  std::vector<int> orient_;
};

}  // namespace

EntropyEstimate entropy_kneading(const IntervalMap& map, int order, double tol) {
  if (map.has_plateaus())
    throw NotApplicable("kneading determinant needs a map without plateaus");
  EntropyEstimate e;
  e.method = Method::kneading;
  e.depth = order;
  if (map.modality() == 0) {
    e.upper = std::max(0.0, std::log(map.lipschitz()));
    return e;
  }
  const KneadingDeterminant det(map, order);
  constexpr double kStep = 1e-3;
  double prev_t = 0.0, prev_d = 1.0;
  double lo = -1.0, hi = -1.0;
  for (int k = 1; k < 1000; ++k) {
    const double t = k * kStep;
    const double d = det(t).det;
    if (d == 0.0) {
      lo = hi = t;
      break;
    }
    if ((d < 0) != (prev_d < 0)) {
      lo = prev_t;
      hi = t;
      break;
    }
    prev_t = t;
    prev_d = d;
  }
  if (lo < 0 && det.exact()) {
    // Closed-form rows stay exact up to t = 1: follow h = -log t down geometrically.
    for (double h = -std::log(1.0 - kStep) / 2; h > 0.25 * tol; h /= 2) {
      const double t = std::exp(-h);
      const double d = det(t).det;
      if (d == 0.0 || (d < 0) != (prev_d < 0)) {
        lo = prev_t;
        hi = t;
        break;
      }
      prev_t = t;
      prev_d = d;
    }
    if (lo < 0) {
      e.upper = -std::log(prev_t);
      return e;
    }
  }
  if (lo < 0) {
    // No zero in (0, 0.999]: entropy below -log(0.999).
    e.value = 0.0;
    e.lower = 0.0;
    e.upper = -std::log(1.0 - kStep);
    e.flagged = e.upper >= tol;
    return e;
  }
  if (lo < hi) {
    const double dlo = det(lo).det;
    while (hi - lo > 0.25 * tol * lo) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double dm = det(mid).det;
      if (dm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((dm < 0) == (dlo < 0))
        lo = mid;
      else
        hi = mid;
    }
  }
  // Certify: the truncated determinant must keep opposite signs beyond its
  // error bound at the bracket ends.
  double w = std::max(hi - lo, 1e-15);
  double a = lo, c = hi;
  for (;;) {
    const auto va = det(a), vc = det(c);
    const bool ok = std::abs(va.det) > va.error && std::abs(vc.det) > vc.error &&
                    (va.det < 0) != (vc.det < 0);
    if (ok) break;
    a = std::max(0.0, lo - w);
    c = std::min(1.0 - 1e-12, hi + w);
    w *= 2.0;
    if (-std::log(a) + std::log(c) > tol || a <= 0.0)
      throw NeedsHigherOrder("series order " + std::to_string(order) +
                             " cannot certify the kneading root to the requested tolerance");
  }
  e.lower = -std::log(c);
  e.upper = -std::log(a);
  e.value = -std::log(0.5 * (lo + hi));
  e.value = std::clamp(e.value, e.lower, e.upper);
  return e;
}

// ---------------------------------------------------------------------------
// Markov partition

EntropyEstimate entropy_markov(const IntervalMap& map, double tol, int horizon, double pcf_tol) {
  std::vector<double> points{-1.0, 1.0};
  for (const auto& c : map.critical_pieces()) {
    points.push_back(c.lo);
    points.push_back(c.hi);
  }
  std::vector<double> seeds(map.critical_values().begin(), map.critical_values().end());
  seeds.push_back(map(-1.0));
  seeds.push_back(map(1.0));
  // A landing is abrupt: the preimages of the matched points are far apart or
  // share a plateau. An orbit merely attracted to a cycle closes gradually and
  // is not postcritically finite. A chaotic orbit can also return within
  // pcf_tol by chance; a genuine landing shadows the cycle for a full period.
  // Longer checks reject true landings on expanding cycles, whose rounding
  // error grows by the cycle multiplier each turn.
  enum class Closure { lands, attracted, chance };
  const auto plateaus = map.plateaus();
  auto classify = [&](const std::vector<double>& orbit, std::size_t j, double y) {
    if (j > 0) {
      const double a = orbit.back(), b = orbit[j - 1];
      const bool same_plateau = std::any_of(plateaus.begin(), plateaus.end(), [&](const Interval& z) {
        return z.contains(a) && z.contains(b);
      });
      if (std::abs(a - b) <= 1e-3 && !same_plateau) return Closure::attracted;
    }
    const std::size_t period = orbit.size() - j;
    double z = y;
    for (std::size_t i = 1; i <= period; ++i) {
      z = map(z);
      if (std::abs(z - orbit[j + i % period]) > pcf_tol) return Closure::chance;
    }
    return Closure::lands;
  };
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const std::string which = "orbit of critical value " + std::to_string(s + 1);
    std::vector<double> orbit{seeds[s]};
    bool closed = false;
    for (int k = 1; k <= horizon && !closed; ++k) {
      const double y = map(orbit.back());
      for (std::size_t j = 0; j < orbit.size() && !closed; ++j) {
        if (std::abs(orbit[j] - y) > pcf_tol) continue;
        switch (classify(orbit, j, y)) {
          case Closure::lands: closed = true; break;
          case Closure::attracted: throw NotApplicable(which + " is attracted to a cycle without landing");
          case Closure::chance: break;
        }
      }
      if (!closed) orbit.push_back(y);
    }
    if (!closed) throw NotApplicable(which + " is not eventually periodic within the horizon");
    points.insert(points.end(), orbit.begin(), orbit.end());
  }
  std::sort(points.begin(), points.end());
  std::vector<double> part;
  for (double p : points)
    if (part.empty() || p - part.back() > pcf_tol) part.push_back(p);
  // Exact structural points take precedence over nearby orbit copies.
  for (const auto& c : map.critical_pieces())
    for (double q : {c.lo, c.hi})
      for (double& p : part)
        if (std::abs(p - q) <= pcf_tol) p = q;
  part.front() = -1.0;
  part.back() = 1.0;

  const std::size_t m = part.size() - 1;
  std::vector<std::vector<int>> adj(m);
  auto in_plateau = [&](double x) {
    for (const auto& z : map.plateaus())
      if (z.lo < x && x < z.hi) return true;
    return false;
  };
  for (std::size_t k = 0; k < m; ++k) {
    const double mid = 0.5 * (part[k] + part[k + 1]);
    if (in_plateau(mid)) continue;
    const double fa = map(part[k]), fb = map(part[k + 1]);
    const double lo = std::min(fa, fb) - pcf_tol, hi = std::max(fa, fb) + pcf_tol;
    for (std::size_t j = 0; j < m; ++j)
      if (part[j] >= lo && part[j + 1] <= hi) adj[k].push_back(static_cast<int>(j));
  }
  const auto r = spectral_radius(adj, tol * 0.1);
  EntropyEstimate e;
  e.method = Method::markov;
  e.depth = static_cast<int>(m);
  e.lower = r.lower > 1.0 ? std::log(r.lower) : 0.0;
  e.upper = r.upper > 1.0 ? std::log(r.upper) : 0.0;
  e.value = 0.5 * (e.lower + e.upper);
  e.flagged = e.width() >= tol;
  return e;
}

// ---------------------------------------------------------------------------
// Dispatcher

namespace {

void cross_check(const EntropyEstimate& a, const EntropyEstimate& b) {
  const double slack = a.width() + b.width() + 1e-9;
  if (std::abs(a.value - b.value) > slack)
    throw InconsistentEstimates(to_string(a.method) + " gives " + std::to_string(a.value) +
                                " but " + to_string(b.method) + " gives " +
                                std::to_string(b.value));
}

// Roots close to t = 1 (small entropy) need long series; quadruple the order
// a few times before giving up.
EntropyEstimate kneading_escalated(const IntervalMap& map, int order, double tol) {
  for (int attempt = 0;; ++attempt) {
    try {
      return entropy_kneading(map, order, tol);
    } catch (const NeedsHigherOrder&) {
      if (attempt == 3) throw;
      order *= 4;
    }
  }
}

}  // namespace

EntropyEstimate entropy(const IntervalMap& map, Method method, const EntropySettings& s) {
  const double tol = s.tol > 0.0 ? s.tol : default_tolerance(map);
  switch (method) {
    case Method::lap: return entropy_lap(map, s.n_max, tol);
    case Method::kneading: return kneading_escalated(map, s.order, tol);
    case Method::markov: return entropy_markov(map, tol, s.horizon, s.pcf_tol);
    case Method::automatic: break;
  }
  std::optional<EntropyEstimate> markov;
  try {
    markov = entropy_markov(map, tol, s.horizon, s.pcf_tol);
  } catch (const NotApplicable&) {
  }
  if (markov) {
    const auto other = map.has_plateaus() ? entropy_lap(map, s.n_max, tol)
                                          : kneading_escalated(map, s.order, tol);
    cross_check(*markov, other);
    return *markov;
  }
  if (!map.has_plateaus()) {
    try {
      return kneading_escalated(map, s.order, tol);
    } catch (const NeedsHigherOrder&) {
    }
  }
  return entropy_lap(map, s.n_max, tol);
}

double renormalization_floor(int p, int r) {
  if (p < 3 || p % 2 == 0) throw DomainError("p must be an odd integer >= 3");
  if (r < 0) throw DomainError("r must be non-negative");
  auto g = [p](double x) { return std::pow(x, p) - 2.0 * std::pow(x, p - 2) - 1.0; };
  const double root = bisect(g, std::sqrt(2.0), 2.0, g(std::sqrt(2.0)));
  return std::ldexp(std::log(root), -r);
}

}  // namespace isentrope
