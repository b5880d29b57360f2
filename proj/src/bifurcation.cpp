#include "isentrope/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "isentrope/errors.hpp"
#include "isentrope/format.hpp"
#include "isentrope/polynomial.hpp"
#include "isentrope/symbolic.hpp"

namespace isentrope {

namespace {

constexpr double kParabolicBand = 1e-6;
// Orbits through a critical point found numerically carry a tiny multiplier.
constexpr double kSuperattractingBand = 1e-8;
constexpr double kOrbitResidual = 1e-10;
constexpr int kWindowSamples = 4001;

int sign_of(double x) { return (x > 0) - (x < 0); }

bool in_plateau(const IntervalMap& f, double x) {
  for (const auto& c : f.critical_pieces())
    if (c.hi > c.lo && c.lo <= x && x <= c.hi) return true;
  return false;
}

double fixed_residual(const IntervalMap& f, double x, int n) { return f.iterate(x, n) - x; }

// Smallest divisor d of n with f^d(x) = x.
int minimal_period(const IntervalMap& f, double x, int n, double tol = 1e-9) {
  for (int d = 1; d < n; ++d)
    if (n % d == 0 && std::abs(fixed_residual(f, x, d)) <= tol) return d;
  return n;
}

// Newton on f^p(x) - x, keeping the best iterate.
double polish_cycle_point(const IntervalMap& f, double x, int p) {
  double best = x, best_res = std::abs(fixed_residual(f, x, p));
  for (int it = 0; it < 30 && best_res > 0.0; ++it) {
    const double m = orbit_multiplier(f, x, p);
    if (std::abs(m - 1.0) < 1e-8) break;
    const double next = x - fixed_residual(f, x, p) / (m - 1.0);
    if (!(std::abs(next) <= 1.0)) break;
    x = next;
    const double r = std::abs(fixed_residual(f, x, p));
    if (r < best_res) {
      best = x;
      best_res = r;
    } else {
      break;
    }
  }
  return best;
}

PeriodicOrbit make_orbit(const IntervalMap& f, double x, int N) {
  PeriodicOrbit o;
  o.point = x;
  o.period = minimal_period(f, x, N);
  o.multiplier = orbit_multiplier(f, x, o.period);
  o.stability = classify_multiplier(o.multiplier);
  return o;
}

// Roots of f^N(x) - x on [a,b], sampling `samples` subintervals.
void diagonal_crossings(const IntervalMap& f, int N, double a, double b, int samples,
                        std::vector<double>& out) {
  auto g = [&](double x) { return fixed_residual(f, x, N); };
  double x0 = a, g0 = g(a);
  if (g0 == 0.0) out.push_back(a);
  for (int s = 1; s <= samples; ++s) {
    const double x1 = s == samples ? b : a + (b - a) * s / samples;
    const double g1 = g(x1);
    if (g1 == 0.0)
      out.push_back(x1);
    else if (g0 != 0.0 && sign_of(g0) != sign_of(g1))
      out.push_back(bisect(g, x0, x1, g0));
    x0 = x1;
    g0 = g1;
  }
}

struct WindowMin {
  double value = 0.0;
  double at = 0.0;
  int sign_changes = 0;
};

// Minimum of s * (g^N(x) - x) over the window, grid plus golden-section polish.
WindowMin window_minimum(const IntervalMap& g, int N, Interval w, int s) {
  auto G = [&](double x) { return s * fixed_residual(g, x, N); };
  WindowMin r;
  r.value = std::numeric_limits<double>::infinity();
  int best = 0;
  double prev = 0.0;
  for (int k = 0; k < kWindowSamples; ++k) {
    const double x = w.lo + w.length() * k / (kWindowSamples - 1);
    const double v = G(x);
    if (k > 0 && sign_of(v) != 0 && sign_of(prev) != 0 && sign_of(v) != sign_of(prev))
      ++r.sign_changes;
    if (sign_of(v) != 0) prev = v;
    if (v < r.value) {
      r.value = v;
      r.at = x;
      best = k;
    }
  }
  const double h = w.length() / (kWindowSamples - 1);
  double a = std::max(w.lo, r.at - (best > 0 ? h : 0.0));
  double b = std::min(w.hi, r.at + (best < kWindowSamples - 1 ? h : 0.0));
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double gc = G(c), gd = G(d);
  for (int it = 0; it < 80 && b - a > 1e-15; ++it) {
    if (gc < gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - phi * (b - a);
      gc = G(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + phi * (b - a);
      gd = G(d);
    }
  }
  const double x = 0.5 * (a + b);
  const double v = G(x);
  if (v < r.value) {
    r.value = v;
    r.at = x;
  }
  return r;
}

// Interval image of J under T^n and whether T^n is strictly monotone on J.
std::pair<Interval, bool> monotone_image(const IntervalMap& T, Interval J, int n) {
  for (int j = 0; j < n; ++j) {
    // Turning points and plateaus meeting the interior of J.
    for (const auto& c : T.critical_pieces())
      if (c.lo < J.hi && J.lo < c.hi) return {J, false};
    const double a = T(J.lo), b = T(J.hi);
    J = {std::min(a, b), std::max(a, b)};
  }
  return {J, true};
}

std::vector<double> pl_preimages(const IntervalMap& T, double y) {
  const auto xs = T.breakpoints();
  const auto ys = T.breakpoint_values();
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double y0 = ys[k], y1 = ys[k + 1];
    if (y0 == y1) {
      if (y == y0) {
        out.push_back(xs[k]);
        out.push_back(xs[k + 1]);
      }
      continue;
    }
    if (std::min(y0, y1) <= y && y <= std::max(y0, y1))
      out.push_back(xs[k] + (y - y0) * (xs[k + 1] - xs[k]) / (y1 - y0));
  }
  return out;
}

void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(),
                      [](double a, double b) { return std::abs(a - b) <= 1e-15; }),
          v.end());
}

}  // namespace

std::string to_string(Stability s) {
  switch (s) {
    case Stability::superattracting: return "superattracting";
    case Stability::attracting: return "attracting";
    case Stability::parabolic: return "parabolic";
    case Stability::repelling: return "repelling";
  }
  return "unknown";
}

Stability classify_multiplier(double m) {
  const double a = std::abs(m);
  if (a <= kSuperattractingBand) return Stability::superattracting;
  if (std::abs(a - 1.0) <= kParabolicBand) return Stability::parabolic;
  return a < 1.0 ? Stability::attracting : Stability::repelling;
}

nlohmann::json to_json(const PeriodicOrbit& o) {
  return {{"point", o.point},
          {"period", o.period},
          {"multiplier", o.multiplier},
          {"stability", to_string(o.stability)}};
}

double orbit_multiplier(const IntervalMap& map, double x, int n) {
  double m = 1.0;
  for (int j = 0; j < n; ++j) {
    if (in_plateau(map, x)) return 0.0;
    m *= map.derivative(x);
    x = map(x);
  }
  return m;
}

PeriodicOrbitList periodic_orbits(const IntervalMap& map, int N, std::size_t budget) {
  if (N < 1) throw DomainError("period must be at least 1");
  PeriodicOrbitList result;
  std::vector<double> roots;
  std::vector<double> plateau_points;
  try {
    const auto d = branch_decomposition(map, N, budget);
    for (const auto& br : d.branches) {
      if (br.constant) {
        const double y = br.image_left;
        if (br.left <= y && y <= br.right) plateau_points.push_back(y);
        continue;
      }
      // A decreasing branch meets the diagonal at most once.
      const bool increasing = br.image_right > br.image_left;
      diagonal_crossings(map, N, br.left, br.right, increasing ? 32 : 1, roots);
    }
  } catch (const BudgetExceeded&) {
    result.partial = true;
    diagonal_crossings(map, N, -1.0, 1.0, 200'000, roots);
  }

  sort_unique(roots);
  std::vector<double> kept;
  for (double x : roots) {
    if (!kept.empty() && std::abs(x - kept.back()) <= 1e-12) continue;
    if (std::abs(fixed_residual(map, x, N)) > kOrbitResidual)
      x = polish_cycle_point(map, x, N);
    if (std::abs(fixed_residual(map, x, N)) > kOrbitResidual) continue;
    // A plateau on the diagonal gets a single representative.
    if (std::any_of(plateau_points.begin(), plateau_points.end(),
                    [&](double y) { return std::abs(y - x) <= 1e-12; }))
      continue;
    kept.push_back(x);
  }
  for (double y : plateau_points) kept.push_back(y);
  sort_unique(kept);
  for (double x : kept) {
    auto o = make_orbit(map, x, N);
    result.points.push_back(o);
  }
  return result;
}

std::string to_string(CriticalFate::Verdict v) {
  switch (v) {
    case CriticalFate::Verdict::attracted: return "attracted";
    case CriticalFate::Verdict::eventually_periodic_repelling:
      return "eventually-periodic-repelling";
    case CriticalFate::Verdict::undecided: return "undecided";
  }
  return "unknown";
}

nlohmann::json to_json(const CriticalFate& f) {
  return {{"index", f.index},
          {"verdict", to_string(f.verdict)},
          {"period", f.period},
          {"cycle_point", f.cycle_point},
          {"multiplier", f.multiplier},
          {"entry_step", f.entry_step}};
}

CriticalFate critical_fate(const IntervalMap& map, int i, int horizon, double tol) {
  if (i < 1 || i > map.modality())
    throw DomainError("critical index " + std::to_string(i) + " out of range");
  constexpr int kMaxPeriod = 64;
  CriticalFate fate;
  fate.index = i;

  const int len = horizon + 3 * kMaxPeriod + 1;
  std::vector<double> xs(static_cast<std::size_t>(len));
  xs[0] = map.critical_values()[static_cast<std::size_t>(i - 1)];
  for (int n = 1; n < len; ++n) xs[n] = map(xs[n - 1]);

  for (int n = 0; n <= horizon; ++n) {
    for (int p = 1; p <= kMaxPeriod; ++p) {
      // Require the near-return to persist for two more periods, which rules
      // out chance recurrences of a chaotic orbit.
      bool ok = true;
      for (int j = 0; j <= 2 * p && ok; ++j)
        ok = std::abs(xs[n + j + p] - xs[n + j]) <= tol;
      if (!ok) continue;

      const double q = polish_cycle_point(map, xs[n], p);
      const int period = minimal_period(map, q, p);
      fate.period = period;
      fate.cycle_point = q;
      fate.multiplier = orbit_multiplier(map, q, period);
      fate.entry_step = n;
      fate.boundary_distance = 1.0 - std::abs(q);
      double y = q;
      for (int j = 0; j < period; ++j) {
        fate.boundary_distance = std::min(fate.boundary_distance, 1.0 - std::abs(y));
        y = map(y);
      }
      switch (classify_multiplier(fate.multiplier)) {
        case Stability::superattracting:
        case Stability::attracting:
          fate.verdict = CriticalFate::Verdict::attracted;
          break;
        case Stability::repelling:
          fate.verdict = CriticalFate::Verdict::eventually_periodic_repelling;
          break;
        case Stability::parabolic:
          fate.verdict = CriticalFate::Verdict::undecided;
          break;
      }
      return fate;
    }
  }
  return fate;
}

double solve_superattracting(const MapPath& path, int i, int p, Interval bracket, double tol) {
  if (p < 1) throw DomainError("period must be at least 1");
  auto G = [&](double t) {
    const auto g = path(t);
    if (i < 1 || i > g.modality())
      throw DomainError("critical index " + std::to_string(i) + " out of range");
    const double c = g.critical_points()[static_cast<std::size_t>(i - 1)];
    return g.iterate(c, p) - c;
  };
  double lo = bracket.lo, hi = bracket.hi;
  double glo = G(lo), ghi = G(hi);
  if (std::abs(glo) <= tol) return lo;
  if (std::abs(ghi) <= tol) return hi;
  if (sign_of(glo) == sign_of(ghi))
    throw BracketError("no sign change of the return residual over [" + format_double(lo) +
                       ", " + format_double(hi) + "]");

  // Bisection to a small bracket, then Illinois-style secant steps inside it.
  while (hi - lo > 1e-6 * (1.0 + std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    const double gm = G(mid);
    if (std::abs(gm) <= tol) return mid;
    if (sign_of(gm) == sign_of(glo)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double t = (lo * ghi - hi * glo) / (ghi - glo);
    if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
    if (t <= lo || t >= hi) break;
    const double gt = G(t);
    if (std::abs(gt) <= tol) return t;
    if (sign_of(gt) == sign_of(glo)) {
      lo = t;
      glo = gt;
      if (side == -1) ghi *= 0.5;
      side = -1;
    } else {
      hi = t;
      ghi = gt;
      if (side == 1) glo *= 0.5;
      side = 1;
    }
  }
  // The bracket has shrunk to roundoff; the root is located to machine precision.
  return std::abs(glo) < std::abs(ghi) ? lo : hi;
}

bool has_orbit_pair(const IntervalMap& map, int N, Interval window) {
  return window_minimum(map, N, window, 1).sign_changes >= 2;
}

SaddleNode detect_saddle_node(const MapPath& path, int N, Interval bracket, Interval window,
                              double tol) {
  if (N < 1) throw DomainError("period must be at least 1");
  const auto at_lo = window_minimum(path(bracket.lo), N, window, 1);
  const auto at_hi = window_minimum(path(bracket.hi), N, window, 1);
  const bool pair_lo = at_lo.sign_changes >= 2, pair_hi = at_hi.sign_changes >= 2;
  if (pair_lo == pair_hi)
    throw BracketError(std::string("orbit pair ") + (pair_lo ? "present" : "absent") +
                       " at both ends of the bracket");
  const auto& absent = pair_lo ? at_hi : at_lo;
  if (absent.sign_changes != 0)
    throw BracketError("window does not isolate the orbit pair");
  // Sign of g^N - id on the window once the pair has disappeared.
  const int s = absent.value > 0 ? 1 : -1;

  double present_t = pair_lo ? bracket.lo : bracket.hi;
  double absent_t = pair_lo ? bracket.hi : bracket.lo;
  while (std::abs(absent_t - present_t) > tol) {
    const double mid = 0.5 * (present_t + absent_t);
    if (mid == present_t || mid == absent_t) break;
    if (window_minimum(path(mid), N, window, s).value < 0.0)
      present_t = mid;
    else
      absent_t = mid;
  }
  SaddleNode sn;
  sn.t_star = 0.5 * (present_t + absent_t);
  const auto g = path(sn.t_star);
  sn.q_star = window_minimum(g, N, window, s).at;
  sn.multiplier = orbit_multiplier(g, sn.q_star, N);
  sn.residual = fixed_residual(g, sn.q_star, N);
  return sn;
}

FundamentalDomain fundamental_domain(const IntervalMap& map, double q_star, int N, double x0) {
  if (N < 1) throw DomainError("period must be at least 1");
  const int side = sign_of(x0 - q_star);
  if (side == 0) throw NotABasin("x0 coincides with the periodic point");
  double y = x0;
  for (int k = 0; k < 64 && std::abs(y - q_star) > 1e-12; ++k) {
    const double next = map.iterate(y, N);
    if (sign_of(next - q_star) != side || !(std::abs(next - q_star) < std::abs(y - q_star)))
      throw NotABasin("orbit of x0 does not approach the periodic point monotonically");
    y = next;
  }

  FundamentalDomain fd;
  const double fx0 = map.iterate(x0, N);
  fd.domain = {std::min(x0, fx0), std::max(x0, fx0)};
  const double ia = map.iterate(fd.domain.lo, N), ib = map.iterate(fd.domain.hi, N);
  double lo = std::min(ia, ib), hi = std::max(ia, ib);
  constexpr int kSamples = 4096;
  for (int k = 1; k < kSamples; ++k) {
    const double v = map.iterate(fd.domain.lo + fd.domain.length() * k / kSamples, N);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  fd.image = {lo, hi};
  fd.boundary_to_boundary = std::abs(lo - std::min(ia, ib)) <= 1e-12 &&
                            std::abs(hi - std::max(ia, ib)) <= 1e-12;
  const double overlap = std::min(fd.domain.hi, fd.image.hi) - std::max(fd.domain.lo, fd.image.lo);
  fd.single_point_overlap = std::abs(overlap) <= 1e-12;
  return fd;
}

std::string to_string(Membership m) {
  switch (m) {
    case Membership::no: return "no";
    case Membership::yes: return "yes";
    case Membership::indeterminate: return "indeterminate";
  }
  return "unknown";
}

Membership window_membership(const IntervalMap& map, const std::vector<ExpectedFate>& expected,
                             int horizon) {
  if (static_cast<int>(expected.size()) != map.modality())
    throw DomainError("expected one fate per critical point");
  bool undecided = false;
  for (int i = 1; i <= map.modality(); ++i) {
    const auto fate = critical_fate(map, i, horizon);
    const auto& want = expected[static_cast<std::size_t>(i - 1)];
    if (fate.verdict == CriticalFate::Verdict::undecided) {
      undecided = true;
      continue;
    }
    const bool on_boundary = fate.boundary_distance <= 1e-12;
    bool match;
    if (want.period == 0)
      match = on_boundary;
    else
      match = !on_boundary && fate.verdict == CriticalFate::Verdict::attracted &&
              fate.period == want.period;
    if (!match) return Membership::no;
  }
  return undecided ? Membership::indeterminate : Membership::yes;
}

std::string TransferReport::text() const {
  std::ostringstream os;
  auto line = [&](const char* name, bool ok) {
    os << "  " << name << ": " << (ok ? "pass" : "FAIL") << '\n';
  };
  os << "transfer data report\n";
  line("qhat periodic and inside Jhat", periodic);
  line("C1  T^N monotone on Jhat", monotone_return);
  line("C2  xhat in T^N(Jhat), T^k: Vhat -> Jhat monotone onto", transfer);
  line("orbit of qhat avoids turning points", avoids_turning);
  os << "  backward orbit of qhat: " << preimages << " points to depth " << depth
     << ", every point of [-1,1] within " << format_double(density_gap) << '\n';
  os << "  (density is certified only to this finite depth)\n";
  for (const auto& v : violations) os << "  violation: " << v << '\n';
  os << (passed() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

TransferReport verify_transfer_data(const IntervalMap& T, const TransferData& data, int depth,
                                    std::size_t budget) {
  if (!T.is_piecewise_linear()) throw DomainError("transfer data needs a piecewise-linear map");
  if (data.N < 1 || data.k < 0) throw DomainError("N must be positive and k non-negative");
  TransferReport r;

  r.periodic = std::abs(fixed_residual(T, data.qhat, data.N)) <= kOrbitResidual &&
               data.Jhat.lo < data.qhat && data.qhat < data.Jhat.hi;
  if (!r.periodic) r.violations.push_back("qhat is not an N-periodic point inside Jhat");

  const auto [ret_image, ret_monotone] = monotone_image(T, data.Jhat, data.N);
  r.monotone_return = ret_monotone;
  if (!r.monotone_return) r.violations.push_back("C1: T^N is not monotone on Jhat");

  const auto [v_image, v_monotone] = monotone_image(T, data.Vhat, data.k);
  r.transfer = ret_monotone && ret_image.contains(data.xhat) && data.Vhat.contains(data.xhat) &&
               v_monotone && std::abs(v_image.lo - data.Jhat.lo) <= 1e-9 &&
               std::abs(v_image.hi - data.Jhat.hi) <= 1e-9;
  if (!r.transfer)
    r.violations.push_back("C2: xhat not in T^N(Jhat) or T^k does not map Vhat monotonically onto Jhat");

  r.avoids_turning = true;
  double y = data.qhat;
  for (int j = 0; j < data.N; ++j) {
    for (const auto& c : T.critical_pieces())
      if (c.lo - 1e-9 <= y && y <= c.hi + 1e-9) r.avoids_turning = false;
    y = T(y);
  }
  if (!r.avoids_turning) r.violations.push_back("orbit of qhat meets a turning point");

  std::vector<double> all{data.qhat}, level{data.qhat};
  for (int d = 1; d <= depth; ++d) {
    std::vector<double> next;
    for (double z : level)
      for (double x : pl_preimages(T, z)) next.push_back(x);
    sort_unique(next);
    if (all.size() + next.size() > budget) break;
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
    r.depth = d;
  }
  sort_unique(all);
  r.preimages = all.size();
  double gap = std::max(all.front() + 1.0, 1.0 - all.back());
  for (std::size_t j = 0; j + 1 < all.size(); ++j) gap = std::max(gap, 0.5 * (all[j + 1] - all[j]));
  r.density_gap = gap;
  return r;
}

}  // namespace isentrope
