#include "isentrope/families.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "isentrope/errors.hpp"

namespace isentrope {

namespace {

int sign_of(double x) { return (x > 0) - (x < 0); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::tent: return "tent";
    case MapKind::stunted: return "stunted";
    case MapKind::cubic: return "cubic";
    case MapKind::quartic: return "quartic";
    case MapKind::piecewise_linear: return "piecewise_linear";
  }
  return "unknown";
}

MapKind map_kind_from_string(const std::string& name) {
  if (name == "tent") return MapKind::tent;
  if (name == "stunted") return MapKind::stunted;
  if (name == "cubic") return MapKind::cubic;
  if (name == "quartic") return MapKind::quartic;
  if (name == "piecewise_linear") return MapKind::piecewise_linear;
  throw DomainError("unknown map kind '" + name + "'");
}

ZetaCoords to_zeta(const ModalShape& shape, const CriticalValues& v) {
  ZetaCoords z;
  z.zeta.reserve(v.v.size());
  for (std::size_t k = 0; k < v.v.size(); ++k) {
    const int i = static_cast<int>(k) + 1;
    z.zeta.push_back(((i % 2) ? -shape.epsilon : shape.epsilon) * v.v[k]);
  }
  return z;
}

CriticalValues from_zeta(const ModalShape& shape, const ZetaCoords& z) {
  // The transform is an involution.
  const auto back = to_zeta(shape, CriticalValues{z.zeta});
  return CriticalValues{back.zeta};
}

void check_alternation(const ModalShape& shape, const CriticalValues& v) {
  if (shape.b < 1) throw DomainError("modality b must be at least 1");
  if (shape.epsilon != 1 && shape.epsilon != -1)
    throw DomainError("epsilon must be -1 or +1");
  if (static_cast<int>(v.v.size()) != shape.b)
    throw DomainError("expected " + std::to_string(shape.b) + " critical values, got " +
                      std::to_string(v.v.size()));
  for (std::size_t k = 0; k < v.v.size(); ++k) {
    if (!(std::abs(v.v[k]) <= 1.0))
      throw DomainError("critical value v_" + std::to_string(k + 1) + " = " + fmt(v.v[k]) +
                        " outside [-1,1]");
  }
  auto value = [&](int i) -> double {
    if (i == 0) return shape.epsilon;
    if (i == shape.b + 1) return shape.right_value();
    return v.v[i - 1];
  };
  for (int i = 1; i <= shape.b + 1; ++i) {
    const double step = (value(i) - value(i - 1)) * shape.epsilon;
    const bool ok = (i % 2) ? step < 0 : step > 0;
    if (!ok)
      throw ShapeError(i, "alternation violated at index " + std::to_string(i) + ": v_" +
                              std::to_string(i) + " = " + fmt(value(i)) + ", v_" +
                              std::to_string(i - 1) + " = " + fmt(value(i - 1)));
  }
}

// ---------------------------------------------------------------------------
// IntervalMap

IntervalMap IntervalMap::piecewise_linear(std::vector<double> xs, std::vector<double> ys,
                                          MapKind kind) {
  if (xs.size() < 2 || xs.size() != ys.size())
    throw DomainError("piecewise-linear map needs matching breakpoints and values");
  if (xs.front() != -1.0 || xs.back() != 1.0)
    throw DomainError("breakpoints must start at -1 and end at 1");
  for (std::size_t k = 0; k + 1 < xs.size(); ++k)
    if (!(xs[k] < xs[k + 1])) throw DomainError("breakpoints must be strictly increasing");
  for (double y : ys)
    if (!(std::abs(y) <= 1.0)) throw DomainError("map values must lie in [-1,1]");

  IntervalMap m;
  m.kind_ = kind;
  m.xs_ = std::move(xs);
  m.ys_ = std::move(ys);
  const auto& X = m.xs_;
  const auto& Y = m.ys_;
  const std::size_t segs = X.size() - 1;

  // Group segments into runs of constant slope sign.
  struct Run {
    int sign;
    std::size_t first, last;  // segment indices
  };
  std::vector<Run> runs;
  for (std::size_t k = 0; k < segs; ++k) {
    const int s = sign_of(Y[k + 1] - Y[k]);
    if (!runs.empty() && runs.back().sign == s)
      runs.back().last = k;
    else
      runs.push_back({s, k, k});
    m.lipschitz_ = std::max(m.lipschitz_, std::abs(Y[k + 1] - Y[k]) / (X[k + 1] - X[k]));
  }
  if (runs.front().sign == 0 || runs.back().sign == 0)
    throw ShapeError(0, "constant segment touching the boundary is not a turning plateau");

  std::vector<Interval> pieces;
  std::vector<double> turning;
  for (std::size_t r = 0; r + 1 < runs.size(); ++r) {
    const Run& cur = runs[r];
    const Run& next = runs[r + 1];
    if (cur.sign == 0) continue;
    if (next.sign == 0) {
      const Run& after = runs[r + 2];
      if (after.sign == cur.sign)
        throw ShapeError(static_cast<int>(pieces.size()) + 1,
                         "plateau between laps of equal orientation");
      pieces.push_back({X[next.first], X[next.last + 1]});
      turning.push_back(0.5 * (X[next.first] + X[next.last + 1]));
    } else {
      const double x = X[cur.last + 1];
      pieces.push_back({x, x});
      turning.push_back(x);
    }
  }
  m.finish_structure(std::move(pieces), std::move(turning));
  return m;
}

IntervalMap IntervalMap::polynomial(Polynomial p, MapKind kind, std::vector<double> params) {
  IntervalMap m;
  m.kind_ = kind;
  m.dpoly_ = p.derivative();
  m.poly_ = std::move(p);
  m.params_ = std::move(params);
  const auto crit = real_roots(*m.dpoly_, -1.0, 1.0);
  std::vector<Interval> pieces;
  for (double c : crit) pieces.push_back({c, c});
  // Lipschitz constant: |f'| is maximal at an endpoint or a critical point of f'.
  double lip = std::max(std::abs((*m.dpoly_)(-1.0)), std::abs((*m.dpoly_)(1.0)));
  for (double x : real_roots(m.dpoly_->derivative(), -1.0, 1.0))
    lip = std::max(lip, std::abs((*m.dpoly_)(x)));
  m.lipschitz_ = lip;
  m.finish_structure(std::move(pieces), crit);
  return m;
}

void IntervalMap::finish_structure(std::vector<Interval> pieces, std::vector<double> turning) {
  critical_ = std::move(pieces);
  turning_ = std::move(turning);
  values_.clear();
  for (double c : turning_) values_.push_back((*this)(c));
  laps_.clear();
  orientation_.clear();
  double left = -1.0;
  for (const auto& c : critical_) {
    laps_.push_back({left, c.lo});
    left = c.hi;
  }
  laps_.push_back({left, 1.0});
  for (const auto& lap : laps_) {
    const double a = (*this)(lap.lo), b = (*this)(lap.hi);
    int s = sign_of(b - a);
    if (s == 0) s = sign_of(derivative(0.5 * (lap.lo + lap.hi)));
    orientation_.push_back(s == 0 ? 1 : s);
  }
  epsilon_ = -orientation_.front();
}

double IntervalMap::operator()(double x) const noexcept {
  double y;
  if (poly_) {
    if (x == -1.0) {
      y = (*poly_)(-1.0);
      if (std::abs(std::abs(y) - 1.0) < 1e-12) y = std::round(y);
    } else if (x == 1.0) {
      y = (*poly_)(1.0);
      if (std::abs(std::abs(y) - 1.0) < 1e-12) y = std::round(y);
    } else {
      y = (*poly_)(x);
    }
  } else {
    auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.begin()) return ys_.front();
    if (it == xs_.end()) return ys_.back();
    const std::size_t k = static_cast<std::size_t>(it - xs_.begin());
    if (*it == x) return ys_[k];
    const double x0 = xs_[k - 1], x1 = xs_[k];
    y = ys_[k - 1] + (x - x0) * (ys_[k] - ys_[k - 1]) / (x1 - x0);
  }
  return std::clamp(y, -1.0, 1.0);
}

double IntervalMap::derivative(double x) const noexcept {
  if (dpoly_) return (*dpoly_)(x);
  auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
  std::size_t k = static_cast<std::size_t>(it - xs_.begin());
  if (k == 0) k = 1;
  if (k >= xs_.size()) k = xs_.size() - 1;
  return (ys_[k] - ys_[k - 1]) / (xs_[k] - xs_[k - 1]);
}

double IntervalMap::iterate(double x, int n) const noexcept {
  for (int k = 0; k < n; ++k) x = (*this)(x);
  return x;
}

bool IntervalMap::has_plateaus() const noexcept {
  return std::any_of(critical_.begin(), critical_.end(),
                     [](const Interval& c) { return c.hi > c.lo; });
}

std::vector<Interval> IntervalMap::plateaus() const {
  std::vector<Interval> out;
  for (const auto& c : critical_)
    if (c.hi > c.lo) out.push_back(c);
  return out;
}

int IntervalMap::address(double x) const noexcept {
  // First critical piece whose right end is >= x.
  auto it = std::lower_bound(critical_.begin(), critical_.end(), x,
                             [](const Interval& c, double v) { return c.hi < v; });
  const int i = static_cast<int>(it - critical_.begin());
  if (it != critical_.end() && it->lo <= x) return 2 * i + 1;
  return 2 * i;
}

double IntervalMap::alpha() const noexcept {
  if (params_.size() != 2) return std::nan("");
  return -params_[1];
}

double IntervalMap::beta() const noexcept {
  if (params_.size() != 2) return std::nan("");
  return -params_[0];
}

// ---------------------------------------------------------------------------
// Builders

IntervalMap make_tent(const ModalShape& shape, const CriticalValues& v) {
  check_alternation(shape, v);
  std::vector<double> xs, ys;
  for (int i = 0; i <= shape.b + 1; ++i) xs.push_back(shape.canonical_point(i));
  xs.back() = 1.0;
  ys.push_back(shape.epsilon);
  for (double x : v.v) ys.push_back(x);
  ys.push_back(shape.right_value());
  return IntervalMap::piecewise_linear(std::move(xs), std::move(ys), MapKind::tent);
}

IntervalMap make_stunted(const ModalShape& shape, const CriticalValues& v) {
  check_alternation(shape, v);
  const auto z = to_zeta(shape, v);
  const double slope = shape.b + 1;
  std::vector<double> xs{-1.0}, ys{static_cast<double>(shape.epsilon)};
  for (int i = 1; i <= shape.b; ++i) {
    // c_i -/+ w with w = (1 - zeta_i)/(b+1), over a common denominator.
    const double num = 2.0 * i - slope;
    const double w = 1.0 - z.zeta[i - 1];
    if (w > 0) {
      xs.push_back((num - w) / slope);
      xs.push_back((num + w) / slope);
      ys.push_back(v.v[i - 1]);
      ys.push_back(v.v[i - 1]);
    } else {
      xs.push_back(shape.canonical_point(i));
      ys.push_back(v.v[i - 1]);
    }
  }
  xs.push_back(1.0);
  ys.push_back(shape.right_value());
  auto m = IntervalMap::piecewise_linear(std::move(xs), std::move(ys), MapKind::stunted);
  return m;
}

IntervalMap make_cubic(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha <= 4.0))
    throw DomainError("alpha = " + fmt(alpha) + " outside (0,4]");
  const double bound = 2.0 * std::sqrt(alpha) - alpha;
  if (!(std::abs(beta) <= bound + 1e-15))
    throw DomainError("|beta| = " + fmt(std::abs(beta)) + " exceeds 2 sqrt(alpha) - alpha = " +
                      fmt(bound));
  const double disc = beta * beta - 3.0 * alpha * (1.0 - alpha);
  if (!(disc > 0.0))
    throw DomainError("critical points are not real and distinct at (alpha, beta) = (" +
                      fmt(alpha) + ", " + fmt(beta) + ")");
  const double c1 = (-beta - std::sqrt(disc)) / (3.0 * alpha);
  const double c2 = (-beta + std::sqrt(disc)) / (3.0 * alpha);
  if (!(c1 > -1.0 && c2 < 1.0))
    throw DomainError("critical points leave (-1,1) at (alpha, beta) = (" + fmt(alpha) +
                      ", " + fmt(beta) + ")");
  auto m = IntervalMap::polynomial(Polynomial({-beta, 1.0 - alpha, beta, alpha}),
                                   MapKind::cubic, {-beta, -alpha});
  if (m.modality() != 2) throw DomainError("cubic is not bimodal on (-1,1)");
  return m;
}

namespace {

Polynomial anchored(const ModalShape& shape, std::span<const double> q) {
  const double left = shape.epsilon, right = shape.right_value();
  const Polynomial linear({0.5 * (left + right), 0.5 * (right - left)});
  return linear + Polynomial({1.0, 0.0, -1.0}) * Polynomial(std::vector<double>(q.begin(), q.end()));
}

MapKind kind_for(int b) { return b == 2 ? MapKind::cubic : MapKind::quartic; }

// Critical values of the anchored polynomial, or nullopt when it does not
// have exactly b simple interior critical points.
std::optional<Eigen::VectorXd> critical_values_of(const ModalShape& shape,
                                                  const Eigen::VectorXd& q) {
  const Polynomial p = anchored(shape, std::span<const double>(q.data(), q.size()));
  const auto crit = real_roots(p.derivative(), -1.0, 1.0);
  if (static_cast<int>(crit.size()) != shape.b) return std::nullopt;
  Eigen::VectorXd v(shape.b);
  for (int i = 0; i < shape.b; ++i) v[i] = p(crit[i]);
  return v;
}

struct NewtonResult {
  Eigen::VectorXd q;
  double residual;
  bool converged;
};

NewtonResult newton_solve(const ModalShape& shape, const Eigen::VectorXd& target,
                          Eigen::VectorXd q, const InverseOptions& opt) {
  auto current = critical_values_of(shape, q);
  if (!current) return {q, INFINITY, false};
  Eigen::VectorXd r = *current - target;
  double res = r.cwiseAbs().maxCoeff();
  const int n = shape.b;
  for (int it = 0; it < opt.max_iterations && res > opt.tolerance; ++it) {
    Eigen::MatrixXd J(n, n);
    bool ok = true;
    for (int k = 0; k < n && ok; ++k) {
      Eigen::VectorXd qp = q;
      qp[k] += opt.fd_step;
      Eigen::VectorXd qm = q;
      qm[k] -= opt.fd_step;
      auto vp = critical_values_of(shape, qp);
      auto vm = critical_values_of(shape, qm);
      if (!vp || !vm) {
        ok = false;
        break;
      }
      J.col(k) = (*vp - *vm) / (2.0 * opt.fd_step);
    }
    if (!ok) break;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) break;
    const Eigen::VectorXd step = lu.solve(r);
    double lambda = 1.0;
    bool improved = false;
    for (int h = 0; h < 40; ++h, lambda *= 0.5) {
      const Eigen::VectorXd qn = q - lambda * step;
      auto vn = critical_values_of(shape, qn);
      if (!vn) continue;
      const Eigen::VectorXd rn = *vn - target;
      const double resn = rn.cwiseAbs().maxCoeff();
      if (resn < res) {
        q = qn;
        r = rn;
        res = resn;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return {q, res, res <= opt.tolerance};
}

// Chebyshev-type full map: all critical values on the boundary.
Eigen::VectorXd full_map_params(const ModalShape& shape) {
  Eigen::VectorXd q(shape.b);
  // f = eps (-1)^(b+1) T_{b+1}; reduce to q.
  if (shape.b == 2) {
    // -eps * (4x^3 - 3x) = L + (1 - x^2) q with L = -eps x.
    q << 0.0, 4.0 * shape.epsilon;
  } else {
    // eps * (8x^4 - 8x^2 + 1) = eps + (1 - x^2) q, q = -8 eps x^2.
    q << 0.0, 0.0, -8.0 * shape.epsilon;
  }
  return q;
}

Eigen::VectorXd full_map_values(const ModalShape& shape) {
  Eigen::VectorXd v(shape.b);
  for (int i = 1; i <= shape.b; ++i) v[i - 1] = (i % 2) ? -shape.epsilon : shape.epsilon;
  return v;
}

// Follows the straight segment from the point whose solution is q0 to
// `target`, halving the step when Newton fails.
std::optional<Eigen::VectorXd> continue_to(const ModalShape& shape, const Eigen::VectorXd& from,
                                           const Eigen::VectorXd& target, Eigen::VectorXd q,
                                           const InverseOptions& opt, double& best) {
  double s = 0.0, ds = 0.25;
  InverseOptions loose = opt;
  loose.tolerance = std::max(opt.tolerance, 1e-9);
  while (s < 1.0) {
    const double s_next = std::min(1.0, s + ds);
    const Eigen::VectorXd point = from + s_next * (target - from);
    auto res = newton_solve(shape, point, q, s_next < 1.0 ? loose : opt);
    if (s_next == 1.0) best = std::min(best, res.residual);
    if (res.converged) {
      q = res.q;
      s = s_next;
      ds = std::min(0.5, ds * 2.0);
    } else {
      ds *= 0.5;
      if (ds < 1e-6) return std::nullopt;
    }
  }
  return q;
}

}  // namespace

IntervalMap make_anchored_polynomial(const ModalShape& shape, std::span<const double> q) {
  if (static_cast<int>(q.size()) != shape.b)
    throw DomainError("anchored polynomial needs b free parameters");
  auto m = IntervalMap::polynomial(anchored(shape, q), kind_for(shape.b),
                                   std::vector<double>(q.begin(), q.end()));
  if (m.modality() != shape.b)
    throw DomainError("polynomial has " + std::to_string(m.modality()) +
                      " interior turning points, expected " + std::to_string(shape.b));
  return m;
}

IntervalMap map_from_critical_values(const ModalShape& shape, const CriticalValues& v,
                                     const InverseOptions& opt) {
  if (shape.b != 2 && shape.b != 3)
    throw DomainError("polynomial inverse supports b in {2,3}");
  if (static_cast<int>(v.v.size()) == shape.b) {
    for (int i = 1; i < shape.b; ++i)
      if (v.v[i] == v.v[i - 1])
        throw SingularityError("critical values v_" + std::to_string(i) + " and v_" +
                               std::to_string(i + 1) + " coincide");
  }
  check_alternation(shape, v);

  Eigen::VectorXd target(shape.b);
  for (int i = 0; i < shape.b; ++i) target[i] = v.v[i];
  double best = INFINITY;

  auto finish = [&](const Eigen::VectorXd& q) {
    return make_anchored_polynomial(shape, std::span<const double>(q.data(), q.size()));
  };

  if (static_cast<int>(opt.hint.size()) == shape.b) {
    Eigen::VectorXd q0(shape.b);
    for (int i = 0; i < shape.b; ++i) q0[i] = opt.hint[i];
    auto res = newton_solve(shape, target, q0, opt);
    best = std::min(best, res.residual);
    if (res.converged) return finish(res.q);
  }

  const Eigen::VectorXd v_full = full_map_values(shape);
  const Eigen::VectorXd q_full = full_map_params(shape);
  // Routes through the (convex) region of admissible critical values: the
  // direct segment, then detours via points shrunk towards the centre.
  const std::array<double, 8> pulls{0.0, 0.5, 0.25, 0.75, 0.9, 0.1, 0.6, 0.35};
  for (std::size_t r = 0; r < pulls.size(); ++r) {
    Eigen::VectorXd q = q_full;
    Eigen::VectorXd from = v_full;
    bool ok = true;
    if (pulls[r] > 0.0) {
      const Eigen::VectorXd mid = (1.0 - pulls[r]) * (0.5 * (v_full + target));
      auto leg = continue_to(shape, v_full, mid, q, opt, best);
      if (!leg) ok = false;
      else {
        q = *leg;
        from = mid;
      }
    }
    if (!ok) continue;
    auto last = continue_to(shape, from, target, q, opt, best);
    if (last) return finish(*last);
  }
  throw ConvergenceError("critical-value inversion did not converge from any start", best);
}

CriticalValues constant_slope_values(const ModalShape& shape, double slope) {
  const int laps = shape.b + 1;
  if (!(slope > 0.0 && slope <= laps + 1e-12))
    throw DomainError("slope must lie in (0, b+1]");
  if (shape.b % 2 == 0 && std::abs(slope - laps) > 1e-12)
    throw DomainError("constant slope with even b forces s = b+1");
  CriticalValues v;
  const double drop = 2.0 * slope / laps;
  for (int i = 1; i <= shape.b; ++i) {
    if (shape.b % 2 == 0)
      v.v.push_back((i % 2) ? -shape.epsilon : shape.epsilon);
    else
      v.v.push_back((i % 2) ? shape.epsilon * (1.0 - drop) : shape.epsilon);
  }
  return v;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const IntervalMap& map) {
  nlohmann::json j;
  j["version"] = 1;
  j["kind"] = to_string(map.kind());
  j["b"] = map.modality();
  j["epsilon"] = map.epsilon();
  j["v"] = std::vector<double>(map.critical_values().begin(), map.critical_values().end());
  if (const auto* p = map.polynomial_form()) {
    j["coeffs"] = std::vector<double>(p->coefficients().begin(), p->coefficients().end());
  } else {
    j["coeffs"] = nlohmann::json::array();
    if (map.kind() == MapKind::piecewise_linear) {
      j["breakpoints"] =
          std::vector<double>(map.breakpoints().begin(), map.breakpoints().end());
      j["values"] = std::vector<double>(map.breakpoint_values().begin(),
                                        map.breakpoint_values().end());
    }
  }
  return j;
}

IntervalMap map_from_json(const nlohmann::json& j) {
  try {
    const MapKind kind = map_kind_from_string(j.at("kind").get<std::string>());
    const ModalShape shape{j.at("b").get<int>(), j.at("epsilon").get<int>()};
    switch (kind) {
      case MapKind::tent:
        return make_tent(shape, {j.at("v").get<std::vector<double>>()});
      case MapKind::stunted:
        return make_stunted(shape, {j.at("v").get<std::vector<double>>()});
      case MapKind::piecewise_linear:
        return IntervalMap::piecewise_linear(j.at("breakpoints").get<std::vector<double>>(),
                                             j.at("values").get<std::vector<double>>());
      case MapKind::cubic:
      case MapKind::quartic: {
        // Recover q from f - L = (1 - x^2) q.
        const auto c = j.at("coeffs").get<std::vector<double>>();
        const int deg = shape.b + 1;
        std::vector<double> g(deg + 1, 0.0);
        for (std::size_t k = 0; k < c.size() && k < g.size(); ++k) g[k] = c[k];
        const double left = shape.epsilon, right = shape.right_value();
        g[0] -= 0.5 * (left + right);
        g[1] -= 0.5 * (right - left);
        std::vector<double> q(shape.b + 2, 0.0);
        for (int m = deg; m >= 2; --m) q[m - 2] = q[m] - g[m];
        q.resize(shape.b);
        return make_anchored_polynomial(shape, q);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed map JSON: ") + e.what());
  }
  throw DomainError("unsupported map kind");
}

}  // namespace isentrope
