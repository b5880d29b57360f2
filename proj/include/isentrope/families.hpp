#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "isentrope/polynomial.hpp"

namespace isentrope {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class MapKind { tent, stunted, cubic, quartic, piecewise_linear };

std::string to_string(MapKind kind);
MapKind map_kind_from_string(const std::string& name);

// Number of interior turning points and the value at -1.
struct ModalShape {
  int b = 1;
  int epsilon = -1;

  // Canonical abscissa c_i = -1 + 2i/(b+1), i = 0..b+1.
  double canonical_point(int i) const noexcept {
    return -1.0 + 2.0 * i / (b + 1);
  }
  int right_value() const noexcept { return (b % 2 == 0) ? -epsilon : epsilon; }
};

// Interior critical values v_1..v_b; the boundary values are implied by the shape.
struct CriticalValues {
  std::vector<double> v;
};

struct ZetaCoords {
  std::vector<double> zeta;
};

ZetaCoords to_zeta(const ModalShape& shape, const CriticalValues& v);
CriticalValues from_zeta(const ModalShape& shape, const ZetaCoords& z);

// Throws ShapeError naming the first index i in 1..b+1 where alternation fails,
// or DomainError when some v_i lies outside [-1,1].
void check_alternation(const ModalShape& shape, const CriticalValues& v);

// A continuous piecewise-monotone self-map of [-1,1] with its lap structure.
//
// The domain is cut into laps L_0..L_b separated by critical pieces C_1..C_b.
// A critical piece is either a single turning point or a plateau (closed
// interval on which the map is constant). Symbols used by itineraries are
// indexed 0..2b: even 2j is L_j, odd 2i-1 is C_i.
class IntervalMap {
 public:
  // Generic continuous piecewise-linear map through (xs[k], ys[k]).
  // Zero-slope segments must form turning plateaus.
  static IntervalMap piecewise_linear(std::vector<double> xs, std::vector<double> ys,
                                      MapKind kind = MapKind::piecewise_linear);
  // Polynomial map whose interior critical points are all simple turning points.
  static IntervalMap polynomial(Polynomial p, MapKind kind,
                                std::vector<double> params = {});

  double operator()(double x) const noexcept;
  // Derivative; at PL breakpoints the left segment is used.
  double derivative(double x) const noexcept;
  // Iterate n times.
  double iterate(double x, int n) const noexcept;

  MapKind kind() const noexcept { return kind_; }
  int modality() const noexcept { return static_cast<int>(critical_.size()); }
  int epsilon() const noexcept { return epsilon_; }
  ModalShape shape() const noexcept { return {modality(), epsilon_}; }

  // Representative point of each critical piece (the plateau's centre point
  // for canonical stunted maps, the turning point otherwise).
  std::span<const double> critical_points() const noexcept { return turning_; }
  std::span<const double> critical_values() const noexcept { return values_; }
  std::span<const Interval> critical_pieces() const noexcept { return critical_; }
  std::span<const Interval> laps() const noexcept { return laps_; }
  // +1 increasing, -1 decreasing, for each lap.
  std::span<const int> lap_orientation() const noexcept { return orientation_; }

  bool has_plateaus() const noexcept;
  std::vector<Interval> plateaus() const;

  // Symbol of x in the lap partition (see class comment).
  int address(double x) const noexcept;
  int symbol_count() const noexcept { return 2 * modality() + 1; }

  double lipschitz() const noexcept { return lipschitz_; }

  bool is_piecewise_linear() const noexcept { return !poly_.has_value(); }
  std::span<const double> breakpoints() const noexcept { return xs_; }
  std::span<const double> breakpoint_values() const noexcept { return ys_; }
  const Polynomial* polynomial_form() const noexcept {
    return poly_ ? &*poly_ : nullptr;
  }
  // Free parameters of the anchored polynomial (the coefficients of q in
  // f = L + (1 - x^2) q), empty for PL maps.
  std::span<const double> family_params() const noexcept { return params_; }

  // Cubic members of the (alpha, beta) family; meaningful for epsilon = -1.
  double alpha() const noexcept;
  double beta() const noexcept;

 private:
  IntervalMap() = default;
  void finish_structure(std::vector<Interval> pieces, std::vector<double> turning);

  MapKind kind_ = MapKind::piecewise_linear;
  int epsilon_ = -1;
  std::vector<double> xs_, ys_;
  std::optional<Polynomial> poly_;
  std::optional<Polynomial> dpoly_;
  std::vector<double> params_;
  std::vector<Interval> critical_;
  std::vector<double> turning_;
  std::vector<double> values_;
  std::vector<Interval> laps_;
  std::vector<int> orientation_;
  double lipschitz_ = 0.0;
};

IntervalMap make_tent(const ModalShape& shape, const CriticalValues& v);
IntervalMap make_stunted(const ModalShape& shape, const CriticalValues& v);
IntervalMap make_cubic(double alpha, double beta);

// Anchored polynomial f = L + (1 - x^2) q with f(-1) = epsilon and
// f(1) = (-1)^(b+1) epsilon, from its free parameters q_0..q_(b-1).
IntervalMap make_anchored_polynomial(const ModalShape& shape, std::span<const double> q);

struct InverseOptions {
  double tolerance = 1e-12;
  double fd_step = 1e-7;
  int max_iterations = 100;
  // Warm start for the free parameters, tried before the built-in routes.
  std::vector<double> hint;
};

// The anchored polynomial of degree b+1 (b in {2,3}) with critical values v.
IntervalMap map_from_critical_values(const ModalShape& shape, const CriticalValues& v,
                                     const InverseOptions& options = {});

// Unimodal/multimodal tents with constant slope magnitude s. Odd b only
// admits s < b+1; even b requires s = b+1.
CriticalValues constant_slope_values(const ModalShape& shape, double slope);

nlohmann::json to_json(const IntervalMap& map);
IntervalMap map_from_json(const nlohmann::json& j);

}  // namespace isentrope
