#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "isentrope/bifurcation.hpp"
#include "isentrope/entropy.hpp"
#include "isentrope/families.hpp"

namespace isentrope {

// Inclusive sampling of one coordinate: `count` points from lo to hi.
struct Axis {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;

  double at(int k) const noexcept {
    return count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
  }
};

// Parses "name=lo:hi:count".
Axis parse_axis(const std::string& text);

// A family of maps with some coordinates swept. Coordinates are named
// v1..vb (critical values), zeta1..zetab, and alpha/beta for cubics; any
// coordinate not on an axis is taken from `base` (critical values).
struct FamilySpec {
  MapKind kind = MapKind::tent;
  ModalShape shape;
  std::vector<double> base;
  std::vector<Axis> axes;
};

IntervalMap build_map(const FamilySpec& spec, std::span<const double> coords,
                      const InverseOptions& inverse = {});

struct ScanOptions {
  Method method = Method::automatic;
  EntropySettings settings;
  int workers = 1;
};

struct CellFailure {
  std::size_t index = 0;
  std::string tag;
  std::string message;
};

// Row-major raster: the first axis varies slowest.
struct ScanGrid {
  std::vector<Axis> axes;
  int modality = 1;
  std::vector<EntropyEstimate> cells;  // failures hold NaN values
  std::vector<std::string> cell_tags;  // method name, or the error tag of a failure
  std::vector<CellFailure> failures;

  std::size_t size() const noexcept { return cells.size(); }
  std::vector<int> indices(std::size_t flat) const;
  std::vector<double> coordinates(std::size_t flat) const;
  double value(std::size_t flat) const { return cells[flat].value; }
  bool failed(std::size_t flat) const;

  // Header: axis names, then entropy,lower,upper,method.
  void write_csv(std::ostream& out) const;
  // P2 heatmap over [0, log(b+1)]; failed cells are black.
  void write_pgm(std::ostream& out) const;
};

ScanGrid grid_scan(const FamilySpec& spec, const ScanOptions& options = {});

struct Isentrope {
  double level = 0.0;
  std::vector<std::vector<std::array<double, 2>>> polylines;
  int components = 0;  // 4-connected components of |value - level| <= band
};

nlohmann::json to_json(const Isentrope& iso);

// Marching-squares contour of a 2-axis grid; saddle cells are resolved by the
// mean of their corners.
Isentrope extract_isentrope(const ScanGrid& grid, double level, double band);

struct SliceReport {
  ScanGrid samples;
  // Certified decreases: a < b with lower(a) > upper(b).
  std::vector<std::pair<std::size_t, std::size_t>> violations;
  // The largest violation (a, b) followed by some c > b with lower(c) > upper(a).
  std::optional<std::array<std::size_t, 3>> dip_then_rise;

  nlohmann::json to_json() const;
};

// Entropy along the single axis of `spec` with the monotonicity report.
SliceReport slice_scan(const FamilySpec& spec, const ScanOptions& options = {});

struct CombWindow {
  int m = 0;
  double t = 0.0;
  int period = 0;
  EntropyEstimate entropy;
  Membership window = Membership::indeterminate;
  bool certified = false;  // membership yes and entropy at baseline
};

struct CombBump {
  int m = 0;  // lies between the windows of m and m+1
  double s = 0.0;
  EntropyEstimate entropy;
  bool certified = false;  // lower bound above baseline + margin
};

struct CombReport {
  double baseline = 0.0;
  std::optional<double> saddle_node;
  std::vector<CombWindow> windows;
  std::vector<CombBump> bumps;
  bool flagged = false;  // some window could not be located
  bool comb = false;     // at least two consecutive certified (window, bump) pairs
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

// Placeholder period in CombSettings::fates for the window period mN+k.
inline constexpr int kWindowPeriod = -1;

struct CombSettings {
  int critical = 1;     // index of the critical point that returns
  int N = 1;            // return period of the parabolic orbit
  int k = 1;            // transfer time
  Interval bracket;     // path parameters to search; windows accumulate at the low end
  // Expected fate of every critical point inside a window (kWindowPeriod,
  // 0 for the boundary, or a fixed period). Empty: the returning point must be
  // attracted to the window cycle and the others are not checked.
  std::vector<ExpectedFate> fates;
  // Where the parabolic orbit pair lives; when set, the saddle-node parameter
  // is located and the search starts just past it.
  std::optional<Interval> pair_window;
  std::optional<double> baseline;  // default: entropy at bracket.lo
  double margin = 0.01;  // bump lower bound must exceed baseline + margin
  double window_slack = 1e-3;  // window entropy within its bracket + slack of baseline
  int grid = 2000;       // sign-change samples per window search
  int bump_samples = 48; // entropy samples per bump before golden-section refinement
  double tol = 0.0;      // entropy tolerance; non-positive means the family default
};

// Windows t_m (the root of g^{mN+k}(c) = c closest to the saddle-node side
// below t_{m-1}) and the entropy bumps s_m between consecutive windows.
CombReport comb_probe(const MapPath& path, const CombSettings& settings, int m_first, int m_last);

struct PaperCheck {
  std::string name;
  bool pass = false;
  std::string expected;
  double got = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct PaperReport {
  std::vector<PaperCheck> checks;

  bool passed() const;
  nlohmann::json to_json() const;
};

// The numerical argument for non-monotone entropy along a critical-value
// slice of the cubic family, check by check.
PaperReport verify_paper(int workers = 1);

}  // namespace isentrope
