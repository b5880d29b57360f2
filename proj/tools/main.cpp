#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "isentrope/bifurcation.hpp"
#include "isentrope/entropy.hpp"
#include "isentrope/errors.hpp"
#include "isentrope/families.hpp"
#include "isentrope/format.hpp"
#include "isentrope/scan.hpp"

using namespace isentrope;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

int default_workers() {
  if (const char* env = std::getenv("ISENTROPE_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("ISENTROPE_WORKERS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

// Everything a subcommand may read; each subcommand registers the subset it uses.
struct RunConfig {
  std::string family = "tent";
  int b = 1;
  int eps = -1;
  std::vector<double> v;
  std::vector<double> zeta;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::string method = "auto";
  double tol = 0.0;
  int order = 256;
  int n_max = 24;
  int workers = 1;
  std::string out;
  std::string heatmap;
  std::vector<std::string> ranges;
  double level = 0.0;
  double band = 0.01;
  int period = 1;
  // comb
  std::vector<double> direction;
  std::string bracket;
  std::string m_range = "1:4";
  int critical = 1;
  int N = 1;
  int k = 1;
  double margin = 0.01;
  std::optional<double> baseline;
  int grid = CombSettings{}.grid;
  int bump_samples = CombSettings{}.bump_samples;
  std::string fates;
  std::string pair_window;
};

void add_family(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--family", cfg.family, "tent, stunted, cubic or quartic")
      ->check(CLI::IsMember({"tent", "stunted", "cubic", "quartic"}));
  sub.add_option("--b", cfg.b, "number of interior critical points")->check(CLI::PositiveNumber);
  sub.add_option("--eps", cfg.eps, "value at -1 (+1 or -1)")->check(CLI::IsMember({-1, 1}));
  sub.add_option("--v", cfg.v, "critical values v1,...,vb")->delimiter(',');
  sub.add_option("--zeta", cfg.zeta, "zeta coordinates (instead of --v)")->delimiter(',');
  sub.add_option("--alpha", cfg.alpha, "cubic coefficient alpha (with --beta)");
  sub.add_option("--beta", cfg.beta, "cubic coefficient beta (with --alpha)");
}

void add_method(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--method", cfg.method, "auto, lap, kneading or markov")
      ->check(CLI::IsMember({"auto", "lap", "kneading", "markov"}));
  sub.add_option("--tol", cfg.tol, "entropy tolerance (default: family default)");
  sub.add_option("--order", cfg.order, "kneading series order")->check(CLI::PositiveNumber);
  sub.add_option("--n-max", cfg.n_max, "lap depth")->check(CLI::Range(2, 4096));
}

void add_workers(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--workers", cfg.workers, "worker threads (default: ISENTROPE_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
}

ModalShape shape_of(const RunConfig& cfg) { return {cfg.b, cfg.eps}; }

std::vector<double> base_values(const RunConfig& cfg) {
  const auto shape = shape_of(cfg);
  if (!cfg.v.empty() && !cfg.zeta.empty()) throw UsageError("give either --v or --zeta, not both");
  if (!cfg.zeta.empty()) {
    if (static_cast<int>(cfg.zeta.size()) != cfg.b) throw UsageError("--zeta needs b values");
    return from_zeta(shape, {cfg.zeta}).v;
  }
  if (!cfg.v.empty() && static_cast<int>(cfg.v.size()) != cfg.b) throw UsageError("--v needs b values");
  return cfg.v;
}

IntervalMap single_map(const RunConfig& cfg) {
  const auto kind = map_kind_from_string(cfg.family);
  if (cfg.alpha || cfg.beta) {
    if (kind != MapKind::cubic || !cfg.alpha || !cfg.beta)
      throw UsageError("--alpha and --beta go together with --family cubic");
    return make_cubic(*cfg.alpha, *cfg.beta);
  }
  const auto v = base_values(cfg);
  if (v.empty()) throw UsageError("give the map by --v or --zeta");
  const auto shape = shape_of(cfg);
  switch (kind) {
    case MapKind::tent: return make_tent(shape, {v});
    case MapKind::stunted: return make_stunted(shape, {v});
    default: return map_from_critical_values(shape, {v});
  }
}

FamilySpec family_spec(const RunConfig& cfg) {
  FamilySpec spec;
  spec.kind = map_kind_from_string(cfg.family);
  spec.shape = shape_of(cfg);
  for (const auto& r : cfg.ranges) spec.axes.push_back(parse_axis(r));
  if (spec.axes.empty()) throw UsageError("give at least one --range name=lo:hi:count");
  const bool direct = std::any_of(spec.axes.begin(), spec.axes.end(), [](const Axis& a) {
    return a.name == "alpha" || a.name == "beta";
  });
  if (direct) {
    spec.base = {cfg.alpha.value_or(4.0), cfg.beta.value_or(0.0)};
  } else {
    spec.base = base_values(cfg);
    // Coordinates not on an axis need a value; swept ones only a placeholder.
    if (spec.base.empty()) {
      spec.base.assign(cfg.b, 0.0);
      std::set<std::string> swept;
      for (const auto& a : spec.axes) swept.insert(a.name);
      for (int i = 1; i <= cfg.b; ++i)
        if (!swept.count("v" + std::to_string(i)) && !swept.count("zeta" + std::to_string(i)))
          throw UsageError("coordinate " + std::to_string(i) + " is neither swept nor given by --v/--zeta");
    }
  }
  return spec;
}

ScanOptions scan_options(const RunConfig& cfg) {
  ScanOptions o;
  o.method = method_from_string(cfg.method);
  o.settings.tol = cfg.tol;
  o.settings.order = cfg.order;
  o.settings.n_max = cfg.n_max;
  o.workers = cfg.workers;
  return o;
}

Interval parse_pair(const std::string& text, const std::string& what) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError(what + " must look like lo:hi, got '" + text + "'");
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError(what + " must look like lo:hi, got '" + text + "'");
  }
}

std::vector<ExpectedFate> parse_fates(const std::string& text) {
  std::vector<ExpectedFate> fates;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "w") {
      fates.push_back({kWindowPeriod});
    } else if (item == "b") {
      fates.push_back(ExpectedFate::boundary());
    } else {
      try {
        const int p = std::stoi(item);
        if (p < 1) throw std::invalid_argument(item);
        fates.push_back(ExpectedFate::attracted(p));
      } catch (const std::exception&) {
        throw UsageError("--fates entries are w, b or a positive period, got '" + item + "'");
      }
    }
  }
  return fates;
}

// Writes to the named file, or stdout when the name is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << text;
}

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// Flat `key = value` file. Keys are long option names without dashes, plus
// `command`. Repeated keys append (for --range).
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int number = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(number) + ": expected key = value");
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return entries;
}

// Splices config entries in front of the command-line flags; a key given on
// the command line replaces every file entry for it.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app) {
  std::string config_path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;

  const auto entries = read_config(config_path);
  std::string command;
  if (!rest.empty() && app.get_subcommand_no_throw(rest.front())) command = rest.front();
  for (const auto& [key, value] : entries)
    if (key == "command") {
      if (!command.empty() && command != value && rest.empty())
        throw UsageError("config names two commands");
      if (command.empty()) command = value;
    }
  if (command.empty()) throw UsageError("no command given on the command line or in the config");
  CLI::App* sub = app.get_subcommand_no_throw(command);
  if (!sub) throw UsageError("unknown command '" + command + "'");

  std::set<std::string> given;
  for (const auto& a : rest)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));

  std::vector<std::string> merged{command};
  for (const auto& [key, value] : entries) {
    if (key == "command") continue;
    if (!sub->get_option_no_throw("--" + key))
      throw UsageError("unknown config key '" + key + "' for command '" + command + "'");
    if (given.count(key)) continue;
    merged.push_back("--" + key);
    merged.push_back(value);
  }
  const bool leading_command = !rest.empty() && rest.front() == command;
  merged.insert(merged.end(), rest.begin() + (leading_command ? 1 : 0), rest.end());
  return merged;
}

MapPath linear_path(const RunConfig& cfg) {
  const auto base = base_values(cfg);
  if (base.empty()) throw UsageError("comb needs the base point --v");
  if (cfg.direction.size() != base.size()) throw UsageError("--dir needs b components");
  const auto kind = map_kind_from_string(cfg.family);
  const auto shape = shape_of(cfg);
  const auto direction = cfg.direction;
  return [=](double t) {
    CriticalValues v{base};
    for (std::size_t i = 0; i < v.v.size(); ++i) v.v[i] += t * direction[i];
    switch (kind) {
      case MapKind::tent: return make_tent(shape, v);
      case MapKind::stunted: return make_stunted(shape, v);
      default: return map_from_critical_values(shape, v);
    }
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological entropy of multimodal interval maps"};
  app.require_subcommand(1);
  RunConfig cfg;
  try {
    cfg.workers = default_workers();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::string config_help;
  app.add_option("--config", config_help, "flat key = value file; flags override it");

  auto* entropy_cmd = app.add_subcommand("entropy", "entropy of one map");
  add_family(*entropy_cmd, cfg);
  add_method(*entropy_cmd, cfg);
  entropy_cmd->add_option("--out", cfg.out, "JSON output file (default stdout)");

  auto* scan_cmd = app.add_subcommand("scan", "entropy over a parameter grid");
  add_family(*scan_cmd, cfg);
  add_method(*scan_cmd, cfg);
  add_workers(*scan_cmd, cfg);
  scan_cmd->add_option("--range", cfg.ranges, "axis name=lo:hi:count (repeat per axis)")->required();
  scan_cmd->add_option("--out", cfg.out, "CSV output file (default stdout)");
  scan_cmd->add_option("--heatmap", cfg.heatmap, "PGM heatmap file (2-axis grids)");

  auto* slice_cmd = app.add_subcommand("slice", "monotonicity report along one axis");
  add_family(*slice_cmd, cfg);
  add_method(*slice_cmd, cfg);
  add_workers(*slice_cmd, cfg);
  slice_cmd->add_option("--range", cfg.ranges, "axis name=lo:hi:count")->required();
  slice_cmd->add_option("--out", cfg.out, "JSON output file (default stdout)");

  auto* iso_cmd = app.add_subcommand("isentrope", "level set of entropy on a 2-axis grid");
  add_family(*iso_cmd, cfg);
  add_method(*iso_cmd, cfg);
  add_workers(*iso_cmd, cfg);
  iso_cmd->add_option("--range", cfg.ranges, "axis name=lo:hi:count (twice)")->required();
  iso_cmd->add_option("--level", cfg.level, "entropy level h")->required();
  iso_cmd->add_option("--band", cfg.band, "band half-width for component counting");
  iso_cmd->add_option("--out", cfg.out, "JSON output file (default stdout)");

  auto* comb_cmd = app.add_subcommand("comb", "windows and bumps along a path toward a saddle-node");
  add_family(*comb_cmd, cfg);
  comb_cmd->add_option("--dir", cfg.direction, "path direction: v(t) = v + t * dir")->delimiter(',')->required();
  comb_cmd->add_option("--bracket", cfg.bracket, "path parameters lo:hi beyond the saddle-node")->required();
  comb_cmd->add_option("--m", cfg.m_range, "first:last return count");
  comb_cmd->add_option("--critical", cfg.critical, "index of the returning critical point");
  comb_cmd->add_option("--N", cfg.N, "period of the parabolic orbit")->check(CLI::PositiveNumber);
  comb_cmd->add_option("--k", cfg.k, "transfer time")->check(CLI::NonNegativeNumber);
  comb_cmd->add_option("--margin", cfg.margin, "bumps must exceed baseline + margin");
  comb_cmd->add_option("--baseline", cfg.baseline, "baseline entropy (default: first window)");
  comb_cmd->add_option("--grid", cfg.grid, "sign-change samples per window search")->check(CLI::PositiveNumber);
  comb_cmd->add_option("--bump-samples", cfg.bump_samples, "entropy samples per bump")->check(CLI::PositiveNumber);
  comb_cmd->add_option("--fates", cfg.fates, "fate per critical point in a window: w (window cycle), b (boundary) or a period, comma separated");
  comb_cmd->add_option("--pair-window", cfg.pair_window, "x-interval lo:hi holding the parabolic orbit pair");
  comb_cmd->add_option("--tol", cfg.tol, "entropy tolerance");
  comb_cmd->add_option("--out", cfg.out, "JSON output file (default stdout)");

  auto* verify_cmd = app.add_subcommand("verify-paper", "numerical checks for the cubic construction");
  add_workers(*verify_cmd, cfg);
  verify_cmd->add_option("--out", cfg.out, "JSON report file (default stdout)");

  auto* orbit_cmd = app.add_subcommand("orbit", "periodic orbits and critical fates of one map");
  add_family(*orbit_cmd, cfg);
  orbit_cmd->add_option("--period", cfg.period, "solve f^N(x) = x for this N")->check(CLI::PositiveNumber);
  orbit_cmd->add_option("--out", cfg.out, "JSON output file (default stdout)");

  std::vector<std::string> args;
  try {
    args = merge_config(std::vector<std::string>(argv + 1, argv + argc), app);
    std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (entropy_cmd->parsed()) {
      const auto map = single_map(cfg);
      EntropySettings s;
      s.tol = cfg.tol;
      s.order = cfg.order;
      s.n_max = cfg.n_max;
      const auto e = entropy(map, method_from_string(cfg.method), s);
      emit(cfg.out, json_text(to_json(e)));
    } else if (scan_cmd->parsed()) {
      const auto grid = grid_scan(family_spec(cfg), scan_options(cfg));
      std::ostringstream csv;
      grid.write_csv(csv);
      emit(cfg.out, csv.str());
      if (!cfg.heatmap.empty()) {
        std::ostringstream pgm;
        grid.write_pgm(pgm);
        emit(cfg.heatmap, pgm.str());
      }
      for (const auto& f : grid.failures)
        std::cerr << "cell " << f.index << ": " << f.tag << ": " << f.message << "\n";
    } else if (slice_cmd->parsed()) {
      emit(cfg.out, json_text(slice_scan(family_spec(cfg), scan_options(cfg)).to_json()));
    } else if (iso_cmd->parsed()) {
      const auto grid = grid_scan(family_spec(cfg), scan_options(cfg));
      emit(cfg.out, json_text(to_json(extract_isentrope(grid, cfg.level, cfg.band))));
    } else if (comb_cmd->parsed()) {
      CombSettings s;
      s.critical = cfg.critical;
      s.N = cfg.N;
      s.k = cfg.k;
      s.bracket = parse_pair(cfg.bracket, "--bracket");
      s.margin = cfg.margin;
      s.baseline = cfg.baseline;
      s.grid = cfg.grid;
      s.bump_samples = cfg.bump_samples;
      s.tol = cfg.tol;
      s.fates = parse_fates(cfg.fates);
      if (!cfg.pair_window.empty()) s.pair_window = parse_pair(cfg.pair_window, "--pair-window");
      const auto m = parse_pair(cfg.m_range, "--m");
      const auto report = comb_probe(linear_path(cfg), s, static_cast<int>(m.lo), static_cast<int>(m.hi));
      emit(cfg.out, json_text(report.to_json()));
      if (!report.comb) return kExitCheckFailed;
    } else if (verify_cmd->parsed()) {
      const auto report = verify_paper(cfg.workers);
      emit(cfg.out, json_text(report.to_json()));
      for (const auto& c : report.checks)
        std::cerr << (c.pass ? "pass " : "FAIL ") << c.name << ": got " << format_double(c.got)
                  << ", expected " << c.expected << "\n";
      if (!report.passed()) return kExitCheckFailed;
    } else if (orbit_cmd->parsed()) {
      const auto map = single_map(cfg);
      const auto orbits = periodic_orbits(map, cfg.period);
      nlohmann::json j;
      j["period"] = cfg.period;
      j["partial"] = orbits.partial;
      j["orbits"] = nlohmann::json::array();
      for (const auto& o : orbits.points) j["orbits"].push_back(to_json(o));
      j["critical_fates"] = nlohmann::json::array();
      for (int i = 1; i <= map.modality(); ++i) j["critical_fates"].push_back(to_json(critical_fate(map, i)));
      emit(cfg.out, json_text(j));
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return 0;
}
