#pragma once

// Output formatting and run configuration: CSV with a provenance comment
// line, key=value configuration files, and the typed run configuration that
// both the command line and the files feed into.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sgjunction/dynamics.hpp"
#include "sgjunction/graph.hpp"

namespace sgj {

inline constexpr const char* kToolVersion = "1.0.0";

// Shortest round-trip formatting with 17 significant digits.
inline std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& provenance,
            const std::vector<std::string>& columns)
      : os_(path), columns_(columns.size()) {
    if (!os_) throw ConfigError("cannot open " + path.string() + " for writing");
    os_ << "# " << provenance << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
      os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
  }

  // Cells are either numbers (formatted with fmt17) or preformatted text.
  struct Cell {
    std::string text;
    Cell(double x) : text(fmt17(x)) {}
    Cell(int x) : text(std::to_string(x)) {}
    Cell(long long x) : text(std::to_string(x)) {}
    Cell(std::size_t x) : text(std::to_string(x)) {}
    Cell(const char* s) : text(s) {}
    Cell(std::string s) : text(std::move(s)) {}
  };

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_) throw std::logic_error("CSV row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i)
      os_ << (i ? "," : "") << cells[i].text;
    os_ << "\n";
  }

 private:
  std::ofstream os_;
  std::size_t columns_;
};

enum class Family { Kink, AntiKink, Free };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Kink: return "kink";
    case Family::AntiKink: return "antikink";
    case Family::Free: return "free";
  }
  return "?";
}

enum class Command { Profile, Spectrum, SweepZ, Evolve, ResolventCheck, SelfCheck };

struct ZGrid {
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;

  std::vector<double> points() const {
    std::vector<double> z(n);
    for (std::size_t k = 0; k < n; ++k)
      z[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return z;
  }
  std::string text() const { return fmt17(lo) + ":" + fmt17(hi) + ":" + std::to_string(n); }
};

struct RunConfig {
  Command command = Command::Profile;
  std::array<double, kEdges> speeds{1.0, 1.0, 1.0};
  Orientation orientation = Orientation::TypeI;
  std::optional<double> z;
  std::optional<ZGrid> z_grid;
  Family family = Family::Kink;
  double length = 40.0;
  double spacing = 0.01;
  std::optional<double> dt;       // default spacing / 4
  std::optional<double> t_final;  // default 0.8 L / max c
  double eps = 1e-6;
  SeedMode seed_mode = SeedMode::GroundEigenvector;
  std::uint64_t seed = 12345;
  std::filesystem::path out = "out";
  unsigned jobs = 0;  // 0 means available parallelism
  bool matrix_market = false;
  bool flip_vertex_coupling = false;  // fault injection for self-check

  YJunction junction() const { return YJunction(speeds, orientation); }
  double time_step() const { return dt ? *dt : spacing / 4.0; }
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + key + ": '" + v + "'");
  }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

inline ZGrid parse_z_grid(const std::string& v) {
  const auto parts = split(v, ':');
  if (parts.size() != 3) throw ConfigError("z-grid must be lo:hi:n, got '" + v + "'");
  ZGrid g;
  g.lo = parse_real("z-grid", parts[0]);
  g.hi = parse_real("z-grid", parts[1]);
  const double n = parse_real("z-grid", parts[2]);
  if (n < 1 || n != std::floor(n)) throw ConfigError("z-grid point count must be a positive integer");
  g.n = static_cast<std::size_t>(n);
  if (!(g.lo <= g.hi)) throw ConfigError("z-grid needs lo <= hi");
  return g;
}

// Settings keyed by long flag name without the dashes.
using Settings = std::map<std::string, std::string>;

inline Settings read_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  Settings s;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    s[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return s;
}

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& v) {
  if (key == "speeds") {
    const auto parts = split(v, ',');
    if (parts.size() != kEdges) throw ConfigError("speeds must be c1,c2,c3");
    for (std::size_t j = 0; j < kEdges; ++j) cfg.speeds[j] = parse_real(key, parts[j]);
    YJunction check(cfg.speeds);  // validates positivity
  } else if (key == "type") {
    if (v == "I") cfg.orientation = Orientation::TypeI;
    else if (v == "II") cfg.orientation = Orientation::TypeII;
    else throw ConfigError("type must be I or II");
  } else if (key == "z") {
    cfg.z = parse_real(key, v);
  } else if (key == "z-grid") {
    cfg.z_grid = parse_z_grid(v);
  } else if (key == "family") {
    if (v == "kink") cfg.family = Family::Kink;
    else if (v == "antikink") cfg.family = Family::AntiKink;
    else if (v == "free") cfg.family = Family::Free;
    else throw ConfigError("family must be kink, antikink or free");
  } else if (key == "length") {
    cfg.length = parse_real(key, v);
  } else if (key == "spacing") {
    cfg.spacing = parse_real(key, v);
  } else if (key == "dt") {
    cfg.dt = parse_real(key, v);
  } else if (key == "tfinal") {
    cfg.t_final = parse_real(key, v);
  } else if (key == "eps") {
    cfg.eps = parse_real(key, v);
  } else if (key == "seed-mode") {
    if (v == "ground") cfg.seed_mode = SeedMode::GroundEigenvector;
    else if (v == "second") cfg.seed_mode = SeedMode::SecondEigenvector;
    else if (v == "random") cfg.seed_mode = SeedMode::RandomSymmetric;
    else throw ConfigError("seed-mode must be ground, second or random");
  } else if (key == "seed") {
    const double s = parse_real(key, v);
    if (s < 0 || s != std::floor(s)) throw ConfigError("seed must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "out") {
    cfg.out = v;
  } else if (key == "jobs") {
    const double j = parse_real(key, v);
    if (j < 0 || j != std::floor(j)) throw ConfigError("jobs must be a non-negative integer");
    cfg.jobs = static_cast<unsigned>(j);
  } else if (key == "matrix-market") {
    cfg.matrix_market = v == "1" || v == "true";
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

// File settings first, then flags on top.
inline RunConfig make_config(Command cmd, const Settings& file, const Settings& flags) {
  RunConfig cfg;
  cfg.command = cmd;
  for (const auto& [k, v] : file) apply_setting(cfg, k, v);
  for (const auto& [k, v] : flags) apply_setting(cfg, k, v);
  if (!(cfg.length > 0.0) || !(cfg.spacing > 0.0))
    throw ConfigError("length and spacing must be positive");
  if (cfg.dt && !(*cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(cfg.eps > 0.0)) throw ConfigError("eps must be positive");
  return cfg;
}

inline std::string speeds_text(const std::array<double, kEdges>& c) {
  return fmt17(c[0]) + ";" + fmt17(c[1]) + ";" + fmt17(c[2]);
}

// Comment line content recording the run parameters.
inline std::string provenance(const std::string& z_text, const RunConfig& cfg,
                              double length, std::optional<double> dt) {
  return "Z=" + z_text + " c=" + speeds_text(cfg.speeds) +
         " type=" + (cfg.orientation == Orientation::TypeI ? "I" : "II") +
         " L=" + fmt17(length) + " h=" + fmt17(cfg.spacing) +
         " dt=" + (dt ? fmt17(*dt) : std::string("na")) + " version=" + kToolVersion;
}

}  // namespace sgj
