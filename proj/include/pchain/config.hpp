#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pchain/constants.hpp"
#include "pchain/couplings.hpp"
#include "pchain/errors.hpp"
#include "pchain/fidelity_model.hpp"
#include "pchain/microscopic_oracle.hpp"
#include "pchain/oracle_suite.hpp"
#include "pchain/sweep.hpp"
#include "pchain/trap_model.hpp"

namespace pchain {

/// Trap inputs as written in a config section. Frequencies are cyclic (Hz).
struct TrapInput {
  std::optional<double> fc_hz, B0, fz_hz, V0, ell, b;

  void merge_from(const TrapInput& o) {
    for (auto [dst, src] : {std::pair{&fc_hz, &o.fc_hz}, {&B0, &o.B0}, {&fz_hz, &o.fz_hz}, {&V0, &o.V0},
                            {&ell, &o.ell}, {&b, &o.b}})
      if (*src) *dst = *src;
  }
};

struct TransferConfig {
  double theta = std::numbers::pi / 2;
  double phi = 0.0;
  double t_stop_tex = 2.0;  // window length in units of the nearest-neighbour swap time
  std::optional<double> t_stop;  // s; overrides t_stop_tex
  std::size_t points = 201;
  bool bloch = false;
  bool fast_path = false;  // single-excitation solver even when N fits the dense limit
};

struct RunConfig {
  AnomalyMode mode = AnomalyMode::ExactG;
  Orientation orientation = Orientation::AxialZ;
  PhysicalConstants constants;

  TrapInput trap;
  std::map<std::size_t, TrapInput> sites;  // 1-based overrides

  std::size_t n_sites = 2;
  std::optional<double> spacing;  // m
  std::vector<double> positions;  // m
  bool nearest_neighbor_only = false;
  bool force = false;
  std::size_t max_sites = kDefaultMaxSites;

  std::optional<double> temperature;  // K
  ThermalOccupations occupations;

  TransferConfig transfer;

  std::map<std::string, std::string> sweep_axes;  // b_T_per_m, d_um, fz_Hz, fc_Hz
  double pareto_min_fidelity = 0.99;
  std::size_t sweep_max_points = kMaxSweepPoints;

  OracleSuiteConfig oracle;

  bool has_trap() const { return trap.fc_hz || trap.B0 || trap.fz_hz || trap.V0 || trap.b; }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not a number: '" + text + "'");
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size() || !std::isfinite(v)) throw ConfigError("key '" + key + "': not a number: '" + text + "'");
  return v;
}

inline std::size_t parse_count(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (v < 0.0 || v != std::floor(v) || v > 1e12) throw ConfigError("key '" + key + "': expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline bool parse_bool(const std::string& key, std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

inline void check_keys(const boost::property_tree::ptree& section, const std::string& name,
                       const std::set<std::string>& allowed) {
  for (const auto& [key, value] : section)
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + name + "]");
}

inline TrapInput parse_trap(const boost::property_tree::ptree& s, const std::string& name) {
  check_keys(s, name, {"fc_Hz", "B0_T", "fz_Hz", "V0_V", "ell_m", "b_T_per_m"});
  TrapInput t;
  auto get = [&](const char* key, std::optional<double>& dst) {
    if (auto v = s.get_optional<std::string>(key)) dst = parse_double(key, *v);
  };
  get("fc_Hz", t.fc_hz);
  get("B0_T", t.B0);
  get("fz_Hz", t.fz_hz);
  get("V0_V", t.V0);
  get("ell_m", t.ell);
  get("b_T_per_m", t.b);
  return t;
}

}  // namespace detail

inline AnomalyMode parse_mode(const std::string& s) {
  if (s == "exact" || s == "ExactG") return AnomalyMode::ExactG;
  if (s == "approx" || s == "Approx1e3") return AnomalyMode::Approx1e3;
  throw ConfigError("mode must be 'exact' or 'approx', got '" + s + "'");
}

inline Orientation parse_orientation(const std::string& s) {
  if (s == "z" || s == "AxialZ") return Orientation::AxialZ;
  if (s == "x" || s == "TransverseX") return Orientation::TransverseX;
  throw ConfigError("orientation must be 'z' or 'x', got '" + s + "'");
}

/// INI-style config; every section and key is checked against the schema.
inline RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  RunConfig cfg;
  using detail::parse_bool;
  using detail::parse_count;
  using detail::parse_double;

  for (const auto& [name, section] : tree) {
    if (!section.data().empty()) throw ConfigError("key '" + name + "' outside any section");
    auto str = [&](const char* key) { return section.get_optional<std::string>(key); };

    if (name == "run") {
      detail::check_keys(section, name, {"mode", "orientation"});
      if (auto v = str("mode")) cfg.mode = parse_mode(*v);
      if (auto v = str("orientation")) cfg.orientation = parse_orientation(*v);
    } else if (name == "constants") {
      detail::check_keys(section, name, {"e", "m_e", "hbar", "eps0", "g", "k_B"});
      auto& k = cfg.constants;
      for (auto [key, dst] : {std::pair{"e", &k.e}, {"m_e", &k.m_e}, {"hbar", &k.hbar}, {"eps0", &k.eps0},
                              {"g", &k.g}, {"k_B", &k.k_B}})
        if (auto v = str(key)) *dst = parse_double(key, *v);
      k.validate();
    } else if (name == "trap") {
      cfg.trap = detail::parse_trap(section, name);
    } else if (name.rfind("site.", 0) == 0) {
      const std::size_t idx = parse_count(name, name.substr(5));
      if (idx < 1) throw ConfigError("site sections are numbered from 1");
      cfg.sites[idx] = detail::parse_trap(section, name);
    } else if (name == "chain") {
      detail::check_keys(section, name,
                         {"n_sites", "spacing_um", "positions_um", "nearest_neighbor_only", "force", "max_sites"});
      if (auto v = str("n_sites")) cfg.n_sites = parse_count("n_sites", *v);
      if (auto v = str("spacing_um")) cfg.spacing = 1e-6 * parse_double("spacing_um", *v);
      if (auto v = str("positions_um")) {
        cfg.positions = detail::parse_list("positions_um", *v);
        for (double& p : cfg.positions) p *= 1e-6;
      }
      if (auto v = str("nearest_neighbor_only")) cfg.nearest_neighbor_only = parse_bool("nearest_neighbor_only", *v);
      if (auto v = str("force")) cfg.force = parse_bool("force", *v);
      if (auto v = str("max_sites")) cfg.max_sites = parse_count("max_sites", *v);
    } else if (name == "thermal") {
      detail::check_keys(section, name, {"temperature_mK", "temperature_K", "k_bar", "n_bar", "l_bar"});
      if (auto v = str("temperature_mK")) cfg.temperature = 1e-3 * parse_double("temperature_mK", *v);
      if (auto v = str("temperature_K")) {
        if (cfg.temperature) throw ConfigError("give temperature_mK or temperature_K, not both");
        cfg.temperature = parse_double("temperature_K", *v);
      }
      if (cfg.temperature && (str("k_bar") || str("n_bar")))
        throw ConfigError("give a temperature or k_bar/n_bar, not both");
      if (auto v = str("k_bar")) cfg.occupations.k_bar = parse_double("k_bar", *v);
      if (auto v = str("n_bar")) cfg.occupations.n_bar = parse_double("n_bar", *v);
      if (auto v = str("l_bar")) cfg.occupations.l_bar = parse_double("l_bar", *v);
      cfg.occupations.validate();
      if (cfg.temperature && !(*cfg.temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    } else if (name == "transfer") {
      detail::check_keys(section, name, {"theta", "phi", "t_stop_tex", "t_stop_s", "points", "bloch", "fast_path"});
      auto& t = cfg.transfer;
      if (auto v = str("theta")) t.theta = parse_double("theta", *v);
      if (auto v = str("phi")) t.phi = parse_double("phi", *v);
      if (auto v = str("t_stop_tex")) t.t_stop_tex = parse_double("t_stop_tex", *v);
      if (auto v = str("t_stop_s")) t.t_stop = parse_double("t_stop_s", *v);
      if (auto v = str("points")) t.points = parse_count("points", *v);
      if (auto v = str("bloch")) t.bloch = parse_bool("bloch", *v);
      if (auto v = str("fast_path")) t.fast_path = parse_bool("fast_path", *v);
      if (t.points < 1) throw ConfigError("transfer.points must be >= 1");
    } else if (name == "sweep") {
      detail::check_keys(section, name,
                         {"b_T_per_m", "d_um", "fz_Hz", "fc_Hz", "pareto_min_fidelity", "max_points"});
      for (const char* axis : {"b_T_per_m", "d_um", "fz_Hz", "fc_Hz"})
        if (auto v = str(axis)) cfg.sweep_axes[axis] = *v;
      if (auto v = str("pareto_min_fidelity")) cfg.pareto_min_fidelity = parse_double("pareto_min_fidelity", *v);
      if (auto v = str("max_points")) cfg.sweep_max_points = parse_count("max_points", *v);
    } else if (name == "oracle") {
      detail::check_keys(section, name,
                         {"epsilon", "ratio", "fz_Hz", "d_um", "n_max", "k_max", "cutoff_steps", "tolerance",
                          "exponent_low", "exponent_high", "check_ising"});
      auto& o = cfg.oracle;
      if (auto v = str("epsilon")) o.epsilon = parse_double("epsilon", *v);
      if (auto v = str("ratio")) o.ratio = parse_double("ratio", *v);
      if (auto v = str("fz_Hz")) o.omega_z = hz_to_angular(parse_double("fz_Hz", *v));
      if (auto v = str("d_um")) o.distance = 1e-6 * parse_double("d_um", *v);
      if (auto v = str("n_max")) o.trunc.n_max = parse_count("n_max", *v);
      if (auto v = str("k_max")) o.trunc.k_max = parse_count("k_max", *v);
      if (auto v = str("cutoff_steps")) o.cutoff_steps = parse_count("cutoff_steps", *v);
      if (auto v = str("tolerance")) o.tolerance = parse_double("tolerance", *v);
      if (auto v = str("exponent_low")) o.exponent_low = parse_double("exponent_low", *v);
      if (auto v = str("exponent_high")) o.exponent_high = parse_double("exponent_high", *v);
      if (auto v = str("check_ising")) o.check_ising = parse_bool("check_ising", *v);
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

/// Trap parameters for site i (0-based): [trap] merged with [site.(i+1)].
inline TrapParams trap_params(const RunConfig& cfg, std::size_t site = 0) {
  TrapInput t = cfg.trap;
  if (const auto it = cfg.sites.find(site + 1); it != cfg.sites.end()) t.merge_from(it->second);

  TrapParams p;
  p.anomaly_mode = cfg.mode;
  if (t.fc_hz && t.B0) throw ConfigError("give fc_Hz or B0_T, not both");
  if (t.fc_hz) p.B0 = hz_to_angular(*t.fc_hz) * cfg.constants.m_e / cfg.constants.e;
  else if (t.B0) p.B0 = *t.B0;
  else throw ConfigError("trap needs fc_Hz or B0_T");

  if (t.fz_hz && (t.V0 || t.ell)) throw ConfigError("give fz_Hz or V0_V + ell_m, not both");
  if (t.fz_hz) p.axial = AxialFrequency{hz_to_angular(*t.fz_hz)};
  else if (t.V0 && t.ell) p.axial = ElectrodeSpec{*t.V0, *t.ell};
  else throw ConfigError("trap needs fz_Hz or both V0_V and ell_m");

  p.b = t.b.value_or(0.0);
  return p;
}

inline ChainGeometry chain_geometry(const RunConfig& cfg) {
  if (!cfg.positions.empty()) {
    if (cfg.spacing) throw ConfigError("give spacing_um or positions_um, not both");
    return {cfg.orientation, cfg.positions};
  }
  if (!cfg.spacing) throw ConfigError("chain needs spacing_um or positions_um");
  return ChainGeometry::uniform(cfg.orientation, cfg.n_sites, *cfg.spacing);
}

inline ThermalOccupations occupations_for(const RunConfig& cfg, const DerivedQuantities& dq) {
  if (cfg.temperature)
    return ThermalOccupations::from_temperature(dq, *cfg.temperature, cfg.occupations.l_bar, cfg.constants);
  return cfg.occupations;
}

}  // namespace pchain
