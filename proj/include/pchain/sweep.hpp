#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pchain/couplings.hpp"
#include "pchain/errors.hpp"
#include "pchain/fidelity_model.hpp"
#include "pchain/parallel.hpp"
#include "pchain/trap_model.hpp"

namespace pchain {

/// Linearly spaced axis "start:stop:count", or a single value.
struct SweepAxis {
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 1;

  static SweepAxis parse(std::string_view text) {
    auto number = [&](std::string_view s) {
      while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
      while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError("bad number in sweep axis: '" + std::string(s) + "'");
      return v;
    };
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
      const std::size_t next = text.find(':', pos);
      parts.push_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
    if (parts.size() == 1) {
      const double v = number(parts[0]);
      return {v, v, 1};
    }
    if (parts.size() != 3) throw ConfigError("sweep axis must be 'start:stop:count' or a single value");
    const double n = number(parts[2]);
    if (!(n >= 1.0) || n != std::floor(n) || n > 1e9) throw ConfigError("sweep axis count must be a positive integer");
    SweepAxis a{number(parts[0]), number(parts[1]), static_cast<std::size_t>(n)};
    if (a.count == 1 && a.start != a.stop) throw ConfigError("a one-point sweep axis needs start == stop");
    return a;
  }

  double at(std::size_t i) const {
    if (count == 1) return start;
    return start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
};

inline constexpr std::size_t kMaxSweepPoints = 1000000;

/// Grid over gradient, spacing, axial and cyclotron frequency. Inputs in
/// T/m, m, and angular frequency.
struct SweepSpec {
  SweepAxis b;
  SweepAxis d;
  SweepAxis omega_z;
  SweepAxis omega_c;
  AnomalyMode mode = AnomalyMode::ExactG;
  std::optional<double> temperature;  // K; thermal axial/cyclotron occupations
  ThermalOccupations occupations;     // used when no temperature is given (l_bar always)
  double pareto_min_fidelity = 0.99;
  std::size_t max_points = kMaxSweepPoints;

  std::size_t size() const { return b.count * d.count * omega_z.count * omega_c.count; }
};

struct SweepRow {
  double b = 0.0, d = 0.0, omega_z = 0.0, omega_c = 0.0;
  double jxy = std::numeric_limits<double>::quiet_NaN();
  double t_ex = std::numeric_limits<double>::quiet_NaN();
  double fidelity = std::numeric_limits<double>::quiet_NaN();
  double e_r = std::numeric_limits<double>::quiet_NaN();
  double eps2_e_s = std::numeric_limits<double>::quiet_NaN();
  bool regime_ok = false;
  bool pareto = false;
  std::string note;
};

/// One grid point. Regime problems are recorded in the row, not thrown.
inline SweepRow sweep_point(const SweepSpec& spec, double b, double d, double omega_z, double omega_c,
                            const PhysicalConstants& c = {}) {
  SweepRow row{b, d, omega_z, omega_c};
  try {
    const DerivedQuantities dq = derive_quantities(TrapParams::from_frequencies(omega_c, omega_z, b, spec.mode, c), c,
                                                   HierarchyCheck::ReportOnly);
    ThermalOccupations occ = spec.occupations;
    if (spec.temperature) occ = ThermalOccupations::from_temperature(dq, *spec.temperature, occ.l_bar, c);
    const PairCoupling p = pair_coupling(dq, dq, d, c);
    row.jxy = p.jxy;
    row.regime_ok = validate_regime(dq, p.xi, occ.l_bar).pass && dq.warnings.empty();
    if (p.jxy > 0.0) {
      row.t_ex = swap_time(p.jxy);
      const FidelityReport f = total_fidelity(dq, occ, p.jxy, 2, p.xi);
      row.fidelity = f.total;
      row.e_r = f.e_r;
      row.eps2_e_s = f.eps2_e_s;
    } else {
      row.note = "zero coupling";
    }
  } catch (const Error& e) {
    row.regime_ok = false;
    row.note = e.what();
  }
  return row;
}

/// Evaluates the grid concurrently; rows come back in fixed order
/// (b slowest, then d, omega_z, omega_c fastest). For each d, the feasible
/// row (F >= pareto_min_fidelity, regime ok) with the largest Jxy is marked.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, const PhysicalConstants& c = {}) {
  const std::size_t total = spec.size();
  if (total > spec.max_points || total > kMaxSweepPoints)
    throw GridTooLarge("sweep grid has " + std::to_string(total) + " points (limit " +
                       std::to_string(std::min(spec.max_points, kMaxSweepPoints)) + ")");
  std::vector<SweepRow> rows(total);
  const std::size_t nd = spec.d.count, nz = spec.omega_z.count, nc = spec.omega_c.count;
  parallel_for(total, [&](std::size_t k) {
    const std::size_t ic = k % nc;
    const std::size_t iz = (k / nc) % nz;
    const std::size_t id = (k / (nc * nz)) % nd;
    const std::size_t ib = k / (nc * nz * nd);
    rows[k] = sweep_point(spec, spec.b.at(ib), spec.d.at(id), spec.omega_z.at(iz), spec.omega_c.at(ic), c);
  });

  std::map<double, std::size_t> best;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const SweepRow& r = rows[k];
    if (!r.regime_ok || !(r.fidelity >= spec.pareto_min_fidelity)) continue;
    const auto it = best.find(r.d);
    if (it == best.end() || r.jxy > rows[it->second].jxy) best[r.d] = k;
  }
  for (const auto& [d, k] : best) rows[k].pareto = true;
  return rows;
}

}  // namespace pchain
