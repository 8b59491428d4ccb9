#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "omsense/spectra.hpp"

namespace omsense {

struct FrequencyGrid {
  double start = 0.95;
  double stop = 1.05;
  std::size_t points = 501;

  std::vector<double> samples() const {
    std::vector<double> out(points);
    const double h = (stop - start) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
      out[i] = start + h * static_cast<double>(i);
    }
    out.back() = stop;  // exact endpoint regardless of rounding
    return out;
  }
};

inline FrequencyGrid validated(FrequencyGrid g) {
  if (!std::isfinite(g.start) || !std::isfinite(g.stop)) {
    throw invalid_parameter("grid bounds must be finite");
  }
  if (!(g.start < g.stop)) throw invalid_parameter("grid start must be < stop");
  if (g.points < 2) throw invalid_parameter("grid points must be >= 2");
  return g;
}

struct SpectrumSeries {
  SystemParams params;
  double s_fex = 0.0;
  std::vector<double> grid;
  std::vector<SpectrumSample> samples;
  bool stable = true;
  double stability_margin = 0.0;
  std::size_t solve_failures = 0;  // singular solves, marked inline
};

namespace detail {

// Deterministic order-preserving parallel map: results land by index, chunk
// boundaries do not affect values.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned t = 0; t < workers; ++t) {
    const std::size_t lo = static_cast<std::size_t>(t) * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Evaluates the spectral decomposition at every grid point. Singular solves
// are marked (r_m = 0, divergent noise) and counted, never thrown; stability
// is attached as a warning flag.
inline SpectrumSeries frequency_sweep(const SystemParams& p, const FrequencyGrid& grid,
                                      double s_fex = 0.0, unsigned threads = 1) {
  const FrequencyGrid g = validated(grid);
  if (!(s_fex >= 0.0)) throw invalid_parameter("frequency_sweep: s_fex must be >= 0");
  SpectrumSeries out;
  out.params = p;
  out.s_fex = s_fex;
  out.grid = g.samples();
  out.samples.resize(out.grid.size());
  const auto stab = stability_check(drift_matrix(p));
  out.stable = stab.stable;
  out.stability_margin = stab.margin;
  std::vector<unsigned char> failed(out.grid.size(), 0);
  detail::parallel_for(out.grid.size(), threads, [&](std::size_t i) {
    try {
      out.samples[i] = total_spectrum(p, out.grid[i], s_fex);
    } catch (const singular_solve&) {
      SpectrumSample s;
      s.omega = out.grid[i];
      s.r_m = 0.0;
      s.s_th = std::numeric_limits<double>::infinity();
      s.n_add = std::numeric_limits<double>::infinity();
      s.s_total = 0.0;
      s.sql_margin = -std::numeric_limits<double>::infinity();
      out.samples[i] = s;
      failed[i] = 1;
    }
  });
  for (unsigned char f : failed) out.solve_failures += f;
  return out;
}

struct RefinedExtremum {
  enum class Kind { n_add_minimum, r_m_maximum };
  double omega_eff = 0.0;
  double value = 0.0;      // re-evaluated at omega_eff
  Kind kind = Kind::n_add_minimum;
  double refinement = 0.0;  // parabolic offset from the nearest grid point
};

namespace detail {

// Three-point parabola vertex offset from the middle abscissa; 0 when the
// points are not strictly convex (resp. concave for maxima).
inline double parabola_offset(double h, double ya, double yb, double yc) {
  const double denom = ya - 2.0 * yb + yc;
  if (!(denom > 0.0)) return 0.0;
  double off = 0.5 * h * (ya - yc) / denom;
  return std::clamp(off, -h, h);
}

}  // namespace detail

// All strict local minima of N_add over the series (finite samples only),
// each refined by a parabola through the minimum and its two neighbors and
// re-evaluated at the refined frequency. Sorted by omega.
inline std::vector<RefinedExtremum> find_effective_frequencies(const SpectrumSeries& series) {
  std::vector<RefinedExtremum> out;
  const auto& w = series.grid;
  const auto& s = series.samples;
  if (s.size() < 3) throw invalid_parameter("find_effective_frequencies: need >= 3 points");
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double ya = s[i - 1].n_add;
    const double yb = s[i].n_add;
    const double yc = s[i + 1].n_add;
    if (!std::isfinite(ya) || !std::isfinite(yb) || !std::isfinite(yc)) continue;
    if (!(yb < ya && yb < yc)) continue;
    const double h = w[i] - w[i - 1];
    RefinedExtremum e;
    e.kind = RefinedExtremum::Kind::n_add_minimum;
    e.refinement = detail::parabola_offset(h, ya, yb, yc);
    e.omega_eff = w[i] + e.refinement;
    try {
      e.value = total_spectrum(series.params, e.omega_eff, series.s_fex).n_add;
    } catch (const singular_solve&) {
      e.value = std::numeric_limits<double>::infinity();
    }
    // The parabola vertex can overshoot when the minimum sits on a steep
    // shoulder; keep the grid point if re-evaluation did not improve on it.
    if (!(e.value <= yb)) {
      e.refinement = 0.0;
      e.omega_eff = w[i];
      e.value = yb;
    }
    out.push_back(e);
  }
  return out;
}

struct SweepResult {
  std::string parameter;            // one of g_eff, kappa, v_hop, phi
  std::string branch_convention;    // which omega_eff branch was tracked
  std::vector<double> values;
  std::vector<double> omega_eff;
  std::vector<double> n_add;
  std::vector<double> r_m;
};

namespace detail {

// Angle classification tolerance for the branch conventions; inputs like
// phi = 3.141592653589793 must count as pi.
inline constexpr double kBranchAngleTol = 1e-9;

enum class BranchKind { high, low, global_min };

inline BranchKind branch_kind(double phi) {
  const double r = reduced_phase(phi);
  if (r < kBranchAngleTol || kTwoPi - r < kBranchAngleTol) return BranchKind::high;
  if (std::abs(r - kPi) < kBranchAngleTol) return BranchKind::low;
  return BranchKind::global_min;
}

inline const RefinedExtremum* pick_branch(const std::vector<RefinedExtremum>& ext,
                                          double phi) {
  if (ext.empty()) return nullptr;
  // Figure conventions: phi = 0 tracks the high branch, phi = pi the low
  // branch, anything else the global N_add minimum.
  switch (branch_kind(phi)) {
    case BranchKind::high: return &ext.back();
    case BranchKind::low: return &ext.front();
    case BranchKind::global_min: break;
  }
  const RefinedExtremum* best = &ext[0];
  for (const auto& e : ext) {
    if (e.value < best->value) best = &e;
  }
  return best;
}

}  // namespace detail

// For each parameter value: frequency sweep, effective-frequency search, and
// the (omega_eff, N_add, R_m) triple at the tracked branch. Rows with no
// finite minimum carry NaN.
inline SweepResult parameter_sweep(const SystemParams& base, const std::string& name,
                                   const std::vector<double>& values, const FrequencyGrid& grid,
                                   unsigned threads = 1) {
  if (name != "g_eff" && name != "kappa" && name != "v_hop" && name != "phi") {
    throw invalid_parameter("parameter_sweep: unknown parameter '" + name + "'");
  }
  if (values.empty()) throw invalid_parameter("parameter_sweep: empty value list");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      throw invalid_parameter("parameter_sweep: values must be strictly increasing");
    }
  }
  const FrequencyGrid checked_grid = validated(grid);
  if (checked_grid.points < 3) {
    throw invalid_parameter("parameter_sweep: grid needs >= 3 points to track a minimum");
  }
  // Constraint failures must surface on this thread, not inside the pool.
  std::vector<SystemParams> swept;
  swept.reserve(values.size());
  for (double v : values) {
    SystemParams p = base;
    if (name == "g_eff") p.g_eff = v;
    else if (name == "kappa") p.kappa = v;
    else if (name == "v_hop") p.v_hop = v;
    else p.phi = v;
    swept.push_back(validated(p));
  }
  SweepResult r;
  r.parameter = name;
  r.values = values;
  if (name == "phi") {
    r.branch_convention = "per-point phi convention";
  } else {
    switch (detail::branch_kind(base.phi)) {
      case detail::BranchKind::high: r.branch_convention = "high branch (phi = 0)"; break;
      case detail::BranchKind::low: r.branch_convention = "low branch (phi = pi)"; break;
      default: r.branch_convention = "global N_add minimum"; break;
    }
  }
  const std::size_t n = values.size();
  r.omega_eff.assign(n, std::numeric_limits<double>::quiet_NaN());
  r.n_add.assign(n, std::numeric_limits<double>::quiet_NaN());
  r.r_m.assign(n, std::numeric_limits<double>::quiet_NaN());
  detail::parallel_for(n, threads, [&](std::size_t i) {
    const SystemParams& p = swept[i];
    const SpectrumSeries series = frequency_sweep(p, checked_grid);
    const auto ext = find_effective_frequencies(series);
    const RefinedExtremum* pick = detail::pick_branch(ext, p.phi);
    if (pick == nullptr) return;
    r.omega_eff[i] = pick->omega_eff;
    r.n_add[i] = pick->value;
    try {
      r.r_m[i] = total_spectrum(p, pick->omega_eff, series.s_fex).r_m;
    } catch (const singular_solve&) {
      // n_add stays valid; the response at the refined point is unavailable
    }
  });
  return r;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Maximal contiguous intervals where N_add < threshold, with endpoints
// linearly interpolated between grid points. "Detection bandwidth" is not
// defined quantitatively in the source; this sub-threshold construction is
// the artifact's own and is labeled as such in outputs.
inline std::vector<Interval> bandwidth_metric(const SpectrumSeries& series, double threshold) {
  if (!(threshold > 0.0)) throw invalid_parameter("bandwidth_metric: threshold must be > 0");
  std::vector<Interval> out;
  const auto& w = series.grid;
  const auto& s = series.samples;
  auto below = [&](std::size_t i) { return s[i].n_add < threshold; };
  auto cross = [&](std::size_t a, std::size_t b) {
    // threshold crossing between grid neighbors a (outside) and b (inside)
    const double ya = s[a].n_add;
    const double yb = s[b].n_add;
    if (!std::isfinite(ya)) return w[b];
    return w[a] + (threshold - ya) * (w[b] - w[a]) / (yb - ya);
  };
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    if (!below(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && below(j + 1)) ++j;
    Interval iv;
    iv.lo = (i == 0) ? w.front() : cross(i - 1, i);
    iv.hi = (j == n - 1) ? w.back() : cross(j + 1, j);
    out.push_back(iv);
    i = j + 1;
  }
  return out;
}

struct ThermalComparison {
  std::vector<double> omega;
  std::vector<double> ratio;  // two-mode S_th over the single-mode n_bar + 1/2
};

// Ratio of the two-mode thermal noise to the single-oscillator reference
// value (n_bar + 1/2) at every grid point; 1/2 identically when sin(phi) = 0.
inline ThermalComparison thermal_comparison(const SystemParams& p, const FrequencyGrid& grid) {
  const SpectrumSeries series = frequency_sweep(p, grid);
  ThermalComparison out;
  out.omega = series.grid;
  out.ratio.reserve(series.samples.size());
  const double ref = p.n_bar + 0.5;
  for (const auto& s : series.samples) out.ratio.push_back(s.s_th / ref);
  return out;
}

}  // namespace omsense
