#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "omsense/closed_form.hpp"
#include "omsense/model.hpp"
#include "omsense/sweep.hpp"

namespace omsense {

struct config_error : std::runtime_error {
  std::string key;
  int line;  // 0 for --set overrides
  config_error(const std::string& what, std::string key_, int line_)
      : std::runtime_error(what), key(std::move(key_)), line(line_) {}
};

struct io_error : std::runtime_error {
  std::string path;
  io_error(const std::string& what, std::string path_)
      : std::runtime_error(what), path(std::move(path_)) {}
};

inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string fmt_g6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

struct SweepSpec {
  std::string name;
  double start = 0.0;
  double stop = 0.0;
  std::size_t points = 0;

  std::vector<double> values() const {
    if (points == 1) return {start};
    std::vector<double> out(points);
    const double h = (stop - start) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) out[i] = start + h * static_cast<double>(i);
    out.back() = stop;
    return out;
  }
};

struct OutputSpec {
  std::string csv;
  std::string plot;
  double bandwidth_threshold = kSql;
};

struct ValidateSpec {
  std::string variants = "all";  // all | printed | derived
  double tolerance = 1e-6;
};

struct RunConfig {
  SystemParams system;
  double s_fex = 0.0;
  FrequencyGrid grid;
  std::optional<SweepSpec> sweep;
  OutputSpec output;
  ValidateSpec validate;
  // "section.key" -> provenance ("default (Table 1)", "line N", "--set").
  std::map<std::string, std::string> provenance;
};

namespace detail {

struct ConfigEntry {
  std::string value;
  int line = 0;       // 0 when set by an override
  bool from_set = false;
};

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"system",
       {"kappa", "gamma", "delta_eff", "g_eff", "v_hop", "phi", "theta", "n_bar",
        "temperature", "omega_m_phys", "s_fex"}},
      {"grid", {"start", "stop", "points"}},
      {"sweep", {"name", "start", "stop", "points"}},
      {"output", {"csv", "plot", "bandwidth_threshold"}},
      {"validate", {"variants", "tolerance"}},
  };
  return schema;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& value, const std::string& key, int line) {
  const std::string v = trim(value);
  if (v.empty()) throw config_error("empty value for key '" + key + "'", key, line);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) {
    throw config_error("expected a number for key '" + key + "', got '" + v + "'" +
                           (line > 0 ? " at line " + std::to_string(line) : ""),
                       key, line);
  }
  return x;
}

inline std::size_t parse_count(const std::string& value, const std::string& key, int line) {
  const std::string v = trim(value);
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || x <= 0) {
    throw config_error("expected a positive integer for key '" + key + "', got '" + v + "'" +
                           (line > 0 ? " at line " + std::to_string(line) : ""),
                       key, line);
  }
  return static_cast<std::size_t>(x);
}

}  // namespace detail

// Raw key/value layer: sections and keys checked against the schema, values
// kept as text until finalize_config. Lets --set overrides land between the
// file parse and validation.
struct ConfigDraft {
  std::map<std::string, detail::ConfigEntry> entries;  // "section.key" -> entry
};

inline ConfigDraft parse_config_draft(const std::string& text) {
  ConfigDraft draft;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw config_error("malformed section header at line " + std::to_string(lineno), "",
                           lineno);
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      if (detail::config_schema().count(section)) continue;
      throw config_error("unknown section '" + section + "' at line " + std::to_string(lineno),
                         section, lineno);
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error("expected 'key = value' at line " + std::to_string(lineno), "", lineno);
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (section.empty()) {
      throw config_error("key '" + key + "' outside any section at line " +
                             std::to_string(lineno),
                         key, lineno);
    }
    const auto& schema = detail::config_schema();
    if (!schema.at(section).count(key)) {
      throw config_error("unknown key '" + key + "' in [" + section + "] at line " +
                             std::to_string(lineno),
                         key, lineno);
    }
    const std::string full = section + "." + key;
    if (draft.entries.count(full)) {
      throw config_error("duplicate key '" + key + "' in [" + section + "] at line " +
                             std::to_string(lineno),
                         key, lineno);
    }
    draft.entries[full] = {value, lineno, false};
  }
  return draft;
}

// --set key=value or --set section.key=value. Bare keys resolve when unique
// across sections; ambiguous ones (e.g. `points`) must be qualified.
inline void apply_override(ConfigDraft& draft, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw config_error("--set expects key=value, got '" + assignment + "'", assignment, 0);
  }
  std::string key = detail::trim(assignment.substr(0, eq));
  const std::string value = detail::trim(assignment.substr(eq + 1));
  std::string full;
  const auto dot = key.find('.');
  const auto& schema = detail::config_schema();
  if (dot != std::string::npos) {
    const std::string section = key.substr(0, dot);
    const std::string bare = key.substr(dot + 1);
    if (!schema.count(section) || !schema.at(section).count(bare)) {
      throw config_error("unknown key '" + key + "' in --set", key, 0);
    }
    full = key;
  } else {
    std::vector<std::string> hits;
    for (const auto& [section, keys] : schema) {
      if (keys.count(key)) hits.push_back(section + "." + key);
    }
    if (hits.empty()) throw config_error("unknown key '" + key + "' in --set", key, 0);
    if (hits.size() > 1) {
      std::string msg = "ambiguous key '" + key + "' in --set; qualify as ";
      for (std::size_t i = 0; i < hits.size(); ++i) {
        msg += (i ? " or " : "") + hits[i];
      }
      throw config_error(msg, key, 0);
    }
    full = hits[0];
  }
  draft.entries[full] = {value, 0, true};
}

// Type-checks, applies Table-1 defaults with provenance, resolves the
// n_bar-vs-temperature rule, and validates every constraint.
inline RunConfig finalize_config(const ConfigDraft& draft) {
  RunConfig cfg;
  auto find = [&](const char* full) -> const detail::ConfigEntry* {
    const auto it = draft.entries.find(full);
    return it == draft.entries.end() ? nullptr : &it->second;
  };
  auto source_of = [](const detail::ConfigEntry* e) -> std::string {
    if (e == nullptr) return "default (Table 1)";
    if (e->from_set) return "--set";
    return "line " + std::to_string(e->line);
  };
  auto number = [&](const char* full, double fallback) {
    const auto* e = find(full);
    cfg.provenance[full] = source_of(e);
    if (e == nullptr) return fallback;
    const std::string key = std::string(full);
    return detail::parse_double(e->value, key, e->line);
  };

  cfg.system.kappa = number("system.kappa", 0.1);
  cfg.system.gamma = number("system.gamma", 1e-5);
  cfg.system.delta_eff = number("system.delta_eff", 0.0);
  cfg.system.g_eff = number("system.g_eff", 4.5e-3);
  cfg.system.v_hop = number("system.v_hop", 0.01);
  cfg.system.phi = number("system.phi", 0.0);
  cfg.system.theta = number("system.theta", kPi / 2.0);
  cfg.s_fex = number("system.s_fex", 0.0);

  const auto* e_nbar = find("system.n_bar");
  const auto* e_temp = find("system.temperature");
  const auto* e_wm = find("system.omega_m_phys");
  if (e_nbar != nullptr && (e_temp != nullptr || e_wm != nullptr)) {
    throw config_error("n_bar conflicts with temperature/omega_m_phys; provide exactly one route",
                       "n_bar", e_nbar->line);
  }
  try {
    if (e_nbar != nullptr) {
      cfg.system.n_bar = detail::parse_double(e_nbar->value, "n_bar", e_nbar->line);
      cfg.system.omega_m_phys.reset();
      cfg.provenance["system.n_bar"] = source_of(e_nbar);
    } else if (e_temp != nullptr || e_wm != nullptr) {
      if (e_temp == nullptr) {
        throw config_error("omega_m_phys given without temperature", "temperature", e_wm->line);
      }
      if (e_wm == nullptr) {
        throw config_error("temperature given without omega_m_phys", "omega_m_phys",
                           e_temp->line);
      }
      const double temp = detail::parse_double(e_temp->value, "temperature", e_temp->line);
      const double wm = detail::parse_double(e_wm->value, "omega_m_phys", e_wm->line);
      cfg.system.omega_m_phys = wm;
      cfg.system.n_bar = thermal_occupation(temp, wm);
      cfg.provenance["system.n_bar"] =
          source_of(e_temp) + " (temperature) + " + source_of(e_wm) + " (omega_m_phys)";
    } else {
      cfg.system.omega_m_phys = kTwoPi * 3.6e6;
      cfg.system.n_bar = thermal_occupation(0.077, *cfg.system.omega_m_phys);
      cfg.provenance["system.n_bar"] = "default (Table 1: T=0.077 K, omega_m=2*pi*3.6 MHz)";
    }
    cfg.system = validated(cfg.system);
  } catch (const invalid_parameter& e) {
    throw config_error(std::string("invalid system parameters: ") + e.what(), "system", 0);
  }

  cfg.grid.start = number("grid.start", 0.95);
  cfg.grid.stop = number("grid.stop", 1.05);
  {
    const auto* e = find("grid.points");
    cfg.provenance["grid.points"] = source_of(e);
    cfg.grid.points = (e == nullptr) ? 501 : detail::parse_count(e->value, "points", e->line);
  }
  try {
    cfg.grid = validated(cfg.grid);
  } catch (const invalid_parameter& e) {
    throw config_error(std::string("invalid grid: ") + e.what(), "grid", 0);
  }

  const auto* s_name = find("sweep.name");
  const auto* s_start = find("sweep.start");
  const auto* s_stop = find("sweep.stop");
  const auto* s_points = find("sweep.points");
  if (s_name != nullptr || s_start != nullptr || s_stop != nullptr || s_points != nullptr) {
    auto require = [&](const detail::ConfigEntry* e, const char* key) {
      if (e == nullptr) {
        throw config_error(std::string("[sweep] requires '") + key + "'", key, 0);
      }
    };
    require(s_name, "name");
    require(s_start, "start");
    require(s_stop, "stop");
    require(s_points, "points");
    SweepSpec sw;
    sw.name = detail::trim(s_name->value);
    if (sw.name != "g_eff" && sw.name != "kappa" && sw.name != "v_hop" && sw.name != "phi") {
      throw config_error("sweep name must be one of g_eff, kappa, v_hop, phi; got '" + sw.name +
                             "'",
                         "name", s_name->line);
    }
    sw.start = detail::parse_double(s_start->value, "start", s_start->line);
    sw.stop = detail::parse_double(s_stop->value, "stop", s_stop->line);
    sw.points = detail::parse_count(s_points->value, "points", s_points->line);
    if (sw.points == 1) {
      if (sw.start != sw.stop) {
        throw config_error("sweep with points = 1 requires start == stop", "points",
                           s_points->line);
      }
    } else if (!(sw.start < sw.stop)) {
      throw config_error("sweep start must be < stop", "start", s_start->line);
    }
    cfg.sweep = sw;
    cfg.provenance["sweep.name"] = source_of(s_name);
  }

  {
    const auto* e = find("output.csv");
    cfg.provenance["output.csv"] = source_of(e);
    if (e != nullptr) cfg.output.csv = detail::trim(e->value);
  }
  {
    const auto* e = find("output.plot");
    cfg.provenance["output.plot"] = source_of(e);
    if (e != nullptr) cfg.output.plot = detail::trim(e->value);
  }
  cfg.output.bandwidth_threshold = number("output.bandwidth_threshold", kSql);
  if (!(cfg.output.bandwidth_threshold > 0.0)) {
    throw config_error("bandwidth_threshold must be > 0", "bandwidth_threshold", 0);
  }

  {
    const auto* e = find("validate.variants");
    cfg.provenance["validate.variants"] = source_of(e);
    if (e != nullptr) cfg.validate.variants = detail::trim(e->value);
    if (cfg.validate.variants != "all" && cfg.validate.variants != "printed" &&
        cfg.validate.variants != "derived") {
      throw config_error("validate variants must be all, printed, or derived; got '" +
                             cfg.validate.variants + "'",
                         "variants", e ? e->line : 0);
    }
  }
  cfg.validate.tolerance = number("validate.tolerance", 1e-6);
  if (!(cfg.validate.tolerance > 0.0)) {
    throw config_error("validate tolerance must be > 0", "tolerance", 0);
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  return finalize_config(parse_config_draft(text));
}

// CSV with the fixed column order; infinities keep the literal token `inf`,
// and %.17g guarantees bit round-trips through parse_csv.
inline std::string emit_csv(const SpectrumSeries& series) {
  std::string out = "omega,r_m,s_th,n_add,s_total,sql_margin\n";
  for (const auto& s : series.samples) {
    out += fmt_g17(s.omega);
    out += ',';
    out += fmt_g17(s.r_m);
    out += ',';
    out += fmt_g17(s.s_th);
    out += ',';
    out += fmt_g17(s.n_add);
    out += ',';
    out += fmt_g17(s.s_total);
    out += ',';
    out += fmt_g17(s.sql_margin);
    out += '\n';
  }
  return out;
}

inline std::string emit_csv(const SweepResult& sweep) {
  std::string out = sweep.parameter + ",omega_eff,n_add,r_m\n";
  for (std::size_t i = 0; i < sweep.values.size(); ++i) {
    out += fmt_g17(sweep.values[i]);
    out += ',';
    out += fmt_g17(sweep.omega_eff[i]);
    out += ',';
    out += fmt_g17(sweep.n_add[i]);
    out += ',';
    out += fmt_g17(sweep.r_m[i]);
    out += '\n';
  }
  return out;
}

struct CsvSeries {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvSeries parse_csv(const std::string& text) {
  CsvSeries out;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      out.header = cells;
      first = false;
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      row.push_back(detail::parse_double(c, "csv cell", lineno));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

struct PlotStyle {
  std::string title;
  std::string ylabel = "N_add";
  int column = 4;        // 1-based CSV column to plot against omega
  bool sql_line = true;  // horizontal reference at 0.5
};

namespace detail {

inline std::string plot_header(const PlotStyle& style) {
  std::string out;
  out += "set datafile separator ','\n";
  out += "set xlabel 'omega / omega_m'\n";
  out += "set ylabel '" + style.ylabel + "'\n";
  if (!style.title.empty()) out += "set title '" + style.title + "'\n";
  out += "set key top right\n";
  return out;
}

}  // namespace detail

inline std::string emit_plot_script(const SpectrumSeries& series, const std::string& csv_path,
                                    const PlotStyle& style = {}) {
  if (series.samples.empty()) throw invalid_parameter("emit_plot_script: nothing to plot");
  std::string out = detail::plot_header(style);
  out += "plot '" + csv_path + "' skip 1 using 1:" + std::to_string(style.column) +
         " with lines title '" + style.ylabel + "'";
  if (style.sql_line) out += ", " + fmt_g17(kSql) + " with lines dashtype 2 title 'SQL'";
  out += "\n";
  return out;
}

// Overlay: one curve per series, each with its own CSV and legend label.
inline std::string emit_plot_script(const std::vector<SpectrumSeries>& series,
                                    const std::vector<std::string>& csv_paths,
                                    const std::vector<std::string>& labels,
                                    const PlotStyle& style = {}) {
  if (series.empty()) throw invalid_parameter("emit_plot_script: nothing to plot");
  if (series.size() != csv_paths.size() || series.size() != labels.size()) {
    throw invalid_parameter("emit_plot_script: series/paths/labels size mismatch");
  }
  for (const auto& s : series) {
    if (s.samples.empty()) throw invalid_parameter("emit_plot_script: nothing to plot");
  }
  std::string out = detail::plot_header(style);
  out += "plot ";
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (i) out += ", ";
    out += "'" + csv_paths[i] + "' skip 1 using 1:" + std::to_string(style.column) +
           " with lines title '" + labels[i] + "'";
  }
  if (style.sql_line) out += ", " + fmt_g17(kSql) + " with lines dashtype 2 title 'SQL'";
  out += "\n";
  return out;
}

inline std::string emit_plot_script(const SweepResult& sweep, const std::string& csv_path,
                                    const PlotStyle& style = {}) {
  if (sweep.values.empty()) throw invalid_parameter("emit_plot_script: nothing to plot");
  std::string out;
  out += "set datafile separator ','\n";
  out += "set xlabel '" + sweep.parameter + "'\n";
  out += "set ylabel 'N_add at omega_eff'\n";
  if (!style.title.empty()) out += "set title '" + style.title + "'\n";
  out += "set key top right\n";
  out += "plot '" + csv_path + "' skip 1 using 1:3 with linespoints title 'N_add'";
  if (style.sql_line) out += ", " + fmt_g17(kSql) + " with lines dashtype 2 title 'SQL'";
  out += "\n";
  return out;
}

inline std::string emit_text(const HybridModes& h) {
  std::string out;
  auto cplx = [](std::complex<double> z) {
    return fmt_g17(z.real()) + (z.imag() < 0 ? " - " : " + ") + fmt_g17(std::abs(z.imag())) +
           "i";
  };
  out += "hybrid mode decomposition\n";
  out += "g_plus  = " + cplx(h.g_plus) + "  (|g_plus| = " + fmt_g17(std::abs(h.g_plus)) + ")\n";
  out += "g_minus = " + cplx(h.g_minus) + "  (|g_minus| = " + fmt_g17(std::abs(h.g_minus)) +
         ")\n";
  out += "omega_plus  = " + fmt_g17(h.omega_plus) + "\n";
  out += "omega_minus = " + fmt_g17(h.omega_minus) + "\n";
  out += "force_factor_plus  = " + cplx(h.force_factor_plus) + "\n";
  out += "force_factor_minus = " + cplx(h.force_factor_minus) + "\n";
  out += std::string("dark_label = ") + to_string(h.dark_label) + "\n";
  return out;
}

inline std::string emit_text(const StabilityReport& r) {
  std::string out = "drift matrix eigenvalues\n";
  for (const auto& ev : r.eigenvalues) {
    out += fmt_g17(ev.real()) + (ev.imag() < 0 ? " - " : " + ") + fmt_g17(std::abs(ev.imag())) +
           "i\n";
  }
  out += "margin = " + fmt_g17(r.margin) + "\n";
  out += std::string("stable = ") + (r.stable ? "true" : "false") + "\n";
  return out;
}

inline std::string emit_text(const ValidationReport& r) {
  std::string out = "closed-form validation against the numeric path\n";
  out += "grid points: " + std::to_string(r.grid.size()) + ", tolerance: " +
         fmt_g6(r.tolerance) + "\n";
  for (std::size_t i = 0; i < r.variants.size(); ++i) {
    const auto& pv = r.variants[i];
    out += "variant '" + pv.variant.name + "': max relative deviation " +
           fmt_g6(pv.max_rel_dev) + " at omega = " + fmt_g6(pv.worst_omega) + " (A" +
           std::to_string(pv.worst_coefficient) + ")";
    if (!pv.skipped_singular.empty()) {
      out += ", singular at " + std::to_string(pv.skipped_singular.size()) + " points";
    }
    out += "\n";
  }
  if (!r.variants.empty()) {
    out += "best variant: '" + r.variants[r.best_index].variant.name + "' -> " +
           (r.pass ? "PASS" : "FAIL") + "\n";
  }
  out += "numeric a3 vs a4 exchange asymmetry: max " + fmt_g6(r.max_a3_a4_asymmetry) +
         " at omega = " + fmt_g6(r.asymmetry_omega) + "\n";
  if (r.k4_identity_consistent) {
    out += "printed identity k4 = k3 is consistent with the numeric path on this grid\n";
  } else {
    out += "printed identity k4 = k3 is NOT consistent with the numeric path on this grid "
           "(a3 != a4; the identity holds only at sin(phi) = 0)\n";
  }
  if (!r.numeric_singular.empty()) {
    out += "numeric solve singular at " + std::to_string(r.numeric_singular.size()) +
           " grid points\n";
  }
  return out;
}

// Machine-readable record stream for the validate command.
inline std::string emit_records(const ValidationReport& r) {
  std::string out = "variant,max_rel_dev,worst_omega,worst_coefficient,singular_points,best,pass\n";
  for (std::size_t i = 0; i < r.variants.size(); ++i) {
    const auto& pv = r.variants[i];
    out += pv.variant.name + ',' + fmt_g17(pv.max_rel_dev) + ',' + fmt_g17(pv.worst_omega) +
           ',' + std::to_string(pv.worst_coefficient) + ',' +
           std::to_string(pv.skipped_singular.size()) + ',' +
           (i == r.best_index ? "1" : "0") + ',' +
           (pv.max_rel_dev < r.tolerance ? "1" : "0") + '\n';
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing", path);
  out << content;
  out.flush();
  if (!out) throw io_error("write failed for '" + path + "'", path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace omsense
