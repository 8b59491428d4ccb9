#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include <omsense/omsense.hpp>

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::vector<std::string> sets;
  std::string grid_arg;
  int threads = 1;
};

void add_config_opts(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Config file (INI-style sections)");
  cmd->add_option("--set", o.sets, "Override a config key, key=value or section.key=value");
  cmd->add_option("--out", o.out_path, "Write the result here instead of stdout");
}

void add_grid_opts(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--grid", o.grid_arg, "Frequency grid as start,stop,points");
  cmd->add_option("--threads", o.threads, "Worker threads for grid evaluation")
      ->check(CLI::PositiveNumber);
}

omsense::RunConfig load_config(const CommonOpts& o) {
  omsense::ConfigDraft draft;
  if (!o.config_path.empty()) {
    draft = omsense::parse_config_draft(omsense::read_file(o.config_path));
  }
  for (const auto& s : o.sets) omsense::apply_override(draft, s);
  if (!o.grid_arg.empty()) {
    // --grid is the most specific spelling, so it wins over --set.
    std::vector<std::string> parts;
    std::string cell;
    std::istringstream ss(o.grid_arg);
    while (std::getline(ss, cell, ',')) parts.push_back(cell);
    if (parts.size() != 3) {
      throw omsense::config_error("--grid expects start,stop,points; got '" + o.grid_arg + "'",
                                  "grid", 0);
    }
    omsense::apply_override(draft, "grid.start=" + parts[0]);
    omsense::apply_override(draft, "grid.stop=" + parts[1]);
    omsense::apply_override(draft, "grid.points=" + parts[2]);
  }
  return omsense::finalize_config(draft);
}

// Routes the serialized result to --out, then [output] csv, then stdout.
// Returns the path the payload landed in ("" for stdout).
std::string deliver(const CommonOpts& o, const std::string& config_csv_path,
                    const std::string& payload) {
  std::string path = !o.out_path.empty() ? o.out_path : config_csv_path;
  if (path.empty()) {
    std::cout << payload;
    return "";
  }
  omsense::write_file(path, payload);
  return path;
}

int run_spectrum(const CommonOpts& o) {
  const omsense::RunConfig cfg = load_config(o);
  const omsense::SpectrumSeries series = omsense::frequency_sweep(
      cfg.system, cfg.grid, cfg.s_fex, static_cast<std::size_t>(o.threads));
  if (!series.samples.empty() && series.solve_failures == series.samples.size()) {
    std::cerr << "numerical failure: susceptibility singular at every grid point\n";
    return 3;
  }
  const std::string csv_path = deliver(o, cfg.output.csv, omsense::emit_csv(series));

  std::cerr << (series.stable ? "stable" : "UNSTABLE") << " (eigenvalue margin "
            << omsense::fmt_g6(series.stability_margin) << ")\n";
  if (series.solve_failures > 0) {
    std::cerr << "warning: " << series.solve_failures << " singular grid points\n";
  }
  const auto minima = omsense::find_effective_frequencies(series);
  for (const auto& m : minima) {
    std::cerr << "minimum: omega_eff = " << omsense::fmt_g6(m.omega_eff)
              << ", N_add = " << omsense::fmt_g6(m.value) << "\n";
  }
  for (const auto& iv :
       omsense::bandwidth_metric(series, cfg.output.bandwidth_threshold)) {
    std::cerr << "N_add < " << omsense::fmt_g6(cfg.output.bandwidth_threshold) << " on ["
              << omsense::fmt_g6(iv.lo) << ", " << omsense::fmt_g6(iv.hi) << "] (width "
              << omsense::fmt_g6(iv.hi - iv.lo) << ")\n";
  }

  if (!cfg.output.plot.empty()) {
    if (csv_path.empty()) {
      throw omsense::config_error(
          "plot output requires a csv destination (--out or [output] csv)", "plot", 0);
    }
    omsense::PlotStyle style;
    style.title = "homodyne output noise";
    omsense::write_file(cfg.output.plot, omsense::emit_plot_script(series, csv_path, style));
    std::cerr << "plot script: " << cfg.output.plot << "\n";
  }
  return 0;
}

int run_sweep(const CommonOpts& o) {
  const omsense::RunConfig cfg = load_config(o);
  if (!cfg.sweep) {
    throw omsense::config_error("sweep command requires a [sweep] section (or --set sweep.*)",
                                "sweep", 0);
  }
  const omsense::SweepResult result =
      omsense::parameter_sweep(cfg.system, cfg.sweep->name, cfg.sweep->values(), cfg.grid,
                               static_cast<std::size_t>(o.threads));
  const std::string csv_path = deliver(o, cfg.output.csv, omsense::emit_csv(result));
  std::cerr << "sweep over " << result.parameter << ": " << result.values.size()
            << " points, branch: " << result.branch_convention << "\n";
  if (!cfg.output.plot.empty()) {
    if (csv_path.empty()) {
      throw omsense::config_error(
          "plot output requires a csv destination (--out or [output] csv)", "plot", 0);
    }
    omsense::PlotStyle style;
    style.title = "added noise vs " + result.parameter;
    omsense::write_file(cfg.output.plot, omsense::emit_plot_script(result, csv_path, style));
    std::cerr << "plot script: " << cfg.output.plot << "\n";
  }
  return 0;
}

int run_modes(const CommonOpts& o) {
  const omsense::RunConfig cfg = load_config(o);
  const omsense::HybridModes modes = omsense::hybrid_modes(cfg.system);
  deliver(o, "", omsense::emit_text(modes));
  return 0;
}

int run_stability(const CommonOpts& o) {
  const omsense::RunConfig cfg = load_config(o);
  const omsense::StabilityReport report =
      omsense::stability_check(omsense::drift_matrix(cfg.system));
  deliver(o, "", omsense::emit_text(report));
  return 0;
}

int run_validate(const CommonOpts& o) {
  const omsense::RunConfig cfg = load_config(o);
  std::vector<omsense::ClosedFormVariant> variants;
  if (cfg.validate.variants == "printed" || cfg.validate.variants == "all") {
    variants.push_back(omsense::ClosedFormVariant::printed());
  }
  if (cfg.validate.variants == "derived" || cfg.validate.variants == "all") {
    variants.push_back(omsense::ClosedFormVariant::derived());
  }
  const omsense::ValidationReport report = omsense::validate_against_numeric(
      cfg.system, cfg.grid.samples(), variants, cfg.validate.tolerance);
  if (report.numeric_singular.size() == cfg.grid.points) {
    std::cerr << "numerical failure: susceptibility singular at every grid point\n";
    return 3;
  }
  deliver(o, "", omsense::emit_records(report));
  std::cerr << omsense::emit_text(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise spectra for a driven cavity coupled to two phase-linked mechanical modes"};
  app.require_subcommand(1);

  CommonOpts o;
  CLI::App* spectrum =
      app.add_subcommand("spectrum", "Homodyne noise spectrum over a frequency grid (CSV)");
  add_config_opts(spectrum, o);
  add_grid_opts(spectrum, o);
  CLI::App* modes = app.add_subcommand("modes", "Hybrid mode decomposition of the two oscillators");
  add_config_opts(modes, o);
  CLI::App* sweep =
      app.add_subcommand("sweep", "Track the added-noise minimum across a parameter range (CSV)");
  add_config_opts(sweep, o);
  add_grid_opts(sweep, o);
  CLI::App* validate =
      app.add_subcommand("validate", "Check closed-form coefficients against the numeric path");
  add_config_opts(validate, o);
  add_grid_opts(validate, o);
  CLI::App* stability = app.add_subcommand("stability", "Drift matrix eigenvalues and margin");
  add_config_opts(stability, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (spectrum->parsed()) return run_spectrum(o);
    if (modes->parsed()) return run_modes(o);
    if (sweep->parsed()) return run_sweep(o);
    if (validate->parsed()) return run_validate(o);
    if (stability->parsed()) return run_stability(o);
  } catch (const omsense::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const omsense::invalid_parameter& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const omsense::singular_solve& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const omsense::singular_evaluation& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const omsense::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
