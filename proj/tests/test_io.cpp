#include "helpers.hpp"

#include <cstdio>
#include <filesystem>

using namespace omsense;
using Catch::Approx;

TEST_CASE("config parsing") {
  SECTION("full file with comments") {
    const std::string text =
        "# reference run\n"
        "[system]\n"
        "kappa = 0.2   # half linewidth\n"
        "gamma = 2e-5\n"
        "delta_eff = 0.05\n"
        "g_eff = 5e-3\n"
        "v_hop = 0.02\n"
        "phi = 1.5707963267948966\n"
        "theta = 0.7853981633974483\n"
        "n_bar = 100\n"
        "s_fex = 0.25\n"
        "\n"
        "[grid]\n"
        "start = 0.9\n"
        "stop = 1.1\n"
        "points = 101\n"
        "\n"
        "[output]\n"
        "csv = out.csv\n"
        "plot = out.gp\n"
        "bandwidth_threshold = 0.4\n"
        "\n"
        "[validate]\n"
        "variants = derived\n"
        "tolerance = 1e-7\n";
    const RunConfig cfg = parse_config(text);
    CHECK(cfg.system.kappa == 0.2);
    CHECK(cfg.system.gamma == 2e-5);
    CHECK(cfg.system.delta_eff == 0.05);
    CHECK(cfg.system.g_eff == 5e-3);
    CHECK(cfg.system.v_hop == 0.02);
    CHECK(cfg.system.phi == Approx(kPi / 2.0));
    CHECK(cfg.system.theta == Approx(kPi / 4.0));
    CHECK(cfg.system.n_bar == 100.0);
    CHECK(cfg.s_fex == 0.25);
    CHECK(cfg.grid.start == 0.9);
    CHECK(cfg.grid.stop == 1.1);
    CHECK(cfg.grid.points == 101);
    CHECK_FALSE(cfg.sweep.has_value());
    CHECK(cfg.output.csv == "out.csv");
    CHECK(cfg.output.plot == "out.gp");
    CHECK(cfg.output.bandwidth_threshold == 0.4);
    CHECK(cfg.validate.variants == "derived");
    CHECK(cfg.validate.tolerance == 1e-7);
    CHECK(cfg.provenance.at("system.kappa") == "line 3");
    CHECK(cfg.provenance.at("grid.points") == "line 16");
  }

  SECTION("empty text yields the reference defaults") {
    const RunConfig cfg = parse_config("");
    CHECK(cfg.system.kappa == 0.1);
    CHECK(cfg.system.gamma == 1e-5);
    CHECK(cfg.system.delta_eff == 0.0);
    CHECK(cfg.system.g_eff == 4.5e-3);
    CHECK(cfg.system.v_hop == 0.01);
    CHECK(cfg.system.phi == 0.0);
    CHECK(cfg.system.theta == Approx(kPi / 2.0));
    CHECK(cfg.system.n_bar == Approx(445.17231850550337).epsilon(1e-12));
    CHECK(cfg.s_fex == 0.0);
    CHECK(cfg.grid.start == 0.95);
    CHECK(cfg.grid.stop == 1.05);
    CHECK(cfg.grid.points == 501);
    CHECK(cfg.output.bandwidth_threshold == 0.5);
    CHECK(cfg.validate.variants == "all");
    CHECK(cfg.validate.tolerance == 1e-6);
    CHECK(cfg.provenance.at("system.kappa") == "default (Table 1)");
    CHECK(cfg.provenance.at("system.n_bar") ==
          "default (Table 1: T=0.077 K, omega_m=2*pi*3.6 MHz)");
  }

  SECTION("occupation from a temperature pair") {
    const RunConfig cfg = parse_config(
        "[system]\ntemperature = 0.077\nomega_m_phys = 22619467.105846498\n");
    CHECK(cfg.system.n_bar == Approx(445.17231850550337).epsilon(1e-10));
    REQUIRE(cfg.system.omega_m_phys.has_value());
    CHECK(cfg.provenance.at("system.n_bar").find("temperature") != std::string::npos);
  }

  SECTION("occupation routes are mutually exclusive") {
    try {
      parse_config("[system]\nn_bar = 10\ntemperature = 0.1\nomega_m_phys = 1e7\n");
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.key == "n_bar");
      CHECK(std::string(e.what()).find("conflicts") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[system]\ntemperature = 0.1\n"), config_error);
    CHECK_THROWS_AS(parse_config("[system]\nomega_m_phys = 1e7\n"), config_error);
  }

  SECTION("unknown keys are rejected with key and line") {
    try {
      parse_config("[system]\nkappa = 0.1\nfoo = 1\n");
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.key == "foo");
      CHECK(e.line == 3);
      CHECK(std::string(e.what()).find("foo") != std::string::npos);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  SECTION("other malformed inputs") {
    CHECK_THROWS_AS(parse_config("[nope]\nx = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config("kappa = 0.1\n"), config_error);          // outside section
    CHECK_THROWS_AS(parse_config("[system]\nkappa 0.1\n"), config_error);  // no '='
    CHECK_THROWS_AS(parse_config("[system\nkappa = 0.1\n"), config_error);
    CHECK_THROWS_AS(parse_config("[system]\nkappa = 0.1\nkappa = 0.2\n"), config_error);
    CHECK_THROWS_AS(parse_config("[system]\nkappa = fast\n"), config_error);
    CHECK_THROWS_AS(parse_config("[grid]\npoints = -3\n"), config_error);
    CHECK_THROWS_AS(parse_config("[grid]\npoints = 1.5\n"), config_error);
    CHECK_THROWS_AS(parse_config("[system]\nkappa = -1\n"), config_error);  // constraint
    CHECK_THROWS_AS(parse_config("[output]\nbandwidth_threshold = 0\n"), config_error);
    CHECK_THROWS_AS(parse_config("[validate]\nvariants = best\n"), config_error);
    CHECK_THROWS_AS(parse_config("[validate]\ntolerance = -1e-6\n"), config_error);
  }

  SECTION("sweep block") {
    const RunConfig cfg = parse_config(
        "[sweep]\nname = g_eff\nstart = 1e-3\nstop = 1e-2\npoints = 19\n");
    REQUIRE(cfg.sweep.has_value());
    CHECK(cfg.sweep->name == "g_eff");
    const auto v = cfg.sweep->values();
    REQUIRE(v.size() == 19);
    CHECK(v.front() == 1e-3);
    CHECK(v.back() == 1e-2);
    CHECK(v[8] == Approx(5e-3).epsilon(1e-12));

    CHECK_THROWS_AS(parse_config("[sweep]\nname = g_eff\n"), config_error);
    CHECK_THROWS_AS(
        parse_config("[sweep]\nname = delta\nstart = 0\nstop = 1\npoints = 3\n"),
        config_error);
    CHECK_THROWS_AS(
        parse_config("[sweep]\nname = kappa\nstart = 1\nstop = 0.5\npoints = 3\n"),
        config_error);
    CHECK_THROWS_AS(
        parse_config("[sweep]\nname = kappa\nstart = 1\nstop = 2\npoints = 1\n"),
        config_error);
    const RunConfig single =
        parse_config("[sweep]\nname = kappa\nstart = 0.1\nstop = 0.1\npoints = 1\n");
    CHECK(single.sweep->values() == std::vector<double>{0.1});
  }
}

TEST_CASE("config overrides") {
  SECTION("bare unique key") {
    ConfigDraft d;
    apply_override(d, "kappa=0.3");
    const RunConfig cfg = finalize_config(d);
    CHECK(cfg.system.kappa == 0.3);
    CHECK(cfg.provenance.at("system.kappa") == "--set");
  }
  SECTION("qualified key and precedence over the file") {
    ConfigDraft d = parse_config_draft("[system]\nkappa = 0.2\n");
    apply_override(d, "system.kappa=0.4");
    CHECK(finalize_config(d).system.kappa == 0.4);
  }
  SECTION("ambiguous bare key names both candidates") {
    ConfigDraft d;
    try {
      apply_override(d, "points=7");
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(std::string(e.what()).find("grid.points") != std::string::npos);
      CHECK(std::string(e.what()).find("sweep.points") != std::string::npos);
    }
    apply_override(d, "grid.points=7");
    CHECK(finalize_config(d).grid.points == 7);
  }
  SECTION("unknown or malformed assignments") {
    ConfigDraft d;
    CHECK_THROWS_AS(apply_override(d, "nope=1"), config_error);
    CHECK_THROWS_AS(apply_override(d, "grid.nope=1"), config_error);
    CHECK_THROWS_AS(apply_override(d, "kappa 0.3"), config_error);
  }
}

TEST_CASE("csv serialization") {
  SECTION("spectrum header and round trip") {
    const SpectrumSeries s =
        frequency_sweep(default_params(), FrequencyGrid{0.97, 1.03, 31});
    const std::string text = emit_csv(s);
    CHECK(text.rfind("omega,r_m,s_th,n_add,s_total,sql_margin\n", 0) == 0);
    const CsvSeries parsed = parse_csv(text);
    REQUIRE(parsed.header ==
            std::vector<std::string>{"omega", "r_m", "s_th", "n_add", "s_total", "sql_margin"});
    REQUIRE(parsed.rows.size() == 31);
    for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
      REQUIRE(parsed.rows[i].size() == 6);
      CHECK(parsed.rows[i][0] == s.samples[i].omega);
      CHECK(parsed.rows[i][1] == s.samples[i].r_m);
      CHECK(parsed.rows[i][2] == s.samples[i].s_th);
      CHECK(parsed.rows[i][3] == s.samples[i].n_add);
      CHECK(parsed.rows[i][4] == s.samples[i].s_total);
      CHECK(parsed.rows[i][5] == s.samples[i].sql_margin);
    }
  }

  SECTION("infinities keep their literal tokens") {
    SystemParams p;  // hand-built singular system, marks every point
    p.kappa = 0.0;
    p.gamma = 0.0;
    p.g_eff = 0.0;
    p.v_hop = 0.0;
    const SpectrumSeries s = frequency_sweep(p, FrequencyGrid{-1.0, 1.0, 3});
    const std::string text = emit_csv(s);
    CHECK(text.find(",inf,") != std::string::npos);
    CHECK(text.find(",-inf\n") != std::string::npos);
    const CsvSeries parsed = parse_csv(text);
    REQUIRE(parsed.rows.size() == 3);
    CHECK(std::isinf(parsed.rows[0][2]));
    CHECK(parsed.rows[0][2] > 0.0);
    CHECK(std::isinf(parsed.rows[0][5]));
    CHECK(parsed.rows[0][5] < 0.0);
  }

  SECTION("sweep result header carries the parameter name") {
    SweepResult r;
    r.parameter = "kappa";
    r.values = {0.1, 0.2};
    r.omega_eff = {1.01, 1.012};
    r.n_add = {0.3, 0.4};
    r.r_m = {2.0, 3.0};
    const std::string text = emit_csv(r);
    CHECK(text.rfind("kappa,omega_eff,n_add,r_m\n", 0) == 0);
    const CsvSeries parsed = parse_csv(text);
    REQUIRE(parsed.rows.size() == 2);
    CHECK(parsed.rows[1][3] == 3.0);
  }

  SECTION("17 significant digits survive the round trip bit for bit") {
    Lcg rng(53);
    for (int i = 0; i < 200; ++i) {
      const double mag = std::pow(10.0, rng.uniform(-30.0, 30.0));
      const double x = (rng.unit() < 0.5 ? -1.0 : 1.0) * mag * rng.uniform(1.0, 10.0);
      const std::string text = fmt_g17(x);
      char* end = nullptr;
      const double back = std::strtod(text.c_str(), &end);
      CHECK(back == x);
    }
    CHECK(fmt_g17(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(fmt_g17(-std::numeric_limits<double>::infinity()) == "-inf");
  }

  SECTION("csv parser handles nan and rejects junk") {
    const CsvSeries parsed = parse_csv("a,b\n1.5,nan\n");
    REQUIRE(parsed.rows.size() == 1);
    CHECK(std::isnan(parsed.rows[0][1]));
    CHECK_THROWS_AS(parse_csv("a,b\n1.5,fast\n"), config_error);
  }
}

TEST_CASE("plot scripts") {
  const SpectrumSeries s = frequency_sweep(default_params(), FrequencyGrid{0.97, 1.03, 11});

  SECTION("single series") {
    const std::string script = emit_plot_script(s, "run.csv");
    CHECK(script.find("set datafile separator ','") != std::string::npos);
    CHECK(script.find("omega / omega_m") != std::string::npos);
    CHECK(script.find("'run.csv'") != std::string::npos);
    CHECK(script.find("using 1:4") != std::string::npos);
    CHECK(script.find("title 'SQL'") != std::string::npos);
    CHECK(script.find("0.5 with lines dashtype 2") != std::string::npos);
  }

  SECTION("overlay carries one curve per series plus the reference line") {
    const std::string script =
        emit_plot_script({s, s}, {"a.csv", "b.csv"}, {"phi = 0", "phi = pi"});
    CHECK(script.find("'a.csv'") != std::string::npos);
    CHECK(script.find("'b.csv'") != std::string::npos);
    CHECK(script.find("title 'phi = 0'") != std::string::npos);
    CHECK(script.find("title 'phi = pi'") != std::string::npos);
    CHECK(script.find("set key") != std::string::npos);
    CHECK(script.find("title 'SQL'") != std::string::npos);
  }

  SECTION("column selection") {
    PlotStyle style;
    style.column = 2;
    style.ylabel = "R_m";
    style.sql_line = false;
    const std::string script = emit_plot_script(s, "run.csv", style);
    CHECK(script.find("using 1:2") != std::string::npos);
    CHECK(script.find("SQL") == std::string::npos);
  }

  SECTION("sweep plot uses the parameter on the x axis") {
    SweepResult r;
    r.parameter = "g_eff";
    r.values = {1e-3, 2e-3};
    r.omega_eff = {1.01, 1.01};
    r.n_add = {0.4, 0.3};
    r.r_m = {2.0, 2.5};
    const std::string script = emit_plot_script(r, "sweep.csv");
    CHECK(script.find("set xlabel 'g_eff'") != std::string::npos);
    CHECK(script.find("using 1:3") != std::string::npos);
  }

  SECTION("nothing to plot is an error") {
    SpectrumSeries empty;
    CHECK_THROWS_AS(emit_plot_script(empty, "x.csv"), invalid_parameter);
    CHECK_THROWS_AS(emit_plot_script(std::vector<SpectrumSeries>{}, {}, {}),
                    invalid_parameter);
    CHECK_THROWS_AS(emit_plot_script({s, s}, {"a.csv"}, {"one"}), invalid_parameter);
    SweepResult r;
    CHECK_THROWS_AS(emit_plot_script(r, "x.csv"), invalid_parameter);
  }
}

TEST_CASE("text reports") {
  SECTION("hybrid modes") {
    SystemParams p = default_params();
    p.phi = 0.0;
    const std::string text = emit_text(hybrid_modes(p));
    CHECK(text.find("dark_label = minus-dark") != std::string::npos);
    CHECK(text.find("omega_plus  = 1.01") != std::string::npos);
    CHECK(text.find("g_minus") != std::string::npos);
  }
  SECTION("stability") {
    const std::string text = emit_text(stability_check(drift_matrix(default_params())));
    CHECK(text.find("stable = true") != std::string::npos);
    CHECK(text.find("margin = ") != std::string::npos);
  }
  SECTION("validation report text and records") {
    FrequencyGrid g;
    g.points = 21;
    const ValidationReport r = validate_against_numeric(
        default_params(), g.samples(),
        {ClosedFormVariant::printed(), ClosedFormVariant::derived()}, 1e-6);
    const std::string text = emit_text(r);
    CHECK(text.find("best variant: 'derived' -> PASS") != std::string::npos);
    CHECK(text.find("k4 = k3") != std::string::npos);
    const std::string records = emit_records(r);
    CHECK(records.rfind("variant,max_rel_dev,worst_omega,worst_coefficient,singular_points,"
                        "best,pass\n",
                        0) == 0);
    CHECK(records.find("\nderived,") != std::string::npos);
    CHECK(records.find("printed,") != std::string::npos);
  }
}

TEST_CASE("file io") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "omsense_io_test";
  fs::create_directories(dir);
  const std::string path = (dir / "roundtrip.txt").string();

  SECTION("write and read round trip") {
    const std::string payload = "line one\nline two\n";
    write_file(path, payload);
    CHECK(read_file(path) == payload);
  }
  SECTION("missing paths throw io_error with the path attached") {
    try {
      read_file((dir / "does_not_exist.txt").string());
      FAIL("expected io_error");
    } catch (const io_error& e) {
      CHECK(e.path.find("does_not_exist") != std::string::npos);
    }
    CHECK_THROWS_AS(write_file((dir / "no_dir" / "x.txt").string(), "x"), io_error);
  }
  fs::remove_all(dir);
}
