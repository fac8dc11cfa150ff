#include "chunklearn/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "chunklearn/io.hpp"

namespace chunklearn {

namespace {

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> grammar;
  std::optional<std::string> sizes;
  std::optional<std::int64_t> trials;
  std::optional<int> agents;
  std::optional<std::string> algorithm;
  std::optional<std::string> border;
  std::optional<double> tg;
  std::optional<std::string> snapshots;
};

bool looks_like_path(const std::string& s) {
  return s.find('/') != std::string::npos || s.find('.') != std::string::npos;
}

GrammarSpec grammar_from_args(const std::string& grammar, const std::string& sizes) {
  GrammarSpec g;
  if (looks_like_path(grammar)) {
    g.file = grammar;
    g.name.clear();
    return g;
  }
  g.name = grammar;
  for (auto v : parse_int_list(sizes, "sizes")) g.sizes.push_back(static_cast<int>(v));
  return g;
}

int run_with(ExperimentConfig config, const std::string& out_dir, std::ostream& out,
             std::ostream& err) {
  PopulationResult result;
  try {
    validate(config);
    require_valid(config.grammar.build());
    result = run_population(config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const GrammarError& e) {
    err << "config error: grammar: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return 1;
  }
  try {
    const auto files = write_run_outputs(out_dir, config, result);
    out << "agents " << config.population << ", trials " << config.trials << ", trailing-200 mean "
        << format_number(trailing_mean(result.curve, 200)) << ", " << result.wall_seconds << " s\n";
    for (const auto& f : files) out << "  " << (std::filesystem::path(out_dir) / f).string() << "\n";
  } catch (const std::exception& e) {
    err << "writing outputs failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_command(const std::string& config_path, const std::string& out_dir, const RunOverrides& o,
                std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    if (!config_path.empty()) config = load_experiment_config(config_path);
    const bool snapshots_from_file =
        !config_path.empty() && read_text_file(config_path).find("snapshots") != std::string::npos;
    if (o.grammar) config.grammar = grammar_from_args(*o.grammar, o.sizes.value_or(""));
    else if (o.sizes) config.grammar.sizes = grammar_from_args(config.grammar.name, *o.sizes).sizes;
    if (o.trials) config.trials = *o.trials;
    if (o.agents) config.population = *o.agents;
    if (o.algorithm) config.agent.algorithm = parse_algorithm(*o.algorithm);
    if (o.border) config.agent.border = parse_border(*o.border);
    if (o.tg) config.extraction_threshold = *o.tg;
    if (o.workers) config.workers = *o.workers;
    if (o.snapshots) {
      config.snapshot_trials = parse_int_list(*o.snapshots, "snapshots");
    } else if (o.trials && !snapshots_from_file) {
      auto& s = config.snapshot_trials;
      s = ExperimentConfig{}.snapshot_trials;
      s.erase(std::remove_if(s.begin(), s.end(), [&](std::int64_t t) { return t > config.trials; }),
              s.end());
      if (s.empty()) s.push_back(config.trials);
    }
    if (const char* env = std::getenv("CHUNKLEARN_SEED"); env && *env) {
      config.base_seed = static_cast<std::uint64_t>(parse_int_list(env, "CHUNKLEARN_SEED").at(0));
    }
    if (o.seed) config.base_seed = *o.seed;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const GrammarError& e) {
    err << "config error: grammar: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  return run_with(std::move(config), out_dir, out, err);
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir, std::ostream& out,
            std::ostream& err) {
  return run_command(config_path, out_dir, RunOverrides{}, out, err);
}

int cmd_extract(const std::string& table_path, double t_g, const std::string& grammar,
                const std::string& sizes, double r_plus, const std::string& out_path,
                std::ostream& out, std::ostream& err) {
  if (!(t_g > 0.0 && t_g < r_plus)) {
    err << "config error: tg: threshold " << format_number(t_g) << " outside (0, "
        << format_number(r_plus) << ")\n";
    return 2;
  }
  Pcfg pcfg;
  try {
    pcfg = grammar_from_args(grammar, sizes).build();
    require_valid(pcfg);
  } catch (const std::exception& e) {
    err << "config error: grammar: " << e.what() << "\n";
    return 2;
  }
  QTable table;
  try {
    const std::string text = read_text_file(table_path);
    const bool is_json = table_path.size() >= 5 && table_path.compare(table_path.size() - 5, 5, ".json") == 0;
    table = is_json ? QTable::from_json(text) : QTable::from_csv(text);
  } catch (const std::exception& e) {
    err << "bad table: " << e.what() << "\n";
    return 2;
  }
  try {
    const std::string csv = rules_csv(extract_grammar(table, t_g, pcfg));
    if (out_path.empty() || out_path == "-") {
      out << csv;
    } else {
      write_text_file(out_path, csv);
    }
  } catch (const std::invalid_argument& e) {
    err << "table does not match grammar: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "extract failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_fit(const std::string& curve_path, const std::string& out_path, std::ostream& out,
            std::ostream& err) {
  CurveTable table;
  try {
    table = parse_curve_csv(read_text_file(curve_path));
  } catch (const CsvError& e) {
    err << "malformed curve: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }
  if (table.fraction.size() < 10) {
    err << "malformed curve: need at least 10 rows to fit\n";
    return 2;
  }
  std::vector<double> x(table.trial.begin(), table.trial.end());
  const auto fit = fit_logistic(x, table.fraction);
  const std::string text = fit_json(fit);
  try {
    if (out_path.empty() || out_path == "-") {
      out << text;
    } else {
      write_text_file(out_path, text);
    }
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 1;
  }
  if (!fit.ok()) err << "warning: fit flagged (" << (fit.degenerate ? "degenerate" : "poor fit") << ")\n";
  return 0;
}

int cmd_plot(const std::string& curve_path, const std::string& out_svg, int smoothing,
             std::ostream& err) {
  if (smoothing < 1 || smoothing % 2 == 0) {
    err << "config error: smoothing: must be a positive odd integer\n";
    return 2;
  }
  CurveTable table;
  try {
    table = parse_curve_csv(read_text_file(curve_path));
  } catch (const std::exception& e) {
    err << "malformed curve: " << e.what() << "\n";
    return 2;
  }
  try {
    write_text_file(out_svg, render_curve_svg(table, smoothing,
                                              std::filesystem::path(curve_path).filename().string()));
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_grammars(std::ostream& out) {
  for (const auto& g : builtin_grammars()) {
    out << g.name << "  sizes:";
    for (std::size_t i = 0; i < g.size_params.size(); ++i) {
      out << (i ? "," : " ") << g.size_params[i] << "=" << g.default_sizes[i];
    }
    out << "  " << g.description << "\n";
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chunking and sequence-memory learner for boundary-masked PCFG streams", "chunklearn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path, out_dir = "run";
  RunOverrides o;
  auto* run = app.add_subcommand("run", "run a population experiment and write its outputs");
  run->add_option("--config", config_path, "INI config file");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", o.seed, "base seed (agent i uses seed + i)");
  run->add_option("--workers", o.workers, "worker threads, 0 = all cores");
  run->add_option("--grammar", o.grammar, "built-in grammar name or grammar file");
  run->add_option("--sizes", o.sizes, "comma list of class sizes for a built-in grammar");
  run->add_option("--trials", o.trials, "trials per agent");
  run->add_option("--agents", o.agents, "population size");
  run->add_option("--algorithm", o.algorithm, "q or rw");
  run->add_option("--border", o.border, "continuous or next");
  run->add_option("--tg", o.tg, "extraction threshold");
  run->add_option("--snapshots", o.snapshots, "comma list of snapshot trials");

  std::string table_path, grammar = "nvn", sizes, rules_out;
  double t_g = 5.0, r_plus = 25.0;
  auto* extract = app.add_subcommand("extract", "extract rules from a stored Q-table");
  extract->add_option("--table", table_path, "qtable CSV or JSON")->required();
  extract->add_option("--tg", t_g, "threshold in (0, r_plus)");
  extract->add_option("--grammar", grammar, "built-in grammar name or grammar file");
  extract->add_option("--sizes", sizes, "comma list of class sizes");
  extract->add_option("--r-plus", r_plus, "positive reward bounding the threshold");
  extract->add_option("--out", rules_out, "rules CSV (default stdout)");

  std::string curve_path, fit_out;
  auto* fit = app.add_subcommand("fit", "fit a logistic curve to curve.csv");
  fit->add_option("curve", curve_path, "curve CSV")->required();
  fit->add_option("--out", fit_out, "fit JSON (default stdout)");

  std::string plot_in, plot_out = "curve.svg";
  int smoothing = 51;
  auto* plot = app.add_subcommand("plot", "render curve.csv as SVG");
  plot->add_option("curve", plot_in, "curve CSV")->required();
  plot->add_option("--out", plot_out, "output SVG");
  plot->add_option("--smoothing", smoothing, "centered moving-average window (odd)");

  auto* grammars = app.add_subcommand("grammars", "list built-in grammars");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    if (e.get_exit_code() == 0) return 0;
    return 2;
  }

  if (run->parsed()) return run_command(config_path, out_dir, o, out, err);
  if (extract->parsed()) return cmd_extract(table_path, t_g, grammar, sizes, r_plus, rules_out, out, err);
  if (fit->parsed()) return cmd_fit(curve_path, fit_out, out, err);
  if (plot->parsed()) return cmd_plot(plot_in, plot_out, smoothing, err);
  if (grammars->parsed()) return cmd_grammars(out);
  return 2;
}

}  // namespace chunklearn
