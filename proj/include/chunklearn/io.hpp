#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "chunklearn/experiment.hpp"

namespace chunklearn {

inline constexpr const char* kVersion = "0.1.0";

/// Malformed CSV input; carries the 1-based line number (0 if unknown).
class CsvError : public std::runtime_error {
 public:
  CsvError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Shortest round-trip decimal text, independent of the C++ locale.
std::string format_number(double v);
/// Strict decimal parse of the whole field. Throws std::invalid_argument.
double parse_number(const std::string& text);
std::vector<std::int64_t> parse_int_list(const std::string& text, const std::string& field);

/// INI config with [grammar], [agent] and [experiment] sections. Missing
/// keys keep their defaults; unknown keys are errors. Throws ConfigError.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string format_experiment_config(const ExperimentConfig& config);

/// Curve as stored on disk: raw per-trial fractions plus per-length columns.
struct CurveTable {
  std::vector<std::int64_t> trial;
  std::vector<double> fraction;
  std::vector<int> lengths;
  std::map<int, std::vector<double>> length_fraction;  // NaN where count is 0
  std::map<int, std::vector<int>> length_count;
};

CurveTable to_table(const LearningCurve& curve);
/// Header "trial,fraction,len<L>_fraction,len<L>_count,...".
std::string curve_csv(const LearningCurve& curve);
std::string curve_csv(const CurveTable& table);
/// Throws CsvError.
CurveTable parse_curve_csv(const std::string& text);

std::string rules_csv(const std::vector<ExtractedRule>& rules);
std::string population_rules_csv(const std::vector<PopulationRule>& rules);
std::string parses_csv(const ParseFrequencyReport& report);
std::string fit_json(const LogisticFit& fit);

/// Standalone SVG: axes, smoothed overall curve and one series per length.
std::string render_curve_svg(const CurveTable& table, int smoothing_window,
                             const std::string& title = "");

std::string manifest_json(const ExperimentConfig& config, const PopulationResult& result);

/// Writes every run artifact under `dir` (created if missing). Returns the
/// file names written, in order.
std::vector<std::string> write_run_outputs(const std::string& dir, const ExperimentConfig& config,
                                           const PopulationResult& result);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace chunklearn
