#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ruinsim/estimate.hpp"
#include "ruinsim/model.hpp"

namespace ruinsim {

/// Malformed or schema-invalid experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridConfig {
  std::vector<double> points;  // explicit grid; empty means quantile window
  int count = 20;
  double quantile_lo = 1e-5;
  double quantile_hi = 1e-1;
};

struct RunConfig {
  std::uint64_t samples = 1'000'000;
  std::uint64_t moment_samples = 1'000'000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  GridConfig x_grid;
};

/// Parameters of the verify subcommand; unset values take each check's default.
struct VerifyConfig {
  std::string law = "g";  // which factor the single-law checks use
  std::vector<int> n_list{2, 5, 20};
  int n_max = 10;
  double eps = 0.05;
  double potter_b = 1.1;
  double potter_eps = 0.1;
  int ratio_points = 3;
  std::optional<double> tolerance;
};

struct OutputConfig {
  std::string csv_path;
  std::string svg_path;
};

struct ExperimentConfig {
  ModelSpec model;
  /// Finite horizons to report; empty when the model horizon is infinite.
  std::vector<int> horizons;
  RunConfig run;
  VerifyConfig verify;
  OutputConfig output;
};

/// Parses and validates a configuration document. Unknown keys are errors.
/// Malformed JSON is reported with line and column.
ExperimentConfig parse_config(std::string_view text);

/// Compact JSON with sorted keys and every default spelled out, covering what
/// affects results: no output paths, no worker count.
std::string canonical_json(const ExperimentConfig& config);

/// 64-bit FNV-1a of the text, as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view text);

/// Header comment embedded as the first line of every CSV.
std::string csv_header_comment(const ExperimentConfig& config, std::string_view command);

/// Shortest round-trip decimal form.
std::string format_number(double v);

std::string estimate_csv_header();
std::string estimate_csv_row(const RatioDiagnostic& r);

/// Log-x line plot of ratio against x, one series per label.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};
std::string ratio_svg(const std::vector<PlotSeries>& series, std::string_view title);

/// Entry point of the command-line tool. Returns the process exit code:
/// 0 success or pass, 1 verification failure, 2 configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ruinsim
