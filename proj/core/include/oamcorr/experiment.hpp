#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oamcorr/correlate.hpp"
#include "oamcorr/identify.hpp"
#include "oamcorr/oracle.hpp"

namespace oamcorr {

/// Invalid configuration; `key()` names the offending JSON path, e.g. "grid.n_phi".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

enum class Task { Simulate, Oracle, Compare, Identify };

/// Environment variable consulted when a config has no "output_dir".
inline constexpr const char* kOutputDirEnv = "OAMCORR_OUTPUT_DIR";

struct ExperimentConfig {
  EnsembleSpec ensemble;
  int repeats = 0;  // 0: single run; >= 2: also report the spread of g2
  std::filesystem::path output_dir;
  std::set<Task> tasks;
  /// Canonical JSON of the resolved configuration (defaults filled in).
  std::string resolved_json;
};

/// Parses and validates a config document. Unknown keys are errors. Relative
/// paths (output_dir, raster files) resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  unsigned workers = 1;
};

struct ExperimentResult {
  std::vector<std::filesystem::path> written;
  std::optional<CorrelationMatrix> matrix;
  std::optional<SignalProfile> oracle;
};

/// Runs the configured tasks and writes their outputs into output_dir:
/// correlation.csv / .stderr.csv / .json (simulate), correlation.spread.csv
/// (repeats), oracle_profile.csv (oracle), compare.json, identify.json.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Output file names inside output_dir.
inline constexpr const char* kMatrixFile = "correlation.csv";
inline constexpr const char* kSpreadFile = "correlation.spread.csv";
inline constexpr const char* kOracleFile = "oracle_profile.csv";
inline constexpr const char* kCompareFile = "compare.json";
inline constexpr const char* kIdentifyFile = "identify.json";

/// Re-reads a matrix written by `run`: g2 from the CSV, error bars from the
/// companion .stderr.csv, singles means from the .json sidecar. Missing
/// companions degrade to zero error bars and unit means.
CorrelationMatrix load_correlation_matrix(const std::filesystem::path& matrix_csv);

struct CompareReport {
  double max_abs_deviation = 0.0;
  double mean_abs_deviation = 0.0;
  std::vector<int> delta_l;
  std::vector<double> simulated;  // peak-normalised ΔG² row at l_r = 0
  std::vector<double> oracle;     // peak-normalised profile
};

/// Compares the background-subtracted l_r = 0 row with an oracle profile,
/// both peak-normalised, over the Δl values they share.
CompareReport compare_with_profile(const CorrelationMatrix& m, const SignalProfile& profile);

enum class IdentifyMode { Symmetry, Fractional };

struct IdentifyOptions {
  IdentifyMode mode = IdentifyMode::Symmetry;
  int n_min = 2;
  std::optional<int> n_max;  // default min(8, l_max - 2)
  double threshold = kDefaultSymmetryThreshold;
  std::optional<long> u_min;  // default -l_max
  std::optional<long> u_max;  // default l_max - 1
};

/// Resolved config stored in a matrix sidecar, or empty when there is none.
std::string load_sidecar_config(const std::filesystem::path& matrix_csv);

/// JSON reports. `config_json`, when non-empty, is embedded as "config".
std::string identify_to_json(const CorrelationMatrix& m, const IdentifyOptions& options,
                             std::string_view config_json = {});
std::string compare_to_json(const CompareReport& report, std::string_view config_json = {});

}  // namespace oamcorr
