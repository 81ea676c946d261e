// oamcorr: command line front end for the OAM intensity-correlation simulator.
//
//   oamcorr run <config.json> [--workers N]
//   oamcorr oracle <config.json>
//   oamcorr identify <matrix.csv> [--mode symmetry|fractional]
//   oamcorr heatmap <matrix.csv> <out.pgm>
//   oamcorr compare <matrix.csv> <profile.csv>

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include "oamcorr/experiment.hpp"
#include "oamcorr/io.hpp"

namespace {

void report_written(const oamcorr::ExperimentResult& result) {
  for (const auto& p : result.written) std::cout << "wrote " << p.string() << "\n";
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    oamcorr::io::write_file_atomic(out_path, text);
    std::cout << "wrote " << out_path << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate and analyse two-arm OAM intensity correlations of pseudothermal light"};
  app.require_subcommand(1);

  std::string config_path;
  unsigned workers = 1;
  auto* run = app.add_subcommand("run", "Run the tasks listed in a config file");
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--workers,-j", workers, "Worker threads (results do not depend on this)")
      ->check(CLI::Range(1u, 1024u));

  std::string oracle_config;
  auto* oracle = app.add_subcommand("oracle", "Write the quadrature oracle profile for a config");
  oracle->add_option("config", oracle_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  std::string identify_matrix;
  std::string identify_mode = "symmetry";
  std::string identify_out;
  int n_min = 2;
  std::optional<int> n_max;
  double threshold = oamcorr::kDefaultSymmetryThreshold;
  std::optional<long> u_min;
  std::optional<long> u_max;
  auto* identify = app.add_subcommand("identify", "Identify an object from a correlation matrix");
  identify->add_option("matrix", identify_matrix, "g2 matrix CSV written by run")->required()->check(CLI::ExistingFile);
  identify->add_option("--mode", identify_mode, "symmetry or fractional")
      ->check(CLI::IsMember({"symmetry", "fractional"}));
  identify->add_option("--n-min", n_min, "Smallest symmetry order tested");
  identify->add_option("--n-max", n_max, "Largest symmetry order tested");
  identify->add_option("--threshold", threshold, "Contrast score needed to report a symmetry");
  identify->add_option("--u-min", u_min, "Smallest integer part tried by the fractional fit");
  identify->add_option("--u-max", u_max, "Largest integer part tried by the fractional fit");
  identify->add_option("--out,-o", identify_out, "Write the JSON report here instead of stdout");

  std::string heat_matrix;
  std::string heat_out;
  auto* heatmap = app.add_subcommand("heatmap", "Render a matrix CSV as an 8-bit PGM image");
  heatmap->add_option("matrix", heat_matrix, "Matrix CSV")->required()->check(CLI::ExistingFile);
  heatmap->add_option("image", heat_out, "Output .pgm path")->required();

  std::string compare_matrix;
  std::string compare_profile;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Compare a simulated matrix with an oracle profile");
  compare->add_option("matrix", compare_matrix, "g2 matrix CSV written by run")->required()->check(CLI::ExistingFile);
  compare->add_option("profile", compare_profile, "Profile CSV (delta_l,value)")->required()->check(CLI::ExistingFile);
  compare->add_option("--out,-o", compare_out, "Write the JSON report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto config = oamcorr::load_config(config_path);
      report_written(oamcorr::run_experiment(config, {workers}));
    } else if (*oracle) {
      auto config = oamcorr::load_config(oracle_config);
      config.tasks = {oamcorr::Task::Oracle};
      report_written(oamcorr::run_experiment(config));
    } else if (*identify) {
      oamcorr::IdentifyOptions opts;
      opts.mode = identify_mode == "fractional" ? oamcorr::IdentifyMode::Fractional : oamcorr::IdentifyMode::Symmetry;
      opts.n_min = n_min;
      opts.n_max = n_max;
      opts.threshold = threshold;
      opts.u_min = u_min;
      opts.u_max = u_max;
      const auto matrix = oamcorr::load_correlation_matrix(identify_matrix);
      emit(oamcorr::identify_to_json(matrix, opts, oamcorr::load_sidecar_config(identify_matrix)), identify_out);
    } else if (*heatmap) {
      oamcorr::io::write_heatmap(heat_out, oamcorr::io::read_matrix_csv(heat_matrix));
      std::cout << "wrote " << heat_out << "\n";
    } else if (*compare) {
      const auto matrix = oamcorr::load_correlation_matrix(compare_matrix);
      const auto profile = oamcorr::io::read_profile_csv(compare_profile);
      emit(oamcorr::compare_to_json(oamcorr::compare_with_profile(matrix, profile),
                                    oamcorr::load_sidecar_config(compare_matrix)),
           compare_out);
    }
  } catch (const oamcorr::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
