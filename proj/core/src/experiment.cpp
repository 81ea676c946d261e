#include "oamcorr/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "oamcorr/io.hpp"

namespace oamcorr {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void reject_unknown_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) {
      throw ConfigError(where.empty() ? item.key() : where + "." + item.key(), "unknown key");
    }
  }
}

const json& require(const json& obj, const std::string& where, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where.empty() ? key : where + "." + key, "missing required key");
  return *it;
}

std::string path_of(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

double get_number(const json& obj, const std::string& where, const char* key) {
  const json& v = require(obj, where, key);
  if (!v.is_number()) throw ConfigError(path_of(where, key), "expected a number");
  return v.get<double>();
}

long long get_integer(const json& obj, const std::string& where, const char* key) {
  const json& v = require(obj, where, key);
  if (!v.is_number_integer()) throw ConfigError(path_of(where, key), "expected an integer");
  return v.get<long long>();
}

std::string get_string(const json& obj, const std::string& where, const char* key) {
  const json& v = require(obj, where, key);
  if (!v.is_string()) throw ConfigError(path_of(where, key), "expected a string");
  return v.get<std::string>();
}

const json& require_object(const json& obj, const char* key) {
  const json& v = require(obj, "", key);
  if (!v.is_object()) throw ConfigError(key, "expected an object");
  return v;
}

template <class Fn>
auto rethrow_as_config_error(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

int checked_int(long long value, const std::string& key) {
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) {
    throw ConfigError(key, "integer out of range");
  }
  return static_cast<int>(value);
}

Envelope parse_envelope(const json& j, const PolarGrid& grid) {
  const std::string type = get_string(j, "envelope", "type");
  Envelope env;
  if (type == "gaussian") {
    reject_unknown_keys(j, "envelope", {"type", "waist"});
    env = GaussianEnvelope{get_number(j, "envelope", "waist")};
  } else if (type == "uniform_disk") {
    reject_unknown_keys(j, "envelope", {"type", "radius"});
    env = UniformDiskEnvelope{get_number(j, "envelope", "radius")};
  } else if (type == "custom_radial") {
    reject_unknown_keys(j, "envelope", {"type", "samples"});
    const json& s = require(j, "envelope", "samples");
    if (!s.is_array()) throw ConfigError("envelope.samples", "expected an array of numbers");
    CustomRadialEnvelope c;
    for (const auto& v : s) {
      if (!v.is_number()) throw ConfigError("envelope.samples", "expected an array of numbers");
      c.samples.push_back(v.get<double>());
    }
    env = std::move(c);
  } else {
    throw ConfigError("envelope.type", "unknown envelope type '" + type + "' (gaussian, uniform_disk, custom_radial)");
  }
  rethrow_as_config_error("envelope", [&] {
    validate_envelope(env, grid);
    return 0;
  });
  return env;
}

CoherenceSpec parse_coherence(const json& j, const PolarGrid& grid) {
  const std::string type = get_string(j, "coherence", "type");
  CoherenceSpec coh;
  if (type == "delta") {
    reject_unknown_keys(j, "coherence", {"type"});
    coh = DeltaCorrelated{};
  } else if (type == "smoothed") {
    reject_unknown_keys(j, "coherence", {"type", "correlation_cells"});
    coh = Smoothed{checked_int(get_integer(j, "coherence", "correlation_cells"), "coherence.correlation_cells")};
  } else {
    throw ConfigError("coherence.type", "unknown coherence type '" + type + "' (delta, smoothed)");
  }
  rethrow_as_config_error("coherence.correlation_cells", [&] {
    validate_coherence(coh, grid);
    return 0;
  });
  return coh;
}

ObjectMask parse_mask(const json& j, const std::filesystem::path& base_dir) {
  const std::string type = get_string(j, "mask", "type");
  if (type == "uniform") {
    reject_unknown_keys(j, "mask", {"type"});
    return make_uniform();
  }
  if (type == "angular_slits") {
    reject_unknown_keys(j, "mask", {"type", "N", "alpha"});
    const int n = checked_int(get_integer(j, "mask", "N"), "mask.N");
    const double alpha = get_number(j, "mask", "alpha");
    return rethrow_as_config_error("mask.alpha", [&] { return make_angular_slits(n, alpha); });
  }
  if (type == "fractional_vortex") {
    reject_unknown_keys(j, "mask", {"type", "M"});
    const double m = get_number(j, "mask", "M");
    return rethrow_as_config_error("mask.M", [&] { return make_fractional_vortex(m); });
  }
  if (type == "integer_vortex") {
    reject_unknown_keys(j, "mask", {"type", "l0"});
    return make_integer_vortex(checked_int(get_integer(j, "mask", "l0"), "mask.l0"));
  }
  if (type == "custom_raster") {
    reject_unknown_keys(j, "mask", {"type", "path"});
    std::filesystem::path p = get_string(j, "mask", "path");
    if (p.is_relative()) p = base_dir / p;
    return rethrow_as_config_error("mask.path", [&] { return load_custom_raster(p); });
  }
  throw ConfigError("mask.type", "unknown mask type '" + type +
                                     "' (uniform, angular_slits, fractional_vortex, integer_vortex, custom_raster)");
}

Task parse_task(const std::string& name) {
  if (name == "simulate") return Task::Simulate;
  if (name == "oracle") return Task::Oracle;
  if (name == "compare") return Task::Compare;
  if (name == "identify") return Task::Identify;
  throw ConfigError("tasks", "unknown task '" + name + "' (simulate, oracle, compare, identify)");
}

const char* task_name(Task t) {
  switch (t) {
    case Task::Simulate: return "simulate";
    case Task::Oracle: return "oracle";
    case Task::Compare: return "compare";
    case Task::Identify: return "identify";
  }
  return "?";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json provenance_json(const Provenance& p) {
  return {{"master_seed", p.master_seed}, {"first_index", p.first_index}, {"grid", p.grid},
          {"envelope", p.envelope},       {"coherence", p.coherence},     {"mask", p.mask}};
}

json matrix_sidecar(const CorrelationMatrix& m, const json& config) {
  json j;
  j["config"] = config;
  j["master_seed"] = m.provenance.master_seed;
  j["realizations"] = m.realizations;
  j["l_max"] = m.window.l_max;
  j["provenance"] = provenance_json(m.provenance);
  j["mean_I_test"] = m.mean_test;
  j["mean_I_ref"] = m.mean_ref;
  j["stderr_mean_I_test"] = m.stderr_mean_test;
  j["stderr_mean_I_ref"] = m.stderr_mean_ref;
  return j;
}

IdentifyMode default_mode(const ObjectMask& mask) {
  return std::holds_alternative<FractionalVortex>(mask) ? IdentifyMode::Fractional : IdentifyMode::Symmetry;
}

json identify_json(const CorrelationMatrix& m, const IdentifyOptions& options) {
  json j;
  if (options.mode == IdentifyMode::Symmetry) {
    const int n_max = options.n_max.value_or(std::min(8, m.window.l_max - 2));
    const SymmetryReport r = detect_symmetry(m, options.n_min, n_max, options.threshold);
    j["mode"] = "symmetry";
    j["best_N"] = r.best_n ? json(*r.best_n) : json(nullptr);
    j["threshold"] = r.threshold;
    json scores = json::object();
    json suppressed = json::object();
    for (const auto& [n, s] : r.scores) scores[std::to_string(n)] = s;
    for (const auto& [n, s] : r.suppressed_scores) suppressed[std::to_string(n)] = s;
    j["scores"] = scores;
    j["harmonic_suppressed_scores"] = suppressed;
    j["N_range"] = {options.n_min, n_max};
  } else {
    const long u_min = options.u_min.value_or(-m.window.l_max);
    const long u_max = options.u_max.value_or(m.window.l_max - 1);
    const FractionalFit f = fit_fractional(signal_row(m, 0), u_min, u_max);
    j["mode"] = "fractional";
    j["u"] = f.u;
    j["v"] = f.v;
    j["M_hat"] = f.m_hat;
    j["amplitude"] = f.amplitude;
    j["residual_rms"] = f.residual;
    j["u_range"] = {u_min, u_max};
  }
  j["realizations"] = m.realizations;
  j["master_seed"] = m.provenance.master_seed;
  return j;
}

json compare_json(const CompareReport& r) {
  json j;
  j["max_abs_deviation"] = r.max_abs_deviation;
  j["mean_abs_deviation"] = r.mean_abs_deviation;
  j["delta_l"] = r.delta_l;
  j["simulated_normalized"] = r.simulated;
  j["oracle_normalized"] = r.oracle;
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("<document>", "config must be a JSON object");
  reject_unknown_keys(root, "", {"grid", "envelope", "coherence", "mask", "l_max", "realizations", "master_seed",
                                 "repeats", "output_dir", "tasks"});

  const json& g = require_object(root, "grid");
  reject_unknown_keys(g, "grid", {"n_r", "n_phi", "r_max"});
  const int n_r = checked_int(get_integer(g, "grid", "n_r"), "grid.n_r");
  const int n_phi = checked_int(get_integer(g, "grid", "n_phi"), "grid.n_phi");
  const double r_max = get_number(g, "grid", "r_max");
  if (n_r <= 0) throw ConfigError("grid.n_r", "must be positive");
  if (n_phi <= 0 || n_phi % 2 != 0) throw ConfigError("grid.n_phi", "must be positive and even");
  if (!(r_max > 0.0)) throw ConfigError("grid.r_max", "must be positive");
  const PolarGrid grid(n_r, n_phi, r_max);

  ExperimentConfig cfg{EnsembleSpec{grid, GaussianEnvelope{1.0}, DeltaCorrelated{}, UniformMask{}, 0, 0, 0, 0}, 0, {}, {}, {}};
  EnsembleSpec& spec = cfg.ensemble;
  spec.envelope = parse_envelope(require_object(root, "envelope"), grid);
  spec.coherence = parse_coherence(require_object(root, "coherence"), grid);
  spec.mask = parse_mask(require_object(root, "mask"), base_dir);

  spec.l_max = checked_int(get_integer(root, "", "l_max"), "l_max");
  rethrow_as_config_error("l_max", [&] {
    grid.require_alias_free(spec.l_max);
    return 0;
  });

  const long long realizations = get_integer(root, "", "realizations");
  if (realizations < 2) throw ConfigError("realizations", "must be >= 2");
  spec.realizations = static_cast<std::uint64_t>(realizations);

  const json& seed = require(root, "", "master_seed");
  if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() && seed.get<long long>() < 0)) {
    throw ConfigError("master_seed", "expected a non-negative 64-bit integer");
  }
  spec.master_seed = seed.get<std::uint64_t>();

  if (root.contains("repeats")) {
    const long long r = get_integer(root, "", "repeats");
    if (r != 1 && r < 2) throw ConfigError("repeats", "must be >= 2 (or 1 for a single run)");
    cfg.repeats = r >= 2 ? static_cast<int>(r) : 0;
  }

  if (root.contains("output_dir")) {
    std::filesystem::path out = get_string(root, "", "output_dir");
    cfg.output_dir = out.is_relative() ? base_dir / out : out;
  } else if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    cfg.output_dir = env;
  } else {
    cfg.output_dir = base_dir / "oamcorr_out";
  }

  const json& tasks = require(root, "", "tasks");
  if (!tasks.is_array() || tasks.empty()) throw ConfigError("tasks", "expected a non-empty array of task names");
  for (const auto& t : tasks) {
    if (!t.is_string()) throw ConfigError("tasks", "task names must be strings");
    cfg.tasks.insert(parse_task(t.get<std::string>()));
  }
  if (cfg.tasks.contains(Task::Compare) && !cfg.tasks.contains(Task::Simulate)) {
    throw ConfigError("tasks", "compare needs simulate in the same run");
  }
  if (cfg.tasks.contains(Task::Identify) && !cfg.tasks.contains(Task::Simulate)) {
    throw ConfigError("tasks", "identify needs simulate in the same run");
  }

  json resolved = root;
  resolved["output_dir"] = cfg.output_dir.string();
  resolved["repeats"] = cfg.repeats == 0 ? 1 : cfg.repeats;
  json task_list = json::array();
  for (Task t : cfg.tasks) task_list.push_back(task_name(t));
  resolved["tasks"] = task_list;
  cfg.resolved_json = resolved.dump();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path.parent_path());
}

CompareReport compare_with_profile(const CorrelationMatrix& m, const SignalProfile& profile) {
  const std::vector<SignalPoint> row = signal_row(m, 0);
  const int reach = std::min(m.window.l_max, profile.dl_max);
  CompareReport r;
  double sim_peak = 0.0;
  double oracle_peak = 0.0;
  for (const auto& p : row) {
    if (std::abs(p.delta_l) > reach) continue;
    r.delta_l.push_back(p.delta_l);
    r.simulated.push_back(p.signal);
    r.oracle.push_back(profile.at(p.delta_l));
    sim_peak = std::max(sim_peak, p.signal);
    oracle_peak = std::max(oracle_peak, profile.at(p.delta_l));
  }
  if (!(sim_peak > 0.0) || !(oracle_peak > 0.0)) throw std::invalid_argument("cannot peak-normalise an all-zero profile");
  double total = 0.0;
  for (std::size_t i = 0; i < r.delta_l.size(); ++i) {
    r.simulated[i] /= sim_peak;
    r.oracle[i] /= oracle_peak;
    const double d = std::abs(r.simulated[i] - r.oracle[i]);
    r.max_abs_deviation = std::max(r.max_abs_deviation, d);
    total += d;
  }
  r.mean_abs_deviation = total / static_cast<double>(r.delta_l.size());
  return r;
}

std::string identify_to_json(const CorrelationMatrix& m, const IdentifyOptions& options, std::string_view config_json) {
  json j = identify_json(m, options);
  if (!config_json.empty()) j["config"] = json::parse(config_json);
  return dump(j);
}

std::string compare_to_json(const CompareReport& report, std::string_view config_json) {
  json j = compare_json(report);
  if (!config_json.empty()) j["config"] = json::parse(config_json);
  return dump(j);
}

std::string load_sidecar_config(const std::filesystem::path& matrix_csv) {
  const auto sidecar = io::sidecar_path_for(matrix_csv);
  if (!std::filesystem::exists(sidecar)) return {};
  std::ifstream in(sidecar);
  const json j = json::parse(in);
  return j.contains("config") ? j["config"].dump() : std::string{};
}

CorrelationMatrix load_correlation_matrix(const std::filesystem::path& matrix_csv) {
  CorrelationMatrix m;
  m.g2 = io::read_matrix_csv(matrix_csv);
  m.window = m.g2.window();
  const auto n = static_cast<std::size_t>(m.window.size());

  const auto se_path = io::stderr_path_for(matrix_csv);
  if (std::filesystem::exists(se_path)) {
    m.stderr_g2 = io::read_matrix_csv(se_path);
    if (!(m.stderr_g2.window() == m.window)) throw std::runtime_error(se_path.string() + ": window differs from matrix");
  } else {
    m.stderr_g2 = ModeMatrix(m.window);
  }

  m.mean_test.assign(n, 1.0);
  m.mean_ref.assign(n, 1.0);
  m.stderr_mean_test.assign(n, 0.0);
  m.stderr_mean_ref.assign(n, 0.0);
  const auto sidecar = io::sidecar_path_for(matrix_csv);
  if (std::filesystem::exists(sidecar)) {
    std::ifstream in(sidecar);
    json j;
    try {
      j = json::parse(in);
      m.mean_test = j.at("mean_I_test").get<std::vector<double>>();
      m.mean_ref = j.at("mean_I_ref").get<std::vector<double>>();
      m.stderr_mean_test = j.value("stderr_mean_I_test", std::vector<double>(n, 0.0));
      m.stderr_mean_ref = j.value("stderr_mean_I_ref", std::vector<double>(n, 0.0));
      m.realizations = j.value("realizations", std::uint64_t{0});
      m.provenance.master_seed = j.value("master_seed", std::uint64_t{0});
    } catch (const json::exception& e) {
      throw std::runtime_error(sidecar.string() + ": " + e.what());
    }
    if (m.mean_test.size() != n || m.mean_ref.size() != n) throw std::runtime_error(sidecar.string() + ": mean arrays do not match the window");
  }

  m.raw_mean_product = ModeMatrix(m.window);
  for (int lt = -m.window.l_max; lt <= m.window.l_max; ++lt) {
    for (int lr = -m.window.l_max; lr <= m.window.l_max; ++lr) {
      m.raw_mean_product(lt, lr) = m.g2(lt, lr) * m.mean_test[m.window.offset(lt)] * m.mean_ref[m.window.offset(lr)];
    }
  }
  return m;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentResult result;
  const json resolved = json::parse(config.resolved_json);
  const std::filesystem::path& out = config.output_dir;
  const std::string started = utc_timestamp();

  auto write = [&](const std::filesystem::path& path, std::string_view contents) {
    io::write_file_atomic(path, contents);
    result.written.push_back(path);
  };

  if (config.tasks.contains(Task::Simulate)) {
    std::optional<RepeatSummary> repeats;
    if (config.repeats >= 2) {
      repeats = run_repeats(config.ensemble, config.repeats, options.workers);
      result.matrix = repeats->pooled;
    } else {
      result.matrix = run_ensemble(config.ensemble, options.workers);
    }
    const auto matrix_path = out / kMatrixFile;
    write(matrix_path, io::matrix_to_csv(result.matrix->g2));
    write(io::stderr_path_for(matrix_path), io::matrix_to_csv(result.matrix->stderr_g2));
    if (repeats) write(out / kSpreadFile, io::matrix_to_csv(repeats->spread_g2));
    json sidecar = matrix_sidecar(*result.matrix, resolved);
    sidecar["repeats"] = config.repeats == 0 ? 1 : config.repeats;
    sidecar["timestamps"] = {{"started_utc", started}, {"finished_utc", utc_timestamp()}};
    write(io::sidecar_path_for(matrix_path), dump(sidecar));
  }

  if (config.tasks.contains(Task::Oracle) || config.tasks.contains(Task::Compare)) {
    const EnsembleSpec& s = config.ensemble;
    result.oracle = quadrature_signal(s.mask, s.envelope, s.grid, s.l_max);
    if (config.tasks.contains(Task::Oracle)) write(out / kOracleFile, io::profile_to_csv(peak_normalize(*result.oracle)));
  }

  if (config.tasks.contains(Task::Compare)) {
    write(out / kCompareFile, compare_to_json(compare_with_profile(*result.matrix, *result.oracle), config.resolved_json));
  }

  if (config.tasks.contains(Task::Identify)) {
    IdentifyOptions opts;
    opts.mode = default_mode(config.ensemble.mask);
    write(out / kIdentifyFile, identify_to_json(*result.matrix, opts, config.resolved_json));
  }
  return result;
}

}  // namespace oamcorr
