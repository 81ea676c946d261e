// Desk-scale acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oamcorr/correlate.hpp"
#include "oamcorr/experiment.hpp"
#include "oamcorr/identify.hpp"
#include "oamcorr/io.hpp"
#include "oamcorr/masks.hpp"
#include "oamcorr/oracle.hpp"

using namespace oamcorr;

namespace {

constexpr double pi = std::numbers::pi;

constexpr int kNr = 64;
constexpr int kNphi = 256;
constexpr double kRmax = 3.0;
constexpr double kWaist = 1.0;
constexpr int kLmax = 12;
constexpr std::uint64_t kSeed = 20240917;
constexpr int kSeeds = 20;

constexpr std::uint64_t kBaselineG = 5000;
constexpr std::uint64_t kObjectG = 20000;
constexpr std::uint64_t kIdentifyG = 5000;
constexpr std::uint64_t kDeterminismG = 1000;

// Pinned tolerances.
constexpr double kDiagLo = 1.9, kDiagHi = 2.1;
constexpr int kDiagRange = 8;
constexpr double kOffLo = 0.97, kOffHi = 1.03;
constexpr double kBandHigh = 5.0, kBandLow = 3.0;
constexpr double kSlitRatioTol = 0.10;
constexpr double kVortexRatioTol = 0.15;
constexpr double kShapeRms = 0.05;
constexpr double kShiftSigmas = 2.0;
constexpr double kFitTol = 0.05;
constexpr double kOracleSlitTol = 1e-9;
constexpr double kOracleVortexTol = 1e-3;
constexpr double kFlatSigmas = 4.0;
constexpr double kStderrTol = 0.30;

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

PolarGrid desk_grid() { return make_grid(kNr, kNphi, kRmax); }

EnsembleSpec desk(ObjectMask mask, std::uint64_t realizations, std::uint64_t seed) {
  return EnsembleSpec{desk_grid(), GaussianEnvelope{kWaist}, DeltaCorrelated{}, std::move(mask), kLmax,
                      realizations, seed, 0};
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double profile_at(const std::vector<DiagonalPoint>& p, int dl) {
  for (const auto& q : p)
    if (q.delta_l == dl) return q.value;
  throw std::out_of_range("delta_l outside profile");
}

CorrelationMatrix* g_baseline = nullptr;
CorrelationMatrix* g_slits_g = nullptr;
CorrelationMatrix* g_slits_4g = nullptr;
CorrelationMatrix* g_vortex = nullptr;

Outcome thermal_baseline() {
  Outcome o;
  const CorrelationMatrix& m = *g_baseline;
  double lo = 1e300, hi = -1e300;
  for (int l = -kDiagRange; l <= kDiagRange; ++l) {
    lo = std::min(lo, m.g2(l, l));
    hi = std::max(hi, m.g2(l, l));
  }
  double off = 0.0;
  int count = 0;
  for (int lt = -kLmax; lt <= kLmax; ++lt)
    for (int lr = -kLmax; lr <= kLmax; ++lr)
      if (lt != lr) {
        off += m.g2(lt, lr);
        ++count;
      }
  off /= count;
  o.pass = lo >= kDiagLo && hi <= kDiagHi && off >= kOffLo && off <= kOffHi;
  o.detail = "diag g2 in [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "], mean off-diag " + fmt("%.4f", off);
  return o;
}

Outcome slit_object(const CorrelationMatrix& m, int n_fold, double alpha, const std::vector<int>& quiet,
                    bool check_best) {
  Outcome o;
  const auto report = detect_symmetry(m, 1, 8);
  const double loud = report.scores.at(n_fold);
  o.pass = loud > kBandHigh;
  o.detail = "score(" + std::to_string(n_fold) + ")=" + fmt("%.1f", loud);
  for (int n : quiet) {
    const double s = report.scores.at(n);
    o.pass = o.pass && s < kBandLow;
    o.detail += " score(" + std::to_string(n) + ")=" + fmt("%.2f", s);
  }
  if (check_best) {
    const auto best = detect_symmetry(m, 2, 8).best_n;
    o.pass = o.pass && best && *best == n_fold;
    o.detail += " best_N=" + (best ? std::to_string(*best) : std::string("none"));
  }
  const auto profile = diagonal_profile(m);
  const double ratio = profile_at(profile, n_fold) / profile_at(profile, 0);
  const double target = analytic_slits(n_fold, alpha, n_fold);
  o.pass = o.pass && std::abs(ratio / target - 1.0) <= kSlitRatioTol;
  o.detail += " ratio=" + fmt("%.4f", ratio) + " (target " + fmt("%.4f", target) + ")";
  return o;
}

Outcome four_fold() { return slit_object(*g_slits_4g, 4, pi / 6, {1, 2, 3, 5}, false); }

Outcome six_fold() {
  const auto m = run_ensemble(desk(make_angular_slits(6, pi / 8), kObjectG, kSeed + 3), workers());
  return slit_object(m, 6, pi / 8, {}, true);
}

Outcome fractional_vortex() {
  Outcome o;
  const double winding = -2.0 / 3.0;
  const CorrelationMatrix& m = *g_vortex;
  const auto row = signal_row(m, 0);
  const auto peak = std::max_element(row.begin(), row.end(),
                                     [](const SignalPoint& a, const SignalPoint& b) { return a.signal < b.signal; });
  o.pass = peak->delta_l == -1;
  o.detail = "row peak at dl=" + std::to_string(peak->delta_l);

  const auto profile = diagonal_profile(m);
  const double ratio = profile_at(profile, -1) / profile_at(profile, 0);
  const double target = analytic_fractional(winding, -1) / analytic_fractional(winding, 0);
  o.pass = o.pass && std::abs(ratio / target - 1.0) <= kVortexRatioTol;
  o.detail += " ratio=" + fmt("%.3f", ratio) + " (target " + fmt("%.3f", target) + ")";

  double top = 0.0;
  for (int dl = -kLmax; dl <= kLmax; ++dl) top = std::max(top, profile_at(profile, dl));
  const auto oracle = analytic_fractional_profile(winding, kLmax, true);
  double ss = 0.0;
  for (int dl = -kLmax; dl <= kLmax; ++dl) {
    const double d = profile_at(profile, dl) / top - oracle.at(dl);
    ss += d * d;
  }
  const double rms = std::sqrt(ss / (2 * kLmax + 1));
  o.pass = o.pass && rms <= kShapeRms;
  o.detail += " shape rms=" + fmt("%.4f", rms);
  return o;
}

Outcome peak_law() {
  Outcome o;
  // Same master seed on both sides: the rows then differ only by the mask.
  const std::vector<std::pair<double, double>> pairs{{-0.5, -2.5}, {-2.0 / 3.0, -8.0 / 3.0}};
  for (const auto& [a, b] : pairs) {
    const auto ma = a == -2.0 / 3.0 ? *g_vortex : run_ensemble(desk(make_fractional_vortex(a), kObjectG, kSeed + 4), workers());
    const auto mb = run_ensemble(desk(make_fractional_vortex(b), kObjectG, kSeed + 4), workers());
    const long shift = floor_decompose(b).u - floor_decompose(a).u;
    const auto ra = signal_row(ma, 0);
    const auto rb = signal_row(mb, 0);
    double worst = 0.0;
    int compared = 0;
    for (const auto& p : rb) {
      const long dl = p.delta_l - shift;
      if (dl < -kLmax || dl > kLmax) continue;
      const auto& q = ra[static_cast<std::size_t>(dl + kLmax)];
      const double pooled = std::sqrt(p.stderr_signal * p.stderr_signal + q.stderr_signal * q.stderr_signal);
      worst = std::max(worst, std::abs(p.signal - q.signal) / pooled);
      ++compared;
    }
    o.pass = o.pass && worst <= kShiftSigmas;
    o.detail += "M=" + fmt("%.3f", a) + " vs " + fmt("%.3f", b) + ": shift " + std::to_string(shift) + ", " +
                std::to_string(compared) + " points, max " + fmt("%.2g", worst) + " sigma; ";
  }
  return o;
}

Outcome identification() {
  Outcome o;
  int sym_ok = 0;
  for (int n = 3; n <= 6; ++n) {
    int ok = 0;
    for (int s = 0; s < kSeeds; ++s) {
      const auto m = run_ensemble(desk(make_angular_slits(n, pi / (2 * n)), kIdentifyG, kSeed + 100 + s), workers());
      const auto best = detect_symmetry(m, 2, 8).best_n;
      ok += best && *best == n;
    }
    o.detail += "N=" + std::to_string(n) + ": " + std::to_string(ok) + "/" + std::to_string(kSeeds) + " ";
    sym_ok += ok;
  }
  int fit_ok = 0;
  for (double winding : {-0.5, -2.5, -2.0 / 3.0, -8.0 / 3.0}) {
    int ok = 0;
    double worst = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
      const auto m = run_ensemble(desk(make_fractional_vortex(winding), kIdentifyG, kSeed + 200 + s), workers());
      const auto fit = fit_fractional(signal_row(m, 0), -kLmax, kLmax - 1);
      const double err = std::abs(fit.m_hat - winding);
      worst = std::max(worst, err);
      ok += err <= kFitTol && fit.u == floor_decompose(winding).u;
    }
    o.detail += "M=" + fmt("%.3f", winding) + ": " + std::to_string(ok) + "/" + std::to_string(kSeeds) +
                " (max err " + fmt("%.3f", worst) + ") ";
    fit_ok += ok;
  }
  o.pass = sym_ok == 4 * kSeeds && fit_ok == 4 * kSeeds;
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  const auto grid = desk_grid();
  double slit_worst = 0.0;
  for (int n = 3; n <= 6; ++n) {
    for (double alpha : {pi / 8, pi / 6}) {
      const auto q = peak_normalize(quadrature_signal(make_angular_slits(n, alpha), GaussianEnvelope{kWaist}, grid, kLmax));
      const auto a = analytic_slits_profile(n, alpha, kLmax);
      for (int dl = -kLmax; dl <= kLmax; ++dl) slit_worst = std::max(slit_worst, std::abs(q.at(dl) - a.at(dl)));
    }
  }
  double vortex_worst = 0.0;
  for (double winding : {-0.5, -2.5, -2.0 / 3.0, -8.0 / 3.0}) {
    const auto q = peak_normalize(quadrature_signal(make_fractional_vortex(winding), GaussianEnvelope{kWaist}, grid, kLmax));
    const auto a = analytic_fractional_profile(winding, kLmax, true);
    for (int dl = -kLmax; dl <= kLmax; ++dl) vortex_worst = std::max(vortex_worst, std::abs(q.at(dl) - a.at(dl)));
  }
  o.pass = slit_worst <= kOracleSlitTol && vortex_worst <= kOracleVortexTol;
  o.detail = "slits max dev " + fmt("%.2e", slit_worst) + ", vortex max dev " + fmt("%.2e", vortex_worst);
  return o;
}

double worst_flatness(const std::vector<double>& mean, const std::vector<double>& se) {
  double grand = 0.0;
  for (double v : mean) grand += v;
  grand /= static_cast<double>(mean.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) worst = std::max(worst, std::abs(mean[i] - grand) / se[i]);
  return worst;
}

Outcome flat_spectrum() {
  Outcome o;
  const double open_t = worst_flatness(g_baseline->mean_test, g_baseline->stderr_mean_test);
  const double open_r = worst_flatness(g_baseline->mean_ref, g_baseline->stderr_mean_ref);
  const double masked = worst_flatness(g_slits_g->mean_test, g_slits_g->stderr_mean_test);
  o.pass = std::max({open_t, open_r, masked}) <= kFlatSigmas;
  o.detail = "max |I_l - mean|/stderr: no mask " + fmt("%.2f", std::max(open_t, open_r)) + ", slit mask " +
             fmt("%.2f", masked);
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  Outcome o;
  const auto root = std::filesystem::temp_directory_path() / "oamcorr_acceptance";
  std::filesystem::remove_all(root);
  std::vector<std::string> matrices, errors;
  for (unsigned w : {1u, 2u, 8u}) {
    char json[512];
    std::snprintf(json, sizeof json,
                  R"({"grid": {"n_r": %d, "n_phi": %d, "r_max": %.17g},
                      "envelope": {"type": "gaussian", "waist": %.17g}, "coherence": {"type": "delta"},
                      "mask": {"type": "angular_slits", "N": 4, "alpha": %.17g},
                      "l_max": %d, "realizations": %llu, "master_seed": %llu,
                      "output_dir": "workers_%u", "tasks": ["simulate"]})",
                  kNr, kNphi, kRmax, kWaist, pi / 6, kLmax, static_cast<unsigned long long>(kDeterminismG),
                  static_cast<unsigned long long>(kSeed + 5), w);
    const ExperimentConfig cfg = parse_config(json, root);
    run_experiment(cfg, RunOptions{w});
    matrices.push_back(slurp(cfg.output_dir / kMatrixFile));
    errors.push_back(slurp(io::stderr_path_for(cfg.output_dir / kMatrixFile)));
  }
  std::filesystem::remove_all(root);
  const bool same = !matrices[0].empty() && matrices[0] == matrices[1] && matrices[0] == matrices[2] &&
                    errors[0] == errors[1] && errors[0] == errors[2];
  o.detail = same ? "CSV identical for 1/2/8 workers" : "CSV differs across worker counts";

  const auto small = g_slits_g->stderr_g2.values();
  const auto large = g_slits_4g->stderr_g2.values();
  double worst = 0.0;
  for (std::size_t i = 0; i < small.size(); ++i) {
    const double expected = small[i] / 2.0;
    worst = std::max(worst, std::abs(large[i] - expected) / expected);
  }
  o.pass = same && worst <= kStderrTol;
  o.detail += ", stderr(4G)/(stderr(G)/2) worst deviation " + fmt("%.3f", worst);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number; default is all of them.
  std::vector<bool> selected(10, argc < 2);
  for (int i = 1; i < argc; ++i) selected.at(static_cast<std::size_t>(std::stoi(argv[i]))) = true;

  const auto start = std::chrono::steady_clock::now();
  std::printf("grid %dx%d r_max=%g, gaussian waist %g, l_max %d, workers %u\n", kNr, kNphi, kRmax, kWaist, kLmax,
              workers());

  CorrelationMatrix baseline = run_ensemble(desk(make_uniform(), kBaselineG, kSeed + 1), workers());
  // The 4-fold run at 4G extends the G-realization run over further indices.
  const auto slit_spec = desk(make_angular_slits(4, pi / 6), kObjectG / 4, kSeed + 2);
  const auto head = accumulate_ensemble(slit_spec, workers());
  auto tail_spec = slit_spec;
  tail_spec.first_index = slit_spec.realizations;
  tail_spec.realizations = kObjectG - slit_spec.realizations;
  CorrelationMatrix slits_g = finalize(head, provenance_of(slit_spec));
  CorrelationMatrix slits_4g = finalize(merge(head, accumulate_ensemble(tail_spec, workers())), provenance_of(slit_spec));
  CorrelationMatrix vortex = run_ensemble(desk(make_fractional_vortex(-2.0 / 3.0), kObjectG, kSeed + 4), workers());
  g_baseline = &baseline;
  g_slits_g = &slits_g;
  g_slits_4g = &slits_4g;
  g_vortex = &vortex;

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"thermal baseline", thermal_baseline},
      {"four-fold object", four_fold},
      {"six-fold object", six_fold},
      {"fractional vortex M=-2/3", fractional_vortex},
      {"profile shift law", peak_law},
      {"identification", identification},
      {"oracle equivalence", oracle_equivalence},
      {"flat single-arm spectrum", flat_spectrum},
      {"determinism and convergence", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i + 1]) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %zu %s: %s [%.0fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("total %.0fs, %d failed\n",
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), failures);
  return failures == 0 ? 0 : 1;
}
