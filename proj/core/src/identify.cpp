#include "oamcorr/identify.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace oamcorr {

std::vector<RowPoint> extract_row(const CorrelationMatrix& m, int l_r) {
  if (!m.window.contains(l_r)) {
    throw std::out_of_range("l_r=" + std::to_string(l_r) + " outside window [-" + std::to_string(m.window.l_max) +
                            ", " + std::to_string(m.window.l_max) + "]");
  }
  std::vector<RowPoint> row;
  row.reserve(static_cast<std::size_t>(m.window.size()));
  for (int lt = -m.window.l_max; lt <= m.window.l_max; ++lt) row.push_back({lt, m.g2(lt, l_r), m.stderr_g2(lt, l_r)});
  return row;
}

namespace {

double band_score(const CorrelationMatrix& m, int n) {
  const int lm = m.window.l_max;
  double sum = 0.0;
  double var = 0.0;
  int count = 0;
  for (int lt = -lm; lt <= lm; ++lt) {
    for (int lr = -lm; lr <= lm; ++lr) {
      if (std::abs(lt - lr) != n) continue;
      sum += m.g2(lt, lr) - 1.0;
      var += m.stderr_g2(lt, lr) * m.stderr_g2(lt, lr);
      ++count;
    }
  }
  if (count == 0) return 0.0;
  const double mean = sum / count;
  // Floor keeps noiseless inputs finite.
  const double pooled = std::max(std::sqrt(var) / count, 1e-12);
  return mean / pooled;
}

}  // namespace

SymmetryReport detect_symmetry(const CorrelationMatrix& m, int n_min, int n_max, double threshold) {
  if (n_min < 1 || n_max < n_min) throw std::invalid_argument("symmetry range must satisfy 1 <= N_min <= N_max");
  if (m.window.l_max < n_max + 2) {
    throw std::invalid_argument("mode window l_max=" + std::to_string(m.window.l_max) + " too small for N_max=" +
                                std::to_string(n_max) + " (needs l_max >= N_max + 2)");
  }
  SymmetryReport report;
  report.threshold = threshold;
  for (int n = n_min; n <= n_max; ++n) report.scores[n] = band_score(m, n);

  std::optional<int> best;
  for (const auto& [n, s] : report.scores) {
    if (s >= threshold && (!best || s > report.scores[*best])) best = n;
  }
  if (best) {
    for (int d = n_min; d < *best; ++d) {
      if (*best % d != 0 || report.scores[d] < threshold) continue;
      bool harmonics_lit = true;
      for (int k = 2 * d; k <= n_max; k += d) harmonics_lit = harmonics_lit && report.scores[k] >= threshold;
      if (harmonics_lit) {
        best = d;
        break;
      }
    }
  }
  report.best_n = best;
  report.suppressed_scores = report.scores;
  if (best) {
    for (auto& [n, s] : report.suppressed_scores) {
      if (n != *best && n % *best == 0) s = 0.0;
    }
  }
  return report;
}

std::vector<SignalPoint> signal_row(const CorrelationMatrix& m, int l_r) {
  if (!m.window.contains(l_r)) throw std::out_of_range("l_r outside the mode window");
  const ModeMatrix delta = delta_g2_from_matrix(m);
  const ModeMatrix se = delta_g2_stderr(m);
  std::vector<SignalPoint> row;
  for (int lt = -m.window.l_max; lt <= m.window.l_max; ++lt) row.push_back({lt - l_r, delta(lt, l_r), se(lt, l_r)});
  return row;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kVMin = 0.001;
constexpr double kVMax = 0.999;

struct WeightedRow {
  std::vector<double> x;  // Δl - u
  std::vector<double> y;
  std::vector<double> w;
  double weight_total = 0.0;
};

double model(double x, double v) {
  const double d = x - v;
  return (2.0 - 2.0 * std::cos(kTwoPi * v)) / (d * d);
}

double model_dv(double x, double v) {
  const double d = x - v;
  const double c = 2.0 - 2.0 * std::cos(kTwoPi * v);
  return 2.0 * kTwoPi * std::sin(kTwoPi * v) / (d * d) + 2.0 * c / (d * d * d);
}

struct Eval {
  double sse;
  double amplitude;
};

Eval evaluate(const WeightedRow& row, double v) {
  double syf = 0.0;
  double sff = 0.0;
  for (std::size_t i = 0; i < row.x.size(); ++i) {
    const double f = model(row.x[i], v);
    syf += row.w[i] * row.y[i] * f;
    sff += row.w[i] * f * f;
  }
  const double amplitude = sff > 0.0 ? std::max(0.0, syf / sff) : 0.0;
  double sse = 0.0;
  for (std::size_t i = 0; i < row.x.size(); ++i) {
    const double r = row.y[i] - amplitude * model(row.x[i], v);
    sse += row.w[i] * r * r;
  }
  return {sse, amplitude};
}

/// Gauss-Newton polish of (amplitude, v) from a bracketed minimum.
void polish(const WeightedRow& row, double& v, double& amplitude, double& sse) {
  for (int iter = 0; iter < 30; ++iter) {
    double jaa = 0.0, jav = 0.0, jvv = 0.0, ga = 0.0, gv = 0.0;
    for (std::size_t i = 0; i < row.x.size(); ++i) {
      const double f = model(row.x[i], v);
      const double dfa = f;
      const double dfv = amplitude * model_dv(row.x[i], v);
      const double r = row.y[i] - amplitude * f;
      jaa += row.w[i] * dfa * dfa;
      jav += row.w[i] * dfa * dfv;
      jvv += row.w[i] * dfv * dfv;
      ga += row.w[i] * dfa * r;
      gv += row.w[i] * dfv * r;
    }
    const double det = jaa * jvv - jav * jav;
    if (!(std::abs(det) > 0.0)) return;
    const double step_a = (jvv * ga - jav * gv) / det;
    const double step_v = (jaa * gv - jav * ga) / det;
    const double v_new = std::clamp(v + step_v, kVMin, kVMax);
    const double a_new = std::max(0.0, amplitude + step_a);
    double sse_new = 0.0;
    for (std::size_t i = 0; i < row.x.size(); ++i) {
      const double r = row.y[i] - a_new * model(row.x[i], v_new);
      sse_new += row.w[i] * r * r;
    }
    if (!(sse_new < sse)) return;
    v = v_new;
    amplitude = a_new;
    sse = sse_new;
  }
}

}  // namespace

FractionalFit fit_fractional(const std::vector<SignalPoint>& row, long u_min, long u_max) {
  if (row.size() < 7) throw std::invalid_argument("fractional fit needs at least 7 points");
  if (u_max < u_min) throw std::invalid_argument("fractional fit needs u_min <= u_max");
  if (std::all_of(row.begin(), row.end(), [](const SignalPoint& p) { return p.signal == 0.0; })) {
    throw std::invalid_argument("fractional fit on an all-zero signal");
  }

  double min_positive_se = std::numeric_limits<double>::infinity();
  for (const auto& p : row) {
    if (p.stderr_signal > 0.0) min_positive_se = std::min(min_positive_se, p.stderr_signal);
  }
  const bool weighted = std::isfinite(min_positive_se);

  WeightedRow base;
  for (const auto& p : row) {
    const double se = weighted ? std::max(p.stderr_signal, min_positive_se) : 1.0;
    base.y.push_back(p.signal);
    base.w.push_back(1.0 / (se * se));
  }
  for (double w : base.w) base.weight_total += w;

  FractionalFit best;
  double best_sse = std::numeric_limits<double>::infinity();
  constexpr int kScan = 200;
  for (long u = u_min; u <= u_max; ++u) {
    WeightedRow shifted = base;
    shifted.x.clear();
    for (const auto& p : row) shifted.x.push_back(static_cast<double>(p.delta_l - u));

    int best_i = 0;
    double scan_best = std::numeric_limits<double>::infinity();
    const double step = (kVMax - kVMin) / kScan;
    for (int i = 0; i <= kScan; ++i) {
      const double sse = evaluate(shifted, kVMin + i * step).sse;
      if (sse < scan_best) {
        scan_best = sse;
        best_i = i;
      }
    }
    const double lo = std::max(kVMin, kVMin + (best_i - 1) * step);
    const double hi = std::min(kVMax, kVMin + (best_i + 1) * step);
    const auto [v_min, sse_min] = boost::math::tools::brent_find_minima(
        [&](double v) { return evaluate(shifted, v).sse; }, lo, hi, std::numeric_limits<double>::digits);

    double v = v_min;
    double amplitude = evaluate(shifted, v).amplitude;
    double sse = sse_min;
    polish(shifted, v, amplitude, sse);

    if (sse < best_sse) {
      best_sse = sse;
      best.u = u;
      best.v = v;
      best.amplitude = amplitude;
    }
  }
  best.m_hat = static_cast<double>(best.u) + best.v;
  best.residual = std::sqrt(best_sse / base.weight_total);
  return best;
}

}  // namespace oamcorr
