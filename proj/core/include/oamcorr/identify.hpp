#pragma once

#include <map>
#include <optional>
#include <vector>

#include "oamcorr/correlate.hpp"

namespace oamcorr {

struct RowPoint {
  int l_t;
  double g2;
  double stderr_g2;
};

/// One row g2(l_t, l_r) for fixed l_r, ascending l_t, with error bars.
std::vector<RowPoint> extract_row(const CorrelationMatrix& m, int l_r);

struct SymmetryReport {
  std::optional<int> best_n;
  std::map<int, double> scores;             // raw contrast per N
  std::map<int, double> suppressed_scores;  // harmonics of best_n zeroed
  double threshold = 3.0;
};

inline constexpr double kDefaultSymmetryThreshold = 3.0;

/// Rotational-symmetry order from the off-diagonal bands of g2.
///
/// score(N) is the mean of g2 - 1 over all entries with |l_t - l_r| = N,
/// divided by the pooled standard error of that mean. The best N is the
/// argmax (ties toward smaller N); if a divisor of it also clears the threshold
/// together with all of its multiples in range, the divisor is reported, as
/// slit objects light up every multiple of their fundamental.
/// Requires l_max >= n_max + 2.
SymmetryReport detect_symmetry(const CorrelationMatrix& m, int n_min, int n_max,
                               double threshold = kDefaultSymmetryThreshold);

struct SignalPoint {
  int delta_l;
  double signal;
  double stderr_signal;
};

/// Background-subtracted row ΔG²(l_t, l_r) with Δl = l_t - l_r.
std::vector<SignalPoint> signal_row(const CorrelationMatrix& m, int l_r = 0);

struct FractionalFit {
  long u = 0;
  double v = 0.0;
  double m_hat = 0.0;
  double amplitude = 0.0;
  double residual = 0.0;  // weighted RMS of (signal - model)
};

/// Weighted least squares of amplitude (2 - 2 cos 2πv) / (Δl - u - v)² for
/// each integer u in [u_min, u_max], v bounded to (0.001, 0.999) and the
/// amplitude solved in closed form. Weights are 1/stderr² (uniform when no
/// error bars are available).
FractionalFit fit_fractional(const std::vector<SignalPoint>& row, long u_min, long u_max);

}  // namespace oamcorr
