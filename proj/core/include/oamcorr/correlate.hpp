#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oamcorr/masks.hpp"
#include "oamcorr/oam.hpp"
#include "oamcorr/polar_field.hpp"

namespace oamcorr {

/// Square matrix indexed by (l_t, l_r) over one mode window; row-major in l_t.
class ModeMatrix {
 public:
  ModeMatrix() = default;
  explicit ModeMatrix(ModeWindow window, double fill = 0.0)
      : window_(window),
        values_(static_cast<std::size_t>(window.size()) * static_cast<std::size_t>(window.size()), fill) {}

  ModeWindow window() const noexcept { return window_; }
  int l_max() const noexcept { return window_.l_max; }

  double& operator()(int l_t, int l_r) { return values_[flat(l_t, l_r)]; }
  double operator()(int l_t, int l_r) const { return values_[flat(l_t, l_r)]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const ModeMatrix&, const ModeMatrix&) = default;

 private:
  std::size_t flat(int l_t, int l_r) const noexcept {
    return window_.offset(l_t) * static_cast<std::size_t>(window_.size()) + window_.offset(l_r);
  }

  ModeWindow window_{};
  std::vector<double> values_;
};

/// Running sums over realizations of the two-arm intensity spectra.
///
/// Besides the sums that define g2 and its error bar, the accumulator keeps
/// the single-arm sums of squares so the means carry error bars too.
struct CorrelationAccumulator {
  explicit CorrelationAccumulator(ModeWindow window = {});

  ModeWindow window;
  std::uint64_t count = 0;
  std::vector<double> sum_test;
  std::vector<double> sum_ref;
  std::vector<double> sum_test_sq;
  std::vector<double> sum_ref_sq;
  ModeMatrix sum_product;     // sum I_t[l_t] I_r[l_r]
  ModeMatrix sum_product_sq;  // sum (I_t[l_t] I_r[l_r])^2

  friend bool operator==(const CorrelationAccumulator&, const CorrelationAccumulator&) = default;
};

/// Adds one realization; both spectra must share the accumulator's window.
CorrelationAccumulator& accumulate(CorrelationAccumulator& acc, const IntensitySpectrum& test,
                                   const IntensitySpectrum& ref);
CorrelationAccumulator& accumulate(CorrelationAccumulator& acc, std::span<const double> test,
                                   std::span<const double> ref);

/// Element-wise sum; `a` comes first in the canonical (index-ordered) reduction.
CorrelationAccumulator merge(const CorrelationAccumulator& a, const CorrelationAccumulator& b);

/// Free-form descriptors copied into every output for reproducibility.
struct Provenance {
  std::uint64_t master_seed = 0;
  std::uint64_t first_index = 0;
  std::string grid;
  std::string envelope;
  std::string coherence;
  std::string mask;
};

struct CorrelationMatrix {
  ModeWindow window;
  ModeMatrix g2;
  ModeMatrix raw_mean_product;
  ModeMatrix stderr_g2;
  std::vector<double> mean_test;
  std::vector<double> mean_ref;
  std::vector<double> stderr_mean_test;
  std::vector<double> stderr_mean_ref;
  std::uint64_t realizations = 0;
  Provenance provenance;
};

/// g2 = <I_t I_r> / (<I_t><I_r>) with per-run means. The error bar is the
/// standard error of the mean product, divided by <I_t><I_r>.
/// Throws std::invalid_argument for fewer than 2 realizations or a zero mean.
CorrelationMatrix finalize(const CorrelationAccumulator& acc, Provenance provenance = {});

struct EnsembleSpec {
  PolarGrid grid;
  Envelope envelope;
  CoherenceSpec coherence;
  ObjectMask mask;
  int l_max = 0;
  std::uint64_t realizations = 0;
  std::uint64_t master_seed = 0;
  /// Realizations use indices [first_index, first_index + realizations).
  std::uint64_t first_index = 0;
};

/// Validates grid/envelope/coherence/mask compatibility and the window.
void validate(const EnsembleSpec& spec);

Provenance provenance_of(const EnsembleSpec& spec);

/// Realizations per canonical reduction block.
inline constexpr std::uint64_t kReductionBlock = 64;

/// Simulates the ensemble and returns the merged accumulator. Both arms see
/// the same realization; the test arm carries the mask. Blocks of
/// kReductionBlock indices are accumulated serially and merged in index order,
/// so the result is bitwise independent of `workers`.
CorrelationAccumulator accumulate_ensemble(const EnsembleSpec& spec, unsigned workers = 1);

CorrelationMatrix run_ensemble(const EnsembleSpec& spec, unsigned workers = 1);

/// R independent repeats over disjoint index ranges. `pooled` merges all of
/// them; `spread_g2` is the sample standard deviation of g2 across repeats.
struct RepeatSummary {
  std::vector<CorrelationMatrix> runs;
  CorrelationMatrix pooled;
  ModeMatrix mean_g2;
  ModeMatrix spread_g2;
};
RepeatSummary run_repeats(const EnsembleSpec& spec, int repeats, unsigned workers = 1);

/// raw_mean_product - mean_t * mean_r: Monte Carlo estimate of |G1(l_t, l_r)|^2.
ModeMatrix delta_g2_from_matrix(const CorrelationMatrix& m);
ModeMatrix delta_g2_stderr(const CorrelationMatrix& m);

/// ΔG² averaged along each diagonal l_t - l_r = dl.
struct DiagonalPoint {
  int delta_l;
  double value;
  double stderr_value;
  int entries;
};
std::vector<DiagonalPoint> diagonal_profile(const CorrelationMatrix& m);

}  // namespace oamcorr
