#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace oamcorr {

using Complex = std::complex<double>;

/// Polar computational grid on the disk r < r_max.
///
/// Radial nodes sit at cell centres, r_j = (j + 0.5) dr; azimuthal nodes at
/// phi_k = 2 pi k / n_phi. Every integral over the beam cross-section uses the
/// weights w_j = r_j dr dphi (independent of k).
class PolarGrid {
 public:
  PolarGrid(int n_r, int n_phi, double r_max);

  int n_r() const noexcept { return n_r_; }
  int n_phi() const noexcept { return n_phi_; }
  double r_max() const noexcept { return r_max_; }
  double dr() const noexcept { return r_max_ / n_r_; }
  double dphi() const noexcept;
  std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(n_r_) * static_cast<std::size_t>(n_phi_);
  }

  double radius(int j) const noexcept { return (j + 0.5) * dr(); }
  double angle(int k) const noexcept;
  double weight(int j) const noexcept { return radius(j) * dr() * dphi(); }

  /// Row-major cell index, r outer and phi inner.
  std::size_t index(int j, int k) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_phi_) +
           static_cast<std::size_t>(k);
  }

  /// Largest OAM index l_max the grid admits under n_phi >= 8 l_max.
  int max_alias_free_l() const noexcept { return n_phi_ / 8; }

  /// Throws std::invalid_argument when n_phi < 8 * l_max.
  void require_alias_free(int l_max) const;

  std::string describe() const;

  friend bool operator==(const PolarGrid&, const PolarGrid&) = default;

 private:
  int n_r_;
  int n_phi_;
  double r_max_;
};

/// Validating factory; n_r, n_phi > 0, n_phi even, r_max > 0.
PolarGrid make_grid(int n_r, int n_phi, double r_max);

// Mean-intensity envelope |E(r)|^2 (azimuthally symmetric).
struct GaussianEnvelope {
  double waist;
};
struct UniformDiskEnvelope {
  double radius;
};
struct CustomRadialEnvelope {
  std::vector<double> samples;  // one per radial cell
};
using Envelope = std::variant<GaussianEnvelope, UniformDiskEnvelope, CustomRadialEnvelope>;

/// Throws std::invalid_argument if the envelope cannot be used with the grid.
void validate_envelope(const Envelope& env, const PolarGrid& grid);

/// Mean intensity at radial cell j: exp(-2 r^2 / w^2), 1 inside the disk, or the sample.
double envelope_value(const Envelope& env, const PolarGrid& grid, int j);

std::vector<double> envelope_profile(const Envelope& env, const PolarGrid& grid);
std::string describe(const Envelope& env);

struct DeltaCorrelated {};
/// Box-car smoothing over correlation_cells x correlation_cells cells before shaping.
struct Smoothed {
  int correlation_cells;
};
using CoherenceSpec = std::variant<DeltaCorrelated, Smoothed>;

void validate_coherence(const CoherenceSpec& coh, const PolarGrid& grid);
std::string describe(const CoherenceSpec& coh);

/// One realization of the pseudothermal field on a grid.
struct SpeckleField {
  PolarGrid grid;
  std::vector<Complex> samples;  // grid.cell_count() values, row-major
  std::uint64_t master_seed = 0;
  std::uint64_t realization_index = 0;

  Complex& at(int j, int k) { return samples[grid.index(j, k)]; }
  const Complex& at(int j, int k) const { return samples[grid.index(j, k)]; }
  std::span<const Complex> ring(int j) const {
    return std::span<const Complex>(samples).subspan(grid.index(j, 0),
                                                     static_cast<std::size_t>(grid.n_phi()));
  }
};

/// Draws realization `index` of the speckle ensemble keyed by `master_seed`.
///
/// Each cell holds sigma_j (g1 + i g2) / sqrt(2) with sigma_j^2 the envelope at
/// r_j. The unit-variance draw of cell (j, k) depends only on
/// (master_seed, index, j, k), so any evaluation order gives identical bits.
SpeckleField generate_realization(const PolarGrid& grid, const Envelope& env,
                                  const CoherenceSpec& coh, std::uint64_t master_seed,
                                  std::uint64_t index);

/// In-place variant reusing the output buffer; the hot loop of the ensemble runner.
void generate_realization_into(SpeckleField& out, std::span<const double> sigma,
                               const CoherenceSpec& coh, std::uint64_t master_seed,
                               std::uint64_t index);

/// Unit-variance circular complex Gaussian draw for one cell.
Complex unit_cell_draw(std::uint64_t master_seed, std::uint64_t index, std::uint32_t cell);

/// Sum over cells of w_jk |E_jk|^2.
double total_power(const SpeckleField& field);

}  // namespace oamcorr
