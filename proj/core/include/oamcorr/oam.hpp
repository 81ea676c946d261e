#pragma once

#include <memory>
#include <span>
#include <vector>

#include "oamcorr/polar_field.hpp"

namespace oamcorr {

/// Symmetric window of OAM indices [-l_max, l_max].
struct ModeWindow {
  int l_max = 0;

  int size() const noexcept { return 2 * l_max + 1; }
  bool contains(int l) const noexcept { return l >= -l_max && l <= l_max; }
  std::size_t offset(int l) const noexcept { return static_cast<std::size_t>(l + l_max); }
  friend bool operator==(ModeWindow, ModeWindow) = default;
};

/// Projection amplitudes a_l over a window.
struct OamSpectrum {
  ModeWindow window;
  std::vector<Complex> amplitudes;

  Complex operator[](int l) const { return amplitudes[window.offset(l)]; }
};

struct IntensitySpectrum {
  ModeWindow window;
  std::vector<double> intensities;

  double operator[](int l) const { return intensities[window.offset(l)]; }
};

/// Reusable projector for one grid and window.
///
/// a_l = sum_jk w_j E_jk exp(-i l phi_k) / sqrt(2 pi). Because w_j does not
/// depend on k, the weighted radial sum is formed first and one DFT over the
/// azimuthal index yields every a_l. The FFT plan is built once; project() is
/// const and may run concurrently.
class OamProjector {
 public:
  OamProjector(const PolarGrid& grid, int l_max);
  ~OamProjector();
  OamProjector(const OamProjector&) = delete;
  OamProjector& operator=(const OamProjector&) = delete;
  OamProjector(OamProjector&&) noexcept;
  OamProjector& operator=(OamProjector&&) noexcept;

  const PolarGrid& grid() const noexcept;
  ModeWindow window() const noexcept;

  /// `scratch` is resized to the cell count; callers reuse it across calls.
  void project(std::span<const Complex> samples, std::span<Complex> amplitudes,
               std::vector<Complex>& scratch) const;

  OamSpectrum project(const SpeckleField& field) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

OamSpectrum project_oam(const SpeckleField& field, int l_max);

IntensitySpectrum spectrum_intensity(const OamSpectrum& spectrum);

/// I_l = |a_l|^2 written into `out` (same length as `amplitudes`).
void intensities_into(std::span<const Complex> amplitudes, std::span<double> out);

}  // namespace oamcorr
