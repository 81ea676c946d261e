#pragma once

#include <vector>

#include "oamcorr/masks.hpp"
#include "oamcorr/polar_field.hpp"

namespace oamcorr {

/// Signal term ΔG² as a function of Δl over [-dl_max, dl_max].
struct SignalProfile {
  int dl_max = 0;
  std::vector<double> values;
  bool peak_normalized = false;

  double at(int dl) const { return values.at(static_cast<std::size_t>(dl + dl_max)); }
  int size() const noexcept { return 2 * dl_max + 1; }
};

/// Divides by the largest value; an all-zero profile is returned unchanged.
SignalProfile peak_normalize(SignalProfile profile);

/// Deterministic quadrature of the object-imprinted signal
///
///   ΔG²(Δl) = | sum_j r_j dr env_j  ∫ A*(r_j, φ) exp(iΔlφ) dφ / 2π |²
///
/// with the envelope standing in for the mean intensity. The radial integral
/// uses the grid's midpoint rule; the azimuthal integral is done exactly per
/// cell, so slit edges and the vortex phase step carry no discretisation error.
/// Returned raw (not normalised). Throws if n_phi < 8 dl_max.
SignalProfile quadrature_signal(const ObjectMask& mask, const Envelope& env, const PolarGrid& grid, int dl_max);

/// Peak-normalised closed form for N slits of width alpha:
/// |sum_n exp(i n Δl β)|² sinc²(Δl α / 2) / N², β = 2π/N.
double analytic_slits(int n_fold, double alpha, int dl);

/// Closed form for a fractional vortex of winding M = u + v, up to a constant:
/// (2 - 2 cos 2πv) / (Δl - u - v)².
double analytic_fractional(double winding, int dl);

SignalProfile analytic_slits_profile(int n_fold, double alpha, int dl_max);
SignalProfile analytic_fractional_profile(double winding, int dl_max, bool normalize = false);

}  // namespace oamcorr
