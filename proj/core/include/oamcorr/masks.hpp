#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "oamcorr/polar_field.hpp"

namespace oamcorr {

// Object transmission functions A(r, phi). Construct through the make_* factories,
// which enforce the invariants; the structs themselves are plain values.

struct UniformMask {};

/// N open sectors [n beta, n beta + alpha), beta = 2 pi / N.
struct AngularSlits {
  int n_fold;
  double alpha;
  double period() const noexcept;
};

/// Phase-only vortex exp(i M phi) on phi in [0, 2 pi); M non-integer.
struct FractionalVortex {
  double winding;
};

/// exp(i l0 phi).
struct IntegerVortex {
  int winding;
};

struct CustomRaster {
  int n_r;
  int n_phi;
  std::vector<Complex> samples;  // row-major, r outer
};

using ObjectMask = std::variant<UniformMask, AngularSlits, FractionalVortex, IntegerVortex, CustomRaster>;

ObjectMask make_uniform();
ObjectMask make_angular_slits(int n_fold, double alpha);
ObjectMask make_fractional_vortex(double winding);
ObjectMask make_integer_vortex(int winding);
ObjectMask make_custom_raster(int n_r, int n_phi, std::vector<Complex> samples);

/// Reads a raster: header line "n_r n_phi", then one "re im" pair per cell,
/// r outer and phi inner.
ObjectMask load_custom_raster(const std::filesystem::path& path);

/// True for masks whose transmission does not depend on r.
bool is_azimuthal(const ObjectMask& mask) noexcept;

/// A(r, phi) for phi in [0, 2 pi). Rasters return the nearest cell on a grid
/// spanning [0, r_max_hint); other masks ignore r.
Complex evaluate_mask(const ObjectMask& mask, double r, double phi, double r_max_hint = 1.0);

/// Pointwise product with A sampled at the grid nodes (r_j, phi_k).
SpeckleField apply_mask(const SpeckleField& field, const ObjectMask& mask);

/// Mask samples on every grid node, row-major; reused across realizations.
std::vector<Complex> sample_mask(const ObjectMask& mask, const PolarGrid& grid);

/// out = in * sampled mask, without re-evaluating the mask.
void apply_sampled_mask(const SpeckleField& in, std::span<const Complex> sampled, SpeckleField& out);

std::string describe(const ObjectMask& mask);

/// M = u + v with u = floor(M), v in [0, 1).
struct FloorDecomposition {
  long u;
  double v;
};

FloorDecomposition floor_decompose(double winding);

}  // namespace oamcorr
