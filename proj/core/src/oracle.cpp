#include "oamcorr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oamcorr {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

/// ∫_a^b exp(i x φ) dφ = (b - a) exp(i x (a + b)/2) sinc(x (b - a)/2).
Complex phase_integral(double x, double a, double b) {
  const double width = b - a;
  return std::polar(width * sinc(0.5 * x * width), 0.5 * x * (a + b));
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// ∫_0^{2π} A*(r_j, φ) exp(i Δl φ) dφ for ring j.
Complex angular_integral(const ObjectMask& mask, const PolarGrid& grid, int j, int dl) {
  return std::visit(
      Overloaded{
          [&](const UniformMask&) { return phase_integral(dl, 0.0, kTwoPi); },
          [&](const AngularSlits& s) {
            Complex acc{};
            for (int n = 0; n < s.n_fold; ++n) {
              const double start = n * s.period();
              acc += phase_integral(dl, start, start + s.alpha);
            }
            return acc;
          },
          [&](const FractionalVortex& v) { return phase_integral(dl - v.winding, 0.0, kTwoPi); },
          [&](const IntegerVortex& v) { return phase_integral(dl - v.winding, 0.0, kTwoPi); },
          [&](const CustomRaster& c) {
            // Piecewise-constant cells centred on the grid angles.
            const double half = 0.5 * grid.dphi();
            Complex acc{};
            for (int k = 0; k < grid.n_phi(); ++k) {
              const double centre = grid.angle(k);
              const Complex a = c.samples[grid.index(j, k)];
              acc += std::conj(a) * phase_integral(dl, centre - half, centre + half);
            }
            return acc;
          },
      },
      mask);
}

}  // namespace

SignalProfile peak_normalize(SignalProfile profile) {
  const double peak = profile.values.empty() ? 0.0 : *std::max_element(profile.values.begin(), profile.values.end());
  if (peak > 0.0) {
    for (double& v : profile.values) v /= peak;
  }
  profile.peak_normalized = true;
  return profile;
}

SignalProfile quadrature_signal(const ObjectMask& mask, const Envelope& env, const PolarGrid& grid, int dl_max) {
  grid.require_alias_free(dl_max);
  if (const auto* c = std::get_if<CustomRaster>(&mask)) {
    if (c->n_r != grid.n_r() || c->n_phi != grid.n_phi()) {
      throw std::invalid_argument("custom raster dimensions do not match the grid");
    }
  }
  const std::vector<double> intensity = envelope_profile(env, grid);

  SignalProfile out{dl_max, std::vector<double>(static_cast<std::size_t>(2 * dl_max + 1)), false};
  const bool azimuthal = is_azimuthal(mask);
  double radial_total = 0.0;
  if (azimuthal) {
    for (int j = 0; j < grid.n_r(); ++j) radial_total += grid.radius(j) * grid.dr() * intensity[static_cast<std::size_t>(j)];
  }
  for (int dl = -dl_max; dl <= dl_max; ++dl) {
    Complex sum{};
    if (azimuthal) {
      sum = radial_total * angular_integral(mask, grid, 0, dl);
    } else {
      for (int j = 0; j < grid.n_r(); ++j) {
        const double radial = grid.radius(j) * grid.dr() * intensity[static_cast<std::size_t>(j)];
        if (radial != 0.0) sum += radial * angular_integral(mask, grid, j, dl);
      }
    }
    out.values[static_cast<std::size_t>(dl + dl_max)] = std::norm(sum / kTwoPi);
  }
  return out;
}

double analytic_slits(int n_fold, double alpha, int dl) {
  if (n_fold <= 0) throw std::invalid_argument("analytic_slits needs N > 0");
  if (!(alpha > 0.0) || !(alpha < kTwoPi / n_fold)) {
    throw std::invalid_argument("analytic_slits needs 0 < alpha < 2 pi / N");
  }
  // The comb sum_n exp(i n Δl 2π/N) is N when N divides Δl and exactly 0 otherwise.
  if (dl % n_fold != 0) return 0.0;
  const double s = sinc(0.5 * dl * alpha);
  return s * s;
}

double analytic_fractional(double winding, int dl) {
  if (winding == std::floor(winding)) throw std::invalid_argument("analytic_fractional needs a non-integer M");
  const FloorDecomposition d = floor_decompose(winding);
  const double offset = dl - static_cast<double>(d.u) - d.v;
  return (2.0 - 2.0 * std::cos(kTwoPi * d.v)) / (offset * offset);
}

SignalProfile analytic_slits_profile(int n_fold, double alpha, int dl_max) {
  SignalProfile out{dl_max, {}, true};
  out.values.reserve(static_cast<std::size_t>(2 * dl_max + 1));
  for (int dl = -dl_max; dl <= dl_max; ++dl) out.values.push_back(analytic_slits(n_fold, alpha, dl));
  return out;
}

SignalProfile analytic_fractional_profile(double winding, int dl_max, bool normalize) {
  SignalProfile out{dl_max, {}, false};
  out.values.reserve(static_cast<std::size_t>(2 * dl_max + 1));
  for (int dl = -dl_max; dl <= dl_max; ++dl) out.values.push_back(analytic_fractional(winding, dl));
  return normalize ? peak_normalize(std::move(out)) : out;
}

}  // namespace oamcorr
