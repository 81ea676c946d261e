#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "oamcorr/masks.hpp"
#include "oamcorr/oam.hpp"
#include "test_helpers.hpp"

using namespace oamcorr;
using std::numbers::pi;

namespace {

std::vector<Complex> direct_projection(const SpeckleField& f, int l_max) {
  std::vector<Complex> out;
  for (int l = -l_max; l <= l_max; ++l) {
    Complex a{};
    for (int j = 0; j < f.grid.n_r(); ++j)
      for (int k = 0; k < f.grid.n_phi(); ++k)
        a += f.grid.weight(j) * f.at(j, k) * std::polar(1.0, -l * f.grid.angle(k));
    out.push_back(a / std::sqrt(2 * pi));
  }
  return out;
}

double max_abs(const std::vector<Complex>& v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

SpeckleField harmonic_field(const PolarGrid& g, int l) {
  SpeckleField f{g, std::vector<Complex>(g.cell_count())};
  for (int j = 0; j < g.n_r(); ++j)
    for (int k = 0; k < g.n_phi(); ++k) f.at(j, k) = std::exp(-g.radius(j)) * std::polar(1.0, l * g.angle(k));
  return f;
}

}  // namespace

TEST_CASE("projection equals the direct double sum") {
  const auto f = generate_realization(make_grid(12, 64, 2.0), GaussianEnvelope{1.0}, DeltaCorrelated{}, 5, 2);
  const auto spec = project_oam(f, 8);
  const auto direct = direct_projection(f, 8);
  REQUIRE(spec.amplitudes.size() == 17u);
  CHECK(spec.window.size() == 17);
  const double scale = max_abs(direct);
  for (std::size_t i = 0; i < direct.size(); ++i) CHECK(std::abs(spec.amplitudes[i] - direct[i]) <= 1e-12 * scale);
}

TEST_CASE("projector reuse matches one-shot projection") {
  const auto g = make_grid(8, 48, 1.0);
  const OamProjector proj(g, 6);
  std::vector<Complex> scratch;
  std::vector<Complex> amps(13);
  for (int i = 0; i < 3; ++i) {
    const auto f = generate_realization(g, GaussianEnvelope{0.7}, DeltaCorrelated{}, 1, i);
    proj.project(f.samples, amps, scratch);
    CHECK(amps == project_oam(f, 6).amplitudes);
  }
}

TEST_CASE("phi-independent field lives in l = 0") {
  const auto f = harmonic_field(make_grid(10, 64, 1.0), 0);
  const auto spec = project_oam(f, 8);
  const double a0 = std::abs(spec[0]);
  CHECK(a0 > 0.0);
  for (int l = -8; l <= 8; ++l)
    if (l != 0) CHECK(std::abs(spec[l]) <= 1e-13 * a0);
}

TEST_CASE("single harmonic under the exp(-i l phi) kernel") {
  const auto f = harmonic_field(make_grid(10, 64, 1.0), 3);
  const auto spec = project_oam(f, 8);
  const double a3 = std::abs(spec[3]);
  CHECK(a3 > 0.0);
  for (int l = -8; l <= 8; ++l)
    if (l != 3) CHECK(std::abs(spec[l]) <= 1e-13 * a3);
}

TEST_CASE("ring-wise Parseval identity") {
  const auto g = make_grid(4, 64, 1.0);
  SpeckleField f{g, std::vector<Complex>(g.cell_count())};
  const int j = 2;
  const std::vector<std::pair<int, Complex>> modes{{-7, {0.3, 0.1}}, {-2, {1.0, -0.5}}, {0, {0.2, 0}}, {5, {0, 0.9}}};
  for (int k = 0; k < g.n_phi(); ++k)
    for (const auto& [l, c] : modes) f.at(j, k) += c * std::polar(1.0, l * g.angle(k));
  const auto spec = project_oam(f, 8);
  double sum = 0.0;
  for (const auto& a : spec.amplitudes) sum += std::norm(a);
  const double expected = g.radius(j) * g.dr() * total_power(f);
  CHECK(std::abs(sum - expected) <= 1e-10 * expected);
}

TEST_CASE("projection is linear") {
  const auto g = make_grid(8, 64, 1.5);
  const auto e1 = generate_realization(g, GaussianEnvelope{1.0}, DeltaCorrelated{}, 1, 0);
  const auto e2 = generate_realization(g, GaussianEnvelope{1.0}, DeltaCorrelated{}, 1, 1);
  const Complex alpha{0.7, -1.3};
  SpeckleField sum{g, std::vector<Complex>(g.cell_count())};
  for (std::size_t i = 0; i < sum.samples.size(); ++i) sum.samples[i] = alpha * e1.samples[i] + e2.samples[i];
  const auto s = project_oam(sum, 8);
  const auto a = project_oam(e1, 8);
  const auto b = project_oam(e2, 8);
  for (int l = -8; l <= 8; ++l) CHECK(std::abs(s[l] - (alpha * a[l] + b[l])) <= 1e-12 * (1.0 + std::abs(s[l])));
}

TEST_CASE("projection enforces the anti-aliasing rule") {
  const auto f = generate_realization(make_grid(2, 32, 1.0), GaussianEnvelope{1.0}, DeltaCorrelated{}, 1, 0);
  CHECK_NOTHROW(project_oam(f, 4));
  CHECK_THROWS_AS(project_oam(f, 5), std::invalid_argument);
}

TEST_CASE("spectrum intensity") {
  OamSpectrum zero{ModeWindow{4}, std::vector<Complex>(9)};
  for (double v : spectrum_intensity(zero).intensities) CHECK(v == 0.0);

  OamSpectrum s{ModeWindow{4}, std::vector<Complex>(9)};
  s.amplitudes[s.window.offset(3)] = {1.0, 1.0};
  CHECK(spectrum_intensity(s)[3] == doctest::Approx(2.0));

  const auto f = generate_realization(make_grid(4, 64, 1.0), GaussianEnvelope{1.0}, DeltaCorrelated{}, 9, 9);
  const auto spec = project_oam(f, 8);
  const auto inten = spectrum_intensity(spec);
  for (int l = -8; l <= 8; ++l) {
    const double direct = spec[l].real() * spec[l].real() + spec[l].imag() * spec[l].imag();
    CHECK(std::abs(inten[l] - direct) <= 1e-15 * direct);
    CHECK(inten[l] >= 0.0);
  }
}

TEST_CASE("single-arm spectrum is flat with and without an object") {
  const auto g = make_grid(16, 64, 2.0);
  const int l_max = 8;
  const int realizations = 2000;
  for (const auto& mask : {make_uniform(), make_angular_slits(4, pi / 6), make_fractional_vortex(-2.0 / 3.0)}) {
    std::vector<std::vector<double>> per_l(2 * l_max + 1);
    for (int i = 0; i < realizations; ++i) {
      const auto f = apply_mask(generate_realization(g, GaussianEnvelope{1.0}, DeltaCorrelated{}, 31, i), mask);
      const auto inten = spectrum_intensity(project_oam(f, l_max));
      for (int l = -l_max; l <= l_max; ++l) per_l[static_cast<std::size_t>(l + l_max)].push_back(inten[l]);
    }
    std::vector<testing_support::Moments> m;
    double grand = 0.0;
    for (const auto& xs : per_l) {
      m.push_back(testing_support::moments(xs));
      grand += m.back().mean;
    }
    grand /= static_cast<double>(m.size());
    for (const auto& mi : m) CHECK(testing_support::within_sem(mi, grand, 4.0));
  }
}
