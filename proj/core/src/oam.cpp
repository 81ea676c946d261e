#include "oamcorr/oam.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace oamcorr {

namespace {

// The FFTW planner is not re-entrant; execution with fftw_execute_dft is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct OamProjector::Impl {
  PolarGrid grid;
  ModeWindow window;
  fftw_plan plan = nullptr;
  std::vector<double> radial_factor;  // w_j / sqrt(2 pi)

  Impl(const PolarGrid& g, int l_max) : grid(g), window{l_max} {
    grid.require_alias_free(l_max);
    radial_factor.resize(static_cast<std::size_t>(grid.n_r()));
    const double inv_sqrt_two_pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (int j = 0; j < grid.n_r(); ++j) radial_factor[static_cast<std::size_t>(j)] = grid.weight(j) * inv_sqrt_two_pi;

    std::vector<Complex> in(static_cast<std::size_t>(grid.n_phi()));
    std::vector<Complex> out(in.size());
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(grid.n_phi(), reinterpret_cast<fftw_complex*>(in.data()),
                            reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("FFTW could not plan the azimuthal transform");
  }

  ~Impl() {
    if (plan != nullptr) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

OamProjector::OamProjector(const PolarGrid& grid, int l_max) : impl_(std::make_unique<Impl>(grid, l_max)) {}
OamProjector::~OamProjector() = default;
OamProjector::OamProjector(OamProjector&&) noexcept = default;
OamProjector& OamProjector::operator=(OamProjector&&) noexcept = default;

const PolarGrid& OamProjector::grid() const noexcept { return impl_->grid; }
ModeWindow OamProjector::window() const noexcept { return impl_->window; }

void OamProjector::project(std::span<const Complex> samples, std::span<Complex> amplitudes,
                           std::vector<Complex>& scratch) const {
  const PolarGrid& g = impl_->grid;
  const ModeWindow w = impl_->window;
  if (samples.size() != g.cell_count()) throw std::invalid_argument("field does not match projector grid");
  if (amplitudes.size() != static_cast<std::size_t>(w.size())) {
    throw std::invalid_argument("amplitude buffer does not match the mode window");
  }
  // The radial weights do not depend on phi, so the weighted radial sum is
  // taken first and a single azimuthal DFT of length n_phi finishes the job.
  const auto n_phi = static_cast<std::size_t>(g.n_phi());
  scratch.assign(2 * n_phi, Complex{});
  const std::span<Complex> collapsed(scratch.data(), n_phi);
  const std::span<Complex> spectrum(scratch.data() + n_phi, n_phi);
  for (int j = 0; j < g.n_r(); ++j) {
    const double wj = impl_->radial_factor[static_cast<std::size_t>(j)];
    const Complex* ring = samples.data() + g.index(j, 0);
    for (std::size_t k = 0; k < n_phi; ++k) collapsed[k] += wj * ring[k];
  }
  fftw_execute_dft(impl_->plan, reinterpret_cast<fftw_complex*>(collapsed.data()),
                   reinterpret_cast<fftw_complex*>(spectrum.data()));

  const int n = g.n_phi();
  for (int l = -w.l_max; l <= w.l_max; ++l) {
    amplitudes[w.offset(l)] = spectrum[static_cast<std::size_t>(((l % n) + n) % n)];
  }
}

OamSpectrum OamProjector::project(const SpeckleField& field) const {
  if (!(field.grid == impl_->grid)) throw std::invalid_argument("field grid differs from projector grid");
  OamSpectrum out{impl_->window, std::vector<Complex>(static_cast<std::size_t>(impl_->window.size()))};
  std::vector<Complex> scratch;
  project(field.samples, out.amplitudes, scratch);
  return out;
}

OamSpectrum project_oam(const SpeckleField& field, int l_max) {
  return OamProjector(field.grid, l_max).project(field);
}

void intensities_into(std::span<const Complex> amplitudes, std::span<double> out) {
  for (std::size_t i = 0; i < amplitudes.size(); ++i) out[i] = std::norm(amplitudes[i]);
}

IntensitySpectrum spectrum_intensity(const OamSpectrum& spectrum) {
  IntensitySpectrum out{spectrum.window, std::vector<double>(spectrum.amplitudes.size())};
  intensities_into(spectrum.amplitudes, out.intensities);
  return out;
}

}  // namespace oamcorr
