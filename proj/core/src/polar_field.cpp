#include "oamcorr/polar_field.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "batch_log.hpp"
#include "oamcorr/philox.hpp"

namespace oamcorr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

PolarGrid::PolarGrid(int n_r, int n_phi, double r_max) : n_r_(n_r), n_phi_(n_phi), r_max_(r_max) {
  if (n_r <= 0 || n_phi <= 0) {
    throw std::invalid_argument("grid dimensions must be positive (n_r=" + std::to_string(n_r) +
                                ", n_phi=" + std::to_string(n_phi) + ")");
  }
  if (n_phi % 2 != 0) {
    throw std::invalid_argument("n_phi must be even (got " + std::to_string(n_phi) + ")");
  }
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw std::invalid_argument("r_max must be a positive finite number");
  }
}

double PolarGrid::dphi() const noexcept { return kTwoPi / n_phi_; }

double PolarGrid::angle(int k) const noexcept { return kTwoPi * k / n_phi_; }

void PolarGrid::require_alias_free(int l_max) const {
  if (l_max <= 0) {
    throw std::invalid_argument("l_max must be positive (got " + std::to_string(l_max) + ")");
  }
  if (static_cast<long>(n_phi_) < 8L * l_max) {
    throw std::invalid_argument("anti-aliasing rule violated: n_phi (" + std::to_string(n_phi_) +
                                ") must be >= 8 * l_max (" + std::to_string(8L * l_max) + ")");
  }
}

std::string PolarGrid::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "PolarGrid(n_r=" << n_r_ << ", n_phi=" << n_phi_ << ", r_max=" << r_max_ << ")";
  return os.str();
}

PolarGrid make_grid(int n_r, int n_phi, double r_max) { return PolarGrid(n_r, n_phi, r_max); }

void validate_envelope(const Envelope& env, const PolarGrid& grid) {
  std::visit(Overloaded{
                 [](const GaussianEnvelope& g) {
                   if (!(g.waist > 0.0) || !std::isfinite(g.waist)) {
                     throw std::invalid_argument("gaussian envelope waist must be positive");
                   }
                 },
                 [&](const UniformDiskEnvelope& u) {
                   if (!(u.radius > 0.0) || u.radius > grid.r_max()) {
                     throw std::invalid_argument(
                         "uniform disk radius must lie in (0, r_max]");
                   }
                 },
                 [&](const CustomRadialEnvelope& c) {
                   if (c.samples.size() != static_cast<std::size_t>(grid.n_r())) {
                     throw std::invalid_argument(
                         "custom radial envelope has " + std::to_string(c.samples.size()) +
                         " samples, grid has n_r=" + std::to_string(grid.n_r()));
                   }
                   for (double s : c.samples) {
                     if (!(s >= 0.0) || !std::isfinite(s)) {
                       throw std::invalid_argument(
                           "custom radial envelope samples must be finite and non-negative");
                     }
                   }
                 },
             },
             env);
}

double envelope_value(const Envelope& env, const PolarGrid& grid, int j) {
  const double r = grid.radius(j);
  return std::visit(Overloaded{
                        [&](const GaussianEnvelope& g) { return std::exp(-2.0 * r * r / (g.waist * g.waist)); },
                        [&](const UniformDiskEnvelope& u) { return r <= u.radius ? 1.0 : 0.0; },
                        [&](const CustomRadialEnvelope& c) { return c.samples.at(static_cast<std::size_t>(j)); },
                    },
                    env);
}

std::vector<double> envelope_profile(const Envelope& env, const PolarGrid& grid) {
  validate_envelope(env, grid);
  std::vector<double> out(static_cast<std::size_t>(grid.n_r()));
  for (int j = 0; j < grid.n_r(); ++j) out[static_cast<std::size_t>(j)] = envelope_value(env, grid, j);
  return out;
}

std::string describe(const Envelope& env) {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const GaussianEnvelope& g) { os << "Gaussian(waist=" << g.waist << ")"; },
                 [&](const UniformDiskEnvelope& u) { os << "UniformDisk(radius=" << u.radius << ")"; },
                 [&](const CustomRadialEnvelope& c) { os << "CustomRadial(n=" << c.samples.size() << ")"; },
             },
             env);
  return os.str();
}

void validate_coherence(const CoherenceSpec& coh, const PolarGrid& grid) {
  if (const auto* s = std::get_if<Smoothed>(&coh)) {
    const int limit = std::min(grid.n_r(), grid.n_phi());
    if (s->correlation_cells <= 0 || 4 * s->correlation_cells >= limit) {
      throw std::invalid_argument("correlation_cells must satisfy 0 < c < min(n_r, n_phi)/4 (got " +
                                  std::to_string(s->correlation_cells) + ")");
    }
  }
}

std::string describe(const CoherenceSpec& coh) {
  if (const auto* s = std::get_if<Smoothed>(&coh)) {
    return "Smoothed(correlation_cells=" + std::to_string(s->correlation_cells) + ")";
  }
  return "DeltaCorrelated";
}

namespace {

// Cell c of realization `index` first tries the (x, y) pair in words
// 2(c mod 2), 2(c mod 2) + 1 of the block at counter (c / 2, index_lo,
// index_hi, 0). If that pair falls outside the unit disk it retries with
// counters (c, index_lo, index_hi, attempt >= 1), two pairs per block.
// Marsaglia's polar method then gives (x + iy) sqrt(-ln s / s), distributed
// exactly as (g1 + i g2) / sqrt(2).
struct Stream {
  Philox4x32::Key key;
  std::uint32_t idx_lo;
  std::uint32_t idx_hi;
};

Stream stream_for(std::uint64_t master_seed, std::uint64_t index) {
  return {Philox4x32::key_from_seed(master_seed), static_cast<std::uint32_t>(index),
          static_cast<std::uint32_t>(index >> 32)};
}

Complex retry_scalar(const Stream& st, std::uint32_t cell, std::uint32_t first_attempt) {
  for (std::uint32_t attempt = first_attempt;; ++attempt) {
    const auto w = Philox4x32::generate({cell, st.idx_lo, st.idx_hi, attempt}, st.key);
    for (std::size_t pair = 0; pair < 4; pair += 2) {
      const double x = signed_unit(w[pair]);
      const double y = signed_unit(w[pair + 1]);
      const double s = x * x + y * y;
      if (s < 1.0) {
        double l = 0.0;
        detail::log_batch(&s, &l, 1);
        const double f = std::sqrt(-l / s);
        return {x * f, y * f};
      }
    }
  }
}

/// Redraws up to kPhiloxBatch rejected cells with their attempt-1 blocks.
void retry_batch(const Stream& st, const std::uint32_t* cells, std::size_t n, std::uint32_t first,
                 std::span<Complex> out) {
  PhiloxLanes lanes{};
  for (std::size_t i = 0; i < n; ++i) lanes[i] = cells[i];
  PhiloxBatch words;
  philox_batch(lanes, st.idx_lo, st.idx_hi, 1u, st.key, words);
  std::array<Complex, 2 * kPhiloxBatch> z;
  const std::uint32_t bad = detail::polar_cells(words, z.data());
  for (std::size_t i = 0; i < n; ++i) {
    Complex& dst = out[cells[i] - first];
    if (!(bad >> (2 * i) & 1u)) {
      dst = z[2 * i];
    } else if (!(bad >> (2 * i + 1) & 1u)) {
      dst = z[2 * i + 1];
    } else {
      dst = retry_scalar(st, cells[i], 2u);
    }
  }
}

/// Unit draws for cells [first, first + out.size()).
void draw_cells(const Stream& st, std::uint32_t first, std::span<Complex> out) {
  constexpr auto kCells = static_cast<std::uint32_t>(2 * kPhiloxBatch);
  const auto end = first + static_cast<std::uint32_t>(out.size());
  PhiloxBatch words;
  PhiloxLanes lanes;
  std::array<Complex, kCells> z;
  std::array<std::uint32_t, kPhiloxBatch> rejected;
  std::size_t n_rejected = 0;
  for (std::uint32_t block = first / 2; 2 * block < end; block += kPhiloxBatch) {
    for (std::size_t i = 0; i < kPhiloxBatch; ++i) lanes[i] = block + static_cast<std::uint32_t>(i);
    philox_batch(lanes, st.idx_lo, st.idx_hi, 0u, st.key, words);
    std::uint32_t bad = detail::polar_cells(words, z.data());
    const std::uint32_t base = 2 * block;
    const std::uint32_t lo = std::max(first, base);
    const std::uint32_t hi = std::min(end, base + kCells);
    if (lo == base && hi == base + kCells) {
      std::copy(z.begin(), z.end(), out.begin() + (base - first));
    } else {
      for (std::uint32_t cell = lo; cell < hi; ++cell) out[cell - first] = z[cell - base];
      const std::uint32_t keep = (hi - lo == 32 ? ~0u : ((1u << (hi - lo)) - 1u)) << (lo - base);
      bad &= keep;
    }
    while (bad != 0) {
      rejected[n_rejected++] = base + static_cast<std::uint32_t>(std::countr_zero(bad));
      bad &= bad - 1;
      if (n_rejected == kPhiloxBatch) {
        retry_batch(st, rejected.data(), n_rejected, first, out);
        n_rejected = 0;
      }
    }
  }
  if (n_rejected > 0) retry_batch(st, rejected.data(), n_rejected, first, out);
}

}  // namespace

Complex unit_cell_draw(std::uint64_t master_seed, std::uint64_t index, std::uint32_t cell) {
  Complex z;
  draw_cells(stream_for(master_seed, index), cell, std::span<Complex>(&z, 1));
  return z;
}

namespace {

void smooth_unit_variance(SpeckleField& field, int cells) {
  const PolarGrid& g = field.grid;
  const int n_r = g.n_r();
  const int n_phi = g.n_phi();
  const int lo = -(cells / 2);
  const int hi = lo + cells;  // exclusive

  // Azimuthal pass (periodic), then radial pass (clamped). Sums of i.i.d. unit
  // cells are renormalised by sqrt(count) so every cell keeps unit variance.
  std::vector<Complex> tmp(field.samples.size());
  for (int j = 0; j < n_r; ++j) {
    for (int k = 0; k < n_phi; ++k) {
      Complex acc{};
      for (int d = lo; d < hi; ++d) acc += field.at(j, ((k + d) % n_phi + n_phi) % n_phi);
      tmp[g.index(j, k)] = acc / std::sqrt(static_cast<double>(cells));
    }
  }
  for (int j = 0; j < n_r; ++j) {
    const int j0 = std::max(0, j + lo);
    const int j1 = std::min(n_r, j + hi);
    const double norm = 1.0 / std::sqrt(static_cast<double>(j1 - j0));
    for (int k = 0; k < n_phi; ++k) {
      Complex acc{};
      for (int jj = j0; jj < j1; ++jj) acc += tmp[g.index(jj, k)];
      field.at(j, k) = acc * norm;
    }
  }
}

}  // namespace

void generate_realization_into(SpeckleField& out, std::span<const double> sigma,
                               const CoherenceSpec& coh, std::uint64_t master_seed,
                               std::uint64_t index) {
  const PolarGrid& g = out.grid;
  out.samples.resize(g.cell_count());
  out.master_seed = master_seed;
  out.realization_index = index;

  const auto* smoothed = std::get_if<Smoothed>(&coh);
  const Stream st = stream_for(master_seed, index);
  const auto n_phi = static_cast<std::size_t>(g.n_phi());
  std::span<Complex> all(out.samples);
  for (int j = 0; j < g.n_r(); ++j) {
    auto ring = all.subspan(g.index(j, 0), n_phi);
    if (sigma[static_cast<std::size_t>(j)] == 0.0 && smoothed == nullptr) {
      std::fill(ring.begin(), ring.end(), Complex{});
      continue;
    }
    draw_cells(st, static_cast<std::uint32_t>(g.index(j, 0)), ring);
  }
  if (smoothed != nullptr) smooth_unit_variance(out, smoothed->correlation_cells);
  for (int j = 0; j < g.n_r(); ++j) {
    const double s = sigma[static_cast<std::size_t>(j)];
    for (int k = 0; k < g.n_phi(); ++k) out.at(j, k) *= s;
  }
}

SpeckleField generate_realization(const PolarGrid& grid, const Envelope& env,
                                  const CoherenceSpec& coh, std::uint64_t master_seed,
                                  std::uint64_t index) {
  validate_coherence(coh, grid);
  const std::vector<double> profile = envelope_profile(env, grid);
  std::vector<double> sigma(profile.size());
  std::transform(profile.begin(), profile.end(), sigma.begin(), [](double v) { return std::sqrt(v); });
  SpeckleField field{grid, {}, master_seed, index};
  generate_realization_into(field, sigma, coh, master_seed, index);
  return field;
}

double total_power(const SpeckleField& field) {
  const PolarGrid& g = field.grid;
  double total = 0.0;
  for (int j = 0; j < g.n_r(); ++j) {
    double ring = 0.0;
    for (const Complex& z : field.ring(j)) ring += std::norm(z);
    total += g.weight(j) * ring;
  }
  return total;
}

}  // namespace oamcorr
