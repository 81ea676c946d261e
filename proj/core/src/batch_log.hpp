#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>

#include "oamcorr/philox.hpp"

namespace oamcorr::detail {

/// out[i] = ln(in[i]) for positive finite inputs. Each result depends only on
/// its own input, so any batching of the same values gives the same bits.
void log_batch(const double* in, double* out, std::size_t n) noexcept;

/// Marsaglia polar step for the 16 cells of a Philox batch: cell 2i uses
/// words 0 and 1 of block i, cell 2i + 1 words 2 and 3. Writes
/// (x + iy) sqrt(-ln s / s) into z and returns a bit mask of the cells whose
/// pair fell outside the unit disk (their z is meaningless).
std::uint32_t polar_cells(const PhiloxBatch& words, std::complex<double>* z) noexcept;

}  // namespace oamcorr::detail
