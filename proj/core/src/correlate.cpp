#include "oamcorr/correlate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace oamcorr {

namespace {

void require_same_window(ModeWindow a, ModeWindow b) {
  if (!(a == b)) {
    throw std::invalid_argument("mode window mismatch (l_max " + std::to_string(a.l_max) + " vs " +
                                std::to_string(b.l_max) + ")");
  }
}

void add_into(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

double standard_error(double sum, double sum_sq, double n) {
  const double mean = sum / n;
  const double spread = sum_sq / n - mean * mean;
  // Below this the difference is cancellation residue of a constant stream.
  const double floor = 16.0 * std::numeric_limits<double>::epsilon() * mean * mean;
  if (spread <= floor) return 0.0;
  return std::sqrt(spread / (n - 1.0));
}

}  // namespace

CorrelationAccumulator::CorrelationAccumulator(ModeWindow w)
    : window(w),
      sum_test(static_cast<std::size_t>(w.size()), 0.0),
      sum_ref(static_cast<std::size_t>(w.size()), 0.0),
      sum_test_sq(static_cast<std::size_t>(w.size()), 0.0),
      sum_ref_sq(static_cast<std::size_t>(w.size()), 0.0),
      sum_product(w),
      sum_product_sq(w) {}

CorrelationAccumulator& accumulate(CorrelationAccumulator& acc, std::span<const double> test,
                                   std::span<const double> ref) {
  const auto n = static_cast<std::size_t>(acc.window.size());
  if (test.size() != n || ref.size() != n) throw std::invalid_argument("spectrum length does not match window");
  for (std::size_t i = 0; i < n; ++i) {
    acc.sum_test[i] += test[i];
    acc.sum_ref[i] += ref[i];
    acc.sum_test_sq[i] += test[i] * test[i];
    acc.sum_ref_sq[i] += ref[i] * ref[i];
  }
  auto prod = acc.sum_product.values();
  auto prod_sq = acc.sum_product_sq.values();
  for (std::size_t t = 0; t < n; ++t) {
    const double it = test[t];
    for (std::size_t r = 0; r < n; ++r) {
      const double p = it * ref[r];
      prod[t * n + r] += p;
      prod_sq[t * n + r] += p * p;
    }
  }
  ++acc.count;
  return acc;
}

CorrelationAccumulator& accumulate(CorrelationAccumulator& acc, const IntensitySpectrum& test,
                                   const IntensitySpectrum& ref) {
  require_same_window(acc.window, test.window);
  require_same_window(acc.window, ref.window);
  return accumulate(acc, std::span<const double>(test.intensities), std::span<const double>(ref.intensities));
}

CorrelationAccumulator merge(const CorrelationAccumulator& a, const CorrelationAccumulator& b) {
  require_same_window(a.window, b.window);
  CorrelationAccumulator out = a;
  out.count += b.count;
  add_into(out.sum_test, b.sum_test);
  add_into(out.sum_ref, b.sum_ref);
  add_into(out.sum_test_sq, b.sum_test_sq);
  add_into(out.sum_ref_sq, b.sum_ref_sq);
  add_into(out.sum_product.values(), b.sum_product.values());
  add_into(out.sum_product_sq.values(), b.sum_product_sq.values());
  return out;
}

CorrelationMatrix finalize(const CorrelationAccumulator& acc, Provenance provenance) {
  if (acc.count < 2) {
    throw std::invalid_argument("finalize needs at least 2 realizations (have " + std::to_string(acc.count) + ")");
  }
  const ModeWindow w = acc.window;
  const auto n = static_cast<std::size_t>(w.size());
  const auto g = static_cast<double>(acc.count);

  CorrelationMatrix m;
  m.window = w;
  m.realizations = acc.count;
  m.provenance = std::move(provenance);
  m.mean_test.resize(n);
  m.mean_ref.resize(n);
  m.stderr_mean_test.resize(n);
  m.stderr_mean_ref.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.mean_test[i] = acc.sum_test[i] / g;
    m.mean_ref[i] = acc.sum_ref[i] / g;
    m.stderr_mean_test[i] = standard_error(acc.sum_test[i], acc.sum_test_sq[i], g);
    m.stderr_mean_ref[i] = standard_error(acc.sum_ref[i], acc.sum_ref_sq[i], g);
    if (!(m.mean_test[i] > 0.0) || !(m.mean_ref[i] > 0.0)) {
      throw std::invalid_argument("zero mean intensity at l=" + std::to_string(static_cast<int>(i) - w.l_max) +
                                  "; envelope or mask blocks all light");
    }
  }

  m.g2 = ModeMatrix(w);
  m.raw_mean_product = ModeMatrix(w);
  m.stderr_g2 = ModeMatrix(w);
  for (int lt = -w.l_max; lt <= w.l_max; ++lt) {
    for (int lr = -w.l_max; lr <= w.l_max; ++lr) {
      const double background = m.mean_test[w.offset(lt)] * m.mean_ref[w.offset(lr)];
      const double mean_product = acc.sum_product(lt, lr) / g;
      m.raw_mean_product(lt, lr) = mean_product;
      m.g2(lt, lr) = mean_product / background;
      m.stderr_g2(lt, lr) = standard_error(acc.sum_product(lt, lr), acc.sum_product_sq(lt, lr), g) / background;
    }
  }
  return m;
}

void validate(const EnsembleSpec& spec) {
  spec.grid.require_alias_free(spec.l_max);
  validate_envelope(spec.envelope, spec.grid);
  validate_coherence(spec.coherence, spec.grid);
  if (spec.realizations < 2) throw std::invalid_argument("realizations must be >= 2");
  if (const auto* c = std::get_if<CustomRaster>(&spec.mask)) {
    if (c->n_r != spec.grid.n_r() || c->n_phi != spec.grid.n_phi()) {
      throw std::invalid_argument("custom raster dimensions do not match the grid");
    }
  }
}

Provenance provenance_of(const EnsembleSpec& spec) {
  return {spec.master_seed,       spec.first_index,         spec.grid.describe(),
          describe(spec.envelope), describe(spec.coherence), describe(spec.mask)};
}

namespace {

/// Per-thread buffers for one realization in both arms.
class RealizationWorker {
 public:
  RealizationWorker(const EnsembleSpec& spec, const OamProjector& projector, std::span<const double> sigma,
                    std::span<const Complex> mask_samples)
      : spec_(spec),
        projector_(projector),
        sigma_(sigma),
        mask_samples_(mask_samples),
        field_{spec.grid, {}, spec.master_seed, 0},
        masked_{spec.grid, {}, spec.master_seed, 0},
        amp_test_(static_cast<std::size_t>(projector.window().size())),
        amp_ref_(amp_test_.size()),
        int_test_(amp_test_.size()),
        int_ref_(amp_test_.size()) {}

  CorrelationAccumulator run_block(std::uint64_t begin, std::uint64_t end) {
    CorrelationAccumulator acc(projector_.window());
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      generate_realization_into(field_, sigma_, spec_.coherence, spec_.master_seed, idx);
      projector_.project(field_.samples, amp_ref_, scratch_);
      if (mask_samples_.empty()) {
        std::copy(amp_ref_.begin(), amp_ref_.end(), amp_test_.begin());
      } else {
        apply_sampled_mask(field_, mask_samples_, masked_);
        projector_.project(masked_.samples, amp_test_, scratch_);
      }
      intensities_into(amp_test_, int_test_);
      intensities_into(amp_ref_, int_ref_);
      accumulate(acc, std::span<const double>(int_test_), std::span<const double>(int_ref_));
    }
    return acc;
  }

 private:
  const EnsembleSpec& spec_;
  const OamProjector& projector_;
  std::span<const double> sigma_;
  std::span<const Complex> mask_samples_;
  SpeckleField field_;
  SpeckleField masked_;
  std::vector<Complex> amp_test_;
  std::vector<Complex> amp_ref_;
  std::vector<double> int_test_;
  std::vector<double> int_ref_;
  std::vector<Complex> scratch_;
};

}  // namespace

CorrelationAccumulator accumulate_ensemble(const EnsembleSpec& spec, unsigned workers) {
  validate(spec);
  const OamProjector projector(spec.grid, spec.l_max);
  std::vector<double> sigma = envelope_profile(spec.envelope, spec.grid);
  for (double& s : sigma) s = std::sqrt(s);
  // A uniform mask leaves the test arm identical to the reference arm.
  const std::vector<Complex> mask_samples =
      std::holds_alternative<UniformMask>(spec.mask) ? std::vector<Complex>{} : sample_mask(spec.mask, spec.grid);

  const std::uint64_t blocks = (spec.realizations + kReductionBlock - 1) / kReductionBlock;
  std::vector<CorrelationAccumulator> partial(blocks);
  std::atomic<std::uint64_t> next{0};

  auto work = [&] {
    RealizationWorker worker(spec, projector, sigma, mask_samples);
    for (std::uint64_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) {
      const std::uint64_t begin = spec.first_index + b * kReductionBlock;
      const std::uint64_t end = spec.first_index + std::min(spec.realizations, (b + 1) * kReductionBlock);
      partial[b] = worker.run_block(begin, end);
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(blocks)));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }

  CorrelationAccumulator total(ModeWindow{spec.l_max});
  for (const auto& block : partial) total = merge(total, block);
  return total;
}

CorrelationMatrix run_ensemble(const EnsembleSpec& spec, unsigned workers) {
  return finalize(accumulate_ensemble(spec, workers), provenance_of(spec));
}

RepeatSummary run_repeats(const EnsembleSpec& spec, int repeats, unsigned workers) {
  if (repeats < 2) throw std::invalid_argument("repeats must be >= 2 to report a spread");
  RepeatSummary out;
  const ModeWindow w{spec.l_max};
  out.mean_g2 = ModeMatrix(w);
  out.spread_g2 = ModeMatrix(w);
  CorrelationAccumulator total(w);
  for (int r = 0; r < repeats; ++r) {
    EnsembleSpec rep = spec;
    rep.first_index = spec.first_index + static_cast<std::uint64_t>(r) * spec.realizations;
    CorrelationAccumulator acc = accumulate_ensemble(rep, workers);
    out.runs.push_back(finalize(acc, provenance_of(rep)));
    total = merge(total, acc);
  }
  out.pooled = finalize(total, provenance_of(spec));
  const auto n = static_cast<double>(repeats);
  auto mean = out.mean_g2.values();
  auto spread = out.spread_g2.values();
  for (const auto& run : out.runs) add_into(mean, run.g2.values());
  for (double& v : mean) v /= n;
  for (const auto& run : out.runs) {
    const auto g = run.g2.values();
    for (std::size_t i = 0; i < g.size(); ++i) spread[i] += (g[i] - mean[i]) * (g[i] - mean[i]);
  }
  for (double& v : spread) v = std::sqrt(v / (n - 1.0));
  return out;
}

ModeMatrix delta_g2_from_matrix(const CorrelationMatrix& m) {
  ModeMatrix out(m.window);
  for (int lt = -m.window.l_max; lt <= m.window.l_max; ++lt) {
    for (int lr = -m.window.l_max; lr <= m.window.l_max; ++lr) {
      out(lt, lr) = m.raw_mean_product(lt, lr) - m.mean_test[m.window.offset(lt)] * m.mean_ref[m.window.offset(lr)];
    }
  }
  return out;
}

ModeMatrix delta_g2_stderr(const CorrelationMatrix& m) {
  ModeMatrix out(m.window);
  for (int lt = -m.window.l_max; lt <= m.window.l_max; ++lt) {
    for (int lr = -m.window.l_max; lr <= m.window.l_max; ++lr) {
      out(lt, lr) = m.stderr_g2(lt, lr) * m.mean_test[m.window.offset(lt)] * m.mean_ref[m.window.offset(lr)];
    }
  }
  return out;
}

std::vector<DiagonalPoint> diagonal_profile(const CorrelationMatrix& m) {
  const ModeMatrix delta = delta_g2_from_matrix(m);
  const ModeMatrix se = delta_g2_stderr(m);
  const int lm = m.window.l_max;
  std::vector<DiagonalPoint> out;
  for (int dl = -2 * lm; dl <= 2 * lm; ++dl) {
    double sum = 0.0;
    double var = 0.0;
    int n = 0;
    for (int lr = -lm; lr <= lm; ++lr) {
      const int lt = lr + dl;
      if (!m.window.contains(lt)) continue;
      sum += delta(lt, lr);
      var += se(lt, lr) * se(lt, lr);
      ++n;
    }
    out.push_back({dl, sum / n, std::sqrt(var) / n, n});
  }
  return out;
}

}  // namespace oamcorr
