#include "oamcorr/masks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace oamcorr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double reduce_angle(double phi) {
  double p = std::fmod(phi, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  if (p >= kTwoPi) p = 0.0;
  return p;
}

bool slit_open(const AngularSlits& s, double phi) {
  const double beta = s.period();
  double local = std::fmod(phi, beta);
  if (local < 0.0) local += beta;
  return local < s.alpha;
}

}  // namespace

double AngularSlits::period() const noexcept { return kTwoPi / n_fold; }

ObjectMask make_uniform() { return UniformMask{}; }

ObjectMask make_angular_slits(int n_fold, double alpha) {
  if (n_fold <= 0) throw std::invalid_argument("angular slits need N > 0");
  const double beta = kTwoPi / n_fold;
  if (!(alpha > 0.0) || !(alpha < beta)) {
    throw std::invalid_argument("angular slit width alpha must lie in (0, 2 pi / N)");
  }
  return AngularSlits{n_fold, alpha};
}

ObjectMask make_fractional_vortex(double winding) {
  if (!std::isfinite(winding)) throw std::invalid_argument("vortex winding must be finite");
  if (winding == std::floor(winding)) {
    throw std::invalid_argument("fractional vortex needs a non-integer M; use IntegerVortex");
  }
  return FractionalVortex{winding};
}

ObjectMask make_integer_vortex(int winding) { return IntegerVortex{winding}; }

ObjectMask make_custom_raster(int n_r, int n_phi, std::vector<Complex> samples) {
  if (n_r <= 0 || n_phi <= 0) throw std::invalid_argument("raster dimensions must be positive");
  if (samples.size() != static_cast<std::size_t>(n_r) * static_cast<std::size_t>(n_phi)) {
    throw std::invalid_argument("raster sample count does not match n_r * n_phi");
  }
  for (const Complex& z : samples) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z) > 1.0 + 1e-12) {
      throw std::invalid_argument("raster transmission must satisfy |A| <= 1");
    }
  }
  return CustomRaster{n_r, n_phi, std::move(samples)};
}

ObjectMask load_custom_raster(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open raster file " + path.string());
  int n_r = 0;
  int n_phi = 0;
  if (!(in >> n_r >> n_phi)) throw std::runtime_error("raster header must be 'n_r n_phi': " + path.string());
  if (n_r <= 0 || n_phi <= 0) throw std::runtime_error("raster header has non-positive dimensions");
  std::vector<Complex> samples;
  samples.reserve(static_cast<std::size_t>(n_r) * static_cast<std::size_t>(n_phi));
  double re = 0.0;
  double im = 0.0;
  while (in >> re >> im) samples.emplace_back(re, im);
  if (!in.eof()) throw std::runtime_error("malformed raster value in " + path.string());
  if (samples.size() != static_cast<std::size_t>(n_r) * static_cast<std::size_t>(n_phi)) {
    throw std::runtime_error("raster " + path.string() + " holds " + std::to_string(samples.size()) +
                             " cells, header promises " + std::to_string(n_r * n_phi));
  }
  return make_custom_raster(n_r, n_phi, std::move(samples));
}

bool is_azimuthal(const ObjectMask& mask) noexcept {
  return !std::holds_alternative<CustomRaster>(mask);
}

Complex evaluate_mask(const ObjectMask& mask, double r, double phi, double r_max_hint) {
  const double p = reduce_angle(phi);
  return std::visit(
      Overloaded{
          [](const UniformMask&) { return Complex{1.0, 0.0}; },
          [&](const AngularSlits& s) { return slit_open(s, p) ? Complex{1.0, 0.0} : Complex{}; },
          [&](const FractionalVortex& v) { return std::polar(1.0, v.winding * p); },
          [&](const IntegerVortex& v) { return std::polar(1.0, v.winding * p); },
          [&](const CustomRaster& c) {
            const double dr = r_max_hint / c.n_r;
            const int j = std::clamp(static_cast<int>(std::floor(r / dr)), 0, c.n_r - 1);
            const int k = static_cast<int>(std::lround(p / (kTwoPi / c.n_phi))) % c.n_phi;
            return c.samples[static_cast<std::size_t>(j) * static_cast<std::size_t>(c.n_phi) +
                             static_cast<std::size_t>(k)];
          },
      },
      mask);
}

std::vector<Complex> sample_mask(const ObjectMask& mask, const PolarGrid& grid) {
  if (const auto* c = std::get_if<CustomRaster>(&mask)) {
    if (c->n_r != grid.n_r() || c->n_phi != grid.n_phi()) {
      throw std::invalid_argument("raster is " + std::to_string(c->n_r) + "x" + std::to_string(c->n_phi) +
                                  " but the field grid is " + std::to_string(grid.n_r()) + "x" +
                                  std::to_string(grid.n_phi()));
    }
    return c->samples;
  }
  std::vector<Complex> out(grid.cell_count());
  for (int k = 0; k < grid.n_phi(); ++k) {
    const Complex a = evaluate_mask(mask, 0.0, grid.angle(k));
    for (int j = 0; j < grid.n_r(); ++j) out[grid.index(j, k)] = a;
  }
  return out;
}

void apply_sampled_mask(const SpeckleField& in, std::span<const Complex> sampled, SpeckleField& out) {
  out.grid = in.grid;
  out.master_seed = in.master_seed;
  out.realization_index = in.realization_index;
  out.samples.resize(in.samples.size());
  for (std::size_t i = 0; i < in.samples.size(); ++i) out.samples[i] = in.samples[i] * sampled[i];
}

SpeckleField apply_mask(const SpeckleField& field, const ObjectMask& mask) {
  if (std::holds_alternative<UniformMask>(mask)) {
    return field;
  }
  const std::vector<Complex> sampled = sample_mask(mask, field.grid);
  SpeckleField out{field.grid, {}, field.master_seed, field.realization_index};
  apply_sampled_mask(field, sampled, out);
  return out;
}

std::string describe(const ObjectMask& mask) {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const UniformMask&) { os << "Uniform"; },
                 [&](const AngularSlits& s) { os << "AngularSlits(N=" << s.n_fold << ", alpha=" << s.alpha << ")"; },
                 [&](const FractionalVortex& v) { os << "FractionalVortex(M=" << v.winding << ")"; },
                 [&](const IntegerVortex& v) { os << "IntegerVortex(l0=" << v.winding << ")"; },
                 [&](const CustomRaster& c) { os << "CustomRaster(" << c.n_r << "x" << c.n_phi << ")"; },
             },
             mask);
  return os.str();
}

FloorDecomposition floor_decompose(double winding) {
  const double u = std::floor(winding);
  return {static_cast<long>(u), winding - u};
}

}  // namespace oamcorr
