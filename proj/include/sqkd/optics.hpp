#pragma once

// Paraxial scalar field optics on square transverse grids.
//
// Fields are sampled on an n x n grid centred on the optical axis: sample
// (row i, col j) sits at (x_j, y_i) with x_j = (j - n/2) * spacing.  A thin
// lens of focal length f at one focal distance maps a field W(rho) onto
// (k / 2 pi f) v(k rho / f), where v is the angular spectrum of W.  On the
// grid this is a centred DFT followed by a change of coordinate scale, so
// the output spacing is lambda f / (n * spacing) and physical power
// sum |s|^2 dA is conserved exactly.

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sqkd {

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Basis { imaging, fourier };

inline char basis_symbol(Basis b) { return b == Basis::imaging ? 'I' : 'F'; }

inline Basis other_basis(Basis b) {
  return b == Basis::imaging ? Basis::fourier : Basis::imaging;
}

/// Alice's encoding system and Bob's decoding system.
struct BasisConfig {
  Basis alice = Basis::imaging;
  Basis bob = Basis::imaging;

  friend bool operator==(const BasisConfig&, const BasisConfig&) = default;

  bool matched() const { return alice == bob; }
  std::string name() const { return {basis_symbol(alice), basis_symbol(bob)}; }
  /// Dense index in [0, 4): II, IF, FI, FF.
  int index() const {
    return (alice == Basis::fourier ? 2 : 0) + (bob == Basis::fourier ? 1 : 0);
  }
};

inline constexpr std::array<BasisConfig, 4> kAllConfigs = {
    BasisConfig{Basis::imaging, Basis::imaging},
    BasisConfig{Basis::imaging, Basis::fourier},
    BasisConfig{Basis::fourier, Basis::imaging},
    BasisConfig{Basis::fourier, Basis::fourier},
};

inline BasisConfig parse_config(std::string_view name) {
  if (name.size() == 2) {
    auto parse = [](char c) -> int {
      if (c == 'I' || c == 'i') return 0;
      if (c == 'F' || c == 'f') return 1;
      return -1;
    };
    const int a = parse(name[0]);
    const int b = parse(name[1]);
    if (a >= 0 && b >= 0) {
      return {a ? Basis::fourier : Basis::imaging, b ? Basis::fourier : Basis::imaging};
    }
  }
  throw std::invalid_argument("unknown basis configuration '" + std::string(name) + "'");
}

namespace optics {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

enum class Domain { position, wavevector };

template <typename Scalar>
struct Grid {
  int n = 512;
  Scalar extent = Scalar(4e-3);  // half-width per axis

  Scalar spacing() const { return Scalar(2) * extent / Scalar(n); }
  Scalar coordinate(int i) const { return Scalar(i - n / 2) * spacing(); }
  Scalar cell_area() const { return spacing() * spacing(); }

  void validate() const {
    if (n < 2 || n % 2 != 0) throw GeometryError("grid size must be an even integer >= 2");
    if (!(extent > 0)) throw GeometryError("grid extent must be positive");
  }
};

template <typename Scalar>
class Field {
 public:
  using Complex = std::complex<Scalar>;
  using Samples = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  Field(Samples samples, Scalar extent, Scalar wavelength, Domain domain = Domain::position)
      : samples_(std::move(samples)), extent_(extent), wavelength_(wavelength), domain_(domain) {
    if (samples_.rows() != samples_.cols()) throw GeometryError("field grid must be square");
    grid().validate();
    if (!(wavelength_ > 0)) throw GeometryError("wavelength must be positive");
    const Scalar p = power();
    if (!(p > 0) || !std::isfinite(p)) throw GeometryError("field has zero or non-finite power");
  }

  const Samples& samples() const { return samples_; }
  int size() const { return static_cast<int>(samples_.rows()); }
  Scalar extent() const { return extent_; }
  Scalar wavelength() const { return wavelength_; }
  Scalar wavenumber() const { return Scalar(2) * std::numbers::pi_v<Scalar> / wavelength_; }
  Domain domain() const { return domain_; }
  Grid<Scalar> grid() const { return {size(), extent_}; }
  Scalar spacing() const { return grid().spacing(); }
  Scalar coordinate(int i) const { return grid().coordinate(i); }

  Scalar power() const { return samples_.cwiseAbs2().sum() * grid().cell_area(); }

  Field normalized() const {
    return Field(samples_ / std::sqrt(power()), extent_, wavelength_, domain_);
  }

 private:
  Samples samples_;
  Scalar extent_;
  Scalar wavelength_;
  Domain domain_;
};

using OpticalField = Field<double>;

enum class ApertureShape { gaussian, circular, hexagonal };

inline std::string_view shape_name(ApertureShape s) {
  switch (s) {
    case ApertureShape::gaussian: return "gaussian";
    case ApertureShape::circular: return "circular";
    case ApertureShape::hexagonal: return "hexagonal";
  }
  return "?";
}

inline ApertureShape parse_shape(std::string_view s) {
  if (s == "gaussian") return ApertureShape::gaussian;
  if (s == "circular") return ApertureShape::circular;
  if (s == "hexagonal") return ApertureShape::hexagonal;
  throw std::invalid_argument("unknown aperture shape '" + std::string(s) + "'");
}

/// Gaussian: amplitude exp(-r^2/w^2) with w = size.  Circular: radius = size.
/// Hexagonal: pointy-top regular hexagon, centre-to-vertex = size.
template <typename Scalar>
struct ApertureSpec {
  ApertureShape shape = ApertureShape::gaussian;
  Scalar size = Scalar(200e-6);
  Vector2<Scalar> center = Vector2<Scalar>::Zero();
};

template <typename Scalar>
bool inside_hexagon(Scalar x, Scalar y, Scalar circumradius) {
  const Scalar apothem = circumradius * std::sqrt(Scalar(3)) / Scalar(2);
  x = std::abs(x);
  y = std::abs(y);
  return x <= apothem && x / Scalar(2) + y * std::sqrt(Scalar(3)) / Scalar(2) <= apothem;
}

template <typename Scalar>
Scalar aperture_amplitude(const ApertureSpec<Scalar>& spec, Scalar x, Scalar y) {
  const Scalar dx = x - spec.center.x();
  const Scalar dy = y - spec.center.y();
  switch (spec.shape) {
    case ApertureShape::gaussian:
      return std::exp(-(dx * dx + dy * dy) / (spec.size * spec.size));
    case ApertureShape::circular:
      return dx * dx + dy * dy <= spec.size * spec.size ? Scalar(1) : Scalar(0);
    case ApertureShape::hexagonal:
      return inside_hexagon(dx, dy, spec.size) ? Scalar(1) : Scalar(0);
  }
  return Scalar(0);
}

/// Input field W(rho, 0) = A(rho - rho_d), normalized to unit power.
template <typename Scalar>
Field<Scalar> make_aperture_field(const ApertureSpec<Scalar>& spec, const Grid<Scalar>& grid,
                                  Scalar wavelength) {
  grid.validate();
  if (!(spec.size > 0)) throw GeometryError("aperture size must be positive");
  if (!(spec.size < grid.extent / Scalar(4))) {
    throw GeometryError("aperture too large for grid (size must be below extent/4)");
  }
  if (std::abs(spec.center.x()) >= grid.extent || std::abs(spec.center.y()) >= grid.extent) {
    throw GeometryError("aperture centre outside grid");
  }
  if (spec.size < Scalar(2) * grid.spacing()) {
    std::ostringstream msg;
    msg << "aperture of size " << spec.size << " m is under-resolved by grid spacing "
        << grid.spacing() << " m (need size >= 2 samples)";
    throw SamplingError(msg.str());
  }
  typename Field<Scalar>::Samples s(grid.n, grid.n);
  for (int j = 0; j < grid.n; ++j) {
    const Scalar x = grid.coordinate(j);
    for (int i = 0; i < grid.n; ++i) {
      s(i, j) = aperture_amplitude(spec, x, grid.coordinate(i));
    }
  }
  return Field<Scalar>(std::move(s), grid.extent, wavelength).normalized();
}

namespace detail {

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
void fft2(ComplexMatrix<Scalar>& m, bool inverse) {
  using Vec = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
  Eigen::FFT<Scalar> fft;
  Vec in(m.rows());
  Vec out(m.rows());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    in = m.col(j);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    m.col(j) = out;
  }
  in.resize(m.cols());
  out.resize(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    in = m.row(i).transpose();
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    m.row(i) = out.transpose();
  }
}

// Sum_i s_i exp(-2 pi i (m - n/2)(i - n/2) / n) along both axes.  The
// per-axis (-1)^(n/2) factors cancel between the two axes.
template <typename Scalar>
void centered_dft(ComplexMatrix<Scalar>& m) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if ((i + j) % 2) m(i, j) = -m(i, j);
  fft2<Scalar>(m, false);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if ((i + j) % 2) m(i, j) = -m(i, j);
}

}  // namespace detail

/// Angular spectrum v(q) in unitary scaling (v / 2 pi), so that
/// sum |v|^2 dq^2 equals the input power.  Output spacing is pi / extent.
template <typename Scalar>
Field<Scalar> angular_spectrum(const Field<Scalar>& field) {
  if (field.domain() != Domain::position) {
    throw GeometryError("angular_spectrum expects a position-domain field");
  }
  auto s = field.samples();
  detail::centered_dft<Scalar>(s);
  s *= field.grid().cell_area() / (Scalar(2) * std::numbers::pi_v<Scalar>);
  const int n = field.size();
  const Scalar q_extent = Scalar(n) * std::numbers::pi_v<Scalar> / (Scalar(2) * field.extent());
  return Field<Scalar>(std::move(s), q_extent, field.wavelength(), Domain::wavevector);
}

/// One lens at focal distance: W(rho) -> (k / 2 pi f) v(k rho / f).
template <typename Scalar>
Field<Scalar> lens_transform(const Field<Scalar>& field, Scalar focal_length) {
  if (!(focal_length > 0)) throw GeometryError("focal length must be positive");
  const auto spectrum = angular_spectrum(field);
  const Scalar k = field.wavenumber();
  return Field<Scalar>(spectrum.samples() * (k / focal_length),
                       spectrum.extent() * focal_length / k, field.wavelength());
}

/// Fraction of power in the outer n/16 band of the grid.
template <typename Scalar>
Scalar border_power_fraction(const Field<Scalar>& field) {
  const int n = field.size();
  const int band = std::max(1, n / 16);
  const auto a2 = field.samples().cwiseAbs2();
  const Scalar total = a2.sum();
  const Scalar inner = a2.block(band, band, n - 2 * band, n - 2 * band).sum();
  return (total - inner) / total;
}

template <typename Scalar>
void check_sampling(const Field<Scalar>& field, Scalar tolerance, std::string_view stage) {
  const Scalar fraction = border_power_fraction(field);
  if (fraction > tolerance) {
    std::ostringstream msg;
    msg << "sampling error at " << stage << ": " << fraction
        << " of the power lies in the outer band of a grid with spacing " << field.spacing()
        << " m and half-width " << field.extent() << " m (tolerance " << tolerance << ")";
    throw SamplingError(msg.str());
  }
}

enum class LensRole { alice_imaging, alice_fourier, channel, bob_imaging, bob_fourier };

/// Confocal lens cascade.  Imaging systems and the channel are two-lens
/// telescopes with equal focal lengths; Fourier systems are one lens.
template <typename Scalar>
struct LensChain {
  LensRole role = LensRole::channel;
  std::vector<Scalar> focal_lengths;

  void validate() const {
    for (Scalar f : focal_lengths) {
      if (!(f > 0)) throw GeometryError("focal lengths must be positive");
    }
    const bool fourier = role == LensRole::alice_fourier || role == LensRole::bob_fourier;
    if (fourier) {
      if (focal_lengths.size() != 1) throw GeometryError("a Fourier chain has exactly one lens");
    } else if (focal_lengths.size() != 2 || focal_lengths[0] != focal_lengths[1]) {
      throw GeometryError("an imaging chain is two lenses of equal focal length");
    }
  }
};

template <typename Scalar>
struct Geometry {
  Scalar wavelength = Scalar(514e-9);
  Scalar focal_length = Scalar(0.100);          // imaging telescope lenses, f
  Scalar channel_focal_length = Scalar(0.150);  // channel telescope, f_c
  Grid<Scalar> grid{};

  Scalar fourier_focal_length() const { return Scalar(2) * focal_length; }
  Scalar wavenumber() const { return Scalar(2) * std::numbers::pi_v<Scalar> / wavelength; }

  void validate() const {
    if (!(wavelength > 0)) throw GeometryError("wavelength must be positive");
    if (!(focal_length > 0) || !(channel_focal_length > 0)) {
      throw GeometryError("focal lengths must be positive");
    }
    grid.validate();
  }
};

template <typename Scalar>
LensChain<Scalar> party_chain(Basis basis, bool alice, const Geometry<Scalar>& g) {
  if (basis == Basis::imaging) {
    return {alice ? LensRole::alice_imaging : LensRole::bob_imaging,
            {g.focal_length, g.focal_length}};
  }
  return {alice ? LensRole::alice_fourier : LensRole::bob_fourier, {g.fourier_focal_length()}};
}

template <typename Scalar>
LensChain<Scalar> channel_chain(const Geometry<Scalar>& g) {
  return {LensRole::channel, {g.channel_focal_length, g.channel_focal_length}};
}

/// Alice's system, the channel telescope, then Bob's system.
template <typename Scalar>
std::vector<LensChain<Scalar>> configuration_chain(BasisConfig config, const Geometry<Scalar>& g) {
  return {party_chain(config.alice, true, g), channel_chain(g), party_chain(config.bob, false, g)};
}

template <typename Scalar>
Grid<Scalar> output_grid(Grid<Scalar> grid, std::span<const LensChain<Scalar>> chain,
                         Scalar wavelength) {
  for (const auto& c : chain) {
    for (Scalar f : c.focal_lengths) {
      const Scalar spacing = wavelength * f / (Scalar(grid.n) * grid.spacing());
      grid.extent = spacing * Scalar(grid.n) / Scalar(2);
    }
  }
  return grid;
}

struct PropagationOptions {
  bool normalize = true;
  double sampling_tolerance = 1e-6;
};

template <typename Scalar>
Field<Scalar> propagate_chain(const Field<Scalar>& field, std::span<const LensChain<Scalar>> chain,
                              PropagationOptions options = {}) {
  if (chain.empty()) throw std::invalid_argument("propagate_chain needs at least one lens chain");
  if (field.domain() != Domain::position) {
    throw GeometryError("propagate_chain expects a position-domain field");
  }
  const auto tol = static_cast<Scalar>(options.sampling_tolerance);
  check_sampling(field, tol, "chain input");
  Field<Scalar> current = field;
  int lens = 0;
  for (const auto& c : chain) {
    c.validate();
    for (Scalar f : c.focal_lengths) {
      current = lens_transform(current, f);
      check_sampling(current, tol, "lens " + std::to_string(++lens));
    }
  }
  return options.normalize ? current.normalized() : current;
}

/// Closed-form detection amplitudes at Bob's plane, unit power:
/// FF -> W(rho), II -> W(-rho), IF and FI -> v(k rho / 2f).
/// Non-Gaussian shapes fall back to one discrete transform for IF/FI.
template <typename Scalar>
Field<Scalar> analytic_amplitude(BasisConfig config, const ApertureSpec<Scalar>& spec,
                                 const Geometry<Scalar>& g) {
  g.validate();
  const auto chain = configuration_chain(config, g);
  const Grid<Scalar> out = output_grid<Scalar>(g.grid, chain, g.wavelength);

  if (config.matched()) {
    ApertureSpec<Scalar> image = spec;
    if (config.alice == Basis::imaging) image.center = -spec.center;
    if (spec.shape == ApertureShape::gaussian) {
      typename Field<Scalar>::Samples s(out.n, out.n);
      for (int j = 0; j < out.n; ++j)
        for (int i = 0; i < out.n; ++i)
          s(i, j) = aperture_amplitude(image, out.coordinate(j), out.coordinate(i));
      return Field<Scalar>(std::move(s), out.extent, g.wavelength).normalized();
    }
    return make_aperture_field(image, out, g.wavelength);
  }

  if (spec.shape == ApertureShape::gaussian) {
    const Scalar scale = g.wavenumber() / g.fourier_focal_length();
    const Scalar w2 = spec.size * spec.size;
    typename Field<Scalar>::Samples s(out.n, out.n);
    for (int j = 0; j < out.n; ++j) {
      const Scalar qx = scale * out.coordinate(j);
      for (int i = 0; i < out.n; ++i) {
        const Scalar qy = scale * out.coordinate(i);
        const Scalar modulus = std::exp(-(qx * qx + qy * qy) * w2 / Scalar(4));
        const Scalar phase = -(qx * spec.center.x() + qy * spec.center.y());
        s(i, j) = std::polar(modulus, phase);
      }
    }
    return Field<Scalar>(std::move(s), out.extent, g.wavelength).normalized();
  }
  const auto input = make_aperture_field(spec, g.grid, g.wavelength);
  return lens_transform(input, g.fourier_focal_length()).normalized();
}

/// Detection probability density |A(rho)|^2 on the field's grid.
template <typename Scalar>
struct IntensityMap {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> density;
  Grid<Scalar> grid;

  Scalar total() const { return density.sum() * grid.cell_area(); }
};

using ProbabilityDensity = IntensityMap<double>;

template <typename Scalar>
IntensityMap<Scalar> detection_probability_map(const Field<Scalar>& amplitude) {
  return {amplitude.samples().cwiseAbs2(), amplitude.grid()};
}

/// Convolution with an isotropic Gaussian displacement of standard
/// deviation sigma per axis.  Total probability is preserved.
template <typename Scalar>
IntensityMap<Scalar> blur_intensity(const IntensityMap<Scalar>& map, Scalar sigma) {
  if (sigma < 0) throw std::invalid_argument("jitter sigma must be non-negative");
  if (sigma == 0) return map;
  const int n = map.grid.n;
  detail::ComplexMatrix<Scalar> m = map.density.template cast<std::complex<Scalar>>();
  detail::fft2<Scalar>(m, false);
  const Scalar dq = Scalar(2) * std::numbers::pi_v<Scalar> / (Scalar(n) * map.grid.spacing());
  for (int j = 0; j < n; ++j) {
    const Scalar qx = dq * Scalar(j < n / 2 ? j : j - n);
    for (int i = 0; i < n; ++i) {
      const Scalar qy = dq * Scalar(i < n / 2 ? i : i - n);
      m(i, j) *= std::exp(-sigma * sigma * (qx * qx + qy * qy) / Scalar(2));
    }
  }
  detail::fft2<Scalar>(m, true);
  IntensityMap<Scalar> out{m.real().cwiseMax(Scalar(0)), map.grid};
  out.density *= map.total() / out.total();
  return out;
}

}  // namespace optics
}  // namespace sqkd
