#include "sqkd/optics.hpp"

#include <random>

#include "gtest/gtest.h"
#include "support.hpp"

using namespace sqkd;
using namespace sqkd::optics;

namespace {

struct Moments {
  double cx = 0, cy = 0, vx = 0, vy = 0;
};

Moments intensity_moments(const Eigen::MatrixXd& density, const Grid<double>& g) {
  Moments m;
  double total = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const double p = density(i, j);
      total += p;
      m.cx += p * g.coordinate(j);
      m.cy += p * g.coordinate(i);
    }
  m.cx /= total;
  m.cy /= total;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const double p = density(i, j) / total;
      m.vx += p * (g.coordinate(j) - m.cx) * (g.coordinate(j) - m.cx);
      m.vy += p * (g.coordinate(i) - m.cy) * (g.coordinate(i) - m.cy);
    }
  return m;
}

double relative_l2(const OpticalField& a, const OpticalField& b) {
  return (a.samples() - b.samples()).norm() / b.samples().norm();
}

// Point inversion on the centred grid: index i -> (n - i) mod n.
Eigen::MatrixXd inverted(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) out(i, j) = m((n - i) % n, (n - j) % n);
  return out;
}

constexpr double kLambda = 514e-9;

}  // namespace

TEST(aperture, gaussian_centroid_and_second_moment) {
  const Grid<double> g{512, 3e-3};
  const double w = 200e-6;
  const auto f = make_aperture_field<double>({ApertureShape::gaussian, w, {0, 0}}, g, kLambda);
  EXPECT_NEAR(f.power(), 1.0, 1e-9);
  const auto m = intensity_moments(f.samples().cwiseAbs2(), g);
  EXPECT_NEAR(m.cx, 0, 1e-9);
  EXPECT_NEAR(m.cy, 0, 1e-9);
  EXPECT_NEAR(m.vx, w * w / 4, 0.01 * w * w / 4);
  EXPECT_NEAR(m.vy, w * w / 4, 0.01 * w * w / 4);
}

TEST(aperture, shifted_centroid) {
  const Grid<double> g{512, 3e-3};
  const auto f = make_aperture_field<double>({ApertureShape::gaussian, 200e-6, {346e-6, 0}}, g, kLambda);
  const auto m = intensity_moments(f.samples().cwiseAbs2(), g);
  EXPECT_NEAR(m.cx, 346e-6, g.spacing());
  EXPECT_NEAR(m.cy, 0, g.spacing());
}

TEST(aperture, circular_indicator) {
  const Grid<double> g{512, 3e-3};
  const double r = 100e-6;
  const auto f = make_aperture_field<double>({ApertureShape::circular, r, {0, 0}}, g, kLambda);
  const auto a2 = f.samples().cwiseAbs2();
  double inside = -1;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const double rho = std::hypot(g.coordinate(i), g.coordinate(j));
      if (rho > r + g.spacing()) EXPECT_EQ(a2(i, j), 0.0);
      if (rho <= r) {
        if (inside < 0) inside = a2(i, j);
        EXPECT_DOUBLE_EQ(a2(i, j), inside);
      }
    }
  EXPECT_GT(inside, 0);
}

TEST(aperture, hexagonal_indicator) {
  const Grid<double> g{512, 3e-3};
  const auto f = make_aperture_field<double>({ApertureShape::hexagonal, 200e-6, {0, 0}}, g, kLambda);
  const auto a2 = f.samples().cwiseAbs2();
  // Pointy-top: reaches 200 um along y, the apothem 173 um along x.
  EXPECT_GT(a2(g.n / 2 + 16, g.n / 2), 0);
  EXPECT_EQ(a2(g.n / 2, g.n / 2 + 16), 0);
}

TEST(aperture, rejects_bad_specs) {
  const Grid<double> g{512, 3e-3};
  EXPECT_THROW(make_aperture_field<double>({ApertureShape::gaussian, 1e-3, {0, 0}}, g, kLambda), GeometryError);
  EXPECT_THROW(make_aperture_field<double>({ApertureShape::gaussian, 100e-6, {4e-3, 0}}, g, kLambda),
               GeometryError);
  EXPECT_THROW(make_aperture_field<double>({ApertureShape::gaussian, 5e-6, {0, 0}}, g, kLambda), SamplingError);
  EXPECT_THROW(make_aperture_field<double>({ApertureShape::gaussian, -1, {0, 0}}, g, kLambda), GeometryError);
}

TEST(field, rejects_zero_and_bad_grids) {
  OpticalField::Samples zero = OpticalField::Samples::Zero(8, 8);
  EXPECT_THROW(OpticalField(zero, 1e-3, kLambda), GeometryError);
  OpticalField::Samples odd = OpticalField::Samples::Ones(7, 7);
  EXPECT_THROW(OpticalField(odd, 1e-3, kLambda), GeometryError);
  OpticalField::Samples ok = OpticalField::Samples::Ones(8, 8);
  EXPECT_THROW(OpticalField(ok, 1e-3, -1.0), GeometryError);
  EXPECT_THROW(OpticalField(ok, 0.0, kLambda), GeometryError);
}

TEST(angular_spectrum, parseval) {
  const Grid<double> g{256, 2e-3};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  OpticalField::Samples s(g.n, g.n);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) s(i, j) = {n01(rng), n01(rng)};
  const OpticalField f(s, g.extent, kLambda);
  const auto v = angular_spectrum(f);
  EXPECT_NEAR(v.power() / f.power(), 1.0, 1e-9);
  EXPECT_NEAR(v.spacing(), std::numbers::pi / g.extent, 1e-9 * v.spacing());
}

TEST(angular_spectrum, gaussian_pair) {
  const Grid<double> g{512, 4e-3};
  const double w = 200e-6;
  const auto v = angular_spectrum(make_aperture_field<double>({ApertureShape::gaussian, w, {0, 0}}, g, kLambda));
  // |v|^2 ~ exp(-q^2 w^2 / 2): waist 2/w, second moment (2/w)^2 / 4 per axis.
  const auto m = intensity_moments(v.samples().cwiseAbs2(), v.grid());
  const double q_waist = 2 / w;
  EXPECT_NEAR(m.vx, q_waist * q_waist / 4, 0.01 * q_waist * q_waist / 4);
  EXPECT_NEAR(m.vy, q_waist * q_waist / 4, 0.01 * q_waist * q_waist / 4);
}

TEST(angular_spectrum, shift_leaves_modulus) {
  const Grid<double> g{512, 4e-3};
  const double w = 200e-6;
  const auto a = angular_spectrum(make_aperture_field<double>({ApertureShape::gaussian, w, {0, 0}}, g, kLambda));
  const auto b = angular_spectrum(
      make_aperture_field<double>({ApertureShape::gaussian, w, {10 * g.spacing(), -7 * g.spacing()}}, g, kLambda));
  EXPECT_LE((a.samples().cwiseAbs() - b.samples().cwiseAbs()).cwiseAbs().maxCoeff(),
            1e-9 * a.samples().cwiseAbs().maxCoeff());
}

TEST(angular_spectrum, single_sample_is_flat) {
  OpticalField::Samples s = OpticalField::Samples::Zero(64, 64);
  s(20, 41) = 1;
  const auto v = angular_spectrum(OpticalField(s, 1e-3, kLambda));
  const auto mod = v.samples().cwiseAbs();
  EXPECT_NEAR(mod.maxCoeff(), mod.minCoeff(), 1e-12 * mod.maxCoeff());
}

TEST(propagate_chain, telescope_inverts_asymmetric_field) {
  Geometry<double> geo;
  const auto& g = geo.grid;
  OpticalField::Samples s(g.n, g.n), expect(g.n, g.n);
  auto profile = [](double x, double y) {
    const double w2 = 200e-6 * 200e-6;
    return std::exp(-((x - 346e-6) * (x - 346e-6) + (y - 100e-6) * (y - 100e-6)) / w2) +
           0.5 * std::exp(-((x + 300e-6) * (x + 300e-6) + (y - 500e-6) * (y - 500e-6)) / w2);
  };
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      s(i, j) = profile(g.coordinate(j), g.coordinate(i));
      expect(i, j) = profile(-g.coordinate(j), -g.coordinate(i));
    }
  const OpticalField in = OpticalField(s, g.extent, kLambda).normalized();
  const OpticalField want = OpticalField(expect, g.extent, kLambda).normalized();
  const std::vector<LensChain<double>> chain{{LensRole::alice_imaging, {0.1, 0.1}}};
  const auto out = propagate_chain<double>(in, chain);
  EXPECT_NEAR(out.extent(), g.extent, 1e-12);
  EXPECT_LE(relative_l2(out, want), 1e-3);
}

TEST(propagate_chain, fourier_lens_gaussian_oracle) {
  Geometry<double> geo;
  const double w = 200e-6;
  const double f2 = geo.fourier_focal_length();
  const std::vector<LensChain<double>> chain{{LensRole::alice_fourier, {f2}}};
  const auto a = propagate_chain<double>(
      make_aperture_field<double>({ApertureShape::gaussian, w, {0, 0}}, geo.grid, kLambda), chain);
  const auto b = propagate_chain<double>(
      make_aperture_field<double>({ApertureShape::gaussian, w, {346e-6, -200e-6}}, geo.grid, kLambda), chain);
  // Closed form: Gaussian of waist 4f / (k w) = 2F / (k w) centred on the axis.
  const double W = 2 * f2 / (geo.wavenumber() * w);
  const auto og = a.grid();
  OpticalField::Samples s(og.n, og.n);
  for (int j = 0; j < og.n; ++j)
    for (int i = 0; i < og.n; ++i)
      s(i, j) = std::exp(-(og.coordinate(i) * og.coordinate(i) + og.coordinate(j) * og.coordinate(j)) / (W * W));
  const OpticalField oracle = OpticalField(s, og.extent, kLambda).normalized();
  EXPECT_LE((a.samples().cwiseAbs() - oracle.samples().cwiseAbs()).norm() / oracle.samples().norm(), 1e-3);
  EXPECT_LE((a.samples().cwiseAbs() - b.samples().cwiseAbs()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(propagate_chain, power_conserved_without_normalization) {
  Geometry<double> geo;
  const auto in = make_aperture_field<double>({ApertureShape::gaussian, 150e-6, {200e-6, 50e-6}}, geo.grid, kLambda);
  for (const BasisConfig c : kAllConfigs) {
    const auto chain = configuration_chain(c, geo);
    const auto out = propagate_chain<double>(in, chain, {false, 1e-6});
    EXPECT_NEAR(out.power(), in.power(), 1e-9) << c.name();
  }
}

TEST(propagate_chain, matches_analytic_for_all_configs) {
  Geometry<double> geo;
  const auto& alphabet = support::default_alphabet();
  std::mt19937_64 rng(11);
  for (const double w : {support::default_apparatus().aperture_size, 200e-6}) {
    for (int trial = 0; trial < 3; ++trial) {
      const int k = static_cast<int>(rng() % alphabet.size());
      const ApertureSpec<double> spec{ApertureShape::gaussian, w, alphabet.center(k)};
      const auto in = make_aperture_field(spec, geo.grid, kLambda);
      for (const BasisConfig c : kAllConfigs) {
        const auto chain = configuration_chain(c, geo);
        const auto numeric = propagate_chain<double>(in, chain);
        const auto analytic = analytic_amplitude(c, spec, geo);
        EXPECT_NEAR(numeric.extent(), analytic.extent(), 1e-12) << c.name();
        EXPECT_LE(relative_l2(numeric, analytic), 1e-3) << c.name() << " w=" << w << " k=" << k;
      }
    }
  }
}

TEST(propagate_chain, rejects_empty_and_aliasing) {
  Geometry<double> geo;
  const auto in = make_aperture_field<double>({ApertureShape::gaussian, 200e-6, {0, 0}}, geo.grid, kLambda);
  EXPECT_THROW(propagate_chain<double>(in, std::vector<LensChain<double>>{}), std::invalid_argument);
  const auto edge =
      make_aperture_field<double>({ApertureShape::gaussian, 200e-6, {3.9e-3, 0}}, geo.grid, kLambda);
  try {
    propagate_chain<double>(edge, configuration_chain({Basis::fourier, Basis::fourier}, geo));
    FAIL() << "expected a sampling error";
  } catch (const SamplingError& e) {
    EXPECT_NE(std::string(e.what()).find("spacing"), std::string::npos);
  }
  // A field too narrow for the Fourier plane aliases after the first lens.
  Geometry<double> coarse;
  coarse.grid = {128, 4e-3};
  const auto narrow =
      make_aperture_field<double>({ApertureShape::circular, 130e-6, {0, 0}}, coarse.grid, kLambda);
  EXPECT_THROW(propagate_chain<double>(narrow, configuration_chain({Basis::fourier, Basis::fourier}, coarse)),
               SamplingError);
}

TEST(lens_chain, validation) {
  EXPECT_THROW((LensChain<double>{LensRole::alice_imaging, {0.1, 0.2}}.validate()), GeometryError);
  EXPECT_THROW((LensChain<double>{LensRole::bob_fourier, {0.1, 0.1}}.validate()), GeometryError);
  EXPECT_THROW((LensChain<double>{LensRole::channel, {-0.1, -0.1}}.validate()), GeometryError);
  EXPECT_NO_THROW((LensChain<double>{LensRole::channel, {0.15, 0.15}}.validate()));
  EXPECT_EQ(parse_config("if"), (BasisConfig{Basis::imaging, Basis::fourier}));
  EXPECT_THROW(parse_config("IX"), std::invalid_argument);
}

TEST(analytic_amplitude, peaks_and_inversion) {
  Geometry<double> geo;
  const ApertureSpec<double> spec{ApertureShape::gaussian, 200e-6, {346e-6, 0}};
  const auto ff = detection_probability_map(analytic_amplitude({Basis::fourier, Basis::fourier}, spec, geo));
  const auto ii = detection_probability_map(analytic_amplitude({Basis::imaging, Basis::imaging}, spec, geo));
  Eigen::Index i, j;
  ff.density.maxCoeff(&i, &j);
  EXPECT_NEAR(ff.grid.coordinate(static_cast<int>(j)), 346e-6, ff.grid.spacing());
  EXPECT_NEAR(ff.grid.coordinate(static_cast<int>(i)), 0, ff.grid.spacing());
  ii.density.maxCoeff(&i, &j);
  EXPECT_NEAR(ii.grid.coordinate(static_cast<int>(j)), -346e-6, ii.grid.spacing());
  const double peak = ff.density.maxCoeff();
  EXPECT_LE((ii.density - inverted(ff.density)).cwiseAbs().maxCoeff(), 1e-6 * peak);
}

TEST(analytic_amplitude, conjugate_maps_are_shift_blind) {
  Geometry<double> geo;
  const auto& alphabet = support::default_alphabet();
  for (const BasisConfig c : {BasisConfig{Basis::imaging, Basis::fourier}, BasisConfig{Basis::fourier, Basis::imaging}}) {
    const auto ref = analytic_amplitude<double>(c, {ApertureShape::gaussian, 200e-6, {0, 0}}, geo);
    for (int k = 0; k < alphabet.size(); k += 5) {
      const auto a = analytic_amplitude<double>(c, {ApertureShape::gaussian, 200e-6, alphabet.center(k)}, geo);
      EXPECT_LE((a.samples().cwiseAbs() - ref.samples().cwiseAbs()).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
  const ApertureSpec<double> spec{ApertureShape::gaussian, 200e-6, {346e-6, 600e-6}};
  const auto if_map = detection_probability_map(analytic_amplitude({Basis::imaging, Basis::fourier}, spec, geo));
  const auto fi_map = detection_probability_map(analytic_amplitude({Basis::fourier, Basis::imaging}, spec, geo));
  EXPECT_LE((if_map.density - fi_map.density).cwiseAbs().maxCoeff(), 1e-12 * if_map.density.maxCoeff());
}

TEST(analytic_amplitude, non_gaussian_fallback_is_shift_blind) {
  Geometry<double> geo;
  const BasisConfig c{Basis::imaging, Basis::fourier};
  const auto a = analytic_amplitude<double>(c, {ApertureShape::circular, 150e-6, {0, 0}}, geo);
  const auto b = analytic_amplitude<double>(c, {ApertureShape::circular, 150e-6, {20 * geo.grid.spacing(), 0}}, geo);
  EXPECT_LE((a.samples().cwiseAbs() - b.samples().cwiseAbs()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(detection_map, integral_modulus_and_waist) {
  Geometry<double> geo;
  const double w = 200e-6;
  const auto amp = analytic_amplitude<double>({Basis::fourier, Basis::fourier}, {ApertureShape::gaussian, w, {0, 0}}, geo);
  const auto map = detection_probability_map(amp);
  EXPECT_NEAR(map.total(), 1.0, 1e-9);

  OpticalField::Samples phased = amp.samples();
  for (int j = 0; j < amp.size(); ++j)
    for (int i = 0; i < amp.size(); ++i) phased(i, j) *= std::polar(1.0, 0.37 * i - 1.3 * j);
  const auto map2 = detection_probability_map(OpticalField(phased, amp.extent(), kLambda));
  EXPECT_LE((map.density - map2.density).cwiseAbs().maxCoeff(), 1e-12 * map.density.maxCoeff());

  // Intensity exp(-2 r^2 / w^2): second moment w^2 / 4 per axis, i.e. an
  // amplitude-sense waist of w / sqrt(2).
  const auto m = intensity_moments(map.density, map.grid);
  EXPECT_NEAR(m.vx, w * w / 4, 0.01 * w * w / 4);
}

TEST(blur, preserves_total_and_adds_variance) {
  Geometry<double> geo;
  const double w = 100e-6;
  const double sigma = 30e-6;
  const auto map =
      detection_probability_map(analytic_amplitude<double>({Basis::fourier, Basis::fourier}, {ApertureShape::gaussian, w, {0, 0}}, geo));
  const auto blurred = blur_intensity(map, sigma);
  EXPECT_NEAR(blurred.total(), map.total(), 1e-12);
  const auto m0 = intensity_moments(map.density, map.grid);
  const auto m1 = intensity_moments(blurred.density, blurred.grid);
  EXPECT_NEAR(m1.vx - m0.vx, sigma * sigma, 0.01 * sigma * sigma);
  EXPECT_THROW(blur_intensity(map, -1.0), std::invalid_argument);
}

TEST(output_grid, default_geometry_spacings) {
  Geometry<double> geo;
  const auto image = output_grid<double>(geo.grid, configuration_chain({Basis::imaging, Basis::imaging}, geo), kLambda);
  const auto fourier = output_grid<double>(geo.grid, configuration_chain({Basis::fourier, Basis::imaging}, geo), kLambda);
  EXPECT_NEAR(image.spacing(), geo.grid.spacing(), 1e-15);
  EXPECT_NEAR(fourier.spacing(), kLambda * 0.2 / (2 * geo.grid.extent), 1e-15);
}
