#pragma once

#include "sqkd/alphabet.hpp"
#include "sqkd/channel.hpp"
#include "sqkd/config.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numbers>
#include <vector>

namespace sqkd::support {

inline const ExperimentConfig& default_config() {
  static const ExperimentConfig c;
  return c;
}

inline const HexAlphabet& default_alphabet() {
  static const HexAlphabet a = default_config().alphabet();
  return a;
}

inline const Apparatus& default_apparatus() {
  static const Apparatus a = default_config().apparatus();
  return a;
}

inline const ChannelModel& default_model() {
  static const ChannelModel m = build_channel_model(default_apparatus(), default_alphabet(), NoiseModel{});
  return m;
}

/// Seven-character alphabet detected under the aperture calibrated for 37.
inline const ChannelModel& leaky_model() {
  static const ChannelModel m =
      build_channel_model(default_apparatus(), build_hex_alphabet(1, default_alphabet().cell_radius()), NoiseModel{});
  return m;
}

/// Integral of the normalized intensity 2/(pi w^2) exp(-2|r - g|^2 / w^2) over
/// the pointy-top hexagon of circumradius a centred at c: closed form in x,
/// midpoint rule in y.
inline double hexagon_gaussian_integral(const Eigen::Vector2d& c, double a, const Eigen::Vector2d& g,
                                        double w, int steps = 4000) {
  const double s = std::sqrt(2.0) / w;
  const double h = 2 * a / steps;
  double total = 0;
  for (int i = 0; i < steps; ++i) {
    const double y = -a + (i + 0.5) * h;
    const double half = std::abs(y) <= a / 2 ? a * std::sqrt(3.0) / 2 : std::sqrt(3.0) * (a - std::abs(y));
    const double x0 = c.x() - half - g.x();
    const double x1 = c.x() + half - g.x();
    const double dy = c.y() + y - g.y();
    const double fx = 0.5 * (std::erf(s * x1) - std::erf(s * x0)) * std::sqrt(std::numbers::pi) / s;
    total += fx * std::exp(-2 * dy * dy / (w * w)) * h;
  }
  return total * 2 / (std::numbers::pi * w * w);
}

inline Eigen::VectorXd oracle_cell_probabilities(const HexAlphabet& alphabet, const Eigen::Vector2d& g,
                                                 double w) {
  Eigen::VectorXd p(alphabet.size());
  for (int k = 0; k < alphabet.size(); ++k)
    p[k] = hexagon_gaussian_integral(alphabet.center(k), alphabet.cell_radius(), g, w);
  return p;
}

/// Conjugate-basis intensity waist at Bob's plane for an aperture waist w.
inline double conjugate_waist(const optics::Geometry<double>& g, double w) {
  return 2 * g.fourier_focal_length() / (g.wavenumber() * w);
}

/// Pearson chi-square test of homogeneity.  Columns with an expected count
/// below 5 in any row are pooled together.  Returns the p-value.
inline double chi_square_homogeneity(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  const std::size_t cols = table.front().size();
  std::vector<double> row_sum(rows, 0), col_sum(cols, 0);
  double n = 0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      row_sum[i] += table[i][j];
      col_sum[j] += table[i][j];
      n += table[i][j];
    }
  const double min_row = *std::min_element(row_sum.begin(), row_sum.end());
  std::vector<std::vector<double>> pooled(rows);
  std::vector<double> pool(rows, 0);
  bool pooling = false;
  for (std::size_t j = 0; j < cols; ++j) {
    if (col_sum[j] * min_row / n >= 5) {
      for (std::size_t i = 0; i < rows; ++i) pooled[i].push_back(table[i][j]);
    } else {
      pooling = true;
      for (std::size_t i = 0; i < rows; ++i) pool[i] += table[i][j];
    }
  }
  if (pooling) {
    for (std::size_t i = 0; i < rows; ++i) pooled[i].push_back(pool[i]);
  }
  const std::size_t k = pooled.front().size();
  std::vector<double> csum(k, 0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < k; ++j) csum[j] += pooled[i][j];
  double chi2 = 0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double e = row_sum[i] * csum[j] / n;
      if (e > 0) chi2 += (pooled[i][j] - e) * (pooled[i][j] - e) / e;
    }
  const double dof = static_cast<double>((rows - 1) * (k - 1));
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2));
}

/// Pearson goodness-of-fit p-value of counts against expected probabilities.
inline double chi_square_fit(const std::vector<double>& counts, const std::vector<double>& probabilities) {
  double n = 0;
  for (double c : counts) n += c;
  double chi2 = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * probabilities[i];
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
  }
  return boost::math::cdf(
      boost::math::complement(boost::math::chi_squared(static_cast<double>(counts.size() - 1)), chi2));
}

/// Exact detection-conditioned sifted error per character of the
/// intercept-resend channel, enumerated from the model's tables.
struct ExpectedError {
  Eigen::VectorXd per_character;
  double average = 0;
  double detection = 0;  // P(detected | sifted bases)
};

inline ExpectedError expected_intercept_error(const ChannelModel& m, double eta) {
  const int d = m.d();
  ExpectedError out;
  out.per_character = Eigen::VectorXd::Zero(d);
  double err_total = 0, det_total = 0;
  for (int k = 0; k < d; ++k) {
    double err = 0, det = 0;
    for (const Basis a : {Basis::imaging, Basis::fourier}) {
      const BasisConfig bob{a, a};
      // no attack
      {
        const auto& col = m.ideal_map[bob].col(k);
        const double w = 0.5 * (1 - eta);
        det += w * col.sum();
        err += w * (col.sum() - col[k]);
      }
      for (const Basis e : {Basis::imaging, Basis::fourier}) {
        const auto& eve = m.eve_map[{a, e}].col(k);
        const double w = 0.5 * eta * 0.5;
        auto resend = [&](int r, double pr) {
          const auto& col = m.ideal_map[{e, a}].col(r);
          det += w * pr * col.sum();
          err += w * pr * (col.sum() - col[k]);
        };
        for (int c = 0; c < eve.size(); ++c) resend(m.resend_char[c], eve[c]);
        resend(m.center_char, m.eve_map.residual[BasisConfig{a, e}.index()][k]);
      }
    }
    out.per_character[k] = err / det;
    err_total += m.source[k] * err;
    det_total += m.source[k] * det;
  }
  out.average = err_total / det_total;
  out.detection = det_total;
  return out;
}

}  // namespace sqkd::support
