#include "sqkd/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sqkd {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng substream(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) {
  const std::uint64_t s = splitmix64(splitmix64(splitmix64(seed) ^ domain) ^ index);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return Rng(seq);
}

double public_coin(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) {
  const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ domain) ^ index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

void NoiseModel::validate() const {
  auto probability = [](double p, const char* name) {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  };
  probability(background_prob, "background_prob");
  probability(loss_prob, "loss_prob");
  if (!(jitter_sigma >= 0) || !std::isfinite(jitter_sigma)) {
    throw std::invalid_argument("jitter_sigma must be non-negative");
  }
}

OutcomeSampler::OutcomeSampler(const Eigen::Ref<const Eigen::VectorXd>& probabilities)
    : cdf_(probabilities.size()) {
  double acc = 0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    if (!(probabilities[i] >= 0)) throw std::invalid_argument("negative outcome probability");
    acc += probabilities[i];
    cdf_[i] = acc;
  }
  if (acc > 1 + 1e-9) throw std::invalid_argument("outcome probabilities exceed 1");
}

int OutcomeSampler::draw(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return it == cdf_.end() ? -1 : static_cast<int>(it - cdf_.begin());
}

Eigen::VectorXd with_background(const Eigen::Ref<const Eigen::VectorXd>& cells, double background) {
  if (background == 0) return cells;
  const double norm = 1 + static_cast<double>(cells.size()) * background;
  return (cells.array() + background) / norm;
}

double ChannelModel::matched_error(BasisConfig config) const {
  if (!config.matched()) throw std::invalid_argument("matched_error needs a matched configuration");
  const auto& t = ideal_map[config];
  double correct = 0;
  for (int k = 0; k < d(); ++k) correct += source[k] * t(k, k);
  return 1 - correct;
}

HexAlphabet field_of_view_layout(const optics::Geometry<double>& geometry, double cell_radius) {
  const auto image = optics::output_grid<double>(
      geometry.grid, optics::configuration_chain({Basis::fourier, Basis::fourier}, geometry),
      geometry.wavelength);
  const auto fourier = optics::output_grid<double>(
      geometry.grid, optics::configuration_chain({Basis::imaging, Basis::fourier}, geometry),
      geometry.wavelength);
  const double half_width = std::max(image.extent, fourier.extent);
  const int rings =
      static_cast<int>(std::ceil(half_width * std::sqrt(2.0) / (std::sqrt(3.0) * cell_radius))) + 1;
  return build_hex_alphabet(rings, cell_radius);
}

ChannelModel build_channel_model(const Apparatus& apparatus, const HexAlphabet& alphabet,
                                 const NoiseModel& noise, SourceMode mode) {
  noise.validate();
  HexAlphabet layout = field_of_view_layout(apparatus.geometry, alphabet.cell_radius());
  for (const Axial& a : alphabet.cells()) {
    if (!layout.find(a)) throw AlphabetError("alphabet extends beyond the detection field of view");
  }
  ProbabilityMap eve_map = build_probability_map(apparatus, alphabet, layout);
  ProbabilityMap ideal_map = project_cells(eve_map, alphabet);
  ProbabilityMap bob_map = noise.jitter_sigma > 0
                               ? build_probability_map(apparatus, alphabet, alphabet, noise.jitter_sigma)
                               : ideal_map;
  SourceDistribution source = mode == SourceMode::conjugate ? source_from_conjugate(ideal_map)
                                                            : SourceDistribution::uniform(alphabet.size());

  ChannelModel model{apparatus, alphabet, std::move(layout), noise, std::move(eve_map),
                     std::move(ideal_map), std::move(bob_map), std::move(source), {}, {},
                     {}, {}, {}, 0};
  model.source_sampler = OutcomeSampler(model.source.probabilities());
  for (int j = 1; j < model.d(); ++j) {
    if (model.alphabet.center(j).squaredNorm() < model.alphabet.center(model.center_char).squaredNorm() - 1e-18) {
      model.center_char = j;
    }
  }

  for (const BasisConfig config : kAllConfigs) {
    const int idx = config.index();
    for (int k = 0; k < model.d(); ++k) {
      model.bob_samplers[idx].emplace_back(
          with_background(model.bob_map[config].col(k), noise.background_prob));
      model.eve_samplers[idx].emplace_back(model.eve_map[config].col(k));
    }
  }
  const auto& cells = model.eve_layout;
  for (int c = 0; c < cells.size(); ++c) {
    const auto k = model.alphabet.find(cells.cells()[c]);
    model.eve_cell_char.push_back(k ? *k : -1);
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < model.d(); ++j) {
      const double d2 = (model.alphabet.center(j) - cells.center(c)).squaredNorm();
      if (d2 < best_d2 - 1e-18) {
        best = j;
        best_d2 = d2;
      }
    }
    model.resend_char.push_back(best);
  }
  return model;
}

}  // namespace sqkd
