#pragma once

#include "sqkd/alphabet.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace sqkd {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Independent generator for item `index` of stream `domain`.
Rng substream(std::uint64_t seed, std::uint64_t domain, std::uint64_t index);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Stateless public coin: uniform in [0, 1) for item `index` of stream `domain`.
double public_coin(std::uint64_t seed, std::uint64_t domain, std::uint64_t index);

namespace stream {
inline constexpr std::uint64_t rounds = 1;
inline constexpr std::uint64_t error_sample = 2;
inline constexpr std::uint64_t flatten = 3;
}  // namespace stream

struct NoiseModel {
  double background_prob = 0.0;  // false-count probability per cell per round
  double jitter_sigma = 0.0;     // transverse misalignment, meters per axis
  double loss_prob = 0.0;

  void validate() const;
  bool noiseless() const { return background_prob == 0 && jitter_sigma == 0 && loss_prob == 0; }
};

/// Categorical sampler over cells with the remaining mass as outcome -1.
class OutcomeSampler {
 public:
  OutcomeSampler() = default;
  explicit OutcomeSampler(const Eigen::Ref<const Eigen::VectorXd>& probabilities);

  int draw(double u) const;
  int size() const { return static_cast<int>(cdf_.size()); }

 private:
  std::vector<double> cdf_;
};

/// Background clicks: p' = (p + b) / (1 + d b), residual' = residual / (1 + d b).
Eigen::VectorXd with_background(const Eigen::Ref<const Eigen::VectorXd>& cells, double background);

struct PreparedState {
  Basis basis = Basis::imaging;
  int character = 0;
};

enum class SourceMode { conjugate, uniform };

/// Everything a session needs, precomputed once and shared read-only.
struct ChannelModel {
  Apparatus apparatus;
  HexAlphabet alphabet;
  HexAlphabet eve_layout;  // the lattice over Eve's whole field of view
  NoiseModel noise;
  ProbabilityMap eve_map;    // alphabet -> eve_layout, ideal apparatus
  ProbabilityMap ideal_map;  // alphabet -> alphabet, noise-free
  ProbabilityMap bob_map;    // alphabet -> alphabet, with jitter
  SourceDistribution source;
  std::array<std::vector<OutcomeSampler>, 4> bob_samplers;  // [config][sent]
  std::array<std::vector<OutcomeSampler>, 4> eve_samplers;
  OutcomeSampler source_sampler;
  std::vector<int> eve_cell_char;  // alphabet index of each layout cell, -1 if none
  std::vector<int> resend_char;    // nearest alphabet character to each layout cell
  int center_char = 0;             // resent when Eve's photon misses her field of view

  int d() const { return alphabet.size(); }
  /// Matched-basis error of an ideal noise-free channel: 1 - sum_k P_k p(k|k).
  double matched_error(BasisConfig config) const;
};

/// Lattice cells covering the largest detection plane of the geometry.
HexAlphabet field_of_view_layout(const optics::Geometry<double>& geometry, double cell_radius);

ChannelModel build_channel_model(const Apparatus& apparatus, const HexAlphabet& alphabet,
                                 const NoiseModel& noise, SourceMode mode = SourceMode::conjugate);

}  // namespace sqkd
