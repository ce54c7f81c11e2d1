#pragma once

#include "sqkd/adversary.hpp"
#include "sqkd/channel.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

namespace sqkd {

struct RoundRecord {
  std::uint64_t index = 0;
  Basis alice_basis = Basis::imaging;
  Basis bob_basis = Basis::imaging;
  int sent = 0;
  int received = -1;  // -1: no detection
  EveAction eve;

  bool detected() const { return received >= 0; }
  bool sifted() const { return detected() && alice_basis == bob_basis; }
};

/// Two draws: basis, then character.
PreparedState alice_prepare(Rng& rng, const OutcomeSampler& source);
PreparedState alice_prepare(Rng& rng, const ChannelModel& model);

/// Two draws: loss, then outcome.  `photon` is the state reaching Bob,
/// std::nullopt if Eve dropped it.
int bob_measure(Rng& rng, const std::optional<PreparedState>& photon, Basis bob_basis,
                const ChannelModel& model);

struct SiftedPair {
  std::uint64_t round = 0;
  Basis basis = Basis::imaging;
  int sent = 0;
  int received = 0;
};

std::vector<SiftedPair> sift(const std::vector<RoundRecord>& rounds);

struct ErrorEstimate {
  Eigen::VectorXd per_character;  // D_k, NaN where no sample
  Eigen::VectorXi samples;        // sampled pairs per sent character
  Eigen::VectorXi errors;
  std::int64_t sampled = 0;
  double average = 0.0;  // weighted by empirical P_k, i.e. errors / sampled
  double std_error = 0.0;
  bool low_confidence = false;  // some character had fewer than 30 samples
  std::vector<std::size_t> remaining;  // indices of pairs kept as key material
};

inline constexpr int kMinSamplesPerCharacter = 30;

/// Public-coin sampling: pair i is sampled when coin(i) < sample_fraction.
ErrorEstimate estimate_error(const std::vector<SiftedPair>& pairs, double sample_fraction, int d,
                             std::uint64_t coin_seed);

struct FlattenedKey {
  std::vector<std::size_t> kept;  // positions in the input
  std::vector<int> key;
  double keep_probability_min = 0.0;  // min_j P_j
};

/// Keeps character k with probability min_j P_j / P_k using a public coin
/// tape indexed by position.
FlattenedKey flatten_key(const std::vector<int>& characters, const SourceDistribution& source,
                         std::uint64_t coin_seed);

struct SessionParams {
  std::uint64_t rounds = 100000;
  std::uint64_t seed = 1;
  double sample_fraction = 0.1;
  bool keep_log = false;
  int threads = 0;  // 0: hardware concurrency
};

struct SessionStats {
  std::uint64_t rounds = 0;
  std::uint64_t detected = 0;
  std::uint64_t sifted = 0;
  std::uint64_t attacked = 0;
  std::uint64_t dropped = 0;
  double sifted_fraction = 0.0;  // sifted / detected
  double loss_rate = 0.0;        // 1 - detected / rounds
  ErrorEstimate estimate;        // from the public sample
  // Over the whole sifted key, split by matched configuration (II, FF).
  std::array<Eigen::VectorXi, 2> config_pairs;
  std::array<Eigen::VectorXi, 2> config_errors;
  Eigen::VectorXd sifted_error;  // per character, both configurations
  double sifted_average_error = 0.0;
  double sifted_std_error = 0.0;
  Eigen::VectorXi sifted_histogram;  // by sent character
  double eve_information = 0.0;      // bits per sifted photon
  std::uint64_t key_length = 0;
  std::uint64_t flattened_length = 0;
  double source_entropy = 0.0;
  double sifted_entropy = 0.0;  // empirical entropy of the sifted characters
};

struct SessionResult {
  SessionStats stats;
  std::vector<RoundRecord> log;  // only with keep_log
  std::vector<int> alice_key;    // after removing the error sample
  std::vector<int> bob_key;
  std::vector<int> alice_flat;
  std::vector<int> bob_flat;
};

SessionResult run_session(const ChannelModel& model, const AdversarySpec& adversary,
                          const SessionParams& params);

/// CSV: round,alice_basis,bob_basis,sent,received,eve_action,eve_basis,eve_outcome,eve_resent
void write_round_log(std::ostream& out, const std::vector<RoundRecord>& log, const ChannelModel& model);

}  // namespace sqkd
