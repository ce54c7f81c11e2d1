#include "sqkd/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace sqkd {

namespace {

double entropy_of_counts(const Eigen::VectorXi& counts) {
  const double total = counts.cast<double>().sum();
  if (total <= 0) return 0.0;
  double h = 0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      const double p = counts[i] / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

}  // namespace

PreparedState alice_prepare(Rng& rng, const OutcomeSampler& source) {
  const double u_basis = uniform01(rng);
  const double u_char = uniform01(rng);
  int k = source.draw(u_char);
  // Rounding can leave the last few ulps of the CDF below 1.
  if (k < 0) k = source.size() - 1;
  return {u_basis < 0.5 ? Basis::imaging : Basis::fourier, k};
}

PreparedState alice_prepare(Rng& rng, const ChannelModel& model) {
  return alice_prepare(rng, model.source_sampler);
}

int bob_measure(Rng& rng, const std::optional<PreparedState>& photon, Basis bob_basis,
                const ChannelModel& model) {
  const double u_loss = uniform01(rng);
  const double u_outcome = uniform01(rng);
  if (!photon || u_loss < model.noise.loss_prob) return -1;
  const BasisConfig config{photon->basis, bob_basis};
  return model.bob_samplers[config.index()][photon->character].draw(u_outcome);
}

std::vector<SiftedPair> sift(const std::vector<RoundRecord>& rounds) {
  std::vector<SiftedPair> out;
  for (const auto& r : rounds) {
    if (r.sifted()) out.push_back({r.index, r.alice_basis, r.sent, r.received});
  }
  return out;
}

ErrorEstimate estimate_error(const std::vector<SiftedPair>& pairs, double sample_fraction, int d,
                             std::uint64_t coin_seed) {
  if (!(sample_fraction > 0 && sample_fraction <= 1)) {
    throw std::invalid_argument("sample_fraction must lie in (0, 1]");
  }
  if (d < 1) throw std::invalid_argument("alphabet size must be positive");
  ErrorEstimate e;
  e.samples = Eigen::VectorXi::Zero(d);
  e.errors = Eigen::VectorXi::Zero(d);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (public_coin(coin_seed, stream::error_sample, i) < sample_fraction) {
      const auto& p = pairs[i];
      if (p.sent < 0 || p.sent >= d) throw std::out_of_range("sifted character outside the alphabet");
      ++e.samples[p.sent];
      e.errors[p.sent] += p.received != p.sent;
      ++e.sampled;
    } else {
      e.remaining.push_back(i);
    }
  }
  e.per_character = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
  for (int k = 0; k < d; ++k) {
    if (e.samples[k] > 0) e.per_character[k] = static_cast<double>(e.errors[k]) / e.samples[k];
  }
  if (e.sampled > 0) {
    e.average = static_cast<double>(e.errors.sum()) / e.sampled;
    e.std_error = std::sqrt(e.average * (1 - e.average) / e.sampled);
  }
  e.low_confidence = e.samples.minCoeff() < kMinSamplesPerCharacter;
  return e;
}

FlattenedKey flatten_key(const std::vector<int>& characters, const SourceDistribution& source,
                         std::uint64_t coin_seed) {
  const auto& p = source.probabilities();
  if (!(p.minCoeff() > 0)) throw std::invalid_argument("flattening needs every P_k > 0");
  FlattenedKey out;
  out.keep_probability_min = p.minCoeff();
  for (std::size_t i = 0; i < characters.size(); ++i) {
    const int k = characters[i];
    if (k < 0 || k >= source.size()) throw std::out_of_range("key character outside the alphabet");
    if (public_coin(coin_seed, stream::flatten, i) < out.keep_probability_min / p[k]) {
      out.kept.push_back(i);
      out.key.push_back(k);
    }
  }
  return out;
}

SessionResult run_session(const ChannelModel& model, const AdversarySpec& adversary_spec,
                          const SessionParams& params) {
  if (!(params.sample_fraction > 0 && params.sample_fraction <= 1)) {
    throw std::invalid_argument("sample_fraction must lie in (0, 1]");
  }
  const Adversary adversary(adversary_spec, model);
  const int d = model.d();
  const int threads = params.threads > 0
                          ? params.threads
                          : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));

  auto simulate = [&](std::uint64_t index) {
    Rng rng = substream(params.seed, stream::rounds, index);
    RoundRecord r;
    r.index = index;
    const PreparedState prepared = alice_prepare(rng, model);
    r.alice_basis = prepared.basis;
    r.sent = prepared.character;
    r.bob_basis = uniform01(rng) < 0.5 ? Basis::imaging : Basis::fourier;
    const EveOutcome eve = adversary.attack(rng, prepared);
    r.eve = eve.action;
    r.received = bob_measure(rng, eve.forwarded ? std::optional(eve.state) : std::nullopt,
                             r.bob_basis, model);
    return r;
  };

  SessionResult result;
  SessionStats& s = result.stats;
  s.rounds = params.rounds;
  for (int c = 0; c < 2; ++c) {
    s.config_pairs[c] = Eigen::VectorXi::Zero(d);
    s.config_errors[c] = Eigen::VectorXi::Zero(d);
  }
  s.sifted_histogram = Eigen::VectorXi::Zero(d);
  Eigen::VectorXi eve_records = Eigen::VectorXi::Zero(d);
  std::uint64_t eve_matched = 0;
  std::vector<SiftedPair> pairs;

  constexpr std::uint64_t kBlock = 1 << 18;
  constexpr std::uint64_t kBatch = 4096;
  std::vector<RoundRecord> block;
  for (std::uint64_t start = 0; start < params.rounds; start += kBlock) {
    const std::uint64_t n = std::min(kBlock, params.rounds - start);
    block.assign(n, RoundRecord{});
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
      for (std::uint64_t b; (b = next.fetch_add(kBatch)) < n;) {
        for (std::uint64_t i = b; i < std::min(n, b + kBatch); ++i) block[i] = simulate(start + i);
      }
    };
    std::vector<std::thread> pool;
    const int workers = static_cast<int>(std::min<std::uint64_t>(threads, (n + kBatch - 1) / kBatch));
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const RoundRecord& r : block) {
      s.attacked += r.eve.kind != EveActionKind::none;
      s.dropped += r.eve.kind == EveActionKind::dropped;
      if (!r.detected()) continue;
      ++s.detected;
      if (!r.sifted()) continue;
      ++s.sifted;
      const int c = r.alice_basis == Basis::fourier;
      ++s.config_pairs[c][r.sent];
      s.config_errors[c][r.sent] += r.received != r.sent;
      ++s.sifted_histogram[r.sent];
      if (r.eve.kind == EveActionKind::measured && r.eve.basis == r.alice_basis) {
        ++eve_matched;
        ++eve_records[r.eve.resent];
      }
      pairs.push_back({r.index, r.alice_basis, r.sent, r.received});
    }
    if (params.keep_log) result.log.insert(result.log.end(), block.begin(), block.end());
  }

  s.sifted_fraction = s.detected ? static_cast<double>(s.sifted) / s.detected : 0.0;
  s.loss_rate = s.rounds ? 1.0 - static_cast<double>(s.detected) / s.rounds : 0.0;
  const Eigen::VectorXi pairs_k = s.config_pairs[0] + s.config_pairs[1];
  const Eigen::VectorXi errors_k = s.config_errors[0] + s.config_errors[1];
  s.sifted_error = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
  for (int k = 0; k < d; ++k) {
    if (pairs_k[k] > 0) s.sifted_error[k] = static_cast<double>(errors_k[k]) / pairs_k[k];
  }
  if (s.sifted > 0) {
    s.sifted_average_error = static_cast<double>(errors_k.sum()) / s.sifted;
    s.sifted_std_error = std::sqrt(s.sifted_average_error * (1 - s.sifted_average_error) / s.sifted);
    s.eve_information = static_cast<double>(eve_matched) / s.sifted * entropy_of_counts(eve_records);
  }
  s.sifted_entropy = entropy_of_counts(s.sifted_histogram);
  {
    const auto& p = model.source.probabilities();
    for (Eigen::Index k = 0; k < p.size(); ++k)
      if (p[k] > 0) s.source_entropy -= p[k] * std::log2(p[k]);
  }

  s.estimate = estimate_error(pairs, params.sample_fraction, d, params.seed);
  for (std::size_t i : s.estimate.remaining) {
    result.alice_key.push_back(pairs[i].sent);
    result.bob_key.push_back(pairs[i].received);
  }
  s.key_length = result.alice_key.size();
  const FlattenedKey flat = flatten_key(result.alice_key, model.source, params.seed);
  result.alice_flat = flat.key;
  for (std::size_t i : flat.kept) result.bob_flat.push_back(result.bob_key[i]);
  s.flattened_length = flat.key.size();
  return result;
}

void write_round_log(std::ostream& out, const std::vector<RoundRecord>& log, const ChannelModel& model) {
  out << "round,alice_basis,bob_basis,sent,received,eve_action,eve_basis,eve_outcome,eve_resent\n";
  for (const auto& r : log) {
    out << r.index << ',' << basis_symbol(r.alice_basis) << ',' << basis_symbol(r.bob_basis) << ','
        << model.alphabet.label(r.sent) << ',';
    if (r.detected()) out << model.alphabet.label(r.received);
    out << ',';
    switch (r.eve.kind) {
      case EveActionKind::none: out << "none,,,"; break;
      case EveActionKind::measured:
      case EveActionKind::dropped:
        out << (r.eve.kind == EveActionKind::dropped ? "dropped," : "measured,")
            << basis_symbol(r.eve.basis) << ',';
        if (r.eve.outcome >= 0) out << model.eve_layout.label(r.eve.outcome);
        out << ',';
        if (r.eve.resent >= 0) out << model.alphabet.label(r.eve.resent);
        break;
    }
    out << '\n';
  }
}

}  // namespace sqkd
