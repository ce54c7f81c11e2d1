#pragma once

#include "sqkd/channel.hpp"

#include <ostream>
#include <string_view>
#include <vector>

namespace sqkd {

enum class Strategy { none, intercept_resend, suppress_on_evidence };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct AdversarySpec {
  Strategy strategy = Strategy::none;
  double eta = 0.0;                  // probability that a round is attacked
  double evidence_threshold = 1e-4;  // used by suppress_on_evidence

  void validate() const;
};

enum class EveActionKind { none, measured, dropped };

struct EveAction {
  EveActionKind kind = EveActionKind::none;
  Basis basis = Basis::imaging;
  int outcome = -1;  // Eve's layout cell, -1 outside her field of view
  int resent = -1;   // alphabet index of the re-prepared character
};

struct EveOutcome {
  EveAction action;
  bool forwarded = true;  // false when the photon is dropped
  PreparedState state;    // what reaches Bob
};

/// Per (Eve basis, layout cell): does a click there reveal that her basis
/// differs from Alice's?  True when the conjugate probability is >= threshold
/// while no character lands there with probability >= threshold in the matched basis.
class EvidenceTable {
 public:
  EvidenceTable(const ProbabilityMap& eve_map, double threshold);

  bool reveals_wrong_basis(Basis eve_basis, int cell) const {
    return cell >= 0 && flags_[eve_basis == Basis::fourier][cell];
  }
  int flagged(Basis eve_basis) const;

 private:
  std::array<std::vector<char>, 2> flags_;
};

/// Two draws: Eve's basis, then her outcome.
EveOutcome intercept_resend(Rng& rng, const PreparedState& sent, const ChannelModel& model);

EveOutcome suppress_on_evidence(Rng& rng, const PreparedState& sent, const ChannelModel& model,
                                const EvidenceTable& evidence);

class Adversary {
 public:
  Adversary(AdversarySpec spec, const ChannelModel& model);

  const AdversarySpec& spec() const { return spec_; }
  /// Always consumes three draws (attack coin, basis, outcome).
  EveOutcome attack(Rng& rng, const PreparedState& sent) const;

 private:
  AdversarySpec spec_;
  const ChannelModel* model_;
  EvidenceTable evidence_;
};

struct EveRecord {
  std::uint64_t round = 0;
  Basis alice_basis = Basis::imaging;
  int sent = 0;
  EveAction action;
};

/// CSV: round,alice_basis,sent,eve_basis,action,outcome,resent
void write_eve_records(std::ostream& out, const std::vector<EveRecord>& records,
                       const ChannelModel& model);

}  // namespace sqkd
