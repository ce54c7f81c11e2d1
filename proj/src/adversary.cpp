#include "sqkd/adversary.hpp"

#include <stdexcept>
#include <string>

namespace sqkd {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::intercept_resend: return "intercept_resend";
    case Strategy::suppress_on_evidence: return "suppress_on_evidence";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::none, Strategy::intercept_resend, Strategy::suppress_on_evidence}) {
    if (strategy_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown adversary strategy '" + std::string(name) + "'");
}

void AdversarySpec::validate() const {
  if (!(eta >= 0 && eta <= 1)) throw std::invalid_argument("eta must lie in [0, 1]");
  if (!(evidence_threshold >= 0 && evidence_threshold <= 1)) {
    throw std::invalid_argument("evidence_threshold must lie in [0, 1]");
  }
}

EvidenceTable::EvidenceTable(const ProbabilityMap& eve_map, double threshold) {
  const int cells = eve_map.cells.size();
  for (const Basis b : {Basis::imaging, Basis::fourier}) {
    const auto& conjugate = eve_map[{other_basis(b), b}];
    const auto& matched = eve_map[{b, b}];
    auto& f = flags_[b == Basis::fourier];
    f.assign(cells, 0);
    for (int c = 0; c < cells; ++c) {
      f[c] = conjugate.row(c).maxCoeff() >= threshold && matched.row(c).maxCoeff() < threshold;
    }
  }
}

int EvidenceTable::flagged(Basis eve_basis) const {
  int n = 0;
  for (char f : flags_[eve_basis == Basis::fourier]) n += f;
  return n;
}

namespace {

EveOutcome measure_and_resend(double u_basis, double u_outcome, const PreparedState& sent,
                              const ChannelModel& model) {
  EveOutcome out;
  out.action.kind = EveActionKind::measured;
  out.action.basis = u_basis < 0.5 ? Basis::imaging : Basis::fourier;
  const BasisConfig config{sent.basis, out.action.basis};
  out.action.outcome = model.eve_samplers[config.index()][sent.character].draw(u_outcome);
  out.action.resent =
      out.action.outcome >= 0 ? model.resend_char[out.action.outcome] : model.center_char;
  out.state = {out.action.basis, out.action.resent};
  return out;
}

}  // namespace

EveOutcome intercept_resend(Rng& rng, const PreparedState& sent, const ChannelModel& model) {
  const double u_basis = uniform01(rng);
  const double u_outcome = uniform01(rng);
  return measure_and_resend(u_basis, u_outcome, sent, model);
}

EveOutcome suppress_on_evidence(Rng& rng, const PreparedState& sent, const ChannelModel& model,
                                const EvidenceTable& evidence) {
  EveOutcome out = intercept_resend(rng, sent, model);
  if (evidence.reveals_wrong_basis(out.action.basis, out.action.outcome)) {
    out.action.kind = EveActionKind::dropped;
    out.action.resent = -1;
    out.forwarded = false;
  }
  return out;
}

Adversary::Adversary(AdversarySpec spec, const ChannelModel& model)
    : spec_(spec), model_(&model), evidence_(model.eve_map, spec.evidence_threshold) {
  spec_.validate();
}

EveOutcome Adversary::attack(Rng& rng, const PreparedState& sent) const {
  const double coin = uniform01(rng);
  if (spec_.strategy == Strategy::none || !(coin < spec_.eta)) {
    uniform01(rng);
    uniform01(rng);
    return {EveAction{}, true, sent};
  }
  if (spec_.strategy == Strategy::suppress_on_evidence) {
    return suppress_on_evidence(rng, sent, *model_, evidence_);
  }
  return intercept_resend(rng, sent, *model_);
}

void write_eve_records(std::ostream& out, const std::vector<EveRecord>& records,
                       const ChannelModel& model) {
  out << "round,alice_basis,sent,eve_basis,action,outcome,resent\n";
  for (const auto& r : records) {
    if (r.action.kind == EveActionKind::none) continue;
    out << r.round << ',' << basis_symbol(r.alice_basis) << ',' << model.alphabet.label(r.sent) << ','
        << basis_symbol(r.action.basis) << ','
        << (r.action.kind == EveActionKind::dropped ? "dropped" : "resent") << ',';
    if (r.action.outcome >= 0) out << model.eve_layout.label(r.action.outcome);
    out << ',';
    if (r.action.resent >= 0) out << model.alphabet.label(r.action.resent);
    out << '\n';
  }
}

}  // namespace sqkd
