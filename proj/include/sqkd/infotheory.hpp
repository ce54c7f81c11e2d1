#pragma once

#include "sqkd/alphabet.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string_view>
#include <vector>

namespace sqkd {

/// Bits; 0 log 0 = 0.
double shannon_entropy(const Eigen::Ref<const Eigen::VectorXd>& p);
double shannon_entropy(const SourceDistribution& p);

struct MutualInformation {
  // I^A + sum_k P_k (1-E_k) log(1-E_k)
  //     + sum_k sum_{j != k} (P_k E_k P_j / (1-P_k)) log(E_k P_j / (1-P_k))
  double formula = 0.0;
  double exact = 0.0;    // I(A;B) of the joint Q(k,j) implied by the same error model
};

/// Errors are redistributed over j != k with weight P_j / (1 - P_k).
/// Requires every E_k in [0, 1) and every P_k in (0, 1).
MutualInformation info_AB(const SourceDistribution& p, const Eigen::Ref<const Eigen::VectorXd>& errors);

/// (eta / 2) H(P).
double info_E(double eta, const SourceDistribution& p);

struct Fraction {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;

  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  friend bool operator==(const Fraction&, const Fraction&) = default;
};

/// (d - 1) / (2 d) in lowest terms; d >= 2.
Fraction uniform_intercept_error(std::int64_t d);

/// E_k(eta) = (eta / 2)(1 - P_k).
Eigen::VectorXd intercept_resend_errors(const SourceDistribution& p, double eta);

/// sum_k P_k E_k.
double average_error(const SourceDistribution& p, const Eigen::Ref<const Eigen::VectorXd>& errors);

struct Crossover {
  bool found = false;  // false: I^AB > I^E for every eta in the bracket
  double eta = 0.0;
  double average_error = 0.0;
  double information = 0.0;
};

/// Root of I^AB(E(eta)) - I^E(eta) over [lo, hi], scanned then bisected.
Crossover crossover(const SourceDistribution& p, double lo = 0.0, double hi = 1.0);

struct SecurityRow {
  double eta = 0.0;
  double average_error = 0.0;
  double info_AB = 0.0;
  double info_AB_exact = 0.0;
  double info_E = 0.0;
  bool secure = false;
};

std::vector<SecurityRow> security_sweep(const SourceDistribution& p, int points);

/// Error threshold for the cloning attack, quoted from the literature for
/// d = 37.  A reference value, not computed here.
inline constexpr double kCloningBoundError = 0.42;
inline constexpr std::string_view kCloningBoundCaveat =
    "external reference value for d = 37; the bound for this two-basis spatial scheme is expected "
    "to be slightly lower and is not quantified";

struct InfoReport {
  double I_A = 0.0;
  double I_AB = 0.0;
  double I_AB_exact = 0.0;
  double I_E = 0.0;
  double eta = 0.0;
  double average_error = 0.0;
  Crossover crossover;
  double cloning_bound_error = kCloningBoundError;
  std::string_view cloning_bound_caveat = kCloningBoundCaveat;
};

/// Report for measured per-character errors and an attack fraction eta.
InfoReport make_report(const SourceDistribution& p, const Eigen::Ref<const Eigen::VectorXd>& errors,
                       double eta);

/// Report for the analytic intercept-resend model at eta.
InfoReport make_report(const SourceDistribution& p, double eta);

}  // namespace sqkd
