#include "sqkd/infotheory.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sqkd {

namespace {

double xlog2x(double x) { return x > 0 ? x * std::log2(x) : 0.0; }

void check_errors(const SourceDistribution& p, const Eigen::Ref<const Eigen::VectorXd>& errors) {
  if (errors.size() != p.size()) throw std::invalid_argument("one error rate per character is required");
  for (Eigen::Index k = 0; k < errors.size(); ++k) {
    if (!(errors[k] >= 0 && errors[k] < 1)) {
      throw std::invalid_argument("error rates must lie in [0, 1); E_k = 1 makes the formula singular");
    }
    if (!(p[k] > 0 && p[k] < 1)) throw std::invalid_argument("info_AB needs every P_k in (0, 1)");
  }
}

double margin(const SourceDistribution& p, double eta) {
  return info_AB(p, intercept_resend_errors(p, eta)).formula - info_E(eta, p);
}

}  // namespace

double shannon_entropy(const Eigen::Ref<const Eigen::VectorXd>& p) {
  double h = 0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p[k] < 0) throw std::invalid_argument("probabilities must be non-negative");
    h -= xlog2x(p[k]);
  }
  return h;
}

double shannon_entropy(const SourceDistribution& p) { return shannon_entropy(p.probabilities()); }

MutualInformation info_AB(const SourceDistribution& p, const Eigen::Ref<const Eigen::VectorXd>& errors) {
  check_errors(p, errors);
  const int d = p.size();
  MutualInformation out;
  out.formula = shannon_entropy(p);
  for (int k = 0; k < d; ++k) {
    out.formula += p[k] * xlog2x(1 - errors[k]);
    if (errors[k] == 0) continue;
    for (int j = 0; j < d; ++j) {
      if (j == k) continue;
      const double x = errors[k] * p[j] / (1 - p[k]);
      out.formula += p[k] * xlog2x(x);
    }
  }

  Eigen::MatrixXd q(d, d);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j)
      q(k, j) = p[k] * (j == k ? 1 - errors[k] : errors[k] * p[j] / (1 - p[k]));
  const Eigen::VectorXd pb = q.colwise().sum().transpose();
  double mi = 0;
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j)
      if (q(k, j) > 0) mi += q(k, j) * std::log2(q(k, j) / (p[k] * pb[j]));
  out.exact = mi;
  return out;
}

double info_E(double eta, const SourceDistribution& p) {
  if (!(eta >= 0 && eta <= 1)) throw std::invalid_argument("eta must lie in [0, 1]");
  return eta / 2 * shannon_entropy(p);
}

Fraction uniform_intercept_error(std::int64_t d) {
  if (d < 2) throw std::invalid_argument("uniform_intercept_error needs d >= 2");
  const std::int64_t num = d - 1;
  const std::int64_t den = 2 * d;
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

Eigen::VectorXd intercept_resend_errors(const SourceDistribution& p, double eta) {
  if (!(eta >= 0 && eta <= 1)) throw std::invalid_argument("eta must lie in [0, 1]");
  return eta / 2 * (1 - p.probabilities().array());
}

double average_error(const SourceDistribution& p, const Eigen::Ref<const Eigen::VectorXd>& errors) {
  if (errors.size() != p.size()) throw std::invalid_argument("one error rate per character is required");
  return p.probabilities().dot(errors);
}

Crossover crossover(const SourceDistribution& p, double lo, double hi) {
  if (!(lo >= 0 && hi <= 1 && lo < hi)) throw std::invalid_argument("crossover bracket must satisfy 0 <= lo < hi <= 1");
  if (p.probabilities().maxCoeff() >= 1) throw std::invalid_argument("crossover needs a non-degenerate source");
  constexpr int kScan = 256;
  Crossover out;
  double a = lo;
  double fa = margin(p, a);
  for (int i = 1; i <= kScan; ++i) {
    double b = lo + (hi - lo) * i / kScan;
    const double fb = margin(p, b);
    if (fa == 0) {
      out.found = true;
      out.eta = a;
      break;
    }
    if ((fa > 0) != (fb > 0)) {
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = margin(p, m);
        if ((fm > 0) == (fa > 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      out.found = true;
      out.eta = 0.5 * (a + b);
      break;
    }
    a = b;
    fa = fb;
  }
  if (out.found) {
    out.average_error = average_error(p, intercept_resend_errors(p, out.eta));
    out.information = info_E(out.eta, p);
  }
  return out;
}

std::vector<SecurityRow> security_sweep(const SourceDistribution& p, int points) {
  if (points < 1) throw std::invalid_argument("a sweep needs at least one point");
  std::vector<SecurityRow> rows;
  for (int i = 0; i < points; ++i) {
    const double eta = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    const auto e = intercept_resend_errors(p, eta);
    const auto ab = info_AB(p, e);
    SecurityRow row{eta, average_error(p, e), ab.formula, ab.exact, info_E(eta, p), false};
    row.secure = row.info_AB > row.info_E;
    rows.push_back(row);
  }
  return rows;
}

InfoReport make_report(const SourceDistribution& p, const Eigen::Ref<const Eigen::VectorXd>& errors,
                       double eta) {
  const auto ab = info_AB(p, errors);
  InfoReport r;
  r.I_A = shannon_entropy(p);
  r.I_AB = ab.formula;
  r.I_AB_exact = ab.exact;
  r.I_E = info_E(eta, p);
  r.eta = eta;
  r.average_error = average_error(p, errors);
  r.crossover = crossover(p);
  return r;
}

InfoReport make_report(const SourceDistribution& p, double eta) {
  return make_report(p, intercept_resend_errors(p, eta), eta);
}

}  // namespace sqkd
