#include <cmath>
#include <limits>

#include "crm/stats/bayes.hpp"
#include "crm/stats/distributions.hpp"

namespace crm::stats {

namespace {
// Keeps exp(ln 3) and friends on the stronger side of a threshold.
constexpr double kBoundarySlack = 1e-9;
}  // namespace

EvidenceStrength BayesFactor::strength() const {
  const double r = (bf10 >= 1.0 ? bf10 : 1.0 / bf10) * (1.0 + kBoundarySlack);
  if (r >= 30.0) return EvidenceStrength::very_strong;
  if (r >= 10.0) return EvidenceStrength::strong;
  if (r >= 3.0) return EvidenceStrength::moderate;
  return EvidenceStrength::anecdotal;
}

EvidenceDirection BayesFactor::direction() const {
  if (bf10 > 1.0) return EvidenceDirection::alternative;
  if (bf10 < 1.0) return EvidenceDirection::null;
  return EvidenceDirection::none;
}

std::string BayesFactor::label() const {
  static constexpr const char* names[] = {"anecdotal", "moderate", "strong", "very strong"};
  std::string out = names[static_cast<int>(strength())];
  out += " evidence";
  switch (direction()) {
    case EvidenceDirection::alternative: return out + " for alternative";
    case EvidenceDirection::null: return out + " for null";
    case EvidenceDirection::none: return out;
  }
  return out;
}

BayesFactor bic_bayes_factor(double bic_null, double bic_alt) {
  if (!std::isfinite(bic_null) || !std::isfinite(bic_alt)) throw StatsError("BIC values must be finite");
  return BayesFactor{std::exp((bic_null - bic_alt) / 2.0)};
}

BayesFactor rm_effect_bayes_factor(double ss_effect, double ss_error, double df_effect, int subjects) {
  const double n = subjects * df_effect;
  const double total = ss_effect + ss_error;
  if (!(total > 0.0)) return BayesFactor{std::pow(n, -df_effect / 2.0)};
  if (!(ss_error > 0.0)) return BayesFactor{std::numeric_limits<double>::infinity()};
  const double delta_bic = n * std::log(ss_error / total) + df_effect * std::log(n);
  return BayesFactor{std::exp(-delta_bic / 2.0)};
}

}  // namespace crm::stats
