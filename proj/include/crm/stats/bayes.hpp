#pragma once

#include <string>

namespace crm::stats {

enum class EvidenceStrength { anecdotal, moderate, strong, very_strong };
enum class EvidenceDirection { none, alternative, null };

struct BayesFactor {
  double bf10 = 1.0;
  [[nodiscard]] double bf01() const { return 1.0 / bf10; }
  [[nodiscard]] EvidenceStrength strength() const;
  [[nodiscard]] EvidenceDirection direction() const;
  /// e.g. "moderate evidence for null"
  [[nodiscard]] std::string label() const;
  static constexpr const char* method = "BIC approximation";
};

/// bf10 = exp((bic_null - bic_alt) / 2).
[[nodiscard]] BayesFactor bic_bayes_factor(double bic_null, double bic_alt);

/// BIC approximation for one effect of a repeated-measures design:
/// delta BIC = N ln(1 - partial eta^2) + df_effect ln N, N = subjects x df_effect.
[[nodiscard]] BayesFactor rm_effect_bayes_factor(double ss_effect, double ss_error, double df_effect,
                                                 int subjects);

}  // namespace crm::stats
