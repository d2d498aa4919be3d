#pragma once

#include <span>
#include <string>
#include <vector>

#include "crm/stats/bayes.hpp"

namespace crm::stats {

/// Repeated-measures data: one row per subject, one column per cell. Cells
/// are ordered row-major over the factors, the last factor varying fastest.
struct RmDataset {
  std::vector<std::string> factor_names;
  std::vector<int> levels;
  std::vector<std::vector<double>> values;
  // Optional display names per factor level.
  std::vector<std::vector<std::string>> level_names;

  [[nodiscard]] int cells() const;
  [[nodiscard]] int subjects() const { return static_cast<int>(values.size()); }
};

struct SphericityTest {
  double w = 1.0;
  double chi2 = 0.0;
  double df = 0.0;
  double p = 1.0;
};

struct AnovaEffect {
  std::string name;  // factor names joined with '*'
  std::vector<int> factors;
  double ss_effect = 0.0;
  double ss_error = 0.0;
  double df_effect = 0.0;
  double df_error = 0.0;
  double f = 0.0;
  double p = 1.0;
  double partial_eta_squared = 0.0;
  double epsilon_gg = 1.0;
  double df_effect_gg = 0.0;
  double df_error_gg = 0.0;
  double p_gg = 1.0;
  /// Absent (w = 1, p = 1) for single-df effects; NaN when subjects - 1 is
  /// below the effect df.
  SphericityTest mauchly;
  /// Mauchly p < .05 or untestable: report the Greenhouse-Geisser row.
  bool corrected = false;
  BayesFactor bf;
};

inline constexpr double kSphericityAlpha = 0.05;

/// Every main effect and interaction, each tested against its own
/// subject-by-effect error term via orthonormal contrasts.
[[nodiscard]] std::vector<AnovaEffect> rm_anova(const RmDataset& data);

/// Greenhouse-Geisser estimate from a k x k covariance matrix of the raw
/// levels, via its double-centred form.
[[nodiscard]] double gg_epsilon(const std::vector<std::vector<double>>& covariance);

/// Orthonormal Helmert contrasts: (k-1) x k, rows orthogonal to the mean.
[[nodiscard]] std::vector<std::vector<double>> helmert_contrasts(int k);

/// effect,correction,df1,df2,F,p,partial_eta2,epsilon,mauchly_w,mauchly_p,bf10
[[nodiscard]] std::string anova_table_csv(std::span<const AnovaEffect> effects);

/// Builds the interface x voice x TMR dataset from a session metrics table
/// (participant,interface,tmr,delta_f0,delta_vtl,percent_correct,duration_min).
/// Throws StatsError on missing or duplicated cells.
[[nodiscard]] RmDataset rm_dataset_from_metrics_csv(const std::string& csv);

}  // namespace crm::stats
