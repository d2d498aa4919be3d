#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "crm/stats/distributions.hpp"

namespace crm::stats {

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;  // 95% CI of the mean (difference)
};

[[nodiscard]] TTestResult one_sample_t(double mean, double sd, int n, double mu);
[[nodiscard]] TTestResult one_sample_t(std::span<const double> values, double mu);
[[nodiscard]] TTestResult paired_t(std::span<const double> a, std::span<const double> b);

double mean_of(std::span<const double> v);
double sd_of(std::span<const double> v);  // n - 1 denominator

// ---------------------------------------------------------------------------
// Inter-rater reliability.

struct IccResult {
  double icc = 0.0;
  double ms_rows = 0.0;
  double ms_cols = 0.0;
  double ms_error = 0.0;
  static constexpr const char* model = "ICC(2,k): two-way random, absolute agreement, average of k raters";
};

// ratings[item][rater]
[[nodiscard]] IccResult icc_2k(const std::vector<std::vector<double>>& ratings);

// ---------------------------------------------------------------------------
// NARS questionnaire.

inline constexpr int kNarsItems = 14;

struct NarsScore {
  int s1 = 0;  // items 1-6
  int s2 = 0;  // items 7-11
  int s3 = 0;  // items 12-14, reverse-scored (6 - x)
};

inline constexpr std::array<double, 3> kNarsNeutralMeans{18.0, 15.0, 9.0};

[[nodiscard]] NarsScore nars_score(std::span<const int> items);

// ---------------------------------------------------------------------------
// Embodied-feedback duration bootstrap.

struct BootstrapResult {
  double mean_min = 0.0;
  double sd_s = 0.0;
  int reps = 0;
};

[[nodiscard]] BootstrapResult bootstrap_feedback_duration(double p_correct, int n_trials, double correct_s,
                                                          double incorrect_s, int reps, std::uint64_t seed,
                                                          unsigned threads = 1);

// ---------------------------------------------------------------------------
// Coded backchannels.

enum class Behavior { smiling, laughing, frowning, grimacing };
inline constexpr std::array<Behavior, 4> kBehaviors{Behavior::smiling, Behavior::laughing, Behavior::frowning,
                                                    Behavior::grimacing};
[[nodiscard]] std::string to_string(Behavior b);
[[nodiscard]] Behavior parse_behavior(const std::string& s);  // throws StatsError

struct BackchannelRecord {
  std::string coder;
  std::string interface;
  Behavior behavior = Behavior::smiling;
  std::string segment;
};

// Columns coder,interface,behavior,segment with a header line.
[[nodiscard]] std::vector<BackchannelRecord> parse_backchannel_csv(const std::string& csv);

struct BackchannelTally {
  // (coder, interface, behavior) -> count; every seen coder/interface pair
  // carries all four behaviors.
  std::map<std::tuple<std::string, std::string, Behavior>, int> counts;
  [[nodiscard]] int count(const std::string& coder, const std::string& interface, Behavior b) const;
};

[[nodiscard]] BackchannelTally backchannel_tally(std::span<const BackchannelRecord> records);

// Items are (interface, segment) pairs in sorted order, raters are coders in
// sorted order, values are counts of `behavior`.
[[nodiscard]] std::vector<std::vector<double>> rating_matrix(std::span<const BackchannelRecord> records,
                                                             Behavior behavior);

// coder,interface,behavior,count
[[nodiscard]] std::string tally_to_csv(const BackchannelTally& tally);

}  // namespace crm::stats
