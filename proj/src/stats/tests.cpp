#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "crm/random.hpp"
#include "crm/stats/tests.hpp"

namespace crm::stats {

double mean_of(std::span<const double> v) {
  if (v.empty()) throw StatsError("mean of an empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
  if (v.size() < 2) throw StatsError("standard deviation needs n >= 2");
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

TTestResult one_sample_t(double mean, double sd, int n, double mu) {
  if (n < 2) throw StatsError("t-test needs n >= 2");
  if (!(sd > 0.0)) throw StatsError("t-test undefined for zero variance");
  TTestResult r;
  r.mean = mean;
  r.sd = sd;
  r.df = n - 1;
  const double se = sd / std::sqrt(static_cast<double>(n));
  r.t = (mean - mu) / se;
  r.p = t_two_sided_p(r.t, r.df);
  const double q = t_quantile(0.975, r.df);
  r.ci_low = mean - q * se;
  r.ci_high = mean + q * se;
  return r;
}

TTestResult one_sample_t(std::span<const double> values, double mu) {
  if (values.size() < 2) throw StatsError("t-test needs n >= 2");
  return one_sample_t(mean_of(values), sd_of(values), static_cast<int>(values.size()), mu);
}

TTestResult paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StatsError("paired samples differ in length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  if (d.size() >= 2 && std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) {
    TTestResult r;
    r.df = static_cast<double>(d.size() - 1);
    return r;
  }
  return one_sample_t(d, 0.0);
}

IccResult icc_2k(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size();
  if (n < 2) throw StatsError("ICC needs at least two items");
  const std::size_t k = x[0].size();
  if (k < 2) throw StatsError("ICC needs at least two raters");
  double grand = 0.0;
  std::vector<double> row(n, 0.0), col(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != k) throw StatsError("ratings matrix has missing cells");
    for (std::size_t j = 0; j < k; ++j) {
      row[i] += x[i][j] / k;
      col[j] += x[i][j] / n;
      grand += x[i][j] / (n * k);
    }
  }
  double ss_total = 0.0, ss_rows = 0.0, ss_cols = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) ss_total += (x[i][j] - grand) * (x[i][j] - grand);
  for (double r : row) ss_rows += k * (r - grand) * (r - grand);
  for (double c : col) ss_cols += n * (c - grand) * (c - grand);
  if (!(ss_total > 0.0)) throw StatsError("ICC undefined: ratings have zero variance");
  const double ss_err = std::max(0.0, ss_total - ss_rows - ss_cols);
  IccResult r;
  r.ms_rows = ss_rows / static_cast<double>(n - 1);
  r.ms_cols = ss_cols / static_cast<double>(k - 1);
  r.ms_error = ss_err / static_cast<double>((n - 1) * (k - 1));
  const double denom = r.ms_rows + (r.ms_cols - r.ms_error) / static_cast<double>(n);
  if (denom == 0.0) throw StatsError("ICC undefined: zero denominator");
  r.icc = (r.ms_rows - r.ms_error) / denom;
  return r;
}

NarsScore nars_score(std::span<const int> items) {
  if (items.size() != kNarsItems) throw StatsError("NARS needs exactly 14 item responses");
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] < 1 || items[i] > 5) {
      throw StatsError("NARS item " + std::to_string(i + 1) + " outside 1..5");
    }
  }
  NarsScore s;
  for (int i = 0; i < 6; ++i) s.s1 += items[i];
  for (int i = 6; i < 11; ++i) s.s2 += items[i];
  for (int i = 11; i < 14; ++i) s.s3 += 6 - items[i];
  return s;
}

BootstrapResult bootstrap_feedback_duration(double p_correct, int n_trials, double correct_s, double incorrect_s,
                                            int reps, std::uint64_t seed, unsigned threads) {
  if (!(p_correct >= 0.0 && p_correct <= 1.0)) throw StatsError("p_correct must lie in [0, 1]");
  if (n_trials < 1) throw StatsError("n_trials must be >= 1");
  if (reps < 1) throw StatsError("reps must be >= 1");
  std::vector<double> totals(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int r = next++; r < reps; r = next++) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      std::bernoulli_distribution correct(p_correct);
      double total = 0.0;
      for (int i = 0; i < n_trials; ++i) total += correct(rng) ? correct_s : incorrect_s;
      totals[static_cast<std::size_t>(r)] = total;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::max(1u, threads); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  BootstrapResult out;
  out.reps = reps;
  out.mean_min = mean_of(totals) / 60.0;
  out.sd_s = reps > 1 ? sd_of(totals) : 0.0;
  return out;
}

std::string to_string(Behavior b) {
  switch (b) {
    case Behavior::smiling: return "smiling";
    case Behavior::laughing: return "laughing";
    case Behavior::frowning: return "frowning";
    case Behavior::grimacing: return "grimacing";
  }
  return "?";
}

Behavior parse_behavior(const std::string& s) {
  for (auto b : kBehaviors)
    if (to_string(b) == s) return b;
  throw StatsError("unknown behavior '" + s + "'");
}

std::vector<BackchannelRecord> parse_backchannel_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "coder,interface,behavior,segment") {
    throw StatsError("backchannel table must start with coder,interface,behavior,segment");
  }
  std::vector<BackchannelRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) f.push_back(field);
    if (f.size() != 4) throw StatsError("backchannel line " + std::to_string(line_no) + " needs 4 fields");
    out.push_back({f[0], f[1], parse_behavior(f[2]), f[3]});
  }
  return out;
}

int BackchannelTally::count(const std::string& coder, const std::string& interface, Behavior b) const {
  const auto it = counts.find({coder, interface, b});
  return it == counts.end() ? 0 : it->second;
}

BackchannelTally backchannel_tally(std::span<const BackchannelRecord> records) {
  BackchannelTally t;
  for (const auto& r : records) {
    for (auto b : kBehaviors) t.counts.try_emplace({r.coder, r.interface, b}, 0);
    ++t.counts[{r.coder, r.interface, r.behavior}];
  }
  return t;
}

std::vector<std::vector<double>> rating_matrix(std::span<const BackchannelRecord> records, Behavior behavior) {
  std::set<std::pair<std::string, std::string>> items;
  std::set<std::string> coders;
  for (const auto& r : records) {
    items.insert({r.interface, r.segment});
    coders.insert(r.coder);
  }
  const std::vector<std::pair<std::string, std::string>> item_list(items.begin(), items.end());
  const std::vector<std::string> coder_list(coders.begin(), coders.end());
  std::vector<std::vector<double>> m(item_list.size(), std::vector<double>(coder_list.size(), 0.0));
  for (const auto& r : records) {
    if (r.behavior != behavior) continue;
    const auto i = std::lower_bound(item_list.begin(), item_list.end(), std::pair{r.interface, r.segment}) -
                   item_list.begin();
    const auto j = std::lower_bound(coder_list.begin(), coder_list.end(), r.coder) - coder_list.begin();
    m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += 1.0;
  }
  return m;
}

std::string tally_to_csv(const BackchannelTally& tally) {
  std::ostringstream out;
  out << "coder,interface,behavior,count\n";
  for (const auto& [key, n] : tally.counts) {
    out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << to_string(std::get<2>(key)) << ',' << n << '\n';
  }
  return out.str();
}

}  // namespace crm::stats
