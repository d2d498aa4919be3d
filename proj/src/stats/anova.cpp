#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "crm/stats/anova.hpp"
#include "crm/stats/distributions.hpp"

namespace crm::stats {
namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.size() * b.size(), std::vector<double>(a[0].size() * b[0].size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k)
        for (std::size_t l = 0; l < b[0].size(); ++l) out[i * b.size() + k][j * b[0].size() + l] = a[i][j] * b[k][l];
  return out;
}

double trace(const Matrix& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) t += m[i][i];
  return t;
}

// tr(m * m) for symmetric m.
double trace_of_square(const Matrix& m) {
  double t = 0.0;
  for (const auto& row : m)
    for (double v : row) t += v * v;
  return t;
}

double determinant(Matrix m) {
  const std::size_t n = m.size();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[pivot][c])) pivot = r;
    if (m[pivot][c] == 0.0) return 0.0;
    if (pivot != c) {
      std::swap(m[pivot], m[c]);
      det = -det;
    }
    det *= m[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return det;
}

SphericityTest mauchly(const Matrix& s, int subjects) {
  SphericityTest out;
  const double p = static_cast<double>(s.size());
  if (s.size() < 2) return out;
  if (subjects - 1 < static_cast<int>(s.size())) {
    // Singular sample covariance: the test is undefined.
    out.w = out.chi2 = out.p = std::numeric_limits<double>::quiet_NaN();
    out.df = p * (p + 1.0) / 2.0 - 1.0;
    return out;
  }
  const double tr = trace(s);
  if (!(tr > 0.0)) return out;
  out.w = std::clamp(determinant(s) / std::pow(tr / p, p), 0.0, 1.0);
  const double d = 1.0 - (2.0 * p * p + p + 2.0) / (6.0 * p * (subjects - 1));
  out.df = p * (p + 1.0) / 2.0 - 1.0;
  out.chi2 = out.w > 0.0 ? -(subjects - 1) * d * std::log(out.w) : std::numeric_limits<double>::infinity();
  out.p = std::isinf(out.chi2) ? 0.0 : chi2_sf(out.chi2, out.df);
  return out;
}

std::string effect_name(const RmDataset& d, const std::vector<int>& factors) {
  std::string name;
  for (int f : factors) {
    if (!name.empty()) name += '*';
    name += f < static_cast<int>(d.factor_names.size()) ? d.factor_names[f] : "F" + std::to_string(f + 1);
  }
  return name;
}

}  // namespace

int RmDataset::cells() const {
  return std::accumulate(levels.begin(), levels.end(), 1, std::multiplies<>());
}

std::vector<std::vector<double>> helmert_contrasts(int k) {
  if (k < 2) throw StatsError("a factor needs at least two levels");
  Matrix c(k - 1, std::vector<double>(k, 0.0));
  for (int j = 1; j < k; ++j) {
    const double norm = std::sqrt(static_cast<double>(j) * (j + 1));
    for (int i = 0; i < j; ++i) c[j - 1][i] = 1.0 / norm;
    c[j - 1][j] = -j / norm;
  }
  return c;
}

std::vector<AnovaEffect> rm_anova(const RmDataset& data) {
  if (data.levels.empty()) throw StatsError("no factors");
  for (int k : data.levels)
    if (k < 2) throw StatsError("every factor needs at least two levels");
  const int n = data.subjects();
  if (n < 3) throw StatsError("repeated-measures ANOVA needs at least 3 subjects");
  const int m = data.cells();
  double total_sq = 0.0;
  for (const auto& row : data.values) {
    if (static_cast<int>(row.size()) != m) throw StatsError("missing cells: every subject needs all cells");
    for (double v : row) {
      if (!std::isfinite(v)) throw StatsError("missing cells: non-finite value");
      total_sq += v * v;
    }
  }

  const int nf = static_cast<int>(data.levels.size());
  std::vector<AnovaEffect> effects;
  // Subsets in order of size, then lexicographically: mains, two-way, ...
  std::vector<std::vector<int>> subsets;
  for (int mask = 1; mask < (1 << nf); ++mask) {
    std::vector<int> s;
    for (int f = 0; f < nf; ++f)
      if (mask & (1 << f)) s.push_back(f);
    subsets.push_back(s);
  }
  std::stable_sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });

  for (const auto& subset : subsets) {
    Matrix c{{1.0}};
    for (int f = 0; f < nf; ++f) {
      const int k = data.levels[f];
      const bool in = std::find(subset.begin(), subset.end(), f) != subset.end();
      c = kronecker(c, in ? helmert_contrasts(k) : Matrix{std::vector<double>(k, 1.0 / std::sqrt(k))});
    }
    const std::size_t q = c.size();

    Matrix z(n, std::vector<double>(q, 0.0));
    std::vector<double> mean(q, 0.0);
    for (int i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < q; ++r) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += c[r][j] * data.values[i][j];
        z[i][r] = acc;
        mean[r] += acc / n;
      }
    }
    Matrix cov(q, std::vector<double>(q, 0.0));
    for (int i = 0; i < n; ++i)
      for (std::size_t r = 0; r < q; ++r)
        for (std::size_t s = 0; s < q; ++s) cov[r][s] += (z[i][r] - mean[r]) * (z[i][s] - mean[s]);

    AnovaEffect e;
    e.factors = subset;
    e.name = effect_name(data, subset);
    for (double v : mean) e.ss_effect += n * v * v;
    e.ss_error = trace(cov);
    for (auto& row : cov)
      for (double& v : row) v /= (n - 1);
    e.df_effect = static_cast<double>(q);
    e.df_error = static_cast<double>(q) * (n - 1);

    const double scale = std::max(e.ss_effect + e.ss_error, 1e-12 * total_sq + 1e-300);
    if (e.ss_effect <= 1e-14 * scale) {
      e.ss_effect = 0.0;
      e.f = 0.0;
      e.p = 1.0;
    } else if (e.ss_error <= 1e-14 * scale) {
      e.f = std::numeric_limits<double>::infinity();
      e.p = 0.0;
    } else {
      e.f = (e.ss_effect / e.df_effect) / (e.ss_error / e.df_error);
      e.p = f_sf(e.f, e.df_effect, e.df_error);
    }
    e.partial_eta_squared = e.ss_effect > 0.0 ? e.ss_effect / (e.ss_effect + e.ss_error) : 0.0;

    const double tr2 = trace_of_square(cov);
    e.epsilon_gg = q == 1 || !(tr2 > 0.0) ? 1.0 : std::pow(trace(cov), 2) / (static_cast<double>(q) * tr2);
    e.epsilon_gg = std::clamp(e.epsilon_gg, 1.0 / static_cast<double>(q), 1.0);
    e.df_effect_gg = e.df_effect * e.epsilon_gg;
    e.df_error_gg = e.df_error * e.epsilon_gg;
    e.p_gg = e.f == 0.0 ? 1.0 : std::isinf(e.f) ? 0.0 : f_sf(e.f, e.df_effect_gg, e.df_error_gg);
    e.mauchly = mauchly(cov, n);
    e.corrected = q > 1 && (std::isnan(e.mauchly.p) || e.mauchly.p < kSphericityAlpha);
    e.bf = rm_effect_bayes_factor(e.ss_effect, e.ss_error, e.df_effect, n);
    effects.push_back(std::move(e));
  }
  return effects;
}

double gg_epsilon(const std::vector<std::vector<double>>& s) {
  const std::size_t k = s.size();
  if (k < 2) throw StatsError("gg_epsilon needs at least two levels");
  for (const auto& row : s)
    if (row.size() != k) throw StatsError("covariance matrix must be square");
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (std::abs(s[i][j] - s[j][i]) > 1e-9 * (std::abs(s[i][j]) + std::abs(s[j][i]) + 1e-300)) {
        throw StatsError("covariance matrix must be symmetric");
      }
  std::vector<double> row_mean(k, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) row_mean[i] += s[i][j] / k;
    grand += row_mean[i] / k;
  }
  Matrix d(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) d[i][j] = s[i][j] - row_mean[i] - row_mean[j] + grand;
  const double tr = trace(d);
  const double tr2 = trace_of_square(d);
  if (!(tr > 0.0) || !(tr2 > 0.0)) throw StatsError("degenerate covariance matrix");
  return tr * tr / (static_cast<double>(k - 1) * tr2);
}

std::string anova_table_csv(std::span<const AnovaEffect> effects) {
  std::ostringstream out;
  out << "effect,correction,df1,df2,F,p,partial_eta2,epsilon,mauchly_w,mauchly_p,bf10\n";
  char buf[512];
  for (const auto& e : effects) {
    const bool gg = e.corrected;
    std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%.3f,%.3f,%.6g,%.3f,%.3f,%.4f,%.4g,%.4g\n", e.name.c_str(),
                  gg ? "Greenhouse-Geisser" : "None", gg ? e.df_effect_gg : e.df_effect,
                  gg ? e.df_error_gg : e.df_error, e.f, gg ? e.p_gg : e.p, e.partial_eta_squared, e.epsilon_gg,
                  e.mauchly.w, e.mauchly.p, e.bf.bf10);
    out << buf;
  }
  return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(field);
  return out;
}

}  // namespace

RmDataset rm_dataset_from_metrics_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw StatsError("empty metrics table");
  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw StatsError("metrics table lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_part = column("participant"), c_if = column("interface"), c_tmr = column("tmr"),
                    c_f0 = column("delta_f0"), c_vtl = column("delta_vtl"), c_pc = column("percent_correct");

  using Voice = std::pair<double, double>;
  std::map<std::string, std::map<std::tuple<std::string, Voice, double>, double>> by_subject;
  std::set<std::string> interfaces;
  std::set<Voice> voices;
  std::set<double> tmrs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < header.size()) throw StatsError("metrics line " + std::to_string(line_no) + " is short");
    try {
      const Voice v{std::stod(f[c_f0]), std::stod(f[c_vtl])};
      const double tmr = std::stod(f[c_tmr]);
      interfaces.insert(f[c_if]);
      voices.insert(v);
      tmrs.insert(tmr);
      auto [it, fresh] = by_subject[f[c_part]].emplace(std::tuple{f[c_if], v, tmr}, std::stod(f[c_pc]));
      if (!fresh) throw StatsError("duplicate cell on metrics line " + std::to_string(line_no));
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const StatsError*>(&e)) throw;
      throw StatsError("bad number on metrics line " + std::to_string(line_no));
    }
  }
  RmDataset d;
  d.factor_names = {"interface", "voice", "tmr"};
  d.levels = {static_cast<int>(interfaces.size()), static_cast<int>(voices.size()), static_cast<int>(tmrs.size())};
  d.level_names.resize(3);
  for (const auto& i : interfaces) d.level_names[0].push_back(i);
  for (const auto& [f0, vtl] : voices) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "F0 %g / VTL %g", f0, vtl);
    d.level_names[1].push_back(buf);
  }
  for (double t : tmrs) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g dB", t);
    d.level_names[2].push_back(buf);
  }
  for (const auto& [subject, cells] : by_subject) {
    std::vector<double> row;
    for (const auto& i : interfaces)
      for (const auto& v : voices)
        for (double t : tmrs) {
          const auto it = cells.find({i, v, t});
          if (it == cells.end()) throw StatsError("missing cells for participant " + subject);
          row.push_back(it->second);
        }
    d.values.push_back(std::move(row));
  }
  return d;
}

}  // namespace crm::stats
