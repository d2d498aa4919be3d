#pragma once

#include <stdexcept>

namespace crm::stats {

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
[[nodiscard]] double incomplete_beta(double a, double b, double x);
// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
[[nodiscard]] double gamma_p(double a, double x);
[[nodiscard]] double gamma_q(double a, double x);

[[nodiscard]] double t_cdf(double t, double df);
[[nodiscard]] double t_two_sided_p(double t, double df);
[[nodiscard]] double t_quantile(double p, double df);
[[nodiscard]] double f_sf(double f, double df1, double df2);
[[nodiscard]] double chi2_sf(double x, double df);

}  // namespace crm::stats
