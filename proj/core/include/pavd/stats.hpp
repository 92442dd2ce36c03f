#pragma once

/**
 * Statistical utilities shared by the experiment layer and its tests:
 * goodness-of-fit and homogeneity chi-square tests with tail pooling,
 * Wilson score intervals, Spearman rank correlation, quantiles, and
 * least-squares fitting.  Distribution functions come from boost::math.
 */

#include <cstdint>
#include <utility>
#include <vector>

namespace pavd {

/// Survival function of the chi-square distribution.
double chi_square_sf(double statistic, double dof);

/// Two-sided p-value of Student's t.
double student_t_two_sided_p(double t, double dof);

struct GofResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
  int cells_used = 0;    ///< cells after pooling
  int cells_pooled = 0;  ///< original cells merged away
};

/// Pearson chi-square goodness of fit of observed counts against expected
/// counts (same length, expected summing to the observed total).  Adjacent
/// cells are pooled from the tail end until every expected count is at least
/// `min_expected`.  With fewer than two cells left the test is vacuous and
/// p = 1 is returned.
GofResult chi_square_gof(const std::vector<std::int64_t>& observed,
                         const std::vector<double>& expected,
                         double min_expected = 5.0);

/// Pearson chi-square homogeneity test of two samples over aligned cells.
/// Cells whose pooled expected count falls below `min_expected` are merged
/// rightward before the statistic is formed.
GofResult chi_square_two_sample(const std::vector<std::int64_t>& a,
                                const std::vector<std::int64_t>& b,
                                double min_expected = 5.0);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion at confidence z
/// (default 95%).
Interval wilson_interval(std::int64_t successes, std::int64_t trials,
                         double z = 1.959963984540054);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;  ///< two-sided, t approximation
  std::size_t n = 0;
};

/// Spearman rank correlation with average ranks for ties and the usual
/// t-distributed significance approximation (requires n >= 4 for a
/// non-vacuous p-value; smaller inputs return p = 1).
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Linear-interpolated quantile (R type 7) of an unsorted sample.
double quantile(std::vector<double> sample, double q);

/// Difference between the `hi` and `lo` quantiles (default the 10%-90%
/// spread used as the tightness yardstick).
double quantile_spread(const std::vector<double>& sample, double lo = 0.1,
                       double hi = 0.9);

double mean(const std::vector<double>& sample);
/// Unbiased (n-1) standard deviation; 0 for samples of size < 2.
double stddev(const std::vector<double>& sample);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least-squares line through (x, y).
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pavd
