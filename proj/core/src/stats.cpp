#include "pavd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace pavd {

double chi_square_sf(double statistic, double dof) {
  if (dof <= 0.0) return 1.0;
  if (statistic <= 0.0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

double student_t_two_sided_p(double t, double dof) {
  if (dof <= 0.0) return 1.0;
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

namespace {

/// Pools adjacent cells from the right until every expected count reaches
/// `min_expected`; the leftmost cell absorbs any unpoolable remainder.
void pool_cells(std::vector<double>& expected, std::vector<std::int64_t>& obs_a,
                std::vector<std::int64_t>* obs_b, double min_expected,
                int* pooled_away) {
  *pooled_away = 0;
  std::size_t i = expected.size();
  while (i-- > 1) {
    if (expected[i] < min_expected) {
      expected[i - 1] += expected[i];
      obs_a[i - 1] += obs_a[i];
      if (obs_b) (*obs_b)[i - 1] += (*obs_b)[i];
      expected.erase(expected.begin() + static_cast<std::ptrdiff_t>(i));
      obs_a.erase(obs_a.begin() + static_cast<std::ptrdiff_t>(i));
      if (obs_b) obs_b->erase(obs_b->begin() + static_cast<std::ptrdiff_t>(i));
      ++*pooled_away;
    }
  }
  // The first cell may still be deficient; merge it into its neighbour.
  while (expected.size() > 1 && expected.front() < min_expected) {
    expected[1] += expected[0];
    obs_a[1] += obs_a[0];
    if (obs_b) (*obs_b)[1] += (*obs_b)[0];
    expected.erase(expected.begin());
    obs_a.erase(obs_a.begin());
    if (obs_b) obs_b->erase(obs_b->begin());
    ++*pooled_away;
  }
}

}  // namespace

GofResult chi_square_gof(const std::vector<std::int64_t>& observed,
                         const std::vector<double>& expected,
                         double min_expected) {
  if (observed.size() != expected.size()) {
    throw std::invalid_argument("chi_square_gof: size mismatch");
  }
  std::vector<double> exp = expected;
  std::vector<std::int64_t> obs = observed;
  GofResult res;
  pool_cells(exp, obs, nullptr, min_expected, &res.cells_pooled);
  res.cells_used = static_cast<int>(exp.size());
  if (exp.size() < 2) return res;  // vacuous: p = 1
  double stat = 0.0;
  for (std::size_t i = 0; i < exp.size(); ++i) {
    const double diff = static_cast<double>(obs[i]) - exp[i];
    stat += diff * diff / exp[i];
  }
  res.statistic = stat;
  res.dof = static_cast<int>(exp.size()) - 1;
  res.p_value = chi_square_sf(stat, res.dof);
  return res;
}

GofResult chi_square_two_sample(const std::vector<std::int64_t>& a,
                                const std::vector<std::int64_t>& b,
                                double min_expected) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("chi_square_two_sample: size mismatch");
  }
  const double na = static_cast<double>(std::accumulate(a.begin(), a.end(), std::int64_t{0}));
  const double nb = static_cast<double>(std::accumulate(b.begin(), b.end(), std::int64_t{0}));
  GofResult res;
  if (na == 0.0 || nb == 0.0) return res;

  // Pool on combined expected-under-homogeneity counts.
  std::vector<double> combined(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    combined[i] = static_cast<double>(a[i] + b[i]);
  }
  std::vector<std::int64_t> oa = a, ob = b;
  pool_cells(combined, oa, &ob, min_expected, &res.cells_pooled);
  res.cells_used = static_cast<int>(combined.size());
  if (combined.size() < 2) return res;

  const double total = na + nb;
  double stat = 0.0;
  for (std::size_t i = 0; i < combined.size(); ++i) {
    const double ea = combined[i] * na / total;
    const double eb = combined[i] * nb / total;
    const double da = static_cast<double>(oa[i]) - ea;
    const double db = static_cast<double>(ob[i]) - eb;
    stat += da * da / ea + db * db / eb;
  }
  res.statistic = stat;
  res.dof = static_cast<int>(combined.size()) - 1;
  res.p_value = chi_square_sf(stat, res.dof);
  return res;
}

Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = p + z2 / (2.0 * n);
  const double margin = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  // At the extremes the closed form telescopes to exactly 0 (resp. 1); pin
  // those values so rounding noise cannot exclude the observed frequency.
  return {successes == 0 ? 0.0 : std::max(0.0, (centre - margin) / denom),
          successes == trials ? 1.0 : std::min(1.0, (centre + margin) / denom)};
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman: size mismatch");
  }
  SpearmanResult res;
  res.n = x.size();
  if (x.size() < 4) return res;  // p-value vacuous below 4 points

  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return res;  // a constant margin: no trend
  double rho = sxy / std::sqrt(sxx * syy);
  rho = std::clamp(rho, -1.0, 1.0);
  res.rho = rho;
  const double n = static_cast<double>(rx.size());
  if (std::abs(rho) >= 1.0) {
    res.p_value = 0.0;
    return res;
  }
  const double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
  res.p_value = student_t_two_sided_p(t, n - 2.0);
  return res;
}

double quantile(std::vector<double> sample, double q) {
  if (sample.empty()) throw std::invalid_argument("quantile of empty sample");
  q = std::clamp(q, 0.0, 1.0);
  std::sort(sample.begin(), sample.end());
  const double h = (static_cast<double>(sample.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sample.size()) return sample.back();
  const double frac = h - std::floor(h);
  return sample[lo] + frac * (sample[lo + 1] - sample[lo]);
}

double quantile_spread(const std::vector<double>& sample, double lo, double hi) {
  std::vector<double> copy = sample;
  std::sort(copy.begin(), copy.end());
  const auto at = [&](double q) {
    const double h = (static_cast<double>(copy.size()) - 1.0) * q;
    const auto k = static_cast<std::size_t>(std::floor(h));
    if (k + 1 >= copy.size()) return copy.back();
    return copy[k] + (h - std::floor(h)) * (copy[k + 1] - copy[k]);
  };
  return at(hi) - at(lo);
}

double mean(const std::vector<double>& sample) {
  if (sample.empty()) return 0.0;
  return std::accumulate(sample.begin(), sample.end(), 0.0) /
         static_cast<double>(sample.size());
}

double stddev(const std::vector<double>& sample) {
  if (sample.size() < 2) return 0.0;
  const double m = mean(sample);
  double ss = 0.0;
  for (double v : sample) ss += (v - m) * (v - m);
  return std::sqrt(ss / (static_cast<double>(sample.size()) - 1.0));
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_line needs >= 2 aligned points");
  }
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate x");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace pavd
