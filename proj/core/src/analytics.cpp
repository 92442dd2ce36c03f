#include "pavd/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "pavd/stats.hpp"

namespace pavd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// mu_hat
// ---------------------------------------------------------------------------

MuHatResult mu_hat(const RateModel& m, double lambda, double tol,
                   std::int64_t term_cap) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw OutOfRangeError("mu_hat requires lambda >= 0");
  }
  MuHatResult res;

  const auto& jt = m.joint_tail();
  if (jt) {
    // Exact path: accumulate the pre-tail prefix, then close the remainder
    // in one formula.
    double sum = 0.0;
    double term = 1.0;
    std::int64_t k = 0;
    while (k < jt->start && term > 0.0) {
      const auto [b, d] = m.rates(k);
      term *= b / (b + d + lambda);
      sum += term;
      ++k;
    }
    res.terms_used = k;
    if (term == 0.0) {  // underflowed: the remainder is below 1e-300
      res.status = SeriesStatus::Finite;
      res.value = sum;
      return res;
    }
    const double beta = jt->b_slope;
    const double dbar = jt->d_value;
    if (beta == 0.0) {
      // Constant rates beyond the tail start: geometric remainder.
      const double bbar = jt->b_intercept;
      const double f = bbar / (bbar + dbar + lambda);
      if (f >= 1.0) {
        res.status = SeriesStatus::Divergent;
        res.value = kInf;
        res.tail_bound = kInf;
        return res;
      }
      res.status = SeriesStatus::Finite;
      res.value = sum + term * f / (1.0 - f);
    } else {
      // Affine births, constant deaths: write the factors as
      // (i+a)/(i+a+c) with a = b0/beta, c = (dbar+lambda)/beta.  The
      // remainder past K = start telescopes to term_K * (K+a)/(c-1).
      const double a = jt->b_intercept / beta;
      const double c = (dbar + lambda) / beta;
      if (c <= 1.0) {
        res.status = SeriesStatus::Divergent;
        res.value = kInf;
        res.tail_bound = kInf;
        return res;
      }
      res.status = SeriesStatus::Finite;
      res.value =
          sum + term * (static_cast<double>(jt->start) + a) / (c - 1.0);
    }
    if (!jt->exact) {
      // A geometrically decaying death rate was truncated; its effect on
      // every factor is below 1e-30 relative.
      res.tail_bound = 1e-25 * std::max(res.value, 1.0);
    }
    return res;
  }

  // Generic path for undeclared (custom) tails: accumulate with a geometric
  // stopping heuristic, then fall back to a power-law decay test.
  double sum = 0.0;
  double term = 1.0;
  std::vector<double> sample_logk, sample_logterm;
  std::int64_t next_sample = 64;
  for (std::int64_t k = 1; k <= term_cap; ++k) {
    const auto [b, d] = m.rates(k - 1);
    const double f = b / (b + d + lambda);
    term *= f;
    sum += term;
    res.terms_used = k;
    if (term == 0.0) {
      res.status = SeriesStatus::Finite;
      res.value = sum;
      return res;
    }
    if (k == next_sample) {
      if (f < 1.0) {
        const double tail = term * f / (1.0 - f);
        if (tail <= tol * std::max(sum, 1e-300)) {
          res.status = SeriesStatus::Finite;
          res.value = sum + tail;
          res.tail_bound = tail;
          return res;
        }
      }
      sample_logk.push_back(std::log(static_cast<double>(k)));
      sample_logterm.push_back(std::log(term));
      next_sample += std::max<std::int64_t>(next_sample / 4, 1);
    }
    if (sum > 1e100) {
      res.status = SeriesStatus::Divergent;
      res.value = kInf;
      res.tail_bound = kInf;
      return res;
    }
  }

  // Cap reached: estimate the decay exponent p from log term ~ -p log k
  // over the sampled final decade.
  std::vector<double> xs, ys;
  const double logcap = std::log(static_cast<double>(term_cap));
  for (std::size_t i = 0; i < sample_logk.size(); ++i) {
    if (sample_logk[i] >= logcap - std::log(10.0)) {
      xs.push_back(sample_logk[i]);
      ys.push_back(sample_logterm[i]);
    }
  }
  if (xs.size() >= 3) {
    const double p_hat = -fit_line(xs, ys).slope;
    if (p_hat > 1.0) {
      const double tail =
          term * static_cast<double>(term_cap) / (p_hat - 1.0);
      res.status = SeriesStatus::SlowConvergence;
      res.value = sum + tail;
      res.tail_bound = 2.0 * tail;  // the exponent itself is an estimate
      return res;
    }
  }
  res.status = SeriesStatus::Divergent;
  res.value = kInf;
  res.tail_bound = kInf;
  return res;
}

// ---------------------------------------------------------------------------
// underline_lambda and the Malthusian root
// ---------------------------------------------------------------------------

ConvergenceAbscissa underline_lambda(const RateModel& m, double tol) {
  ConvergenceAbscissa res;
  const auto& jt = m.joint_tail();
  if (jt) {
    // Constant tails always converge for lambda > 0; affine birth tails
    // converge exactly when the decay exponent (dbar+lambda)/beta exceeds 1.
    res.value = jt->b_slope == 0.0
                    ? 0.0
                    : std::max(0.0, jt->b_slope - jt->d_value);
    res.conclusive = true;
    return res;
  }
  // Probe the diagnosis numerically.
  const auto finite_at = [&](double lambda) {
    return mu_hat(m, lambda, 1e-9).status != SeriesStatus::Divergent;
  };
  if (finite_at(tol)) {
    res.value = 0.0;
    res.conclusive = true;
    return res;
  }
  double lo = tol, hi = 1.0;
  int guard = 0;
  while (!finite_at(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 60) {
      res.value = kInf;
      res.conclusive = false;
      return res;
    }
  }
  while (hi - lo > tol * (1.0 + hi)) {
    const double mid = 0.5 * (lo + hi);
    (finite_at(mid) ? hi : lo) = mid;
  }
  res.value = hi;
  res.conclusive = true;
  return res;
}

MalthusianResult malthusian(const RateModel& m, double tol) {
  MalthusianResult res;
  const ConvergenceAbscissa ab = underline_lambda(m);
  res.abscissa = ab.value;
  if (!ab.conclusive || !std::isfinite(ab.value)) {
    res.status = MalthusianStatus::NotBracketed;
    return res;
  }

  const auto mu = [&](double lambda) { return mu_hat(m, lambda, tol * 1e-3); };

  // Just above the abscissa mu_hat attains its supremum over the admissible
  // range (it is decreasing); if even that is below 1 there is no root.
  const double lo0 = ab.value + 1e-6;
  MuHatResult at_lo = mu(lo0);
  if (at_lo.status == SeriesStatus::Divergent) {
    // The transform still diverges within 1e-6 of the abscissa; a root
    // exists strictly above.  Start the bracket there anyway: the doubling
    // below moves the upper end, and bisection keeps the lower end.
    at_lo.value = kInf;
  }
  if (at_lo.value < 1.0) {
    res.status = MalthusianStatus::NoRoot;
    res.terms_used = at_lo.terms_used;
    return res;
  }

  double lo = lo0;
  double hi = std::max(1.0, 2.0 * lo);
  int guard = 0;
  while (mu(hi).value >= 1.0) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 60) {
      res.status = MalthusianStatus::NotBracketed;
      return res;
    }
  }

  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const MuHatResult r = mu(mid);
    if (r.status != SeriesStatus::Divergent && std::abs(r.value - 1.0) <= tol) {
      res.status = MalthusianStatus::Found;
      res.lambda_star = mid;
      res.residual = r.value - 1.0;
      res.terms_used = r.terms_used;
      return res;
    }
    if (r.status == SeriesStatus::Divergent || r.value > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  res.status = MalthusianStatus::NotBracketed;
  return res;
}

// ---------------------------------------------------------------------------
// Offspring distribution
// ---------------------------------------------------------------------------

double offspring_sf(const RateModel& m, std::int64_t k) {
  if (k < 0) throw OutOfRangeError("offspring_sf requires k >= 0");
  double prod = 1.0;
  for (std::int64_t i = 0; i < k && prod > 0.0; ++i) {
    const auto [b, d] = m.rates(i);
    prod *= b / (b + d);
  }
  return prod;
}

double offspring_log_sf(const RateModel& m, std::int64_t k) {
  if (k < 0) throw OutOfRangeError("offspring_log_sf requires k >= 0");
  double s = 0.0;
  for (std::int64_t i = 0; i < k; ++i) {
    const auto [b, d] = m.rates(i);
    s += std::log1p(d / b);
  }
  return -s;
}

double offspring_log_sf_bound(const RateModel& m, std::int64_t k) {
  return -m.seq_at(DerivedSeq::Rho1, k) - 0.5 * m.seq_at(DerivedSeq::Rho2, k);
}

double prob_infinite_offspring(const RateModel& m, double tol) {
  const auto& jt = m.joint_tail();
  if (jt) {
    if (jt->d_value > 0.0) return 0.0;  // death pressure accumulates forever
    // d vanishes beyond the tail start (exactly, or below 1e-30 of b):
    // the product converges and equals the prefix product to rounding.
    return offspring_sf(m, jt->start);
  }
  // Undeclared tail: accumulate until the log product stabilises or the
  // survival probability is provably below tol.
  double s = 0.0;
  std::int64_t k = 1024;
  double prev = kInf;
  for (std::int64_t i = 0;; ++i) {
    if (i == k) {
      if (s > -std::log(tol)) return 0.0;  // below tol already
      if (prev - s == 0.0 || std::abs(s - prev) <= tol * (1.0 + s)) {
        return std::exp(-s);
      }
      prev = s;
      k *= 2;
      if (k > (std::int64_t{1} << 26)) return std::exp(-s);  // best effort
    }
    const auto [b, d] = m.rates(i);
    s += std::log1p(d / b);
  }
}

ExpectedOffspring expected_offspring(const RateModel& m, std::int64_t cap) {
  ExpectedOffspring res;
  double prod = 1.0;
  double sum = 0.0;
  double sum_at_decade = 0.0;
  bool converged = false;
  const std::int64_t decade = std::max<std::int64_t>(cap / 10, 1);
  for (std::int64_t k = 1; k <= cap; ++k) {
    const auto [b, d] = m.rates(k - 1);
    prod *= b / (b + d);
    sum += prod;
    res.terms_used = k;
    if (k == decade) sum_at_decade = sum;
    // Terms are nonincreasing only up to rate fluctuations, but once the
    // running term is below machine resolution of the partial sum the
    // remaining tail of a monotone-product series cannot move the result.
    if (prod <= sum * 1e-18) {
      converged = true;
      break;
    }
  }
  res.value = sum;
  const double growth = sum - sum_at_decade;
  res.infinite_flag = !converged && growth > 1e-6 * (1.0 + sum);
  return res;
}

// ---------------------------------------------------------------------------
// Assumption diagnostics
// ---------------------------------------------------------------------------

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Satisfied:
      return "satisfied";
    case Verdict::Violated:
      return "violated";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

namespace {

/// Divergence verdict for one derived prefix sum, combining the declared
/// tail rule (exact when present) with final-decade numeric evidence.
AssumptionEvidence series_divergence(const RateModel& m, DerivedSeq which,
                                     std::int64_t cutoff, bool want_divergent,
                                     const char* series_name) {
  AssumptionEvidence ev;
  const double full = m.seq_at(which, cutoff);
  const double at_decade = m.seq_at(which, std::max<std::int64_t>(cutoff / 10, 1));
  const double increment = full - at_decade;
  ev.statistic = increment;

  std::optional<bool> diverges;  // from the declared tail, when available
  const auto& jt = m.joint_tail();
  if (jt) {
    switch (which) {
      case DerivedSeq::Phi1:
        // increments 1/(b+d): constant > 0 or ~ 1/(beta i); both diverge.
        diverges = true;
        break;
      case DerivedSeq::Phi2:
        // increments 1/(b+d)^2: summable iff b grows (slope > 0).
        diverges = jt->b_slope == 0.0;
        break;
      case DerivedSeq::Rho1:
        // increments d/(b+d): diverge iff the tail death rate is positive
        // (constant increments, or ~ dbar/(beta i) harmonically).
        diverges = jt->d_value > 0.0;
        break;
      default:
        break;
    }
  }

  std::ostringstream detail;
  detail << series_name << "(" << cutoff << ") = " << fmt(full)
         << ", final-decade increment = " << fmt(increment);
  if (diverges.has_value()) {
    detail << ", tail rule: " << (*diverges ? "divergent" : "convergent");
    ev.verdict = (*diverges == want_divergent) ? Verdict::Satisfied
                                               : Verdict::Violated;
  } else {
    detail << ", no declared tail: inconclusive";
    ev.verdict = Verdict::Inconclusive;
  }
  ev.detail = detail.str();
  return ev;
}

}  // namespace

AssumptionReport check_assumptions(const RateModel& m, std::int64_t cutoff) {
  if (cutoff < 100) {
    throw OutOfRangeError("check_assumptions requires cutoff >= 100");
  }
  AssumptionReport rep;
  rep.finite_lifetimes =
      series_divergence(m, DerivedSeq::Rho1, cutoff, /*want_divergent=*/true,
                        "rho1");
  rep.no_explosion = series_divergence(m, DerivedSeq::Phi1, cutoff,
                                       /*want_divergent=*/true, "phi1");
  rep.clock_variance = series_divergence(m, DerivedSeq::Phi2, cutoff,
                                         /*want_divergent=*/false, "phi2");

  // Transform finiteness: exact for declared tails, a probe grid otherwise.
  {
    AssumptionEvidence ev;
    const auto& jt = m.joint_tail();
    if (jt) {
      const double threshold =
          jt->b_slope == 0.0 ? 0.0 : std::max(0.0, jt->b_slope - jt->d_value);
      ev.verdict = Verdict::Satisfied;
      ev.statistic = threshold;
      ev.detail = "mu_hat finite for all lambda > " + fmt(threshold);
    } else {
      std::ostringstream detail;
      detail << "probe grid:";
      ev.verdict = Verdict::Inconclusive;
      for (double lambda : {1e-6, 1e-3, 0.1, 1.0, 8.0, 64.0}) {
        const MuHatResult r = mu_hat(m, lambda, 1e-9);
        detail << " mu(" << fmt(lambda) << ")="
               << (r.status == SeriesStatus::Divergent ? "div" : fmt(r.value));
        if (r.status == SeriesStatus::Finite) {
          ev.verdict = Verdict::Satisfied;
          ev.statistic = lambda;
          break;
        }
      }
      ev.detail = detail.str();
    }
    rep.transform_finite = ev;
  }

  rep.malthusian = pavd::malthusian(m);
  {
    AssumptionEvidence ev;
    switch (rep.malthusian->status) {
      case MalthusianStatus::Found:
        ev.verdict = Verdict::Satisfied;
        ev.statistic = rep.malthusian->lambda_star;
        ev.detail = "root at lambda* = " + fmt(rep.malthusian->lambda_star) +
                    " (residual " + fmt(rep.malthusian->residual) + ")";
        break;
      case MalthusianStatus::NoRoot:
        ev.verdict = Verdict::Violated;
        ev.detail =
            "mu_hat < 1 on the admissible range (abscissa " +
            fmt(rep.malthusian->abscissa) + ")";
        break;
      case MalthusianStatus::NotBracketed:
        ev.verdict = Verdict::Inconclusive;
        ev.detail = "no bracket for mu_hat = 1";
        break;
    }
    rep.malthusian_root = ev;
  }

  rep.death_limit = m.death_limit();
  rep.total_rate_inf = m.total_rate_infimum();
  return rep;
}

// ---------------------------------------------------------------------------
// Regime classification
// ---------------------------------------------------------------------------

const char* to_string(Regime r) {
  switch (r) {
    case Regime::InfiniteLifetime:
      return "infinite_lifetime";
    case Regime::FiniteRichAreOld:
      return "finite_rich_are_old";
    case Regime::FiniteRichDieYoung:
      return "finite_rich_die_young";
    case Regime::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

RegimeReport classify_regime(const RateModel& m) {
  RegimeReport rep;
  rep.assumptions = check_assumptions(m);

  const Verdict fl = rep.assumptions.finite_lifetimes.verdict;
  if (fl == Verdict::Violated) {
    rep.regime = Regime::InfiniteLifetime;
    rep.detail =
        "bounded cumulative death pressure: a vertex survives forever with "
        "positive probability";
    return rep;
  }
  if (fl == Verdict::Inconclusive) {
    rep.regime = Regime::Inconclusive;
    rep.detail = "death-pressure divergence undecided";
    return rep;
  }

  const auto dlim = rep.assumptions.death_limit;
  const auto inf = rep.assumptions.total_rate_inf;
  if (!dlim) {
    rep.regime = Regime::Inconclusive;
    rep.detail = "limiting death rate unresolved";
    return rep;
  }
  if (!inf.conclusive) {
    rep.regime = Regime::Inconclusive;
    rep.detail = "total-rate infimum unresolved";
    return rep;
  }
  if (*dlim < inf.value) {
    rep.regime = Regime::FiniteRichAreOld;
  } else if (*dlim > inf.value) {
    rep.regime = Regime::FiniteRichDieYoung;
  } else {
    rep.regime = Regime::Inconclusive;
    rep.detail = "limiting death rate equals the total-rate infimum";
    return rep;
  }
  rep.detail = "d* = " + fmt(*dlim) + ", R = " + fmt(inf.value);
  return rep;
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

Centerings predicted_centerings(const RateModel& m, double n,
                                const MalthusianResult& mr,
                                int r_iterations) {
  if (mr.status != MalthusianStatus::Found) {
    throw WrongRegimeError("predicted_centerings requires a Malthusian root");
  }
  if (!(n > 1.0)) {
    throw OutOfRangeError("predicted_centerings requires n > 1");
  }
  const auto dlim = m.death_limit();
  if (!dlim) {
    throw MissingDeathLimitError(
        "predicted_centerings requires a resolved limiting death rate");
  }
  const double lambda = mr.lambda_star;
  const double dstar = *dlim;
  const double logn = std::log(n);
  Centerings c;
  c.r_value = m.r_fixed_point(logn / lambda, lambda, r_iterations);
  c.k_alpha_at_r = m.k_alpha(c.r_value);
  const double denom = lambda + dstar;
  c.label_centre = dstar / denom * logn + lambda / denom * c.k_alpha_at_r;
  c.degree_centre = (logn - c.k_alpha_at_r) / denom;
  return c;
}

double lifetime_logsf_prediction(const RateModel& m, double t) {
  if (!(t >= 0.0)) {
    throw OutOfRangeError("lifetime_logsf_prediction requires t >= 0");
  }
  const auto dlim = m.death_limit();
  if (!dlim) {
    throw MissingDeathLimitError(
        "lifetime_logsf_prediction requires a resolved limiting death rate");
  }
  return -*dlim * t - m.k_alpha(t);
}

}  // namespace pavd
