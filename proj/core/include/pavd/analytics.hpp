#pragma once

/**
 * Numerical analysis of a rate model: the reproduction transform mu_hat and
 * its Malthusian root, the offspring distribution, assumption diagnostics,
 * regime classification, and the centering/tail predictions that the
 * simulation experiments test against.
 *
 * Series evaluation strategy: every model built from tables with declared
 * tails admits a closed form for the remainder of mu_hat past the tail start
 * (a geometric sum for constant rates, a telescoping Gamma-ratio identity
 * for affine birth rates), so those sums are exact to rounding.  Models
 * wrapping custom callables declare no structure and fall back to a generic
 * accumulation loop with a geometric stopping heuristic and a power-law
 * divergence test; their diagnostics are marked accordingly.
 */

#include <cstdint>
#include <optional>
#include <string>

#include "pavd/rate_model.hpp"

namespace pavd {

enum class SeriesStatus { Finite, Divergent, SlowConvergence };

struct MuHatResult {
  SeriesStatus status = SeriesStatus::Finite;
  /// The sum (+inf when Divergent; best-effort estimate for SlowConvergence).
  double value = 0.0;
  /// Bound on the neglected remainder (0 for exact closed-form tails).
  double tail_bound = 0.0;
  std::int64_t terms_used = 0;
};

/// mu_hat(lambda) = sum_{k>=1} prod_{i<k} b(i) / (b(i)+d(i)+lambda),
/// the expected number of offspring discounted at rate lambda.
MuHatResult mu_hat(const RateModel& m, double lambda, double tol = 1e-12,
                   std::int64_t term_cap = 1'000'000);

struct ConvergenceAbscissa {
  /// inf{lambda > 0 : mu_hat(lambda) < inf}; 0 when the transform is finite
  /// for every positive rate probed down to the tolerance.
  double value = 0.0;
  bool conclusive = true;
};

ConvergenceAbscissa underline_lambda(const RateModel& m, double tol = 1e-9);

enum class MalthusianStatus {
  Found,         ///< a root of mu_hat = 1 above the convergence abscissa
  NoRoot,        ///< sup mu_hat < 1 on the admissible range (subcritical)
  NotBracketed,  ///< no finite bracket could be established
};

struct MalthusianResult {
  MalthusianStatus status = MalthusianStatus::NotBracketed;
  double lambda_star = 0.0;  ///< meaningful when status == Found
  double residual = 0.0;     ///< mu_hat(lambda_star) - 1 at acceptance
  double abscissa = 0.0;     ///< the convergence abscissa used as lower bound
  std::int64_t terms_used = 0;
};

/// Solves mu_hat(lambda*) = 1 by bracketed bisection, |mu_hat - 1| <= tol.
MalthusianResult malthusian(const RateModel& m, double tol = 1e-9);

/// P(D >= k): probability an individual reaches at least k children,
/// the exact product prod_{i<k} b(i)/(b(i)+d(i)).
double offspring_sf(const RateModel& m, std::int64_t k);

/// log P(D >= k) accumulated in log space (immune to underflow).
double offspring_log_sf(const RateModel& m, std::int64_t k);

/// The analytic upper bound log P(D >= k) <= -rho1(k) - rho2(k)/2.
double offspring_log_sf_bound(const RateModel& m, std::int64_t k);

/// P(D = inf) = lim_k P(D >= k): positive exactly when the cumulative death
/// pressure rho1 stays bounded.
double prob_infinite_offspring(const RateModel& m, double tol = 1e-12);

struct ExpectedOffspring {
  double value = 0.0;
  /// Set when the partial sums were still growing materially over the final
  /// decade of the summation range, indicating E[D] = inf.
  bool infinite_flag = false;
  std::int64_t terms_used = 0;
};

ExpectedOffspring expected_offspring(const RateModel& m, std::int64_t cap = 100'000);

enum class Verdict { Satisfied, Violated, Inconclusive };

const char* to_string(Verdict v);

struct AssumptionEvidence {
  Verdict verdict = Verdict::Inconclusive;
  /// Headline number backing the verdict (e.g. a final-decade increment or
  /// the located root).
  double statistic = 0.0;
  std::string detail;
};

/// The standing assumptions of the analysis, each with numeric evidence:
///  - finite_lifetimes: rho1 diverges (every individual eventually dies)
///  - no_explosion: phi1 diverges (degree clocks cannot explode)
///  - clock_variance: phi2 converges (degree clocks concentrate)
///  - transform_finite: mu_hat(lambda) finite for some lambda
///  - malthusian_root: mu_hat = 1 has a root above the abscissa
struct AssumptionReport {
  AssumptionEvidence finite_lifetimes;
  AssumptionEvidence no_explosion;
  AssumptionEvidence clock_variance;
  AssumptionEvidence transform_finite;
  AssumptionEvidence malthusian_root;
  std::optional<double> death_limit;
  InfimumResult total_rate_inf;
  std::optional<MalthusianResult> malthusian;
};

AssumptionReport check_assumptions(const RateModel& m, std::int64_t cutoff = 100'000);

/// Long-run behaviour of the oldest/highest-degree vertices.
enum class Regime {
  InfiniteLifetime,    ///< death pressure bounded: some vertices never die
  FiniteRichAreOld,    ///< limiting death rate below the total-rate infimum
  FiniteRichDieYoung,  ///< limiting death rate above the total-rate infimum
  Inconclusive,
};

const char* to_string(Regime r);

struct RegimeReport {
  Regime regime = Regime::Inconclusive;
  AssumptionReport assumptions;
  std::string detail;
};

RegimeReport classify_regime(const RateModel& m);

/// Predicted centering constants for the label and degree statistics at
/// size n:
///   label_centre  = d*/(l+d*) * ln n + l/(l+d*) * K_alpha(r(ln n / l))
///   degree_centre = (ln n - K_alpha(r(ln n / l))) / (l + d*)
/// where l is the Malthusian rate.  log O_n and log I_n recenter by
/// label_centre; phi1(max degree) recenters by degree_centre.
struct Centerings {
  double label_centre = 0.0;
  double degree_centre = 0.0;
  double r_value = 0.0;        ///< r(ln n / lambda*)
  double k_alpha_at_r = 0.0;   ///< K_alpha(r(ln n / lambda*))
};

Centerings predicted_centerings(const RateModel& m, double n,
                                const MalthusianResult& mr,
                                int r_iterations = 6);

/// Predicted log-survival of an individual's lifetime:
/// log P(L > t) = -d* t - K_alpha(t) + O(1).
double lifetime_logsf_prediction(const RateModel& m, double t);

}  // namespace pavd
