/**
 * Monte Carlo experiment drivers.  Scheduling and determinism guarantees
 * live in replica_driver.hpp; this file owns the per-experiment logic,
 * preconditions, and verdicts.
 */

#include "pavd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "pavd/ctbp_sim.hpp"
#include "pavd/discrete_sim.hpp"
#include "pavd/enumeration.hpp"
#include "pavd/errors.hpp"
#include "pavd/rng.hpp"

namespace pavd {
namespace {

/// Expected counts of the geometric law over the observed histogram cells,
/// with all tail mass folded into the final cell so the total matches n.
/// support_zero shifts the support from {1,2,...} to {0,1,...}.
std::vector<double> geometric_expected(std::int64_t n, double p, std::size_t cells,
                                       bool support_zero) {
  std::vector<double> expected(cells, 0.0);
  if (cells == 0) return expected;
  double survivor = 1.0;  // P(O >= current cell's value)
  for (std::size_t k = 0; k + 1 < cells; ++k) {
    expected[k] = static_cast<double>(n) * survivor * p;
    survivor *= (1.0 - p);
  }
  expected[cells - 1] = static_cast<double>(n) * survivor;
  (void)support_zero;  // the cell layout, not the pmf, differs between
                       // conventions; callers lay the histogram out.
  return expected;
}

double safe_log_ratio(double num, double den) {
  if (num <= 0.0 || den <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::log(num / den);
}

}  // namespace

SurvivalReport survival_probability(const RateModel& model, std::int64_t replicas,
                                    std::int64_t steps, const std::string& engine,
                                    std::uint64_t seed, int threads) {
  if (engine != "discrete" && engine != "gillespie") {
    throw SchemaError("survival_probability: engine must be 'discrete' or "
                      "'gillespie', got '" +
                      engine + "'");
  }
  struct Slot {
    bool survived = false;
    std::int64_t death_step = -1;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(replicas));
  const bool discrete = engine == "discrete";
  for_each_replica(0, replicas, seed, threads, [&](std::int64_t i, Rng& rng) {
    Slot& s = slots[static_cast<std::size_t>(i)];
    if (discrete) {
      TreeState state(&model);
      state.reset(steps);
      while (state.n() < steps && !state.died()) state.step(rng);
      s.survived = !state.died();
      s.death_step = s.survived ? -1 : state.n();
    } else {
      BPState state(&model);
      state.reset(steps);
      while (state.events() < steps && !state.died()) state.step(rng);
      s.survived = !state.died();
      s.death_step = s.survived ? -1 : state.events();
    }
  });

  SurvivalReport rep;
  rep.model = model.name();
  rep.engine = engine;
  rep.replicas = replicas;
  rep.steps = steps;
  double death_sum = 0.0;
  std::int64_t died = 0;
  for (const Slot& s : slots) {
    if (s.survived) {
      ++rep.survived;
    } else {
      ++died;
      death_sum += static_cast<double>(s.death_step);
    }
  }
  rep.p_hat = replicas > 0
                  ? static_cast<double>(rep.survived) / static_cast<double>(replicas)
                  : 0.0;
  rep.wilson = wilson_interval(rep.survived, replicas);
  rep.mean_death_step = died > 0 ? death_sum / static_cast<double>(died)
                                 : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

ElderReport elder_limit_test(const RateModel& model, std::int64_t target_surviving,
                             std::int64_t steps, std::uint64_t seed, int threads) {
  const RegimeReport regime = classify_regime(model);
  if (regime.regime != Regime::InfiniteLifetime) {
    throw WrongRegimeError(
        "elder_limit_test requires the infinite-lifetime regime (bounded "
        "death pressure); model '" +
        model.name() + "' classified as " + to_string(regime.regime));
  }

  ElderReport rep;
  rep.model = model.name();
  rep.steps = steps;
  rep.p_geometric = prob_infinite_offspring(model);

  const double ratio = std::pow(static_cast<double>(steps), 1.0 / 31.0);
  const std::vector<std::int64_t> checkpoints =
      geometric_checkpoints(steps, std::max(1.01, ratio));
  const std::int64_t half = steps / 2;

  struct Kept {
    std::int64_t elder = 0;
    bool stable = false;
  };
  std::vector<Kept> kept;
  const std::int64_t cap =
      std::max<std::int64_t>(target_surviving * 200, 8 * kSurvivalBatch);
  rep.replicas_run = run_until_kept<Kept>(
      target_surviving, cap, seed, threads,
      [&](std::int64_t, Rng& rng) -> std::optional<Kept> {
        Trajectory traj = run_discrete(model, steps, checkpoints, 1, rng);
        if (!traj.survived) return std::nullopt;
        Kept k;
        k.elder = traj.rows.back().oldest;
        k.stable = true;
        for (const CheckpointRow& row : traj.rows) {
          if (row.n >= half && row.oldest != k.elder) {
            k.stable = false;
            break;
          }
        }
        return k;
      },
      kept);
  rep.surviving = static_cast<std::int64_t>(kept.size());
  rep.p_surv_hat = rep.replicas_run > 0
                       ? static_cast<double>(rep.surviving) /
                             static_cast<double>(rep.replicas_run)
                       : 0.0;

  if (rep.surviving == 0) {
    rep.detail = "no surviving replicas; nothing to test";
    return rep;
  }

  std::int64_t max_elder = 1;
  std::int64_t stable_count = 0;
  double elder_sum = 0.0;
  std::int64_t ones = 0;
  for (const Kept& k : kept) {
    max_elder = std::max(max_elder, k.elder);
    stable_count += k.stable ? 1 : 0;
    elder_sum += static_cast<double>(k.elder);
    ones += k.elder == 1 ? 1 : 0;
  }
  rep.stability_fraction =
      static_cast<double>(stable_count) / static_cast<double>(rep.surviving);
  rep.counts.assign(static_cast<std::size_t>(max_elder), 0);
  for (const Kept& k : kept) rep.counts[static_cast<std::size_t>(k.elder - 1)] += 1;

  // Support {1,2,...}: cell k-1 holds O = k; final cell carries the tail.
  rep.chi_support_one = chi_square_gof(
      rep.counts,
      geometric_expected(rep.surviving, rep.p_geometric, rep.counts.size(), false));

  // Support {0,1,...}: prepend an O = 0 cell that can never be observed.
  std::vector<std::int64_t> with_zero(rep.counts.size() + 1, 0);
  std::copy(rep.counts.begin(), rep.counts.end(), with_zero.begin() + 1);
  rep.chi_support_zero = chi_square_gof(
      with_zero,
      geometric_expected(rep.surviving, rep.p_geometric, with_zero.size(), true));

  const double mean_elder = elder_sum / static_cast<double>(rep.surviving);
  rep.mle_p = mean_elder > 0.0 ? 1.0 / mean_elder : 0.0;
  rep.chi_mle = chi_square_gof(
      rep.counts,
      geometric_expected(rep.surviving, rep.mle_p, rep.counts.size(), false));

  // Unconditional identity: {O_n = 1} = {the root is still alive}, whose
  // probability converges to P(never dies) = p.  Non-surviving replicas have
  // a dead root, so the numerator needs surviving replicas only.
  rep.identity_lhs =
      static_cast<double>(ones) / static_cast<double>(rep.replicas_run);
  rep.identity_rhs = rep.p_geometric;
  rep.identity_se = std::sqrt(
      std::max(0.0, rep.identity_lhs * (1.0 - rep.identity_lhs) /
                        static_cast<double>(rep.replicas_run)));

  if (rep.stability_fraction < 0.99) {
    rep.geometric_verdict = Verdict::Inconclusive;
  } else {
    rep.geometric_verdict = rep.chi_support_one.p_value > 0.01
                                ? Verdict::Satisfied
                                : Verdict::Violated;
  }
  const double gap = std::abs(rep.identity_lhs - rep.identity_rhs);
  rep.identity_verdict =
      gap <= 4.0 * rep.identity_se + 1e-12 ? Verdict::Satisfied : Verdict::Violated;

  std::ostringstream os;
  os << "p=" << rep.p_geometric << " chi2(support {1,..}) p=" << rep.chi_support_one.p_value
     << " chi2(support {0,..}) p=" << rep.chi_support_zero.p_value
     << " mle_p=" << rep.mle_p << " chi2(mle) p=" << rep.chi_mle.p_value
     << " identity " << rep.identity_lhs << " vs " << rep.identity_rhs << " (se "
     << rep.identity_se << ")";
  rep.detail = os.str();
  return rep;
}

PersistenceReport hub_persistence_scan(const RateModel& model,
                                       std::int64_t target_surviving,
                                       std::int64_t steps, int hub_m,
                                       std::uint64_t seed, int threads) {
  if (hub_m < 1) throw OutOfRangeError("hub_persistence_scan: hub_m must be >= 1");
  PersistenceReport rep;
  rep.model = model.name();
  rep.steps = steps;
  rep.hub_m = hub_m;

  const AssumptionReport assumptions = check_assumptions(model);
  rep.persistence_predicted =
      assumptions.clock_variance.verdict == Verdict::Satisfied;

  for (std::int64_t n0 : {steps / 20, steps / 10, steps / 5,
                          std::int64_t{20'000}, steps / 2}) {
    n0 = std::clamp<std::int64_t>(n0, 1, steps);
    rep.n0_grid.push_back(n0);
  }
  std::sort(rep.n0_grid.begin(), rep.n0_grid.end());
  rep.n0_grid.erase(std::unique(rep.n0_grid.begin(), rep.n0_grid.end()),
                    rep.n0_grid.end());

  struct Kept {
    std::vector<std::int64_t> last_change;  // per rank; 0 when never changed
    bool distinct = false;
  };
  std::vector<Kept> kept;
  const std::int64_t cap =
      std::max<std::int64_t>(target_surviving * 200, 8 * kSurvivalBatch);
  rep.replicas_run = run_until_kept<Kept>(
      target_surviving, cap, seed, threads,
      [&](std::int64_t, Rng& rng) -> std::optional<Kept> {
        Trajectory traj = run_discrete(model, steps, {steps}, hub_m, rng);
        if (!traj.survived) return std::nullopt;
        Kept k;
        k.last_change.reserve(static_cast<std::size_t>(hub_m));
        for (const auto& changes : traj.hub_changes) {
          k.last_change.push_back(changes.empty() ? 0 : changes.back());
        }
        const CheckpointRow& last = traj.rows.back();
        k.distinct = true;
        for (int m = 0; m < hub_m; ++m) {
          const auto idx = static_cast<std::size_t>(m);
          if (last.top[idx] == kNoVertex ||
              (m > 0 && last.top_degree[idx] >= last.top_degree[idx - 1])) {
            k.distinct = false;
            break;
          }
        }
        return k;
      },
      kept);
  rep.surviving = static_cast<std::int64_t>(kept.size());
  if (rep.surviving == 0) {
    rep.detail = "no surviving replicas; nothing to test";
    return rep;
  }

  rep.settle_fraction.assign(static_cast<std::size_t>(hub_m),
                             std::vector<double>(rep.n0_grid.size(), 0.0));
  std::int64_t distinct = 0;
  for (int m = 0; m < hub_m; ++m) {
    std::vector<double> last;
    last.reserve(kept.size());
    for (const Kept& k : kept) {
      last.push_back(static_cast<double>(k.last_change[static_cast<std::size_t>(m)]));
    }
    for (std::size_t j = 0; j < rep.n0_grid.size(); ++j) {
      std::int64_t settled = 0;
      for (double v : last) {
        if (v <= static_cast<double>(rep.n0_grid[j])) ++settled;
      }
      rep.settle_fraction[static_cast<std::size_t>(m)][j] =
          static_cast<double>(settled) / static_cast<double>(rep.surviving);
    }
    rep.last_change_q50.push_back(quantile(last, 0.5));
    rep.last_change_q90.push_back(quantile(last, 0.9));
  }
  for (const Kept& k : kept) distinct += k.distinct ? 1 : 0;
  rep.distinct_degree_fraction =
      static_cast<double>(distinct) / static_cast<double>(rep.surviving);

  // Calibrated thresholds: a settled fraction of >= 0.90 at n0 = steps/2 for
  // the leading rank reads as persistence, <= 0.45 as turnover.
  const double f_half = rep.settle_fraction[0].empty()
                            ? 0.0
                            : rep.settle_fraction[0].back();
  if (assumptions.clock_variance.verdict == Verdict::Inconclusive) {
    rep.verdict = Verdict::Inconclusive;
  } else if (rep.persistence_predicted) {
    rep.verdict = f_half >= 0.90 ? Verdict::Satisfied
                                 : (f_half <= 0.45 ? Verdict::Violated
                                                   : Verdict::Inconclusive);
  } else {
    rep.verdict = f_half <= 0.45 ? Verdict::Satisfied
                                 : (f_half >= 0.90 ? Verdict::Violated
                                                   : Verdict::Inconclusive);
  }
  std::ostringstream os;
  os << "settled fraction at n0=steps/2: " << f_half
     << (rep.persistence_predicted ? " (persistence predicted)"
                                   : " (turnover predicted)")
     << "; thresholds 0.90/0.45";
  rep.detail = os.str();
  return rep;
}

TightnessReport tightness_scan(const RateModel& model, std::int64_t target_surviving,
                               const std::vector<std::int64_t>& n_grid,
                               std::uint64_t seed, int threads) {
  const RegimeReport regime = classify_regime(model);
  if (regime.regime != Regime::FiniteRichAreOld) {
    throw WrongRegimeError(
        "tightness_scan requires the finite-lifetime regime with the limiting "
        "death rate below the total-rate infimum; model '" +
        model.name() + "' classified as " + to_string(regime.regime));
  }
  const MalthusianResult& mr = *regime.assumptions.malthusian;
  if (mr.status != MalthusianStatus::Found) {
    throw WrongRegimeError("tightness_scan: no Malthusian rate for model '" +
                           model.name() + "'");
  }

  std::vector<std::int64_t> grid = n_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty() || grid.front() < 2) {
    throw OutOfRangeError("tightness_scan: n grid must contain sizes >= 2");
  }
  const std::int64_t max_n = grid.back();

  struct Obs {
    std::int64_t oldest = 0;
    std::int64_t hub = 0;
    std::int32_t maxdeg = 0;
  };
  struct Kept {
    std::vector<Obs> at;  // one per grid point
  };
  std::vector<Kept> kept;
  const std::int64_t cap =
      std::max<std::int64_t>(target_surviving * 200, 8 * kSurvivalBatch);
  std::int64_t replicas_run = run_until_kept<Kept>(
      target_surviving, cap, seed, threads,
      [&](std::int64_t, Rng& rng) -> std::optional<Kept> {
        Trajectory traj = run_discrete(model, max_n, grid, 1, rng);
        if (!traj.survived) return std::nullopt;
        Kept k;
        k.at.reserve(traj.rows.size());
        for (const CheckpointRow& row : traj.rows) {
          k.at.push_back(Obs{row.oldest, row.top[0], row.max_degree});
        }
        return k;
      },
      kept);

  TightnessReport rep;
  rep.model = model.name();
  rep.replicas_run = replicas_run;
  rep.surviving = static_cast<std::int64_t>(kept.size());
  if (rep.surviving == 0) {
    rep.detail = "no surviving replicas; nothing to test";
    return rep;
  }

  std::vector<double> log_n;
  std::vector<double> med_log_maxdeg;
  std::vector<double> spreads_o, spreads_i, spreads_d;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto n = static_cast<double>(grid[j]);
    const Centerings c = predicted_centerings(model, n, mr);
    std::vector<double> o, i1, dg, rel, lmax;
    o.reserve(kept.size());
    i1.reserve(kept.size());
    dg.reserve(kept.size());
    rel.reserve(kept.size());
    lmax.reserve(kept.size());
    for (const Kept& k : kept) {
      const Obs& ob = k.at[j];
      o.push_back(std::log(static_cast<double>(ob.oldest)) - c.label_centre);
      i1.push_back(std::log(static_cast<double>(ob.hub)) - c.label_centre);
      dg.push_back(model.seq_at(DerivedSeq::Phi1, ob.maxdeg) - c.degree_centre);
      rel.push_back(safe_log_ratio(static_cast<double>(ob.hub),
                                   static_cast<double>(ob.oldest)));
      lmax.push_back(std::log(std::max<double>(1.0, ob.maxdeg)));
    }
    TightnessRow row;
    row.n = grid[j];
    row.samples = rep.surviving;
    row.label_centre = c.label_centre;
    row.degree_centre = c.degree_centre;
    row.o_q10 = quantile(o, 0.1);
    row.o_q50 = quantile(o, 0.5);
    row.o_q90 = quantile(o, 0.9);
    row.i_q10 = quantile(i1, 0.1);
    row.i_q50 = quantile(i1, 0.5);
    row.i_q90 = quantile(i1, 0.9);
    row.d_q10 = quantile(dg, 0.1);
    row.d_q50 = quantile(dg, 0.5);
    row.d_q90 = quantile(dg, 0.9);
    row.rel_q10 = quantile(rel, 0.1);
    row.rel_q50 = quantile(rel, 0.5);
    row.rel_q90 = quantile(rel, 0.9);
    row.median_log_maxdeg = quantile(lmax, 0.5);
    rep.rows.push_back(row);
    log_n.push_back(std::log(n));
    med_log_maxdeg.push_back(row.median_log_maxdeg);
    spreads_o.push_back(row.o_q90 - row.o_q10);
    spreads_i.push_back(row.i_q90 - row.i_q10);
    spreads_d.push_back(row.d_q90 - row.d_q10);
  }

  auto ratio = [](const std::vector<double>& spreads) {
    const auto [mn, mx] = std::minmax_element(spreads.begin(), spreads.end());
    return *mn > 0.0 ? *mx / *mn : std::numeric_limits<double>::infinity();
  };
  rep.spread_ratio_o = ratio(spreads_o);
  rep.spread_ratio_i = ratio(spreads_i);
  rep.spread_ratio_d = ratio(spreads_d);
  rep.maxdeg_slope = fit_line(log_n, med_log_maxdeg).slope;
  const bool tight = rep.spread_ratio_o <= 2.0 && rep.spread_ratio_i <= 2.0 &&
                     rep.spread_ratio_d <= 2.0;
  rep.verdict = grid.size() >= 2
                    ? (tight ? Verdict::Satisfied : Verdict::Violated)
                    : Verdict::Inconclusive;
  std::ostringstream os;
  os << "10-90 spread ratios across n: elder " << rep.spread_ratio_o << ", hub "
     << rep.spread_ratio_i << ", degree " << rep.spread_ratio_d
     << "; median log max-degree slope " << rep.maxdeg_slope;
  rep.detail = os.str();
  return rep;
}

EmbeddingReport embedding_equivalence(const RateModel& model, std::int64_t replicas,
                                      std::int64_t n_max, std::uint64_t seed,
                                      int threads) {
  if (n_max < 1 || n_max > 8) {
    throw OutOfRangeError("embedding_equivalence: n_max must be in [1, 8]");
  }
  const ExactDistribution exact = exact_state_distribution(model, n_max);
  const std::int64_t budget = exact.label_budget;

  using CountMaps = std::vector<std::unordered_map<std::string, std::int64_t>>;
  CountMaps counts = map_reduce_replicas<CountMaps>(
      0, replicas, seed, threads,
      [&](std::int64_t, Rng& rng, CountMaps& local) {
        if (local.empty()) local.resize(static_cast<std::size_t>(n_max));
        BPState s(&model);
        for (std::int64_t n = 1; n <= n_max; ++n) {
          if (!s.died()) s.step(rng);
          const std::string key = state_key(
              budget,
              [&](std::int64_t label) -> std::int64_t {
                if (label > s.max_label()) return -1;
                const CVertexRec& v = s.vertex(label);
                return v.born ? v.parent : -1;
              },
              [&](std::int64_t label) { return s.vertex(label).alive; });
          local[static_cast<std::size_t>(n - 1)][key] += 1;
        }
      },
      [](CountMaps& into, CountMaps&& part) {
        if (into.empty()) {
          into = std::move(part);
          return;
        }
        for (std::size_t n = 0; n < part.size(); ++n) {
          for (auto& [key, c] : part[n]) into[n][key] += c;
        }
      });

  EmbeddingReport rep;
  rep.model = model.name();
  rep.replicas = replicas;
  rep.n_max = n_max;
  std::vector<std::string> unexpected;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const auto& exact_n = exact.by_step[static_cast<std::size_t>(n)];
    const auto& obs_n = counts[static_cast<std::size_t>(n - 1)];
    // Cells ordered by exact probability descending so that goodness-of-fit
    // pooling merges the rare states.
    std::vector<std::pair<std::string, double>> cells(exact_n.begin(), exact_n.end());
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::int64_t> observed;
    std::vector<double> expected;
    observed.reserve(cells.size());
    expected.reserve(cells.size());
    double tv = 0.0;
    std::int64_t seen = 0;
    for (const auto& [key, p] : cells) {
      const auto it = obs_n.find(key);
      const std::int64_t c = it == obs_n.end() ? 0 : it->second;
      seen += c;
      observed.push_back(c);
      expected.push_back(p * static_cast<double>(replicas));
      tv += std::abs(static_cast<double>(c) / static_cast<double>(replicas) - p);
    }
    // States observed outside the exact support would be an engine bug.
    if (seen != replicas) {
      tv += static_cast<double>(replicas - seen) / static_cast<double>(replicas);
      for (const auto& [key, c] : obs_n) {
        if (exact_n.find(key) == exact_n.end()) unexpected.push_back(key);
      }
    }
    EmbeddingStepStat stat;
    stat.n = n;
    stat.tv = 0.5 * tv;
    stat.chi = chi_square_gof(observed, expected);
    stat.exact_states = static_cast<std::int64_t>(cells.size());
    stat.observed_states = static_cast<std::int64_t>(obs_n.size());
    rep.per_step.push_back(stat);
    rep.max_tv = std::max(rep.max_tv, stat.tv);
    rep.min_p = std::min(rep.min_p, stat.chi.p_value);
  }
  std::sort(unexpected.begin(), unexpected.end());
  unexpected.erase(std::unique(unexpected.begin(), unexpected.end()),
                   unexpected.end());
  if (!unexpected.empty()) {
    rep.verdict = Verdict::Violated;
    std::ostringstream os;
    os << unexpected.size() << " state(s) outside the exact support, e.g. '"
       << unexpected.front() << "'";
    rep.detail = os.str();
    return rep;
  }
  rep.verdict = rep.max_tv < 0.005 && rep.min_p > 0.01 ? Verdict::Satisfied
                                                       : Verdict::Violated;
  std::ostringstream os;
  os << "max TV " << rep.max_tv << ", min chi2 p " << rep.min_p << " over n=1.."
     << n_max;
  rep.detail = os.str();
  return rep;
}

LifetimeReport lifetime_tail_experiment(const RateModel& model, std::int64_t samples,
                                        std::uint64_t seed, int threads) {
  const AssumptionReport assumptions = check_assumptions(model);
  if (assumptions.finite_lifetimes.verdict != Verdict::Satisfied ||
      !assumptions.death_limit.has_value()) {
    throw WrongRegimeError(
        "lifetime_tail_experiment requires divergent death pressure and a "
        "resolvable limiting death rate; model '" +
        model.name() + "' does not qualify");
  }
  if (samples < 1000) {
    throw OutOfRangeError("lifetime_tail_experiment: needs at least 1000 samples");
  }

  struct Local {
    std::vector<double> lifetimes;
    std::int64_t truncated = 0;
  };
  Local all = map_reduce_replicas<Local>(
      0, samples, seed, threads,
      [&](std::int64_t, Rng& rng, Local& local) {
        const Lifeline l = sample_lifeline(model, rng);
        local.lifetimes.push_back(l.lifetime);
        local.truncated += l.truncated ? 1 : 0;
      },
      [](Local& into, Local&& part) {
        into.lifetimes.insert(into.lifetimes.end(), part.lifetimes.begin(),
                              part.lifetimes.end());
        into.truncated += part.truncated;
      });

  LifetimeReport rep;
  rep.model = model.name();
  rep.samples = samples;
  rep.truncated = all.truncated;
  rep.d_star = *assumptions.death_limit;

  // Pooled estimates use the order statistics; the trend diagnostic below
  // needs the generation order as well, so sort a copy.
  std::vector<double> sorted = all.lifetimes;
  std::sort(sorted.begin(), sorted.end());
  const double t_lo = sorted[static_cast<std::size_t>(samples / 2)];
  const double t_hi = sorted[static_cast<std::size_t>(samples - 100)];
  if (!(t_hi > t_lo)) {
    rep.detail = "degenerate lifetime sample; no usable tail window";
    return rep;
  }
  constexpr int kGridPoints = 24;
  for (int j = 0; j < kGridPoints; ++j) {
    const double t =
        t_lo + (t_hi - t_lo) * static_cast<double>(j) / (kGridPoints - 1);
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    const auto exceed = static_cast<std::int64_t>(sorted.end() - it);
    if (exceed < 100) break;
    rep.t_grid.push_back(t);
    rep.exceed.push_back(exceed);
    rep.log_sf_hat.push_back(std::log(static_cast<double>(exceed) /
                                      static_cast<double>(samples)));
    rep.prediction.push_back(lifetime_logsf_prediction(model, t));
    rep.residual.push_back(rep.log_sf_hat.back() - rep.prediction.back());
  }
  if (rep.t_grid.size() < 4) {
    rep.detail = "tail window too short for a slope fit";
    return rep;
  }
  rep.raw_slope = fit_line(rep.t_grid, rep.log_sf_hat).slope;
  rep.residual_slope = fit_line(rep.t_grid, rep.residual).slope;

  // The pooled residuals at different grid points share samples and are
  // strongly positively correlated, so a rank test applied to them rejects
  // far more often than its nominal level. For the trend test, split the
  // sample (in generation order, so blocks are iid) into one block per grid
  // point: block j alone counts exceedances of t_j, making the standardised
  // counts independent across points with mean zero under the prediction.
  const std::size_t points = rep.t_grid.size();
  const std::size_t n_all = all.lifetimes.size();
  std::vector<double> trend_t;
  std::vector<double> trend_z;
  for (std::size_t j = 0; j < points; ++j) {
    const std::size_t lo = n_all * j / points;
    const std::size_t hi = n_all * (j + 1) / points;
    std::int64_t count = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      if (all.lifetimes[i] > rep.t_grid[j]) ++count;
    }
    rep.block_exceed.push_back(count);
    const double block_n = static_cast<double>(hi - lo);
    const double p = std::exp(rep.prediction[j]);
    const double m = block_n * p;
    if (p < 1.0 && m > 0.0) {
      const double z =
          (static_cast<double>(count) - m) / std::sqrt(m * (1.0 - p));
      rep.block_z.push_back(z);
      trend_t.push_back(rep.t_grid[j]);
      trend_z.push_back(z);
    } else {
      rep.block_z.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  if (trend_t.size() >= 4) {
    rep.residual_trend = spearman(trend_t, trend_z);
  } else {
    rep.residual_trend.rho = 0.0;
    rep.residual_trend.p_value = 1.0;
    rep.residual_trend.n = trend_t.size();
  }
  rep.verdict = std::abs(rep.raw_slope + rep.d_star) <= 0.05 &&
                        rep.residual_trend.p_value > 0.05
                    ? Verdict::Satisfied
                    : Verdict::Violated;
  std::ostringstream os;
  os << "raw slope " << rep.raw_slope << " (predicted " << -rep.d_star
     << "), residual slope " << rep.residual_slope
     << ", independent-block trend p " << rep.residual_trend.p_value;
  rep.detail = os.str();
  return rep;
}

GrowthReport growth_rate_experiment(const RateModel& model,
                                    std::int64_t target_surviving,
                                    std::int64_t target_events, std::uint64_t seed,
                                    int threads) {
  const MalthusianResult mr = malthusian(model);
  if (mr.status != MalthusianStatus::Found) {
    throw WrongRegimeError(
        "growth_rate_experiment requires a Malthusian rate; model '" +
        model.name() + "' has none");
  }
  if (target_events < 100) {
    throw OutOfRangeError("growth_rate_experiment: needs target_events >= 100");
  }

  GrowthReport rep;
  rep.model = model.name();
  rep.target_events = target_events;
  rep.lambda_star = mr.lambda_star;

  struct Kept {
    double cv = 0.0;
    double w_end = 0.0;
  };
  constexpr int kSamplePoints = 256;
  std::vector<Kept> kept;
  const std::int64_t cap =
      std::max<std::int64_t>(target_surviving * 200, 8 * kSurvivalBatch);
  rep.replicas_run = run_until_kept<Kept>(
      target_surviving, cap, seed, threads,
      [&](std::int64_t, Rng& rng) -> std::optional<Kept> {
        BPState s(&model);
        s.reset(target_events);
        std::vector<double> taus;
        taus.reserve(static_cast<std::size_t>(target_events));
        while (s.events() < target_events && !s.died()) {
          taus.push_back(s.step(rng).time);
        }
        if (s.died()) return std::nullopt;
        const double T = taus.back();
        std::vector<double> w;
        w.reserve(kSamplePoints);
        for (int j = 0; j < kSamplePoints; ++j) {
          const double t =
              T / 2.0 + (T / 2.0) * static_cast<double>(j) / (kSamplePoints - 1);
          const auto n = static_cast<double>(
              std::upper_bound(taus.begin(), taus.end(), t) - taus.begin());
          w.push_back(n * std::exp(-mr.lambda_star * t));
        }
        const double m = mean(w);
        Kept k;
        k.cv = m > 0.0 ? stddev(w) / m : std::numeric_limits<double>::infinity();
        k.w_end = static_cast<double>(target_events) *
                  std::exp(-mr.lambda_star * T);
        return k;
      },
      kept);
  rep.surviving = static_cast<std::int64_t>(kept.size());
  if (rep.surviving == 0) {
    rep.detail = "no surviving replicas; nothing to test";
    return rep;
  }

  for (const Kept& k : kept) {
    rep.cv.push_back(k.cv);
    rep.w_end.push_back(k.w_end);
  }
  rep.cv_q50 = quantile(rep.cv, 0.5);
  rep.cv_q90 = quantile(rep.cv, 0.9);
  rep.w_q10 = quantile(rep.w_end, 0.1);
  rep.w_q50 = quantile(rep.w_end, 0.5);
  rep.w_q90 = quantile(rep.w_end, 0.9);
  std::int64_t below10 = 0;
  std::int64_t below100 = 0;
  for (double w : rep.w_end) {
    below10 += w < 0.1 ? 1 : 0;
    below100 += w < 0.01 ? 1 : 0;
  }
  rep.frac_below_tenth =
      static_cast<double>(below10) / static_cast<double>(rep.surviving);
  rep.frac_below_hundredth =
      static_cast<double>(below100) / static_cast<double>(rep.surviving);
  rep.verdict = rep.cv_q50 < 0.10 ? Verdict::Satisfied : Verdict::Violated;
  std::ostringstream os;
  os << "median scaled-size CV " << rep.cv_q50 << " over [T/2, T] (q90 "
     << rep.cv_q90 << "), endpoint W median " << rep.w_q50;
  rep.detail = os.str();
  return rep;
}

}  // namespace pavd
