#ifndef FAIRMATCH_SIMULATOR_HPP
#define FAIRMATCH_SIMULATOR_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fairmatch/instance.hpp"
#include "fairmatch/lp.hpp"
#include "fairmatch/policies.hpp"
#include "fairmatch/rng.hpp"

namespace fairmatch {

// ---------------------------------------------------------------------------
// One simulated run of the online process.

struct TrialRound {
  int rider = -1;
  std::vector<int> probes;            // executed probes, in order
  std::vector<std::uint8_t> accepts;  // acceptance coin per probe
  int match_edge = -1;                // -1 when unmatched
};

struct TrialRecord {
  std::vector<TrialRound> rounds;
  std::vector<int> matched;  // per driver
  double profit = 0.0;
};

struct SimOptions {
  bool common_arrivals = false;  // share the arrival stream across policies
  bool track_availability = false;
  bool track_probes = false;
  int jobs = 1;
};

namespace detail {

// Stream tags for per-trial RNG derivation.
constexpr std::uint64_t kStreamArrivals = 1;
constexpr std::uint64_t kStreamPolicy = 2;
constexpr std::uint64_t kStreamAcceptance = 3;

struct TrialAccumulator {
  double profit = 0.0;
  std::vector<int> matched;
  // flattened [driver * T + t-1]: available at round start / post attenuation
  std::vector<std::uint8_t> avail_pre, avail_post;
  // flattened [edge * T + t-1]
  std::vector<std::uint8_t> probed;
};

inline std::uint64_t policy_salt(const Policy& policy) {
  return static_cast<std::uint64_t>(policy.kind()) + 11;
}

// Core of one trial. Fills `record` when non-null; fills tracking buffers in
// `acc` according to the options.
inline void trial_core(const Instance& inst, const InstanceIndex& ix,
                       const Policy& policy, std::uint64_t master_seed,
                       long trial_index, const SimOptions& opt,
                       TrialAccumulator& acc, TrialRecord* record) {
  const long T = inst.horizon;
  const int n_drivers = static_cast<int>(inst.drivers.size());
  const std::uint64_t salt = policy_salt(policy);

  Rng arrivals_rng(mix_seed(master_seed, kStreamArrivals,
                            static_cast<std::uint64_t>(trial_index),
                            opt.common_arrivals ? 0 : salt));
  Rng policy_rng(mix_seed(master_seed, kStreamPolicy,
                          static_cast<std::uint64_t>(trial_index), salt));
  Rng accept_rng(mix_seed(master_seed, kStreamAcceptance,
                          static_cast<std::uint64_t>(trial_index), salt));

  const ArrivalSampler sampler(ix, T);
  SimState state;
  state.reset(ix);

  std::vector<std::uint8_t> post_avail;
  if (opt.track_availability) {
    acc.avail_pre.assign(static_cast<std::size_t>(n_drivers) * T, 0);
    acc.avail_post.assign(static_cast<std::size_t>(n_drivers) * T, 0);
    state.post_atten_avail = &post_avail;
  }
  if (opt.track_probes)
    acc.probed.assign(inst.edges.size() * static_cast<std::size_t>(T), 0);

  acc.profit = 0.0;
  acc.matched.assign(n_drivers, 0);

  for (long t = 1; t <= T; ++t) {
    if (opt.track_availability)
      for (int u = 0; u < n_drivers; ++u)
        acc.avail_pre[static_cast<std::size_t>(u) * T + (t - 1)] =
            state.remaining[u] > 0;

    const int v = sampler.sample(arrivals_rng);
    post_avail.clear();
    ProbePlan plan = policy.step(v, static_cast<int>(t), state, policy_rng);
    if (opt.track_availability && !post_avail.empty())
      for (int u = 0; u < n_drivers; ++u)
        acc.avail_post[static_cast<std::size_t>(u) * T + (t - 1)] = post_avail[u];

    if (static_cast<int>(plan.edges.size()) > ix.rider_patience[v])
      throw std::logic_error("policy emitted more probes than patience");

    TrialRound round;
    round.rider = v;
    int match = -1;
    for (int f : plan.edges) {
      const int u = ix.edge_driver[f];
      if (state.remaining[u] <= 0) continue;
      const bool accepted = accept_rng.bernoulli(ix.edge_p[f]);
      if (opt.track_probes)
        acc.probed[static_cast<std::size_t>(f) * T + (t - 1)] = 1;
      if (record) {
        round.probes.push_back(f);
        round.accepts.push_back(accepted);
      }
      if (accepted) {
        --state.remaining[u];
        ++state.matched[u];
        if (state.matched[u] > ix.driver_cap[u])
          throw std::logic_error("driver matched beyond capacity");
        acc.profit += ix.edge_w[f];
        match = f;
        break;
      }
    }
    if (record) {
      round.match_edge = match;
      record->rounds.push_back(std::move(round));
    }
  }
  acc.matched = state.matched;
  if (record) {
    record->matched = state.matched;
    record->profit = acc.profit;
  }
}

}  // namespace detail

inline TrialRecord run_trial(const Instance& inst, const InstanceIndex& ix,
                             const Policy& policy, std::uint64_t master_seed,
                             long trial_index, const SimOptions& opt = {}) {
  detail::TrialAccumulator acc;
  TrialRecord record;
  detail::trial_core(inst, ix, policy, master_seed, trial_index, opt, acc, &record);
  return record;
}

// ---------------------------------------------------------------------------
// Aggregated metrics over many trials.

struct Metrics {
  long n_trials = 0;
  double profit_mean = 0.0, profit_stderr = 0.0;
  std::vector<double> driver_match_mean, driver_match_stderr;  // per driver
  double fairness = 0.0, fairness_stderr = 0.0;
  // NaN when the corresponding LP optimum is 0 but value is positive.
  double profit_ratio = 0.0, fairness_ratio = 0.0;
  double lp_profit_opt = 0.0, lp_fairness_opt = 0.0;

  // Tracking output (empty unless requested): means over trials, flattened
  // [driver * T + t-1] / [edge * T + t-1].
  std::vector<double> avail_pre_mean, avail_post_mean;
  std::vector<double> probe_freq;
};

namespace detail {

inline double ratio_or_nan(double value, double opt) {
  if (opt > 0.0) return value / opt;
  if (value <= 1e-12) return 0.0;
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// Runs `n_trials` independent trials and folds the results. The fold is over
// fixed 1024-trial blocks in index order, so any `jobs` count reproduces the
// serial result bit for bit.
inline Metrics monte_carlo(const Instance& inst, const InstanceIndex& ix,
                           const Policy& policy, long n_trials,
                           std::uint64_t master_seed, double lp_profit_opt,
                           double lp_fairness_opt, const SimOptions& opt = {}) {
  if (n_trials < 1) throw std::invalid_argument("monte_carlo: n_trials must be >= 1");
  const long T = inst.horizon;
  const int n_drivers = static_cast<int>(inst.drivers.size());
  const std::size_t n_edges = inst.edges.size();

  constexpr long kBlock = 1024;
  const long n_blocks = (n_trials + kBlock - 1) / kBlock;

  struct BlockSums {
    double profit = 0.0, profit_sq = 0.0;
    std::vector<double> matched, matched_sq;
    std::vector<long> avail_pre, avail_post, probes;
  };
  std::vector<BlockSums> blocks(n_blocks);

  auto run_block = [&](long b) {
    BlockSums& bs = blocks[b];
    bs.matched.assign(n_drivers, 0.0);
    bs.matched_sq.assign(n_drivers, 0.0);
    if (opt.track_availability) {
      bs.avail_pre.assign(static_cast<std::size_t>(n_drivers) * T, 0);
      bs.avail_post.assign(static_cast<std::size_t>(n_drivers) * T, 0);
    }
    if (opt.track_probes) bs.probes.assign(n_edges * T, 0);

    detail::TrialAccumulator acc;
    const long lo = b * kBlock, hi = std::min(n_trials, (b + 1) * kBlock);
    for (long i = lo; i < hi; ++i) {
      detail::trial_core(inst, ix, policy, master_seed, i, opt, acc, nullptr);
      bs.profit += acc.profit;
      bs.profit_sq += acc.profit * acc.profit;
      for (int u = 0; u < n_drivers; ++u) {
        bs.matched[u] += acc.matched[u];
        bs.matched_sq[u] += static_cast<double>(acc.matched[u]) * acc.matched[u];
      }
      if (opt.track_availability)
        for (std::size_t k = 0; k < bs.avail_pre.size(); ++k) {
          bs.avail_pre[k] += acc.avail_pre[k];
          bs.avail_post[k] += acc.avail_post[k];
        }
      if (opt.track_probes)
        for (std::size_t k = 0; k < bs.probes.size(); ++k)
          bs.probes[k] += acc.probed[k];
    }
  };

  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1 || n_blocks == 1) {
    for (long b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    std::atomic<long> next{0};
    for (int w = 0; w < std::min<long>(jobs, n_blocks); ++w)
      pool.emplace_back([&] {
        for (long b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1))
          run_block(b);
      });
    for (auto& th : pool) th.join();
  }

  // Deterministic fold in block order.
  double profit = 0.0, profit_sq = 0.0;
  std::vector<double> matched(n_drivers, 0.0), matched_sq(n_drivers, 0.0);
  std::vector<long> avail_pre, avail_post, probes;
  if (opt.track_availability) {
    avail_pre.assign(static_cast<std::size_t>(n_drivers) * T, 0);
    avail_post.assign(static_cast<std::size_t>(n_drivers) * T, 0);
  }
  if (opt.track_probes) probes.assign(n_edges * T, 0);
  for (const BlockSums& bs : blocks) {
    profit += bs.profit;
    profit_sq += bs.profit_sq;
    for (int u = 0; u < n_drivers; ++u) {
      matched[u] += bs.matched[u];
      matched_sq[u] += bs.matched_sq[u];
    }
    for (std::size_t k = 0; k < avail_pre.size(); ++k) {
      avail_pre[k] += bs.avail_pre[k];
      avail_post[k] += bs.avail_post[k];
    }
    for (std::size_t k = 0; k < probes.size(); ++k) probes[k] += bs.probes[k];
  }

  const double n = static_cast<double>(n_trials);
  auto stderr_of = [n](double sum, double sum_sq) {
    if (n < 2) return 0.0;
    const double mean = sum / n;
    double var = (sum_sq - n * mean * mean) / (n - 1);
    if (var < 0.0) var = 0.0;
    return std::sqrt(var / n);
  };

  Metrics m;
  m.n_trials = n_trials;
  m.lp_profit_opt = lp_profit_opt;
  m.lp_fairness_opt = lp_fairness_opt;
  m.profit_mean = profit / n;
  m.profit_stderr = stderr_of(profit, profit_sq);
  m.driver_match_mean.resize(n_drivers);
  m.driver_match_stderr.resize(n_drivers);
  int argmin = -1;
  for (int u = 0; u < n_drivers; ++u) {
    m.driver_match_mean[u] = matched[u] / n;
    m.driver_match_stderr[u] = stderr_of(matched[u], matched_sq[u]);
    const double rate = m.driver_match_mean[u] / ix.driver_cap[u];
    if (argmin < 0 || rate < m.fairness) {
      m.fairness = rate;
      argmin = u;
    }
  }
  if (argmin >= 0)
    m.fairness_stderr = m.driver_match_stderr[argmin] / ix.driver_cap[argmin];
  m.profit_ratio = detail::ratio_or_nan(m.profit_mean, lp_profit_opt);
  m.fairness_ratio = detail::ratio_or_nan(m.fairness, lp_fairness_opt);

  if (opt.track_availability) {
    m.avail_pre_mean.resize(avail_pre.size());
    m.avail_post_mean.resize(avail_post.size());
    for (std::size_t k = 0; k < avail_pre.size(); ++k) {
      m.avail_pre_mean[k] = avail_pre[k] / n;
      m.avail_post_mean[k] = avail_post[k] / n;
    }
  }
  if (opt.track_probes) {
    m.probe_freq.resize(probes.size());
    for (std::size_t k = 0; k < probes.size(); ++k) m.probe_freq[k] = probes[k] / n;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Exact-expectation oracle for tiny instances: expected profit and per-driver
// expected match counts by full enumeration over arrivals, policy branches,
// rounding decision trees, probe orders and acceptance coins. Validates the
// Monte Carlo engine; enforced bounds keep the state space desk-sized.

struct ExactEval {
  double profit = 0.0;
  std::vector<double> driver_match_expect;
};

namespace detail {

// Exact outcome distribution of the dependent rounding: expands the pairing
// recursion over a fixed entry order.
inline void expand_rounding(std::vector<double> z, double prob,
                            const std::function<void(const std::vector<int>&, double)>& emit,
                            std::vector<int>& scratch) {
  for (double& zi : z) snap(zi);
  std::size_t i = 0;
  while (i < z.size() && !fractional(z[i])) ++i;
  std::size_t j = i + 1;
  while (j < z.size() && !fractional(z[j])) ++j;

  if (j >= z.size()) {
    if (i >= z.size()) {
      scratch.assign(z.size(), 0);
      for (std::size_t k = 0; k < z.size(); ++k) scratch[k] = z[k] > 0.5 ? 1 : 0;
      emit(scratch, prob);
    } else {
      const double p1 = z[i];
      std::vector<double> z1 = z;
      z1[i] = 1.0;
      std::vector<double> z0 = std::move(z);
      z0[i] = 0.0;
      if (p1 > 0.0) expand_rounding(z1, prob * p1, emit, scratch);
      if (p1 < 1.0) expand_rounding(z0, prob * (1.0 - p1), emit, scratch);
    }
    return;
  }

  const double d1 = std::min(1.0 - z[i], z[j]);
  const double d2 = std::min(z[i], 1.0 - z[j]);
  const double p_up = d2 / (d1 + d2);
  {
    std::vector<double> zz = z;
    zz[i] += d1;
    zz[j] -= d1;
    if (p_up > 0.0) expand_rounding(std::move(zz), prob * p_up, emit, scratch);
  }
  {
    std::vector<double> zz = std::move(z);
    zz[i] -= d2;
    zz[j] += d2;
    if (p_up < 1.0) expand_rounding(std::move(zz), prob * (1.0 - p_up), emit, scratch);
  }
}

inline void permutations(int n, const std::function<void(const std::vector<int>&)>& emit) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  std::sort(p.begin(), p.end());
  do {
    emit(p);
  } while (std::next_permutation(p.begin(), p.end()));
}

}  // namespace detail

inline ExactEval exact_eval(const Instance& inst, const PolicyConfig& cfg,
                            const ScaledSolution* scaled_x = nullptr,
                            const ScaledSolution* scaled_y = nullptr) {
  if (cfg.kind == PolicyKind::attenalg)
    throw std::invalid_argument("exact_eval: attenalg is not supported");
  detail::require_valid(inst, "exact_eval");
  const InstanceIndex ix = index_instance(inst);
  const long T = inst.horizon;
  if (T > 6 || inst.riders.size() > 3)
    throw std::invalid_argument("exact_eval: instance exceeds enumeration bounds");
  for (const auto& ev : ix.rider_edges)
    if (ev.size() > 3)
      throw std::invalid_argument("exact_eval: rider degree exceeds enumeration bounds");
  long n_states = 1;
  for (int cap : ix.driver_cap) {
    n_states *= cap + 1;
    if (n_states > 100000)
      throw std::invalid_argument("exact_eval: capacity state space too large");
  }

  // Scaled solutions for warmup; solved here when not supplied.
  std::vector<std::vector<double>> xv, yv;
  if (cfg.kind == PolicyKind::warmup) {
    ScaledSolution sx, sy;
    if (!scaled_x) {
      sx = scale_per_arrival(inst, solve(build_profit_lp(inst)));
      scaled_x = &sx;
    }
    if (!scaled_y) {
      sy = scale_per_arrival(inst, solve(build_fairness_lp(inst)));
      scaled_y = &sy;
    }
    xv = index_scaled(inst, ix, *scaled_x);
    yv = index_scaled(inst, ix, *scaled_y);
  }

  const int n_drivers = static_cast<int>(inst.drivers.size());
  // Mixed-radix encoding of remaining capacities.
  std::vector<long> radix(n_drivers, 1);
  for (int u = 1; u < n_drivers; ++u) radix[u] = radix[u - 1] * (ix.driver_cap[u - 1] + 1);
  auto decode = [&](long code, std::vector<int>& rem) {
    for (int u = 0; u < n_drivers; ++u)
      rem[u] = static_cast<int>(code / radix[u] % (ix.driver_cap[u] + 1));
  };
  auto encode = [&](const std::vector<int>& rem) {
    long code = 0;
    for (int u = 0; u < n_drivers; ++u) code += radix[u] * rem[u];
    return code;
  };

  std::vector<double> dist(n_states, 0.0), next(n_states, 0.0);
  {
    std::vector<int> full = ix.driver_cap;
    dist[encode(full)] = 1.0;
  }
  double profit = 0.0;
  std::vector<double> driver_expect(n_drivers, 0.0);

  std::vector<int> rem(n_drivers), scratch;
  SimState greedy_state;

  for (long t = 1; t <= T; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (long code = 0; code < n_states; ++code) {
      const double p_state = dist[code];
      if (p_state == 0.0) continue;
      decode(code, rem);

      // Resolve the coin walk of one probe plan.
      auto run_plan = [&](const std::vector<int>& plan, double p_path) {
        double p_prefix = p_path;  // all earlier probes rejected
        std::vector<int> rem2 = rem;
        for (int f : plan) {
          const int u = ix.edge_driver[f];
          if (rem2[u] <= 0) continue;
          const double pf = ix.edge_p[f];
          // accepted here
          const double p_acc = p_prefix * pf;
          profit += p_acc * ix.edge_w[f];
          driver_expect[u] += p_acc;
          --rem2[u];
          next[encode(rem2)] += p_acc;
          ++rem2[u];
          p_prefix *= 1.0 - pf;
        }
        next[code] += p_prefix;  // no probe accepted
      };

      for (std::size_t v = 0; v < inst.riders.size(); ++v) {
        const double q = ix.rider_rate[v] / static_cast<double>(T);
        if (q == 0.0) continue;
        const double p_arr = p_state * q;
        const auto& edges = ix.rider_edges[v];
        const int patience = ix.rider_patience[v];

        if (cfg.kind == PolicyKind::greedy_p || cfg.kind == PolicyKind::greedy_f) {
          greedy_state.remaining = rem;
          greedy_state.matched.resize(n_drivers);
          for (int u = 0; u < n_drivers; ++u)
            greedy_state.matched[u] = ix.driver_cap[u] - rem[u];
          const ProbePlan plan = greedy_step(static_cast<int>(v), ix, cfg.kind, greedy_state);
          run_plan(plan.edges, p_arr);
          continue;
        }

        // warmup: reject branch plus the two SR branches.
        const double p_reject = 1.0 - cfg.alpha - cfg.beta;
        if (p_reject > 0.0) next[code] += p_arr * p_reject;
        for (int branch = 0; branch < 2; ++branch) {
          const double pb = branch == 0 ? cfg.alpha : cfg.beta;
          if (pb == 0.0) continue;
          const auto& z = branch == 0 ? xv[v] : yv[v];
          const double fact = [&edges] {
            double f = 1.0;
            for (std::size_t k = 2; k <= edges.size(); ++k) f *= static_cast<double>(k);
            return f;
          }();
          detail::expand_rounding(
              z, 1.0,
              [&](const std::vector<int>& Z, double p_round) {
                detail::permutations(static_cast<int>(edges.size()),
                                     [&](const std::vector<int>& perm) {
                                       std::vector<int> plan;
                                       for (int pos : perm) {
                                         if (!Z[pos]) continue;
                                         const int f = edges[pos];
                                         if (rem[ix.edge_driver[f]] <= 0) continue;
                                         plan.push_back(f);
                                         if (static_cast<int>(plan.size()) >= patience) break;
                                       }
                                       run_plan(plan, p_arr * pb * p_round / fact);
                                     });
              },
              scratch);
        }
      }
    }
    std::swap(dist, next);
  }

  ExactEval out;
  out.profit = profit;
  out.driver_match_expect = std::move(driver_expect);
  return out;
}

}  // namespace fairmatch

#endif  // FAIRMATCH_SIMULATOR_HPP
