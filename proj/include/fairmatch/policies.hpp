#ifndef FAIRMATCH_POLICIES_HPP
#define FAIRMATCH_POLICIES_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairmatch/instance.hpp"
#include "fairmatch/lp.hpp"
#include "fairmatch/rng.hpp"
#include "fairmatch/rounding.hpp"

namespace fairmatch {

enum class PolicyKind { warmup, attenalg, greedy_p, greedy_f };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::warmup: return "warmup";
    case PolicyKind::attenalg: return "attenalg";
    case PolicyKind::greedy_p: return "greedy_p";
    case PolicyKind::greedy_f: return "greedy_f";
  }
  return "?";
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "warmup") return PolicyKind::warmup;
  if (s == "attenalg") return PolicyKind::attenalg;
  if (s == "greedy_p") return PolicyKind::greedy_p;
  if (s == "greedy_f") return PolicyKind::greedy_f;
  throw std::invalid_argument("unknown policy kind: " + s);
}

struct PolicyConfig {
  PolicyKind kind = PolicyKind::warmup;
  double alpha = 0.0, beta = 0.0;       // branch probabilities (LP policies)
  int attenuation_samples = 10000;      // Monte Carlo budget per calibration round
  std::uint64_t seed = 0;
};

inline void validate_config(const PolicyConfig& cfg) {
  if (cfg.kind == PolicyKind::greedy_p || cfg.kind == PolicyKind::greedy_f) return;
  if (cfg.alpha < 0.0 || cfg.beta < 0.0)
    throw std::invalid_argument("policy config: alpha and beta must be >= 0");
  if (cfg.alpha + cfg.beta > 1.0 + 1e-12)
    throw std::invalid_argument("policy config: alpha + beta must be <= 1");
  if (cfg.kind == PolicyKind::attenalg && cfg.attenuation_samples < 1)
    throw std::invalid_argument("policy config: attenuation_samples must be >= 1");
}

// The per-round answer of a policy: the edges to probe, in order, or an
// explicit rejection of the arrival.
struct ProbePlan {
  std::vector<int> edges;  // edge indices, distinct, length <= Delta_v
  bool rejected = false;
};

// Per-trial mutable state owned by the simulator.
struct SimState {
  std::vector<int> remaining;  // per driver, starts at B_u
  std::vector<int> matched;    // per driver
  // Diagnostics sink: when non-null, attenalg writes the post-vertex-
  // attenuation availability of every driver for the current round.
  std::vector<std::uint8_t>* post_atten_avail = nullptr;

  void reset(const InstanceIndex& ix) {
    remaining = ix.driver_cap;
    matched.assign(ix.driver_cap.size(), 0);
  }
};

// ---------------------------------------------------------------------------
// Attenuation schedule: gamma_1 = 1, mu_t = 1 - gamma_t/2,
// gamma_{t+1} = gamma_t (1 - mu_t/T). Their product mean tends to
// (e-1)/(e+1), which is the AttenAlg per-edge rate.

struct Schedule {
  std::vector<double> gamma, mu;  // index t-1 holds round t
};

inline Schedule make_schedule(long T) {
  if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
  Schedule s;
  s.gamma.resize(T);
  s.mu.resize(T);
  double g = 1.0;
  for (long t = 0; t < T; ++t) {
    s.gamma[t] = g;
    s.mu[t] = 1.0 - g / 2.0;
    g *= 1.0 - s.mu[t] / static_cast<double>(T);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Scaled LP solutions in indexed form: entry k of rider v's vector aligns
// with ix.rider_edges[v][k].

inline std::vector<std::vector<double>> index_scaled(const Instance& inst,
                                                     const InstanceIndex& ix,
                                                     const ScaledSolution& scaled) {
  std::vector<std::vector<double>> out(inst.riders.size());
  for (std::size_t v = 0; v < inst.riders.size(); ++v) {
    const auto& entries = scaled.of(inst.riders[v].id);
    out[v].reserve(ix.rider_edges[v].size());
    for (int f : ix.rider_edges[v]) {
      auto it = entries.find(inst.edges[f].id);
      out[v].push_back(it == entries.end() ? 0.0 : it->second);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SR subroutine: dependent rounding followed by a uniformly random probe
// order, keeping only edges whose driver still has capacity. Degree
// preservation caps the rounded vector at Delta_v ones whenever
// sum z <= Delta_v.

inline ProbePlan sr_probe(int rider, const InstanceIndex& ix,
                          std::span<const double> z,
                          const std::vector<int>& remaining, Rng& rng) {
  const auto& edges = ix.rider_edges[rider];
  if (z.size() != edges.size())
    throw std::invalid_argument("sr_probe: z does not match E_v");
  const int patience = ix.rider_patience[rider];
  double total = 0.0;
  for (double zi : z) total += zi;
  if (total > patience + 1e-9)
    throw std::invalid_argument("sr_probe: sum z exceeds patience");

  std::vector<double> work(z.begin(), z.end());
  dependent_round_in_place(work, rng);
  const std::vector<int> perm = rng.permutation(static_cast<int>(edges.size()));

  ProbePlan plan;
  for (int pos : perm) {
    if (work[pos] < 0.5) continue;
    const int f = edges[pos];
    if (remaining[ix.edge_driver[f]] <= 0) continue;
    plan.edges.push_back(f);
    if (static_cast<int>(plan.edges.size()) >= patience) break;
  }
  return plan;
}

// WarmUp(alpha, beta): SR on the profit solution with probability alpha, on
// the fairness solution with probability beta, otherwise reject.
inline ProbePlan warmup_step(int rider, const InstanceIndex& ix,
                             std::span<const double> xv, std::span<const double> yv,
                             double alpha, double beta,
                             const std::vector<int>& remaining, Rng& rng) {
  const double u = rng.next_double();
  if (u < alpha) return sr_probe(rider, ix, xv, remaining, rng);
  if (u < alpha + beta) return sr_probe(rider, ix, yv, remaining, rng);
  ProbePlan plan;
  plan.rejected = true;
  return plan;
}

// Greedy baselines. greedy_p probes available edges by nonincreasing
// w_f p_f; greedy_f by ascending matched-count/B_u of the driver, the rate
// recomputed after each planned probe. Ties go to the lower edge index.
inline ProbePlan greedy_step(int rider, const InstanceIndex& ix, PolicyKind kind,
                             const SimState& state) {
  const auto& edges = ix.rider_edges[rider];
  const int patience = ix.rider_patience[rider];
  ProbePlan plan;

  if (kind == PolicyKind::greedy_p) {
    std::vector<int> avail;
    for (int f : edges)
      if (state.remaining[ix.edge_driver[f]] > 0) avail.push_back(f);
    std::sort(avail.begin(), avail.end(), [&ix](int a, int b) {
      const double wa = ix.edge_w[a] * ix.edge_p[a];
      const double wb = ix.edge_w[b] * ix.edge_p[b];
      if (wa != wb) return wa > wb;
      return a < b;
    });
    for (int f : avail) {
      plan.edges.push_back(f);
      if (static_cast<int>(plan.edges.size()) >= patience) break;
    }
  } else if (kind == PolicyKind::greedy_f) {
    std::vector<int> pool;
    for (int f : edges)
      if (state.remaining[ix.edge_driver[f]] > 0) pool.push_back(f);
    while (!pool.empty() && static_cast<int>(plan.edges.size()) < patience) {
      int best = -1;
      double best_rate = 0.0;
      for (int f : pool) {
        const int u = ix.edge_driver[f];
        const double rate =
            static_cast<double>(state.matched[u]) / ix.driver_cap[u];
        if (best < 0 || rate < best_rate || (rate == best_rate && f < best)) {
          best = f;
          best_rate = rate;
        }
      }
      plan.edges.push_back(best);
      pool.erase(std::find(pool.begin(), pool.end(), best));
    }
  } else {
    throw std::invalid_argument("greedy_step: not a greedy kind");
  }
  if (plan.edges.empty()) plan.rejected = true;
  return plan;
}

// ---------------------------------------------------------------------------
// Attenuation table: per-round vertex and edge keep-factors plus the Monte
// Carlo estimates they were derived from.

struct AttenuationTable {
  long horizon = 0;
  int samples = 0;
  // flattened [driver * T + (t-1)]
  std::vector<double> avail_est, vertex_keep;
  // flattened [edge * T + (t-1)], one set per LP branch
  std::vector<double> probe_est_x, edge_keep_x, probe_est_y, edge_keep_y;

  double vkeep(int u, int t) const { return vertex_keep[u * horizon + (t - 1)]; }
  double ekeep_x(int f, int t) const { return edge_keep_x[f * horizon + (t - 1)]; }
  double ekeep_y(int f, int t) const { return edge_keep_y[f * horizon + (t - 1)]; }
};

// AttenAlg(alpha, beta): per round, block each driver so availability lands
// on gamma_t, then run SR and thin probes so each edge is probed at the
// mu_t-scaled LP rate.
inline ProbePlan attenalg_step(int rider, int t, const InstanceIndex& ix,
                               std::span<const double> xv, std::span<const double> yv,
                               double alpha, double beta,
                               [[maybe_unused]] const Schedule& sched,
                               const AttenuationTable& table, SimState& state,
                               Rng& rng) {
  if (table.horizon < t)
    throw std::invalid_argument("attenalg_step: table not calibrated for round");
  const std::size_t n_drivers = state.remaining.size();

  // Vertex attenuation: one-round blocking, capacity untouched.
  std::vector<std::uint8_t> usable(n_drivers);
  for (std::size_t u = 0; u < n_drivers; ++u) {
    const bool avail = state.remaining[u] > 0;
    usable[u] = avail && rng.bernoulli(table.vkeep(static_cast<int>(u), t));
  }
  if (state.post_atten_avail) *state.post_atten_avail = usable;

  std::vector<int> effective(n_drivers);
  for (std::size_t u = 0; u < n_drivers; ++u)
    effective[u] = usable[u] ? state.remaining[u] : 0;

  const double branch = rng.next_double();
  ProbePlan plan;
  if (branch < alpha) {
    plan = sr_probe(rider, ix, xv, effective, rng);
    std::vector<int> kept;
    for (int f : plan.edges)
      if (rng.bernoulli(table.ekeep_x(f, t))) kept.push_back(f);
    plan.edges = std::move(kept);
  } else if (branch < alpha + beta) {
    plan = sr_probe(rider, ix, yv, effective, rng);
    std::vector<int> kept;
    for (int f : plan.edges)
      if (rng.bernoulli(table.ekeep_y(f, t))) kept.push_back(f);
    plan.edges = std::move(kept);
  } else {
    plan.rejected = true;
  }
  return plan;
}

// Executes a plan against the state: sequential probes, each resolved by an
// independent acceptance coin, stopping at the first match. Returns the
// matched edge index or -1.
inline int execute_plan(const ProbePlan& plan, const InstanceIndex& ix,
                        SimState& state, Rng& rng) {
  for (int f : plan.edges) {
    const int u = ix.edge_driver[f];
    if (state.remaining[u] <= 0) continue;
    if (rng.bernoulli(ix.edge_p[f])) {
      --state.remaining[u];
      ++state.matched[u];
      return f;
    }
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Calibration: estimates, per round, the unattenuated availability and probe
// probabilities by simulating AttenAlg prefixes with the already-calibrated
// rounds, then sets keep-factors so realized probabilities meet the
// schedule's targets. Requires a unit-capacity instance.

namespace detail {

class ArrivalSampler {
 public:
  ArrivalSampler(const InstanceIndex& ix, long T) {
    cum_.reserve(ix.rider_rate.size());
    double acc = 0.0;
    for (double r : ix.rider_rate) {
      acc += r / static_cast<double>(T);
      cum_.push_back(acc);
    }
    if (!cum_.empty()) cum_.back() = 1.0;
  }

  int sample(Rng& rng) const {
    const double u = rng.next_double();
    return static_cast<int>(
        std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
  }

 private:
  std::vector<double> cum_;
};

}  // namespace detail

inline AttenuationTable calibrate_attenuation(
    const Instance& inst, const InstanceIndex& ix,
    const std::vector<std::vector<double>>& xv,
    const std::vector<std::vector<double>>& yv, const PolicyConfig& cfg,
    const Schedule& sched) {
  if (!is_unit_capacity(inst))
    throw std::invalid_argument("calibrate_attenuation: instance must be unit-capacity");
  validate_config(cfg);
  const long T = inst.horizon;
  const int n_drivers = static_cast<int>(inst.drivers.size());
  const int n_edges = static_cast<int>(inst.edges.size());
  const int S = cfg.attenuation_samples;

  AttenuationTable table;
  table.horizon = T;
  table.samples = S;
  table.avail_est.assign(n_drivers * T, 0.0);
  table.vertex_keep.assign(n_drivers * T, 1.0);
  table.probe_est_x.assign(n_edges * T, 0.0);
  table.edge_keep_x.assign(n_edges * T, 1.0);
  table.probe_est_y.assign(n_edges * T, 0.0);
  table.edge_keep_y.assign(n_edges * T, 1.0);

  const detail::ArrivalSampler arrivals(ix, T);

  for (int t = 1; t <= T; ++t) {
    // Availability states at the start of round t under the calibrated
    // prefix, one per sample.
    std::vector<std::uint8_t> avail(static_cast<std::size_t>(S) * n_drivers);
    std::vector<long> avail_count(n_drivers, 0);
    for (int s = 0; s < S; ++s) {
      Rng rng(mix_seed(cfg.seed, 0xca1b0001ULL, static_cast<std::uint64_t>(t),
                       static_cast<std::uint64_t>(s)));
      SimState state;
      state.reset(ix);
      for (int ell = 1; ell < t; ++ell) {
        const int v = arrivals.sample(rng);
        ProbePlan plan = attenalg_step(v, ell, ix, xv[v], yv[v], cfg.alpha,
                                       cfg.beta, sched, table, state, rng);
        execute_plan(plan, ix, state, rng);
      }
      for (int u = 0; u < n_drivers; ++u) {
        const bool a = state.remaining[u] > 0;
        avail[static_cast<std::size_t>(s) * n_drivers + u] = a;
        avail_count[u] += a;
      }
    }
    const double gamma_t = sched.gamma[t - 1];
    const double mu_t = sched.mu[t - 1];
    for (int u = 0; u < n_drivers; ++u) {
      const double a_hat = static_cast<double>(avail_count[u]) / S;
      table.avail_est[u * T + (t - 1)] = a_hat;
      table.vertex_keep[u * T + (t - 1)] =
          a_hat > 0.0 ? std::min(1.0, gamma_t / a_hat) : 1.0;
    }

    // Unattenuated probe probabilities at round t, conditioned on the edge's
    // driver surviving the round-t vertex attenuation.
    std::vector<long> denom(n_edges, 0), num_x(n_edges, 0), num_y(n_edges, 0);
    std::vector<int> effective(n_drivers);
    for (int s = 0; s < S; ++s) {
      Rng rng(mix_seed(cfg.seed, 0xca1b0002ULL, static_cast<std::uint64_t>(t),
                       static_cast<std::uint64_t>(s)));
      for (int u = 0; u < n_drivers; ++u) {
        const bool a = avail[static_cast<std::size_t>(s) * n_drivers + u];
        effective[u] =
            (a && rng.bernoulli(table.vkeep(u, t))) ? 1 : 0;
      }
      for (int v = 0; v < static_cast<int>(inst.riders.size()); ++v) {
        for (int branch = 0; branch < 2; ++branch) {
          const auto& z = branch == 0 ? xv[v] : yv[v];
          auto& num = branch == 0 ? num_x : num_y;
          ProbePlan plan = sr_probe(v, ix, z, effective, rng);
          // Walk the unattenuated plan and flip acceptance coins to find
          // which probes actually happen before the first match.
          std::vector<std::uint8_t> probed(plan.edges.size(), 0);
          for (std::size_t k = 0; k < plan.edges.size(); ++k) {
            probed[k] = 1;
            if (rng.bernoulli(ix.edge_p[plan.edges[k]])) break;
          }
          if (branch == 0) {
            for (int f : ix.rider_edges[v])
              if (effective[ix.edge_driver[f]] > 0) ++denom[f];
          }
          for (std::size_t k = 0; k < plan.edges.size(); ++k)
            if (probed[k]) ++num[plan.edges[k]];
        }
      }
    }
    for (int v = 0; v < static_cast<int>(inst.riders.size()); ++v) {
      const double r = ix.rider_rate[v];
      for (std::size_t k = 0; k < ix.rider_edges[v].size(); ++k) {
        const int f = ix.rider_edges[v][k];
        if (denom[f] == 0) continue;
        const double px = static_cast<double>(num_x[f]) / denom[f];
        const double py = static_cast<double>(num_y[f]) / denom[f];
        table.probe_est_x[f * T + (t - 1)] = px;
        table.probe_est_y[f * T + (t - 1)] = py;
        if (r > 0.0) {
          const double tx = mu_t * xv[v][k];
          const double ty = mu_t * yv[v][k];
          table.edge_keep_x[f * T + (t - 1)] = px > 0.0 ? std::min(1.0, tx / px) : 1.0;
          table.edge_keep_y[f * T + (t - 1)] = py > 0.0 ? std::min(1.0, ty / py) : 1.0;
        }
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Policy interface consumed by the simulator. Instances are immutable after
// construction and safe to share across concurrent trials.

class Policy {
 public:
  virtual ~Policy() = default;
  virtual ProbePlan step(int rider, int t, SimState& state, Rng& rng) const = 0;
  virtual PolicyKind kind() const = 0;
};

class WarmupPolicy final : public Policy {
 public:
  WarmupPolicy(const InstanceIndex& ix, std::vector<std::vector<double>> xv,
               std::vector<std::vector<double>> yv, double alpha, double beta)
      : ix_(ix), xv_(std::move(xv)), yv_(std::move(yv)), alpha_(alpha), beta_(beta) {}

  ProbePlan step(int rider, int, SimState& state, Rng& rng) const override {
    return warmup_step(rider, ix_, xv_[rider], yv_[rider], alpha_, beta_,
                       state.remaining, rng);
  }
  PolicyKind kind() const override { return PolicyKind::warmup; }

 private:
  const InstanceIndex& ix_;
  std::vector<std::vector<double>> xv_, yv_;
  double alpha_, beta_;
};

class GreedyPolicy final : public Policy {
 public:
  GreedyPolicy(const InstanceIndex& ix, PolicyKind kind) : ix_(ix), kind_(kind) {
    if (kind != PolicyKind::greedy_p && kind != PolicyKind::greedy_f)
      throw std::invalid_argument("GreedyPolicy: not a greedy kind");
  }

  ProbePlan step(int rider, int, SimState& state, Rng&) const override {
    return greedy_step(rider, ix_, kind_, state);
  }
  PolicyKind kind() const override { return kind_; }

 private:
  const InstanceIndex& ix_;
  PolicyKind kind_;
};

class AttenPolicy final : public Policy {
 public:
  AttenPolicy(const InstanceIndex& ix, std::vector<std::vector<double>> xv,
              std::vector<std::vector<double>> yv, double alpha, double beta,
              Schedule sched, AttenuationTable table)
      : ix_(ix), xv_(std::move(xv)), yv_(std::move(yv)), alpha_(alpha),
        beta_(beta), sched_(std::move(sched)), table_(std::move(table)) {}

  ProbePlan step(int rider, int t, SimState& state, Rng& rng) const override {
    return attenalg_step(rider, t, ix_, xv_[rider], yv_[rider], alpha_, beta_,
                         sched_, table_, state, rng);
  }
  PolicyKind kind() const override { return PolicyKind::attenalg; }
  const AttenuationTable& table() const { return table_; }
  const Schedule& schedule() const { return sched_; }

 private:
  const InstanceIndex& ix_;
  std::vector<std::vector<double>> xv_, yv_;
  double alpha_, beta_;
  Schedule sched_;
  AttenuationTable table_;
};

}  // namespace fairmatch

#endif  // FAIRMATCH_POLICIES_HPP
