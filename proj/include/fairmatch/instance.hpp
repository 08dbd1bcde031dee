#ifndef FAIRMATCH_INSTANCE_HPP
#define FAIRMATCH_INSTANCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fairmatch/rng.hpp"

namespace fairmatch {

// A driver type: a group of interchangeable drivers sharing attributes.
// `capacity` is the number of drivers of this type (B_u).
struct DriverType {
  std::string id;
  int capacity = 1;
  std::map<std::string, std::string> attributes;
};

// A rider type with its expected number of arrivals over the horizon
// (`arrival_rate`, r_v) and probe tolerance per arrival (`patience`, Delta_v).
struct RiderType {
  std::string id;
  double arrival_rate = 0.0;
  int patience = 1;
  std::map<std::string, std::string> attributes;
};

// A compatible (driver type, rider type) pair. `accept_prob` (p_f) is the
// probability the rider accepts a probe on this edge; `weight` (w_f) is the
// platform profit of a match.
struct Edge {
  std::string id;
  std::string driver;
  std::string rider;
  double accept_prob = 1.0;
  double weight = 0.0;
};

struct Instance {
  std::vector<DriverType> drivers;
  std::vector<RiderType> riders;
  std::vector<Edge> edges;
  long horizon = 0;  // T, number of online rounds
};

// ---------------------------------------------------------------------------
// Validation

struct ValidationIssue {
  std::string id;    // offending driver/rider/edge id ("" for instance-level)
  std::string rule;  // violated rule, human readable
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const {
    std::string s;
    for (const auto& i : issues) {
      s += i.id.empty() ? i.rule : (i.id + ": " + i.rule);
      s += '\n';
    }
    return s;
  }
};

inline ValidationReport validate(const Instance& inst) {
  ValidationReport rep;
  auto flag = [&rep](const std::string& id, const std::string& rule) {
    rep.issues.push_back({id, rule});
  };

  if (inst.horizon < 1) flag("", "horizon must be >= 1");

  std::unordered_set<std::string> driver_ids, rider_ids, edge_ids;
  for (const auto& d : inst.drivers) {
    if (!driver_ids.insert(d.id).second) flag(d.id, "duplicate driver id");
    if (d.capacity < 1) flag(d.id, "capacity must be >= 1");
  }
  double rate_sum = 0.0;
  for (const auto& r : inst.riders) {
    if (!rider_ids.insert(r.id).second) flag(r.id, "duplicate rider id");
    if (r.patience < 1) flag(r.id, "patience must be >= 1");
    if (r.arrival_rate < 0.0) flag(r.id, "arrival_rate must be >= 0");
    rate_sum += r.arrival_rate;
  }
  for (const auto& e : inst.edges) {
    if (!edge_ids.insert(e.id).second) flag(e.id, "duplicate edge id");
    if (!(e.accept_prob > 0.0) || e.accept_prob > 1.0)
      flag(e.id, "accept_prob in (0,1]");
    if (e.weight < 0.0) flag(e.id, "weight must be >= 0");
    if (!driver_ids.count(e.driver)) flag(e.id, "unknown driver id " + e.driver);
    if (!rider_ids.count(e.rider)) flag(e.id, "unknown rider id " + e.rider);
  }
  if (std::abs(rate_sum - static_cast<double>(inst.horizon)) > 1e-9)
    flag("", "sum of arrival rates must equal horizon T");
  return rep;
}

// ---------------------------------------------------------------------------
// Integer-indexed view of an instance. Built once, shared read-only by the
// LP builders, the policies and the simulator.

struct InstanceIndex {
  std::unordered_map<std::string, int> driver_of_id, rider_of_id, edge_of_id;
  std::vector<int> edge_driver, edge_rider;  // per edge
  std::vector<double> edge_p, edge_w;
  std::vector<std::vector<int>> rider_edges;   // E_v, in instance edge order
  std::vector<std::vector<int>> driver_edges;  // E_u
  std::vector<int> driver_cap, rider_patience;
  std::vector<double> rider_rate;
};

inline InstanceIndex index_instance(const Instance& inst) {
  InstanceIndex ix;
  ix.driver_of_id.reserve(inst.drivers.size());
  for (int i = 0; i < static_cast<int>(inst.drivers.size()); ++i) {
    ix.driver_of_id.emplace(inst.drivers[i].id, i);
    ix.driver_cap.push_back(inst.drivers[i].capacity);
  }
  for (int i = 0; i < static_cast<int>(inst.riders.size()); ++i) {
    ix.rider_of_id.emplace(inst.riders[i].id, i);
    ix.rider_patience.push_back(inst.riders[i].patience);
    ix.rider_rate.push_back(inst.riders[i].arrival_rate);
  }
  ix.rider_edges.resize(inst.riders.size());
  ix.driver_edges.resize(inst.drivers.size());
  for (int i = 0; i < static_cast<int>(inst.edges.size()); ++i) {
    const Edge& e = inst.edges[i];
    ix.edge_of_id.emplace(e.id, i);
    const int u = ix.driver_of_id.at(e.driver);
    const int v = ix.rider_of_id.at(e.rider);
    ix.edge_driver.push_back(u);
    ix.edge_rider.push_back(v);
    ix.edge_p.push_back(e.accept_prob);
    ix.edge_w.push_back(e.weight);
    ix.rider_edges[v].push_back(i);
    ix.driver_edges[u].push_back(i);
  }
  return ix;
}

inline bool is_unit_capacity(const Instance& inst) {
  return std::all_of(inst.drivers.begin(), inst.drivers.end(),
                     [](const DriverType& d) { return d.capacity == 1; });
}

// ---------------------------------------------------------------------------
// Unit-capacity reduction: each driver type with capacity B becomes B copies
// of capacity 1, each incident edge is duplicated per copy. `copy_to_original`
// maps new driver ids back so per-type results can be folded.

struct UnitCapacityResult {
  Instance instance;
  std::map<std::string, std::string> copy_to_original;
};

inline UnitCapacityResult to_unit_capacity(const Instance& inst) {
  {
    const ValidationReport rep = validate(inst);
    if (!rep.ok())
      throw std::invalid_argument("to_unit_capacity: invalid instance:\n" +
                                  rep.to_string());
  }
  UnitCapacityResult out;
  out.instance.riders = inst.riders;
  out.instance.horizon = inst.horizon;

  std::unordered_map<std::string, std::vector<std::string>> copies_of;
  for (const auto& d : inst.drivers) {
    auto& copies = copies_of[d.id];
    for (int k = 0; k < d.capacity; ++k) {
      DriverType c;
      c.id = d.id + "#" + std::to_string(k);
      c.capacity = 1;
      c.attributes = d.attributes;
      out.instance.drivers.push_back(c);
      out.copy_to_original[c.id] = d.id;
      copies.push_back(c.id);
    }
  }
  for (const auto& e : inst.edges) {
    const auto& copies = copies_of.at(e.driver);
    for (std::size_t k = 0; k < copies.size(); ++k) {
      Edge c = e;
      c.id = e.id + "#" + std::to_string(k);
      c.driver = copies[k];
      out.instance.edges.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hardness family: n disjoint star units. Unit i has rider v_i (r=1, Delta=1)
// with two unit-capacity drivers, one sure edge (p=1) and one flaky edge
// (p=eps), all weights 1, T=n. LP-(1) optimum is n, LP-(2) optimum is
// eps/(1+eps), and no policy can sum ratios above 1+2*eps against them.

inline Instance gen_hardness(int n, double eps) {
  if (n < 1) throw std::invalid_argument("gen_hardness: n must be >= 1");
  if (!(eps > 0.0) || !(eps < 1.0))
    throw std::invalid_argument("gen_hardness: eps must be in (0,1)");
  Instance inst;
  inst.horizon = n;
  for (int i = 1; i <= n; ++i) {
    const std::string si = std::to_string(i);
    inst.drivers.push_back({"u" + si + "a", 1, {}});
    inst.drivers.push_back({"u" + si + "b", 1, {}});
    inst.riders.push_back({"v" + si, 1.0, 1, {}});
    inst.edges.push_back({"e" + si + "a", "u" + si + "a", "v" + si, 1.0, 1.0});
    inst.edges.push_back({"e" + si + "b", "u" + si + "b", "v" + si, eps, 1.0});
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Synthetic generator mimicking the trip-record pipeline: types on a grid,
// two demographic groups at a 1:2 disadvantaged:advantaged ratio, acceptance
// probabilities by group pair scaled by eta, profits from normalized trip
// length.

// Acceptance probabilities per (driver group, rider group), before eta
// scaling. Groups are "A" (advantaged) and "D" (disadvantaged).
struct GroupAcceptProbs {
  double aa = 0.6, ad = 0.1, da = 0.1, dd = 0.3;
  double get(bool driver_disadvantaged, bool rider_disadvantaged) const {
    if (!driver_disadvantaged) return rider_disadvantaged ? ad : aa;
    return rider_disadvantaged ? dd : da;
  }
};

struct GeneratorParams {
  int num_driver_types = 57;
  int num_rider_types = 134;
  int capacity_bound = 10;  // B_u drawn uniformly from [1, B]
  GroupAcceptProbs base_accept_probs;
  double scale_eta = 0.5;  // p_f = eta + (1-eta) * base
  std::vector<int> patience_choices = {1, 2};
  double rate_mean = 5.0;
  double rate_stddev = 1.0;
  int grid_rows = 40;
  int grid_cols = 11;
  int edge_distance_threshold = 1;
  std::uint64_t seed = 0;
};

inline void validate_params(const GeneratorParams& p) {
  auto bad = [](const std::string& what) {
    throw std::invalid_argument("generator params: " + what);
  };
  if (p.num_driver_types < 1) bad("num_driver_types must be >= 1");
  if (p.num_rider_types < 1) bad("num_rider_types must be >= 1");
  if (p.capacity_bound < 1) bad("capacity_bound must be >= 1");
  if (p.scale_eta < 0.0 || p.scale_eta > 1.0) bad("scale_eta must be in [0,1]");
  for (double b : {p.base_accept_probs.aa, p.base_accept_probs.ad,
                   p.base_accept_probs.da, p.base_accept_probs.dd})
    if (b < 0.0 || b > 1.0) bad("base accept probs must be in [0,1]");
  if (p.patience_choices.empty()) bad("patience_choices must be nonempty");
  for (int d : p.patience_choices)
    if (d < 1) bad("patience_choices entries must be >= 1");
  if (p.rate_stddev < 0.0) bad("rate_stddev must be >= 0");
  if (p.grid_rows < 1 || p.grid_cols < 1) bad("grid must be nonempty");
  if (p.edge_distance_threshold < 0) bad("edge_distance_threshold must be >= 0");
}

namespace detail {

inline int manhattan(int cell_a, int cell_b, int grid_cols) {
  const int ra = cell_a / grid_cols, ca = cell_a % grid_cols;
  const int rb = cell_b / grid_cols, cb = cell_b % grid_cols;
  return std::abs(ra - rb) + std::abs(ca - cb);
}

// Group labels at an exact 1:2 disadvantaged:advantaged ratio (count rounded
// down), placed by a seeded shuffle. true = disadvantaged.
inline std::vector<bool> group_labels(int n, Rng& rng) {
  std::vector<bool> g(n, false);
  const int n_dis = n / 3;
  for (int i = 0; i < n_dis; ++i) g[i] = true;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<bool> out(n);
  for (int i = 0; i < n; ++i) out[order[i]] = g[i];
  return out;
}

// Truncate normal rate draws below at 0.1, round the total to get an integer
// horizon, then rescale so the rates sum to it exactly.
inline long normalize_rates(std::vector<double>& rates) {
  double sum = 0.0;
  for (double r : rates) sum += r;
  long horizon = std::lround(sum);
  if (horizon < 1) horizon = 1;
  const double scale = static_cast<double>(horizon) / sum;
  double acc = 0.0;
  for (double& r : rates) {
    r *= scale;
    acc += r;
  }
  // Absorb the last ulps into the largest entry so the sum is exact.
  const double drift = static_cast<double>(horizon) - acc;
  auto it = std::max_element(rates.begin(), rates.end());
  *it += drift;
  return horizon;
}

}  // namespace detail

inline Instance gen_synthetic(const GeneratorParams& params) {
  validate_params(params);
  const int n_cells = params.grid_rows * params.grid_cols;
  if (params.num_driver_types > 2 * n_cells)
    throw std::invalid_argument("generator params: more driver types than (cell, group) slots");

  Rng rng(mix_seed(params.seed, 0x67656e31ULL));
  Instance inst;

  // Drivers: distinct (cell, group) pairs; groups hit the 1:2 ratio exactly.
  const std::vector<bool> driver_dis = detail::group_labels(params.num_driver_types, rng);
  std::vector<int> driver_cell(params.num_driver_types);
  {
    std::unordered_set<long> taken;
    for (int i = 0; i < params.num_driver_types; ++i) {
      int cell;
      do {
        cell = static_cast<int>(rng.next_below(n_cells));
      } while (!taken.insert(2L * cell + (driver_dis[i] ? 1 : 0)).second);
      driver_cell[i] = cell;
    }
  }
  for (int i = 0; i < params.num_driver_types; ++i) {
    DriverType d;
    d.id = "u" + std::to_string(i);
    d.capacity = rng.uniform_int(1, params.capacity_bound);
    d.attributes["cell"] = std::to_string(driver_cell[i]);
    d.attributes["group"] = driver_dis[i] ? "D" : "A";
    inst.drivers.push_back(std::move(d));
  }

  // Rider origins are drawn from cells reachable from some driver within the
  // edge distance threshold, so every rider type has at least one edge.
  std::vector<int> covered;
  for (int cell = 0; cell < n_cells; ++cell) {
    for (int dc : driver_cell) {
      if (detail::manhattan(cell, dc, params.grid_cols) <= params.edge_distance_threshold) {
        covered.push_back(cell);
        break;
      }
    }
  }

  const std::vector<bool> rider_dis = detail::group_labels(params.num_rider_types, rng);
  std::vector<int> rider_origin(params.num_rider_types), rider_dest(params.num_rider_types);
  {
    std::unordered_set<long long> taken;
    for (int i = 0; i < params.num_rider_types; ++i) {
      int origin, dest;
      do {
        origin = covered[rng.next_below(covered.size())];
        do {
          dest = static_cast<int>(rng.next_below(n_cells));
        } while (dest == origin && n_cells > 1);
        const long long key =
            ((static_cast<long long>(origin) * n_cells + dest) << 1) | (rider_dis[i] ? 1 : 0);
        if (taken.insert(key).second) break;
      } while (true);
      rider_origin[i] = origin;
      rider_dest[i] = dest;
    }
  }

  std::vector<int> patience(params.num_rider_types);
  for (int i = 0; i < params.num_rider_types; ++i)
    patience[i] = params.patience_choices[rng.next_below(params.patience_choices.size())];

  std::vector<double> rates(params.num_rider_types);
  for (int i = 0; i < params.num_rider_types; ++i)
    rates[i] = std::max(0.1, rng.normal(params.rate_mean, params.rate_stddev));
  inst.horizon = detail::normalize_rates(rates);

  int max_len = 1;
  for (int i = 0; i < params.num_rider_types; ++i)
    max_len = std::max(max_len, detail::manhattan(rider_origin[i], rider_dest[i], params.grid_cols));

  for (int i = 0; i < params.num_rider_types; ++i) {
    RiderType r;
    r.id = "v" + std::to_string(i);
    r.arrival_rate = rates[i];
    r.patience = patience[i];
    r.attributes["origin"] = std::to_string(rider_origin[i]);
    r.attributes["destination"] = std::to_string(rider_dest[i]);
    r.attributes["group"] = rider_dis[i] ? "D" : "A";
    inst.riders.push_back(std::move(r));
  }

  int edge_count = 0;
  for (int v = 0; v < params.num_rider_types; ++v) {
    bool has_edge = false;
    const double w =
        static_cast<double>(detail::manhattan(rider_origin[v], rider_dest[v], params.grid_cols)) /
        max_len;
    for (int u = 0; u < params.num_driver_types; ++u) {
      if (detail::manhattan(driver_cell[u], rider_origin[v], params.grid_cols) >
          params.edge_distance_threshold)
        continue;
      Edge e;
      e.id = "e" + std::to_string(edge_count++);
      e.driver = inst.drivers[u].id;
      e.rider = inst.riders[v].id;
      e.accept_prob = params.scale_eta +
                      (1.0 - params.scale_eta) *
                          params.base_accept_probs.get(driver_dis[u], rider_dis[v]);
      e.weight = w;
      inst.edges.push_back(std::move(e));
      has_edge = true;
    }
    if (!has_edge && rates[v] > 0.0)
      throw std::runtime_error("gen_synthetic: rider " + inst.riders[v].id +
                               " has positive rate but no edges");
  }
  return inst;
}

// Fold per-copy values from a unit-capacity expansion back onto the original
// driver types (sums per original id).
inline std::vector<double> fold_driver_values(
    const Instance& original, const Instance& expanded,
    const std::map<std::string, std::string>& copy_to_original,
    const std::vector<double>& per_copy) {
  std::unordered_map<std::string, int> orig_index;
  for (int i = 0; i < static_cast<int>(original.drivers.size()); ++i)
    orig_index.emplace(original.drivers[i].id, i);
  std::vector<double> out(original.drivers.size(), 0.0);
  for (int i = 0; i < static_cast<int>(expanded.drivers.size()); ++i)
    out[orig_index.at(copy_to_original.at(expanded.drivers[i].id))] += per_copy[i];
  return out;
}

}  // namespace fairmatch

#endif  // FAIRMATCH_INSTANCE_HPP
