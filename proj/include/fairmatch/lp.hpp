#ifndef FAIRMATCH_LP_HPP
#define FAIRMATCH_LP_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairmatch/instance.hpp"

namespace fairmatch {

// Benchmark linear programs. LP-(1) maximizes expected profit, LP-(2) the
// linearized max-min fairness; both share the probe-count constraint system:
//   sum_{f in E_u} x_f p_f <= B_u            per driver
//   sum_{f in E_v} x_f     <= Delta_v r_v    per rider
//   sum_{f in E_v} x_f p_f <= r_v            per rider
//   0 <= x_f <= r_v                          per edge
// Their optima upper-bound the clairvoyant offline optimum, which is what
// makes them valid competitive-ratio denominators.

enum class Relation { le, eq, ge };

struct LpConstraint {
  std::vector<double> coeffs;  // dense, one per variable
  Relation rel = Relation::le;
  double rhs = 0.0;
  std::string name;
};

struct LpModel {
  std::vector<double> objective;  // maximized
  std::vector<LpConstraint> constraints;
  std::vector<double> lower, upper;  // upper may be +infinity
  std::vector<std::string> labels;   // edge id per x-variable, "eta" for the aux
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> values;
  std::vector<std::string> labels;
  double objective_value = 0.0;

  double value(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return values[i];
    throw std::out_of_range("no variable labeled " + label);
  }
};

constexpr double kLpFeasTol = 1e-8;
constexpr double kLpOptTol = 1e-9;

// ---------------------------------------------------------------------------
// Model construction

namespace detail {

inline void require_valid(const Instance& inst, const char* who) {
  const ValidationReport rep = validate(inst);
  if (!rep.ok())
    throw std::invalid_argument(std::string(who) + ": invalid instance:\n" +
                                rep.to_string());
}

// Constraints (3)-(6) shared by both benchmark LPs. `n_vars` lets the
// fairness variant append the auxiliary variable column.
inline void add_common_constraints(const Instance& inst, const InstanceIndex& ix,
                                   std::size_t n_vars, LpModel& m) {
  for (std::size_t u = 0; u < inst.drivers.size(); ++u) {
    LpConstraint c;
    c.coeffs.assign(n_vars, 0.0);
    for (int f : ix.driver_edges[u]) c.coeffs[f] = ix.edge_p[f];
    c.rel = Relation::le;
    c.rhs = ix.driver_cap[u];
    c.name = "cap_" + inst.drivers[u].id;
    m.constraints.push_back(std::move(c));
  }
  for (std::size_t v = 0; v < inst.riders.size(); ++v) {
    LpConstraint c;
    c.coeffs.assign(n_vars, 0.0);
    for (int f : ix.rider_edges[v]) c.coeffs[f] = 1.0;
    c.rel = Relation::le;
    c.rhs = ix.rider_patience[v] * ix.rider_rate[v];
    c.name = "patience_" + inst.riders[v].id;
    m.constraints.push_back(std::move(c));

    LpConstraint c2;
    c2.coeffs.assign(n_vars, 0.0);
    for (int f : ix.rider_edges[v]) c2.coeffs[f] = ix.edge_p[f];
    c2.rel = Relation::le;
    c2.rhs = ix.rider_rate[v];
    c2.name = "rate_" + inst.riders[v].id;
    m.constraints.push_back(std::move(c2));
  }
}

}  // namespace detail

inline LpModel build_profit_lp(const Instance& inst) {
  detail::require_valid(inst, "build_profit_lp");
  const InstanceIndex ix = index_instance(inst);
  const std::size_t n = inst.edges.size();

  LpModel m;
  m.objective.resize(n);
  m.lower.assign(n, 0.0);
  m.upper.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    m.objective[f] = ix.edge_w[f] * ix.edge_p[f];
    m.upper[f] = ix.rider_rate[ix.edge_rider[f]];
    m.labels.push_back(inst.edges[f].id);
  }
  detail::add_common_constraints(inst, ix, n, m);
  return m;
}

inline LpModel build_fairness_lp(const Instance& inst) {
  detail::require_valid(inst, "build_fairness_lp");
  const InstanceIndex ix = index_instance(inst);
  const std::size_t n = inst.edges.size();
  const std::size_t eta = n;  // auxiliary max-min variable, last column

  LpModel m;
  m.objective.assign(n + 1, 0.0);
  m.objective[eta] = 1.0;
  m.lower.assign(n + 1, 0.0);
  m.upper.resize(n + 1);
  for (std::size_t f = 0; f < n; ++f) {
    m.upper[f] = ix.rider_rate[ix.edge_rider[f]];
    m.labels.push_back(inst.edges[f].id);
  }
  m.upper[eta] = std::numeric_limits<double>::infinity();
  m.labels.push_back("eta");

  // eta <= (sum_{f in E_u} x_f p_f) / B_u for every driver
  for (std::size_t u = 0; u < inst.drivers.size(); ++u) {
    LpConstraint c;
    c.coeffs.assign(n + 1, 0.0);
    for (int f : ix.driver_edges[u]) c.coeffs[f] = -ix.edge_p[f] / ix.driver_cap[u];
    c.coeffs[eta] = 1.0;
    c.rel = Relation::le;
    c.rhs = 0.0;
    c.name = "minrate_" + inst.drivers[u].id;
    m.constraints.push_back(std::move(c));
  }
  detail::add_common_constraints(inst, ix, n + 1, m);
  return m;
}

// ---------------------------------------------------------------------------
// Dense two-phase primal simplex on the bounded standard form, Bland's rule
// throughout. Deliberately dense and pivot-order-deterministic: desk-scale
// models are tiny and downstream policies rely on a reproducible optimum.

namespace detail {

class Simplex {
 public:
  explicit Simplex(const LpModel& model) : model_(model) {
    n_ = model.objective.size();
    m_ = model.constraints.size();
    for (const auto& c : model.constraints)
      if (c.coeffs.size() != n_)
        throw std::invalid_argument("lp solve: constraint dimension mismatch");
    if (model.lower.size() != n_ || model.upper.size() != n_ ||
        (!model.labels.empty() && model.labels.size() != n_))
      throw std::invalid_argument("lp solve: bound/label dimension mismatch");
    for (std::size_t j = 0; j < n_; ++j) {
      if (!std::isfinite(model.lower[j]))
        throw std::invalid_argument("lp solve: lower bounds must be finite");
      if (model.lower[j] > model.upper[j] + 1e-12)
        throw std::invalid_argument("lp solve: lower bound exceeds upper bound");
    }
  }

  LpSolution run() {
    build_tableau();
    LpSolution sol;
    sol.labels = model_.labels;

    phase_one_costs();
    iterate(/*phase_two=*/false);
    double infeas = 0.0;
    for (std::size_t j = first_artificial_; j < cols_; ++j) infeas += val_[j];
    if (infeas > 1e-7) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
    // Artificials are pinned at zero for phase II; they leave the basis on
    // the first degenerate pivot that touches them.
    for (std::size_t j = first_artificial_; j < cols_; ++j) {
      lo_[j] = hi_[j] = 0.0;
      val_[j] = 0.0;
    }
    phase_two_costs();
    const bool bounded = iterate(/*phase_two=*/true);
    if (!bounded) {
      sol.status = LpStatus::unbounded;
      return sol;
    }

    sol.status = LpStatus::optimal;
    sol.values.resize(n_);
    double obj = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      double x = val_[j];
      x = std::min(std::max(x, model_.lower[j]), model_.upper[j]);
      sol.values[j] = x;
      obj += model_.objective[j] * x;
    }
    sol.objective_value = obj;
    return sol;
  }

 private:
  static constexpr double kPivTol = 1e-9;
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  enum class VarState : unsigned char { basic, at_lower, at_upper };

  const LpModel& model_;
  std::size_t n_ = 0, m_ = 0;
  std::size_t cols_ = 0, first_artificial_ = 0;
  std::vector<std::vector<double>> tab_;  // m_ rows, cols_ columns
  std::vector<double> obj_;               // reduced cost row
  std::vector<double> val_, lo_, hi_;
  std::vector<VarState> state_;
  std::vector<int> basis_;  // variable index per row

  void build_tableau() {
    // Columns: structurals, one slack per row, then artificials as needed.
    // ">=" rows are negated so every slack lives in [0, inf).
    std::vector<std::vector<double>> rows(m_);
    std::vector<double> b(m_);
    std::vector<bool> eq_row(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      const LpConstraint& c = model_.constraints[i];
      rows[i] = c.coeffs;
      b[i] = c.rhs;
      eq_row[i] = c.rel == Relation::eq;
      if (c.rel == Relation::ge) {
        for (double& a : rows[i]) a = -a;
        b[i] = -b[i];
      }
    }

    const std::size_t slack0 = n_;
    cols_ = n_ + m_;
    lo_.assign(cols_, 0.0);
    hi_.assign(cols_, kInf);
    val_.assign(cols_, 0.0);
    state_.assign(cols_, VarState::at_lower);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = model_.lower[j];
      hi_[j] = model_.upper[j];
      val_[j] = lo_[j];
    }
    for (std::size_t i = 0; i < m_; ++i)
      if (eq_row[i]) hi_[slack0 + i] = 0.0;

    // Residual once structurals sit at their lower bounds.
    std::vector<double> resid(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n_; ++j) dot += rows[i][j] * val_[j];
      resid[i] = b[i] - dot;
    }

    std::vector<int> art_sign(m_, 0);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      const bool slack_ok = eq_row[i] ? std::abs(resid[i]) == 0.0 : resid[i] >= 0.0;
      if (!slack_ok) {
        art_sign[i] = resid[i] > 0.0 ? 1 : -1;
        ++n_art;
      }
    }
    first_artificial_ = cols_;
    cols_ += n_art;
    lo_.resize(cols_, 0.0);
    hi_.resize(cols_, kInf);
    val_.resize(cols_, 0.0);
    state_.resize(cols_, VarState::at_lower);

    tab_.assign(m_, std::vector<double>(cols_, 0.0));
    basis_.assign(m_, -1);
    std::size_t next_art = first_artificial_;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) tab_[i][j] = rows[i][j];
      tab_[i][slack0 + i] = 1.0;
      if (art_sign[i] == 0) {
        basis_[i] = static_cast<int>(slack0 + i);
        state_[slack0 + i] = VarState::basic;
        val_[slack0 + i] = resid[i];
      } else {
        tab_[i][next_art] = static_cast<double>(art_sign[i]);
        basis_[i] = static_cast<int>(next_art);
        state_[next_art] = VarState::basic;
        val_[next_art] = std::abs(resid[i]);
        ++next_art;
      }
    }
  }

  // obj_[j] = c_j - c_B . (B^-1 A)_j for the given raw costs.
  void reduce_costs(const std::vector<double>& costs) {
    obj_ = costs;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = costs[basis_[i]];
      if (cb == 0.0) continue;
      const std::vector<double>& row = tab_[i];
      for (std::size_t j = 0; j < cols_; ++j) obj_[j] -= cb * row[j];
    }
  }

  void phase_one_costs() {
    std::vector<double> costs(cols_, 0.0);
    for (std::size_t j = first_artificial_; j < cols_; ++j) costs[j] = -1.0;
    reduce_costs(costs);
  }

  void phase_two_costs() {
    std::vector<double> costs(cols_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) costs[j] = model_.objective[j];
    reduce_costs(costs);
  }

  // Returns false on unboundedness (phase II only).
  bool iterate(bool phase_two) {
    const std::size_t max_iters = 2000 + 200 * (m_ + cols_);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
      // Bland: lowest-index improving nonbasic column.
      std::size_t enter = cols_;
      int dir = 0;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (state_[j] == VarState::basic) continue;
        if (hi_[j] - lo_[j] < kPivTol) continue;  // fixed
        if (state_[j] == VarState::at_lower && obj_[j] > kLpOptTol) {
          enter = j;
          dir = 1;
          break;
        }
        if (state_[j] == VarState::at_upper && obj_[j] < -kLpOptTol) {
          enter = j;
          dir = -1;
          break;
        }
      }
      if (enter == cols_) return true;  // optimal for this phase

      // Ratio test: entering moves by dir * step, basics by -dir*alpha*step.
      double step = hi_[enter] - lo_[enter];  // own bound flip
      int leave_row = -1;
      for (std::size_t i = 0; i < m_; ++i) {
        const double rate = -dir * tab_[i][enter];
        if (std::abs(rate) < kPivTol) continue;
        const int k = basis_[i];
        double limit;
        if (rate > 0.0)
          limit = hi_[k] == kInf ? kInf : (hi_[k] - val_[k]) / rate;
        else
          limit = (val_[k] - lo_[k]) / (-rate);
        if (limit < 0.0) limit = 0.0;
        if (limit < step - 1e-12 ||
            (leave_row >= 0 && limit < step + 1e-12 && basis_[i] < basis_[leave_row])) {
          step = limit;
          leave_row = static_cast<int>(i);
        }
      }
      if (step == kInf) {
        if (phase_two) return false;
        throw std::runtime_error("lp solve: phase I unbounded (internal error)");
      }
      if (step < 0.0) step = 0.0;

      // Apply the move.
      val_[enter] += dir * step;
      for (std::size_t i = 0; i < m_; ++i) {
        const double rate = -dir * tab_[i][enter];
        if (rate != 0.0) val_[basis_[i]] += rate * step;
      }

      if (leave_row < 0) {
        // Bound flip, basis unchanged.
        state_[enter] = dir > 0 ? VarState::at_upper : VarState::at_lower;
        val_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
        continue;
      }

      const int leave = basis_[leave_row];
      const double rate = -dir * tab_[leave_row][enter];
      state_[leave] = rate > 0.0 ? VarState::at_upper : VarState::at_lower;
      val_[leave] = rate > 0.0 ? hi_[leave] : lo_[leave];
      basis_[leave_row] = static_cast<int>(enter);
      state_[enter] = VarState::basic;
      pivot(static_cast<std::size_t>(leave_row), enter);
    }
    throw std::runtime_error("lp solve: iteration limit hit");
  }

  void pivot(std::size_t prow, std::size_t pcol) {
    std::vector<double>& prow_v = tab_[prow];
    const double piv = prow_v[pcol];
    for (double& a : prow_v) a /= piv;
    prow_v[pcol] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == prow) continue;
      const double factor = tab_[i][pcol];
      if (factor == 0.0) continue;
      std::vector<double>& row = tab_[i];
      for (std::size_t j = 0; j < cols_; ++j) row[j] -= factor * prow_v[j];
      row[pcol] = 0.0;
    }
    const double ofac = obj_[pcol];
    if (ofac != 0.0) {
      for (std::size_t j = 0; j < cols_; ++j) obj_[j] -= ofac * prow_v[j];
      obj_[pcol] = 0.0;
    }
  }
};

}  // namespace detail

inline LpSolution solve(const LpModel& model) {
  detail::Simplex s(model);
  return s.run();
}

// ---------------------------------------------------------------------------
// Post-solve utilities

struct FeasibilityReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline FeasibilityReport check_feasibility(const LpModel& model,
                                           const LpSolution& sol) {
  FeasibilityReport rep;
  if (sol.values.size() != model.objective.size()) {
    rep.violations.push_back("solution dimension mismatch");
    return rep;
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < model.constraints.size(); ++i) {
    const LpConstraint& c = model.constraints[i];
    double lhs = 0.0;
    for (std::size_t j = 0; j < c.coeffs.size(); ++j)
      lhs += c.coeffs[j] * sol.values[j];
    const double slack = c.rhs - lhs;
    const bool bad = (c.rel == Relation::le && slack < -kLpFeasTol) ||
                     (c.rel == Relation::ge && slack > kLpFeasTol) ||
                     (c.rel == Relation::eq && std::abs(slack) > kLpFeasTol);
    if (bad) {
      os.str("");
      os << (c.name.empty() ? "row " + std::to_string(i) : c.name)
         << ": lhs " << lhs << " vs rhs " << c.rhs;
      rep.violations.push_back(os.str());
    }
  }
  for (std::size_t j = 0; j < model.objective.size(); ++j) {
    if (sol.values[j] < model.lower[j] - kLpFeasTol ||
        sol.values[j] > model.upper[j] + kLpFeasTol) {
      os.str("");
      os << "bound on "
         << (j < model.labels.size() ? model.labels[j] : "x" + std::to_string(j))
         << ": value " << sol.values[j] << " outside [" << model.lower[j] << ", "
         << model.upper[j] << "]";
      rep.violations.push_back(os.str());
    }
  }
  return rep;
}

// Per-arrival scaling: entry for f in E_v is x*_f / r_v, clamped to [0,1].
// Riders that never arrive (r_v = 0) get empty maps.
struct ScaledSolution {
  std::map<std::string, std::map<std::string, double>> per_rider;

  const std::map<std::string, double>& of(const std::string& rider_id) const {
    return per_rider.at(rider_id);
  }
};

inline ScaledSolution scale_per_arrival(const Instance& inst,
                                        const LpSolution& sol) {
  if (sol.status != LpStatus::optimal)
    throw std::invalid_argument("scale_per_arrival: solution not optimal");
  const InstanceIndex ix = index_instance(inst);
  std::vector<double> by_edge(inst.edges.size(), 0.0);
  for (std::size_t k = 0; k < sol.labels.size(); ++k) {
    auto it = ix.edge_of_id.find(sol.labels[k]);
    if (it != ix.edge_of_id.end()) by_edge[it->second] = sol.values[k];
  }

  ScaledSolution out;
  for (std::size_t v = 0; v < inst.riders.size(); ++v) {
    auto& entries = out.per_rider[inst.riders[v].id];
    const double r = ix.rider_rate[v];
    if (r <= 0.0) {
      for (int f : ix.rider_edges[v])
        if (by_edge[f] > 1e-9)
          throw std::invalid_argument(
              "scale_per_arrival: positive probe mass on zero-rate rider " +
              inst.riders[v].id);
      continue;
    }
    double total = 0.0;
    for (int f : ix.rider_edges[v]) {
      double z = by_edge[f] / r;
      z = std::min(std::max(z, 0.0), 1.0);
      entries[inst.edges[f].id] = z;
      total += z;
    }
    if (total > ix.rider_patience[v] + kLpFeasTol)
      throw std::logic_error("scale_per_arrival: scaled mass exceeds patience for " +
                             inst.riders[v].id);
  }
  return out;
}

// Plain-text LP dump (CPLEX LP format) for cross-checks with external solvers.
inline std::string dump_lp_text(const LpModel& model) {
  std::ostringstream os;
  os.precision(17);
  auto var = [&model](std::size_t j) {
    return j < model.labels.size() && !model.labels[j].empty()
               ? model.labels[j]
               : "x" + std::to_string(j);
  };
  os << "Maximize\n obj:";
  bool first = true;
  for (std::size_t j = 0; j < model.objective.size(); ++j) {
    if (model.objective[j] == 0.0) continue;
    os << (first ? " " : " + ") << model.objective[j] << ' ' << var(j);
    first = false;
  }
  if (first) os << " 0 " << (model.objective.empty() ? "x0" : var(0));
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < model.constraints.size(); ++i) {
    const LpConstraint& c = model.constraints[i];
    os << ' ' << (c.name.empty() ? "c" + std::to_string(i) : c.name) << ':';
    bool any = false;
    for (std::size_t j = 0; j < c.coeffs.size(); ++j) {
      if (c.coeffs[j] == 0.0) continue;
      os << (any ? " + " : " ") << c.coeffs[j] << ' ' << var(j);
      any = true;
    }
    if (!any) os << " 0 " << var(0);
    os << (c.rel == Relation::le ? " <= " : c.rel == Relation::ge ? " >= " : " = ")
       << c.rhs << '\n';
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < model.objective.size(); ++j) {
    if (std::isfinite(model.upper[j]))
      os << ' ' << model.lower[j] << " <= " << var(j) << " <= " << model.upper[j]
         << '\n';
    else
      os << ' ' << var(j) << " >= " << model.lower[j] << '\n';
  }
  os << "End\n";
  return os.str();
}

}  // namespace fairmatch

#endif  // FAIRMATCH_LP_HPP
