#include <catch2/catch_amalgamated.hpp>

#include <limits>

#include "fairmatch/instance.hpp"
#include "fairmatch/lp.hpp"
#include "oracle_lp.hpp"
#include "test_util.hpp"

using namespace fairmatch;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LpModel single_var_model() {
  LpModel m;
  m.objective = {1.0};
  m.lower = {0.0};
  m.upper = {10.0};
  m.labels = {"x"};
  m.constraints.push_back({{1.0}, Relation::le, 3.0, "c0"});
  return m;
}

// First-order optimality certificate: no feasible single-variable nudge of
// +-1e-6 improves the objective by more than 1e-9.
void check_local_optimality(const LpModel& model, const LpSolution& sol) {
  REQUIRE(sol.status == LpStatus::optimal);
  for (std::size_t j = 0; j < model.objective.size(); ++j) {
    for (double delta : {1e-6, -1e-6}) {
      LpSolution nudged = sol;
      nudged.values[j] += delta;
      if (!check_feasibility(model, nudged).ok()) continue;
      double obj = 0.0;
      for (std::size_t k = 0; k < model.objective.size(); ++k)
        obj += model.objective[k] * nudged.values[k];
      CHECK(obj <= sol.objective_value + 1e-9);
    }
  }
}

}  // namespace

TEST_CASE("solve: single bounded variable") {
  const LpSolution sol = solve(single_var_model());
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(sol.objective_value == Catch::Approx(3.0).margin(1e-9));
  CHECK(sol.value("x") == Catch::Approx(3.0).margin(1e-9));
}

TEST_CASE("solve: detects infeasibility") {
  LpModel m;
  m.objective = {1.0};
  m.lower = {0.0};
  m.upper = {10.0};
  m.constraints.push_back({{1.0}, Relation::ge, 5.0, ""});
  m.constraints.push_back({{1.0}, Relation::le, 3.0, ""});
  CHECK(solve(m).status == LpStatus::infeasible);
}

TEST_CASE("solve: detects unboundedness") {
  LpModel m;
  m.objective = {1.0};
  m.lower = {0.0};
  m.upper = {kInf};
  m.constraints.push_back({{-1.0}, Relation::le, 1.0, ""});
  CHECK(solve(m).status == LpStatus::unbounded);
}

TEST_CASE("solve: equality constraints") {
  LpModel m;
  m.objective = {1.0, 2.0};
  m.lower = {0.0, 0.0};
  m.upper = {kInf, kInf};
  m.constraints.push_back({{1.0, 1.0}, Relation::eq, 4.0, ""});
  m.constraints.push_back({{1.0, -1.0}, Relation::ge, 0.0, ""});
  const LpSolution sol = solve(m);
  REQUIRE(sol.status == LpStatus::optimal);
  // x = y = 2 maximizes x + 2y under x = y balance and x + y = 4.
  CHECK(sol.objective_value == Catch::Approx(6.0).margin(1e-8));
}

TEST_CASE("solve: dimension mismatch raises") {
  LpModel m;
  m.objective = {1.0, 1.0};
  m.lower = {0.0};
  m.upper = {1.0};
  CHECK_THROWS_AS(solve(m), std::invalid_argument);
}

TEST_CASE("build_profit_lp transcribes the constraint system") {
  SECTION("hardness n=1") {
    const Instance inst = gen_hardness(1, 0.1);
    const LpModel m = build_profit_lp(inst);
    REQUIRE(m.objective.size() == 2);
    // objective w*p per edge
    CHECK(m.objective[0] == Catch::Approx(1.0));
    CHECK(m.objective[1] == Catch::Approx(0.1));
    // rows: 2 driver caps, 1 patience, 1 rate
    REQUIRE(m.constraints.size() == 4);
    CHECK(m.constraints[0].coeffs == std::vector<double>{1.0, 0.0});
    CHECK(m.constraints[0].rhs == 1.0);
    CHECK(m.constraints[2].coeffs == std::vector<double>{1.0, 1.0});
    CHECK(m.constraints[2].rhs == 1.0);  // Delta * r = 1
    CHECK(m.upper == std::vector<double>{1.0, 1.0});
  }

  SECTION("single edge with capacity 1, rate 2, patience 1, p 0.5") {
    Instance inst;
    inst.drivers = {{"u", 1, {}}};
    inst.riders = {{"v", 2.0, 1, {}}};
    inst.edges = {{"e", "u", "v", 0.5, 1.0}};
    inst.horizon = 2;
    const LpModel m = build_profit_lp(inst);
    CHECK(m.upper[0] == 2.0);  // x <= r
    bool saw_rate_row = false;
    for (const auto& c : m.constraints)
      if (c.coeffs == std::vector<double>{0.5} && c.rhs == 2.0) saw_rate_row = true;
    CHECK(saw_rate_row);
    bool saw_cap_row = false;
    for (const auto& c : m.constraints)
      if (c.coeffs == std::vector<double>{0.5} && c.rhs == 1.0) saw_cap_row = true;
    CHECK(saw_cap_row);
  }

  SECTION("empty edge set") {
    Instance inst;
    inst.drivers = {{"u", 1, {}}};
    inst.riders = {{"v", 1.0, 1, {}}};
    inst.horizon = 1;
    const LpModel m = build_profit_lp(inst);
    CHECK(m.objective.empty());
    const LpSolution sol = solve(m);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective_value == 0.0);
  }
}

TEST_CASE("hardness profit LP optimum is n with the sure edges saturated") {
  const Instance inst = gen_hardness(3, 0.1);
  const LpSolution sol = solve(build_profit_lp(inst));
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(sol.objective_value == Catch::Approx(3.0).margin(1e-6));
  for (int i = 1; i <= 3; ++i) {
    CHECK(sol.value("e" + std::to_string(i) + "a") == Catch::Approx(1.0).margin(1e-8));
    CHECK(sol.value("e" + std::to_string(i) + "b") == Catch::Approx(0.0).margin(1e-8));
  }
}

TEST_CASE("hardness fairness LP optimum is eps/(1+eps)") {
  const Instance inst = gen_hardness(5, 0.1);
  const LpSolution sol = solve(build_fairness_lp(inst));
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(sol.objective_value == Catch::Approx(0.1 / 1.1).margin(1e-6));
}

TEST_CASE("fairness LP is zero when a driver has no edges") {
  Instance inst;
  inst.drivers = {{"u0", 1, {}}, {"isolated", 1, {}}};
  inst.riders = {{"v", 1.0, 1, {}}};
  inst.edges = {{"e", "u0", "v", 1.0, 1.0}};
  inst.horizon = 1;
  const LpSolution sol = solve(build_fairness_lp(inst));
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(sol.objective_value == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("symmetric two-driver fairness LP balances the split") {
  // eta <= 0.5 x1, eta <= 0.5 x2, x1+x2 <= 2, 0.5x1+0.5x2 <= 1, x <= 1:
  // the balanced optimum is x1 = x2 = 1, eta = 0.5.
  Instance inst;
  inst.drivers = {{"u1", 1, {}}, {"u2", 1, {}}};
  inst.riders = {{"v", 1.0, 2, {}}};
  inst.edges = {{"e1", "u1", "v", 0.5, 1.0}, {"e2", "u2", "v", 0.5, 1.0}};
  inst.horizon = 1;
  const LpModel m = build_fairness_lp(inst);
  const LpSolution sol = solve(m);
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(sol.objective_value == Catch::Approx(0.5).margin(1e-8));
  const auto oracle = test::brute_force_lp(m);
  REQUIRE(oracle.feasible);
  CHECK(sol.objective_value == Catch::Approx(oracle.objective).margin(1e-8));
}

TEST_CASE("random small models agree with brute-force vertex enumeration") {
  Rng rng(mix_seed(2024, 5));
  int solved = 0;
  for (int rep = 0; rep < 40; ++rep) {
    LpModel m;
    const int n = 2 + static_cast<int>(rng.next_below(4));  // up to 5 vars
    const int rows = 3 + static_cast<int>(rng.next_below(6));
    m.objective.resize(n);
    m.lower.assign(n, 0.0);
    m.upper.resize(n);
    for (int j = 0; j < n; ++j) {
      m.objective[j] = rng.uniform(-1.0, 2.0);
      m.upper[j] = rng.uniform(0.5, 3.0);
    }
    for (int i = 0; i < rows; ++i) {
      LpConstraint c;
      c.coeffs.resize(n);
      for (int j = 0; j < n; ++j) c.coeffs[j] = rng.uniform(-1.0, 1.5);
      const int kind = static_cast<int>(rng.next_below(4));
      if (kind == 3) {
        c.rel = Relation::ge;
        c.rhs = rng.uniform(-2.0, 0.5);
      } else if (kind == 2) {
        c.rel = Relation::eq;
        // keep equality rows satisfiable reasonably often
        c.rhs = rng.uniform(0.0, 1.0);
      } else {
        c.rel = Relation::le;
        c.rhs = rng.uniform(0.0, 3.0);
      }
      m.constraints.push_back(std::move(c));
    }

    const LpSolution sol = solve(m);
    const auto oracle = test::brute_force_lp(m);
    if (sol.status == LpStatus::optimal) {
      ++solved;
      REQUIRE(oracle.feasible);
      CHECK(sol.objective_value == Catch::Approx(oracle.objective).margin(1e-8));
      CHECK(check_feasibility(m, sol).ok());
      check_local_optimality(m, sol);
    } else {
      REQUIRE(sol.status == LpStatus::infeasible);  // bounded vars: never unbounded
      CHECK_FALSE(oracle.feasible);
    }
  }
  CHECK(solved >= 10);  // the sweep must actually exercise optimal solves
}

TEST_CASE("benchmark LP optima match brute force on random instances") {
  Rng rng(mix_seed(77, 1));
  for (int rep = 0; rep < 6; ++rep) {
    const Instance inst = test::random_instance(rng, 2, 2);
    const LpModel profit = build_profit_lp(inst);
    if (profit.objective.size() > 6) continue;
    const LpSolution sol = solve(profit);
    REQUIRE(sol.status == LpStatus::optimal);
    const auto oracle = test::brute_force_lp(profit);
    REQUIRE(oracle.feasible);
    CHECK(sol.objective_value == Catch::Approx(oracle.objective).margin(1e-8));
  }
}

TEST_CASE("unit-capacity expansion preserves both LP optima") {
  Rng rng(mix_seed(99, 3));
  for (int rep = 0; rep < 5; ++rep) {
    const Instance inst = test::random_instance(rng, 3, 3);
    const UnitCapacityResult expanded = to_unit_capacity(inst);
    const LpSolution p0 = solve(build_profit_lp(inst));
    const LpSolution p1 = solve(build_profit_lp(expanded.instance));
    REQUIRE(p0.status == LpStatus::optimal);
    CHECK(p0.objective_value == Catch::Approx(p1.objective_value).margin(1e-6));
    const LpSolution f0 = solve(build_fairness_lp(inst));
    const LpSolution f1 = solve(build_fairness_lp(expanded.instance));
    CHECK(f0.objective_value == Catch::Approx(f1.objective_value).margin(1e-6));
  }
}

TEST_CASE("LP optima are monotone in the acceptance probabilities") {
  Rng rng(mix_seed(31, 4));
  for (int rep = 0; rep < 4; ++rep) {
    Instance inst = test::random_instance(rng, 3, 3);
    const double p_before = solve(build_profit_lp(inst)).objective_value;
    const double f_before = solve(build_fairness_lp(inst)).objective_value;
    // shrink one random edge's acceptance probability
    auto& e = inst.edges[rng.next_below(inst.edges.size())];
    e.accept_prob *= rng.uniform(0.3, 0.9);
    const double p_after = solve(build_profit_lp(inst)).objective_value;
    const double f_after = solve(build_fairness_lp(inst)).objective_value;
    CHECK(p_after <= p_before + 1e-9);
    CHECK(f_after <= f_before + 1e-9);
  }
}

TEST_CASE("check_feasibility reports injected violations") {
  const Instance inst = gen_hardness(2, 0.3);
  const LpModel m = build_profit_lp(inst);
  LpSolution sol = solve(m);
  REQUIRE(check_feasibility(m, sol).ok());

  SECTION("bound violation") {
    sol.values[0] = 5.0;  // above x <= r = 1
    const auto rep = check_feasibility(m, sol);
    REQUIRE_FALSE(rep.ok());
    bool bound_named = false;
    for (const auto& v : rep.violations)
      if (v.find("bound") != std::string::npos) bound_named = true;
    CHECK(bound_named);
  }

  SECTION("all-zeros is feasible") {
    std::fill(sol.values.begin(), sol.values.end(), 0.0);
    CHECK(check_feasibility(m, sol).ok());
  }
}

TEST_CASE("scale_per_arrival divides by the arrival rate and clamps") {
  Instance inst;
  inst.drivers = {{"u", 1, {}}};
  inst.riders = {{"v", 2.0, 1, {}}};
  inst.edges = {{"e", "u", "v", 0.5, 1.0}};
  inst.horizon = 2;
  LpSolution sol;
  sol.status = LpStatus::optimal;
  sol.values = {0.5};
  sol.labels = {"e"};
  const ScaledSolution scaled = scale_per_arrival(inst, sol);
  CHECK(scaled.of("v").at("e") == Catch::Approx(0.25));
}

TEST_CASE("scale_per_arrival on the hardness fairness solution") {
  const Instance inst = gen_hardness(2, 0.1);
  const LpSolution sol = solve(build_fairness_lp(inst));
  const ScaledSolution scaled = scale_per_arrival(inst, sol);
  // y*_{i,b} = 1/(1+eps), r = 1
  CHECK(scaled.of("v1").at("e1b") == Catch::Approx(1.0 / 1.1).margin(1e-6));
  CHECK(scaled.of("v1").at("e1a") == Catch::Approx(0.1 / 1.1).margin(1e-6));
}

TEST_CASE("scaled mass per rider stays within patience") {
  GeneratorParams params;
  params.num_driver_types = 10;
  params.num_rider_types = 18;
  params.seed = 21;
  const Instance inst = gen_synthetic(params);
  const InstanceIndex ix = index_instance(inst);
  for (const auto* model : {&build_profit_lp, &build_fairness_lp}) {
    const ScaledSolution scaled = scale_per_arrival(inst, solve((*model)(inst)));
    for (std::size_t v = 0; v < inst.riders.size(); ++v) {
      double total = 0.0;
      for (const auto& [id, z] : scaled.of(inst.riders[v].id)) {
        CHECK(z >= 0.0);
        CHECK(z <= 1.0);
        total += z;
      }
      CHECK(total <= inst.riders[v].patience + 1e-8);
    }
  }
}

TEST_CASE("scale_per_arrival rejects probe mass on zero-rate riders") {
  Instance inst;
  inst.drivers = {{"u", 1, {}}};
  inst.riders = {{"v", 1.0, 1, {}}, {"ghost", 0.0, 1, {}}};
  inst.edges = {{"e", "u", "v", 1.0, 1.0}, {"g", "u", "ghost", 1.0, 1.0}};
  inst.horizon = 1;
  LpSolution sol;
  sol.status = LpStatus::optimal;
  sol.values = {0.0, 0.5};
  sol.labels = {"e", "g"};
  CHECK_THROWS_AS(scale_per_arrival(inst, sol), std::invalid_argument);

  sol.values = {0.5, 0.0};
  const ScaledSolution ok = scale_per_arrival(inst, sol);
  CHECK(ok.of("ghost").empty());
}

TEST_CASE("dump_lp_text emits the standard sections") {
  const std::string text = dump_lp_text(build_profit_lp(gen_hardness(1, 0.5)));
  CHECK(text.find("Maximize") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  CHECK(text.find("e1a") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
}
