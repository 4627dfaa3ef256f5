#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdnr/network.hpp"
#include "sdnr/powerflow.hpp"
#include "sdnr/scenario.hpp"
#include "sdnr/stability.hpp"

namespace sdnr {

/// Weights and normalizers of the scenario-averaged objective
/// k_l * loss / loss_max + k_v * index / index_max.
struct ObjectiveWeights {
    double k_l = 0.5;
    double k_v = -0.5;
    std::optional<double> loss_max;
    std::optional<double> index_max;

    bool resolved() const { return loss_max.has_value() && index_max.has_value(); }
};

struct SbrOptions {
    SolverOptions solver;
    /// Treat voltage, branch and substation limit violations as infeasible.
    bool enforce_limits = true;
    int n_max = 5;
    /// Relative tolerance of the outer-loop stopping test.
    double tie_tolerance = 1e-9;
    /// Buses whose expected loop injection exceeds this split a loop into sub-paths.
    double injection_threshold = 1e-7;
};

/// Fills missing normalizers: loss_max = 10 x the all-closed expected loss and,
/// for the exact smallest-singular-value index, index_max = its all-closed
/// expected value. Checks k_l > 0 and the sign of k_v against the index orientation.
ObjectiveWeights resolve_weights(const Network& net, const ScenarioSet& scen, const ObjectiveWeights& w,
                                 const Evaluator& ev, const SbrOptions& opts = {});

/// +inf when either input is not finite.
double objective_score(double loss, double index, const ObjectiveWeights& w);

/// Scenario-weighted flow per branch, measured at the from end.
std::vector<double> expected_branch_flow(const std::vector<PowerFlowSolution>& sols, const std::vector<double>& pi);
/// Scenario-weighted absolute flow per branch, measured at the from end.
std::vector<double> expected_abs_flow(const std::vector<PowerFlowSolution>& sols, const std::vector<double>& pi);

/// Expected active power that `bus` pushes into its two loop branches.
double loop_injection(const Network& net, const std::vector<PowerFlowSolution>& sols, const std::vector<double>& pi,
                      const Loop& loop, int bus);

/// Cuts the cyclic bus sequence at every position whose injection exceeds
/// `threshold`. Each arc is returned as its branch ids in loop order.
std::vector<std::vector<int>> subpaths(const Loop& loop, const std::vector<double>& injection_by_position,
                                       double threshold = 0.0);

/// Branch of `path` with the smallest expected absolute flow; lowest id on ties.
int min_flow_branch(const std::vector<int>& path, const std::vector<double>& expected_abs);
int min_flow_branch(const std::vector<int>& path, const std::vector<PowerFlowSolution>& sols,
                    const std::vector<double>& pi);

/// {e, downstream neighbour} for positive expected flow, {e, upstream
/// neighbour} for negative, {e} otherwise or when the neighbour is open.
std::vector<int> candidate_set(const Network& net, const Loop& loop, int branch, double expected_flow,
                               const SwitchStatus& alpha);

struct TopologyEvaluation {
    bool feasible = false;
    double loss = std::numeric_limits<double>::quiet_NaN();
    double index = std::numeric_limits<double>::quiet_NaN();
    double score = std::numeric_limits<double>::infinity();
    std::string reason;
};

/// Expected loss, expected index and objective of a radial topology.
TopologyEvaluation evaluate_topology(const Network& net, const SwitchStatus& alpha, const ScenarioSet& scen,
                                     const ObjectiveWeights& w, const Evaluator& ev, const SbrOptions& opts = {});

struct CandidateRecord {
    int outer = 0;   // 0 for a standalone one-stage call
    int loop = -1;   // loop slot in the two-stage search
    int branch = -1;
    double loss = 0.0;
    double index = 0.0;
    double score = 0.0;
    bool feasible = false;
};

struct IterateRecord {
    int outer = 0;  // 0 is the first-stage topology
    int loop = -1;
    std::vector<int> open;
    double objective = 0.0;
};

struct SbrResult {
    SwitchStatus alpha_star;
    double objective = std::numeric_limits<double>::infinity();
    double loss = 0.0;
    double index = 0.0;
    ObjectiveWeights weights;
    SwitchStatus stage1_alpha;
    double stage1_objective = std::numeric_limits<double>::infinity();
    int outer_iterations = 0;
    std::size_t topologies_evaluated = 0;
    std::vector<CandidateRecord> trace;
    std::vector<IterateRecord> iterates;
};

/// Single-loop search on the closed graph of `alpha`, which must contain
/// exactly one loop. Weights must be resolved.
SbrResult one_stage_sbr(const Network& net, const SwitchStatus& alpha, const ScenarioSet& scen,
                        const ObjectiveWeights& w, const Evaluator& ev, const SbrOptions& opts = {});
/// Same on the all-closed network; resolves weights first.
SbrResult one_stage_sbr(const Network& net, const ScenarioSet& scen, const ObjectiveWeights& w, const Evaluator& ev,
                        const SbrOptions& opts = {});

/// Opens one low-flow branch per loop, then repeatedly closes each opened
/// branch and reruns the single-loop search on the residual network.
/// Resolves weights first.
SbrResult two_stage_sbr(const Network& net, const ScenarioSet& scen, const ObjectiveWeights& w, const Evaluator& ev,
                        const SbrOptions& opts = {});

nlohmann::json to_json(const ObjectiveWeights& w);
nlohmann::json to_json(const SbrResult& r);
/// outer,loop,branch,loss,index,score,feasible
void write_trace_csv(std::ostream& out, const SbrResult& r);

}  // namespace sdnr
