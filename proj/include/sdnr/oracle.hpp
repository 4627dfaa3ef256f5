#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "sdnr/network.hpp"
#include "sdnr/powerflow.hpp"
#include "sdnr/reconfig.hpp"
#include "sdnr/scenario.hpp"

namespace sdnr {

struct OracleRow {
    std::size_t config = 0;  // position in enumeration order
    std::vector<int> open;
    TopologyEvaluation eval;
};

struct OracleReport {
    std::vector<OracleRow> rows;
    ObjectiveWeights weights;
    std::size_t best_row = 0;
    SwitchStatus best_alpha;
    double best_objective = 0.0;
    std::size_t infeasible = 0;
};

/// Scores every radial configuration with the exact evaluator. Throws
/// EnumerationTruncated when more than `cap` configurations exist and
/// NoFeasibleTopology when none is feasible. Ties go to the earliest configuration.
OracleReport brute_force_optimum(const Network& net, const ScenarioSet& scen, const ObjectiveWeights& w,
                                 const SbrOptions& opts = {}, std::size_t cap = 200000);

/// config,open_branches,objective,loss,index,feasible
void write_oracle_csv(std::ostream& out, const OracleReport& report);

/// Backward/forward sweep on the radial closed graph with complex voltages.
/// Stops once the power mismatch is within the tolerance and the voltage
/// update has stalled.
PowerFlowSolution bfs_sweep_pf(const Network& net, const SwitchStatus& alpha, const BusInjections& inj,
                               const SolverOptions& opts = {});
PowerFlowSolution bfs_sweep_pf(const Network& net, const SwitchStatus& alpha, const Sample& sample,
                               const SolverOptions& opts = {});

}  // namespace sdnr
