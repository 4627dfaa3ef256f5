#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sdnr/network.hpp"
#include "sdnr/scenario.hpp"

namespace sdnr {

struct SolverOptions {
    double tolerance = 1e-8;  // max |P|,|Q| mismatch, per-unit
    int max_iterations = 50;
    bool flat_start = true;
    /// Allow solving a closed-branch graph that contains loops.
    bool allow_meshed = false;
};

/// Power leaving each end of a branch.
struct BranchFlow {
    double p_ij = 0.0, q_ij = 0.0;
    double p_ji = 0.0, q_ji = 0.0;

    double loss() const { return p_ij + p_ji; }
};

struct PowerFlowSolution {
    std::vector<double> V;
    std::vector<double> theta;
    std::vector<double> p, q;        // bus injections from the branch flows
    std::vector<BranchFlow> flows;   // one per branch; zero when open
    double sub_p = 0.0, sub_q = 0.0;
    double loss = 0.0;
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;
};

BranchFlow branch_flow(const Branch& br, double v_from, double v_to, double theta_from, double theta_to);

std::vector<BranchFlow> branch_flows(const Network& net, const SwitchStatus& alpha, const std::vector<double>& V,
                                     const std::vector<double>& theta);

/// Bus injections implied by a voltage state: p_i = sum of p_ij over closed neighbours.
void injections_from_state(const Network& net, const SwitchStatus& alpha, const std::vector<double>& V,
                           const std::vector<double>& theta, std::vector<double>& p, std::vector<double>& q);

/// Newton-Raphson with the substation as slack (1.0 p.u., 0 rad). Returns an
/// unconverged solution instead of throwing when the iteration fails.
PowerFlowSolution solve_pf(const Network& net, const SwitchStatus& alpha, const Sample& sample,
                           const SolverOptions& opts = {});
PowerFlowSolution solve_pf(const Network& net, const SwitchStatus& alpha, const BusInjections& inj,
                           const SolverOptions& opts = {});

/// Fills flows, injections and loss from V and theta.
void finalize_solution(const Network& net, const SwitchStatus& alpha, PowerFlowSolution& sol);

struct ExpectedLoss {
    double value = 0.0;
    std::vector<PowerFlowSolution> solutions;
};

/// Probability-weighted loss. Throws InfeasibleTopology naming the first scenario that fails.
ExpectedLoss expected_loss(const Network& net, const SwitchStatus& alpha, const ScenarioSet& scen,
                           const SolverOptions& opts = {});

enum class ViolationKind { VoltageLow, VoltageHigh, BranchFlow, SubstationP, SubstationQ };

struct Violation {
    ViolationKind kind;
    int element;       // bus id or branch id
    double magnitude;  // distance outside the limit
};

std::string to_string(ViolationKind kind);

std::vector<Violation> check_limits(const PowerFlowSolution& sol, const Network& net, const SwitchStatus& alpha);

/// d(P, Q)/d(theta, V) of the closed-branch network at a state, rows and
/// columns ordered [angles of non-slack buses, magnitudes of non-slack buses].
Eigen::MatrixXd jacobian(const Network& net, const SwitchStatus& alpha, const std::vector<double>& V,
                         const std::vector<double>& theta);
Eigen::MatrixXd jacobian(const Network& net, const SwitchStatus& alpha, const PowerFlowSolution& sol);

/// Smallest singular value.
double sigma_min(const Eigen::MatrixXd& J);

nlohmann::json to_json(const PowerFlowSolution& sol, const std::vector<Violation>& violations);

}  // namespace sdnr
