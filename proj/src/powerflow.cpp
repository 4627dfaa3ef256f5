#include "sdnr/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdnr/error.hpp"

namespace sdnr {

namespace {

constexpr double kPolishBelow = 1e-12;

// Partial derivatives of the power leaving bus a on a branch towards bus b.
struct EndPartials {
    double dp_dta, dp_dtb, dp_dva, dp_dvb;
    double dq_dta, dq_dtb, dq_dva, dq_dvb;
};

EndPartials end_partials(double g, double b, double va, double vb, double ta, double tb) {
    const double d = ta - tb;
    const double s = std::sin(d), c = std::cos(d);
    EndPartials e{};
    e.dp_dta = -va * vb * (b * c - g * s);
    e.dp_dtb = -e.dp_dta;
    e.dp_dva = 2.0 * va * g - vb * (b * s + g * c);
    e.dp_dvb = -va * (b * s + g * c);
    e.dq_dta = -va * vb * (g * c + b * s);
    e.dq_dtb = -e.dq_dta;
    e.dq_dva = -2.0 * va * b - vb * (g * s - b * c);
    e.dq_dvb = -va * (g * s - b * c);
    return e;
}

// Position of every bus in the reduced (non-slack) ordering, -1 for the slack.
std::vector<int> reduced_index(const Network& net) {
    std::vector<int> idx(net.num_buses(), -1);
    int k = 0;
    for (std::size_t i = 0; i < net.num_buses(); ++i)
        if (static_cast<int>(i) != net.substation()) idx[i] = k++;
    return idx;
}

}  // namespace

BranchFlow branch_flow(const Branch& br, double v_from, double v_to, double theta_from, double theta_to) {
    const double g = br.g, b = br.b;
    const double d = theta_from - theta_to;
    const double s = std::sin(d), c = std::cos(d);
    BranchFlow f;
    f.p_ij = v_from * v_from * g - v_from * v_to * (b * s + g * c);
    f.q_ij = -v_from * v_from * b - v_from * v_to * (g * s - b * c);
    // sin(-d) = -s, cos(-d) = c
    f.p_ji = v_to * v_to * g - v_to * v_from * (-b * s + g * c);
    f.q_ji = -v_to * v_to * b - v_to * v_from * (-g * s - b * c);
    return f;
}

std::vector<BranchFlow> branch_flows(const Network& net, const SwitchStatus& alpha, const std::vector<double>& V,
                                     const std::vector<double>& theta) {
    check_dimension(net, alpha);
    if (V.size() != net.num_buses() || theta.size() != net.num_buses()) throw DimensionError("state vectors do not match the bus count");
    std::vector<BranchFlow> flows(net.num_branches());
    for (const Branch& br : net.branches()) {
        if (!alpha.closed(br.id)) continue;
        flows[br.id] = branch_flow(br, V[br.from], V[br.to], theta[br.from], theta[br.to]);
    }
    return flows;
}

void injections_from_state(const Network& net, const SwitchStatus& alpha, const std::vector<double>& V,
                           const std::vector<double>& theta, std::vector<double>& p, std::vector<double>& q) {
    p.assign(net.num_buses(), 0.0);
    q.assign(net.num_buses(), 0.0);
    for (const Branch& br : net.branches()) {
        if (!alpha.closed(br.id)) continue;
        const BranchFlow f = branch_flow(br, V[br.from], V[br.to], theta[br.from], theta[br.to]);
        p[br.from] += f.p_ij;
        q[br.from] += f.q_ij;
        p[br.to] += f.p_ji;
        q[br.to] += f.q_ji;
    }
}

Eigen::MatrixXd jacobian(const Network& net, const SwitchStatus& alpha, const std::vector<double>& V,
                         const std::vector<double>& theta) {
    check_dimension(net, alpha);
    const auto idx = reduced_index(net);
    const Eigen::Index m = static_cast<Eigen::Index>(net.num_buses()) - 1;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * m, 2 * m);

    auto add_end = [&](int a, int b, const EndPartials& e) {
        const int ra = idx[a], rb = idx[b];
        if (ra < 0) return;  // slack equations are not part of the system
        J(ra, ra) += e.dp_dta;
        J(ra, m + ra) += e.dp_dva;
        J(m + ra, ra) += e.dq_dta;
        J(m + ra, m + ra) += e.dq_dva;
        if (rb >= 0) {
            J(ra, rb) += e.dp_dtb;
            J(ra, m + rb) += e.dp_dvb;
            J(m + ra, rb) += e.dq_dtb;
            J(m + ra, m + rb) += e.dq_dvb;
        }
    };

    for (const Branch& br : net.branches()) {
        if (!alpha.closed(br.id)) continue;
        const int i = br.from, j = br.to;
        add_end(i, j, end_partials(br.g, br.b, V[i], V[j], theta[i], theta[j]));
        add_end(j, i, end_partials(br.g, br.b, V[j], V[i], theta[j], theta[i]));
    }
    return J;
}

Eigen::MatrixXd jacobian(const Network& net, const SwitchStatus& alpha, const PowerFlowSolution& sol) {
    if (!sol.converged) throw PreconditionError("jacobian requires a converged solution");
    return jacobian(net, alpha, sol.V, sol.theta);
}

void finalize_solution(const Network& net, const SwitchStatus& alpha, PowerFlowSolution& sol) {
    sol.flows = branch_flows(net, alpha, sol.V, sol.theta);
    injections_from_state(net, alpha, sol.V, sol.theta, sol.p, sol.q);
    sol.sub_p = sol.p[net.substation()];
    sol.sub_q = sol.q[net.substation()];
    sol.loss = 0.0;
    for (double pi : sol.p) sol.loss += pi;
}

PowerFlowSolution solve_pf(const Network& net, const SwitchStatus& alpha, const Sample& sample,
                           const SolverOptions& opts) {
    return solve_pf(net, alpha, net_injections(sample, net), opts);
}

PowerFlowSolution solve_pf(const Network& net, const SwitchStatus& alpha, const BusInjections& inj,
                           const SolverOptions& opts) {
    check_dimension(net, alpha);
    if (inj.p.size() != net.num_buses() || inj.q.size() != net.num_buses())
        throw DimensionError("injection vectors do not match the bus count");
    if (!(opts.tolerance > 0.0) || opts.max_iterations < 1) throw ArgumentError("invalid solver options");

    int components = 0;
    closed_components(net, alpha, &components);
    if (components != 1) throw TopologyError("closed-branch graph is disconnected");
    if (!opts.allow_meshed && !is_radial(net, alpha))
        throw PreconditionError("topology is not radial and meshed solves were not requested");

    const std::size_t n = net.num_buses();
    const auto idx = reduced_index(net);
    const Eigen::Index m = static_cast<Eigen::Index>(n) - 1;

    PowerFlowSolution sol;
    sol.V.assign(n, 1.0);
    sol.theta.assign(n, 0.0);

    std::vector<double> p, q;
    Eigen::VectorXd mismatch(2 * m);
    auto evaluate = [&] {
        injections_from_state(net, alpha, sol.V, sol.theta, p, q);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int r = idx[i];
            if (r < 0) continue;
            mismatch(r) = p[i] - inj.p[i];
            mismatch(m + r) = q[i] - inj.q[i];
            worst = std::max({worst, std::abs(mismatch(r)), std::abs(mismatch(m + r))});
        }
        return worst;
    };

    if (m == 0) {
        sol.converged = true;
        finalize_solution(net, alpha, sol);
        return sol;
    }

    auto newton_step = [&] {
        const Eigen::MatrixXd J = jacobian(net, alpha, sol.V, sol.theta);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        const Eigen::VectorXd step = lu.solve(-mismatch);
        if (!step.allFinite()) return false;
        for (std::size_t i = 0; i < n; ++i) {
            const int r = idx[i];
            if (r < 0) continue;
            sol.theta[i] += step(r);
            sol.V[i] += step(m + r);
        }
        return true;
    };

    sol.max_mismatch = evaluate();
    while (true) {
        if (!std::isfinite(sol.max_mismatch)) break;
        if (sol.max_mismatch <= opts.tolerance) {
            sol.converged = true;
            // one polishing step; kept only if it lowers the mismatch
            if (sol.max_mismatch > kPolishBelow) {
                const auto V = sol.V, theta = sol.theta;
                const double before = sol.max_mismatch;
                const double after = newton_step() ? evaluate() : before;
                if (after < before) {
                    sol.max_mismatch = after;
                } else {
                    sol.V = V;
                    sol.theta = theta;
                    evaluate();
                }
            }
            break;
        }
        if (sol.iterations >= opts.max_iterations) break;

        if (!newton_step()) break;
        ++sol.iterations;
        if (std::any_of(sol.V.begin(), sol.V.end(), [](double v) { return !(v > 0.0) || !std::isfinite(v); })) {
            sol.max_mismatch = std::numeric_limits<double>::infinity();
            break;
        }
        sol.max_mismatch = evaluate();
    }
    finalize_solution(net, alpha, sol);
    return sol;
}

ExpectedLoss expected_loss(const Network& net, const SwitchStatus& alpha, const ScenarioSet& scen,
                           const SolverOptions& opts) {
    scen.validate();
    ExpectedLoss out;
    out.solutions.reserve(scen.size());
    for (std::size_t w = 0; w < scen.size(); ++w) {
        PowerFlowSolution sol = solve_pf(net, alpha, scen.scenarios[w], opts);
        if (!sol.converged) throw InfeasibleTopology(w, "power flow did not converge");
        out.solutions.push_back(std::move(sol));
    }
    for (std::size_t w = 0; w < scen.size(); ++w) out.value += scen.pi[w] * out.solutions[w].loss;
    return out;
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::VoltageLow: return "voltage_low";
        case ViolationKind::VoltageHigh: return "voltage_high";
        case ViolationKind::BranchFlow: return "branch_flow";
        case ViolationKind::SubstationP: return "substation_p";
        case ViolationKind::SubstationQ: return "substation_q";
    }
    return "unknown";
}

std::vector<Violation> check_limits(const PowerFlowSolution& sol, const Network& net, const SwitchStatus& alpha) {
    if (!sol.converged) throw PreconditionError("limit check requires a converged solution");
    check_dimension(net, alpha);
    std::vector<Violation> out;
    for (const Bus& bus : net.buses()) {
        const double v = sol.V[bus.id];
        if (v < bus.v_min) out.push_back({ViolationKind::VoltageLow, bus.id, bus.v_min - v});
        if (v > bus.v_max) out.push_back({ViolationKind::VoltageHigh, bus.id, v - bus.v_max});
    }
    for (const Branch& br : net.branches()) {
        if (!alpha.closed(br.id)) continue;
        const BranchFlow& f = sol.flows[br.id];
        const double s2 = std::max(f.p_ij * f.p_ij + f.q_ij * f.q_ij, f.p_ji * f.p_ji + f.q_ji * f.q_ji);
        if (s2 > br.s_max * br.s_max) out.push_back({ViolationKind::BranchFlow, br.id, std::sqrt(s2) - br.s_max});
    }
    const Bus& sub = net.bus(net.substation());
    if (sol.sub_p < sub.p_min) out.push_back({ViolationKind::SubstationP, sub.id, sub.p_min - sol.sub_p});
    if (sol.sub_p > sub.p_max) out.push_back({ViolationKind::SubstationP, sub.id, sol.sub_p - sub.p_max});
    if (sol.sub_q < sub.q_min) out.push_back({ViolationKind::SubstationQ, sub.id, sub.q_min - sol.sub_q});
    if (sol.sub_q > sub.q_max) out.push_back({ViolationKind::SubstationQ, sub.id, sol.sub_q - sub.q_max});
    return out;
}

double sigma_min(const Eigen::MatrixXd& J) {
    if (J.size() == 0) throw ArgumentError("sigma_min of an empty matrix");
    if (!J.allFinite()) throw NumericError("Jacobian has non-finite entries");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(J);
    return svd.singularValues().minCoeff();
}

nlohmann::json to_json(const PowerFlowSolution& sol, const std::vector<Violation>& violations) {
    nlohmann::json flows = nlohmann::json::array();
    for (const BranchFlow& f : sol.flows) flows.push_back({f.p_ij, f.q_ij, f.p_ji, f.q_ji});
    nlohmann::json viol = nlohmann::json::array();
    for (const Violation& v : violations)
        viol.push_back({{"kind", to_string(v.kind)}, {"element", v.element}, {"magnitude", v.magnitude}});
    return {{"converged", sol.converged}, {"iterations", sol.iterations}, {"max_mismatch", sol.max_mismatch},
            {"V", sol.V}, {"theta", sol.theta}, {"sub_p", sol.sub_p}, {"sub_q", sol.sub_q},
            {"loss", sol.loss}, {"flows", flows}, {"violations", viol}};
}

}  // namespace sdnr
