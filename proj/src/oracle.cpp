#include "sdnr/oracle.hpp"

#include <cmath>
#include <algorithm>
#include <complex>
#include <cstdio>
#include <ostream>
#include <queue>

#include "sdnr/error.hpp"
#include "sdnr/stability.hpp"

namespace sdnr {

OracleReport brute_force_optimum(const Network& net, const ScenarioSet& scen, const ObjectiveWeights& w,
                                 const SbrOptions& opts, std::size_t cap) {
    const Evaluator ev = Evaluator::exact();
    OracleReport report;
    report.weights = resolve_weights(net, scen, w, ev, opts);
    std::size_t config = 0;
    enumerate_radial(net, cap, [&](const SwitchStatus& alpha) {
        OracleRow row{config++, alpha.open_branches(), evaluate_topology(net, alpha, scen, report.weights, ev, opts)};
        if (!row.eval.feasible) ++report.infeasible;
        report.rows.push_back(std::move(row));
        return true;
    });

    bool found = false;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& e = report.rows[i].eval;
        if (!e.feasible) continue;
        if (!found || e.score < report.best_objective) {
            found = true;
            report.best_row = i;
            report.best_objective = e.score;
        }
    }
    if (!found) throw NoFeasibleTopology("no radial configuration is feasible");
    report.best_alpha = SwitchStatus::with_open(net.num_branches(), report.rows[report.best_row].open);
    return report;
}

void write_oracle_csv(std::ostream& out, const OracleReport& report) {
    auto num = [](double x) {
        if (!std::isfinite(x)) return std::string(std::isnan(x) ? "nan" : "inf");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", x);
        return std::string(buf);
    };
    out << "config,open_branches,objective,loss,index,feasible\n";
    for (const auto& row : report.rows) {
        out << row.config << ',';
        for (std::size_t k = 0; k < row.open.size(); ++k) out << (k ? ";" : "") << row.open[k];
        out << ',' << num(row.eval.score) << ',' << num(row.eval.loss) << ',' << num(row.eval.index) << ','
            << (row.eval.feasible ? 1 : 0) << '\n';
    }
}

PowerFlowSolution bfs_sweep_pf(const Network& net, const SwitchStatus& alpha, const BusInjections& inj,
                               const SolverOptions& opts) {
    using cd = std::complex<double>;
    check_dimension(net, alpha);
    if (!is_radial(net, alpha)) throw TopologyError("sweep requires a radial topology");
    const std::size_t n = net.num_buses();
    if (inj.p.size() != n || inj.q.size() != n) throw DimensionError("injection vectors do not match the bus count");

    // BFS order from the substation; parent branch per bus
    std::vector<int> order, parent(n, -1), via(n, -1);
    std::vector<std::uint8_t> seen(n, 0);
    std::queue<int> queue;
    queue.push(net.substation());
    seen[net.substation()] = 1;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop();
        order.push_back(u);
        for (int e : net.incidence()[u]) {
            if (!alpha.closed(e)) continue;
            const int v = net.branch(e).other(u);
            if (seen[v]) continue;
            seen[v] = 1;
            parent[v] = u;
            via[v] = e;
            queue.push(v);
        }
    }

    std::vector<cd> V(n, cd(1.0, 0.0)), current(n);
    PowerFlowSolution sol;
    sol.V.assign(n, 1.0);
    sol.theta.assign(n, 0.0);
    const int max_sweeps = std::max(1000, 20 * opts.max_iterations);
    std::vector<double> p, q;
    for (int it = 0; it < max_sweeps; ++it) {
        for (std::size_t i = 0; i < n; ++i) current[i] = -std::conj(cd(inj.p[i], inj.q[i]) / V[i]);
        current[net.substation()] = 0.0;
        for (auto k = order.size(); k-- > 1;) current[parent[order[k]]] += current[order[k]];
        double step = 0.0;
        for (std::size_t k = 1; k < order.size(); ++k) {
            const int v = order[k];
            const Branch& br = net.branch(via[v]);
            const cd updated = V[parent[v]] - current[v] / cd(br.g, br.b);
            step = std::max(step, std::abs(updated - V[v]));
            V[v] = updated;
        }
        sol.iterations = it + 1;
        for (std::size_t i = 0; i < n; ++i) {
            sol.V[i] = std::abs(V[i]);
            sol.theta[i] = std::arg(V[i]);
        }
        if (!std::isfinite(step)) break;
        injections_from_state(net, alpha, sol.V, sol.theta, p, q);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<int>(i) == net.substation()) continue;
            worst = std::max({worst, std::abs(p[i] - inj.p[i]), std::abs(q[i] - inj.q[i])});
        }
        sol.max_mismatch = worst;
        if (worst <= opts.tolerance && step <= 1e-13) {
            sol.converged = true;
            break;
        }
        if (std::any_of(sol.V.begin(), sol.V.end(), [](double v) { return !(v > 0.0); })) break;
    }
    finalize_solution(net, alpha, sol);
    return sol;
}

PowerFlowSolution bfs_sweep_pf(const Network& net, const SwitchStatus& alpha, const Sample& sample,
                               const SolverOptions& opts) {
    return bfs_sweep_pf(net, alpha, net_injections(sample, net), opts);
}

}  // namespace sdnr
