#include "sdnr/reconfig.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "sdnr/error.hpp"

namespace sdnr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

SolverOptions meshed(SolverOptions s) {
    s.allow_meshed = true;
    return s;
}

bool same_objective(double a, double b, double tol) {
    if (a == b) return true;
    if (!std::isfinite(a) || !std::isfinite(b)) return false;
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

/// Loop branch other than loop.branches[idx] that touches `bus`.
int loop_neighbour(const Loop& loop, std::size_t idx, int bus) {
    const std::size_t n = loop.size();
    if (loop.buses[(idx + 1) % n] == bus) return loop.branches[(idx + 1) % n];
    return loop.branches[(idx + n - 1) % n];
}

/// Evaluations shared by every step of one search.
class Search {
  public:
    Search(const Network& net, const ScenarioSet& scen, const ObjectiveWeights& w, const Evaluator& ev,
           const SbrOptions& opts)
        : net_(net), scen_(scen), w_(w), ev_(ev), opts_(opts) {}

    const TopologyEvaluation& evaluate(const SwitchStatus& alpha) {
        auto key = alpha.open_branches();
        auto it = cache_.find(key);
        if (it == cache_.end())
            it = cache_.emplace(std::move(key), evaluate_topology(net_, alpha, scen_, w_, ev_, opts_)).first;
        return it->second;
    }

    /// Returns the opened branch; throws InfeasibleTopology or NoFeasibleTopology.
    int one_stage(const SwitchStatus& alpha, int outer, int slot, std::vector<CandidateRecord>& trace) {
        const std::vector<Loop> loops = fundamental_loops(net_, alpha);
        if (loops.size() != 1)
            throw PreconditionError("single-loop search needs exactly one loop, found " + std::to_string(loops.size()));
        const Loop& loop = loops.front();

        const ExpectedLoss base = expected_loss(net_, alpha, scen_, meshed(opts_.solver));
        std::vector<double> injection(loop.size());
        for (std::size_t k = 0; k < loop.size(); ++k)
            injection[k] = loop_injection(net_, base.solutions, scen_.pi, loop, loop.buses[k]);
        const auto paths = subpaths(loop, injection, opts_.injection_threshold);
        const auto abs_flow = expected_abs_flow(base.solutions, scen_.pi);
        const auto flow = expected_branch_flow(base.solutions, scen_.pi);

        std::set<int> candidates;
        for (const auto& path : paths) {
            const int e = min_flow_branch(path, abs_flow);
            for (int c : candidate_set(net_, loop, e, flow[e], alpha)) candidates.insert(c);
        }

        int best = -1;
        double best_score = kInf;
        for (int c : candidates) {
            SwitchStatus trial = alpha;
            trial.open(c);
            const TopologyEvaluation& r = evaluate(trial);
            trace.push_back({outer, slot, c, r.loss, r.index, r.score, r.feasible});
            if (r.feasible && r.score < best_score) {
                best_score = r.score;
                best = c;
            }
        }
        if (best < 0) throw NoFeasibleTopology("every candidate of the loop is infeasible");
        return best;
    }

    std::size_t evaluated() const { return cache_.size(); }

  private:
    const Network& net_;
    const ScenarioSet& scen_;
    const ObjectiveWeights& w_;
    const Evaluator& ev_;
    const SbrOptions& opts_;
    std::map<std::vector<int>, TopologyEvaluation> cache_;
};

void fill_result(SbrResult& out, const Network& net, Search& search, const IterateRecord& best) {
    out.alpha_star = SwitchStatus::with_open(net.num_branches(), best.open);
    const TopologyEvaluation& r = search.evaluate(out.alpha_star);
    out.objective = r.score;
    out.loss = r.loss;
    out.index = r.index;
    out.topologies_evaluated = search.evaluated();
}

void require_resolved(const ObjectiveWeights& w) {
    if (!w.resolved()) throw ArgumentError("objective normalizers are not set");
    if (!(*w.loss_max > 0.0) || !(*w.index_max > 0.0)) throw ArgumentError("objective normalizers must be positive");
}

}  // namespace

ObjectiveWeights resolve_weights(const Network& net, const ScenarioSet& scen, const ObjectiveWeights& w,
                                 const Evaluator& ev, const SbrOptions& opts) {
    scen.validate();
    if (!(w.k_l > 0.0)) throw ArgumentError("k_l must be positive");
    if (!std::isfinite(w.k_v)) throw ArgumentError("k_v must be finite");
    const bool higher_is_stable = ev.kind().orientation == Orientation::HigherIsStable;
    if ((higher_is_stable && w.k_v > 0.0) || (!higher_is_stable && w.k_v < 0.0))
        throw ArgumentError("sign of k_v contradicts the index orientation (" + to_string(ev.kind().orientation) + ")");

    ObjectiveWeights out = w;
    if (out.resolved()) {
        require_resolved(out);
        return out;
    }
    const SwitchStatus all = net.all_closed();
    const ExpectedLoss base = expected_loss(net, all, scen, meshed(opts.solver));
    if (!out.loss_max) {
        if (!(base.value > 0.0)) throw NumericError("all-closed expected loss is not positive; set loss_max explicitly");
        out.loss_max = 10.0 * base.value;
    }
    if (!out.index_max) {
        if (ev.kind().name == IndexName::SigmaMin) {
            out.index_max = Evaluator::exact().expected_index(net, all, scen, base.solutions);
        } else if (w.k_v == 0.0) {
            out.index_max = 1.0;
        } else {
            throw ArgumentError("index_max must be given for an external index");
        }
    }
    require_resolved(out);
    return out;
}

double objective_score(double loss, double index, const ObjectiveWeights& w) {
    require_resolved(w);
    if (!std::isfinite(loss) || !std::isfinite(index)) return kInf;
    return w.k_l * loss / *w.loss_max + w.k_v * index / *w.index_max;
}

std::vector<double> expected_branch_flow(const std::vector<PowerFlowSolution>& sols, const std::vector<double>& pi) {
    if (sols.size() != pi.size() || sols.empty()) throw ArgumentError("one solution per scenario required");
    std::vector<double> out(sols.front().flows.size(), 0.0);
    for (std::size_t w = 0; w < sols.size(); ++w)
        for (std::size_t e = 0; e < out.size(); ++e) out[e] += pi[w] * sols[w].flows[e].p_ij;
    return out;
}

std::vector<double> expected_abs_flow(const std::vector<PowerFlowSolution>& sols, const std::vector<double>& pi) {
    if (sols.size() != pi.size() || sols.empty()) throw ArgumentError("one solution per scenario required");
    std::vector<double> out(sols.front().flows.size(), 0.0);
    for (std::size_t w = 0; w < sols.size(); ++w)
        for (std::size_t e = 0; e < out.size(); ++e) out[e] += pi[w] * std::abs(sols[w].flows[e].p_ij);
    return out;
}

double loop_injection(const Network& net, const std::vector<PowerFlowSolution>& sols, const std::vector<double>& pi,
                      const Loop& loop, int bus) {
    const int k = loop.bus_position(bus);
    if (k < 0) throw ArgumentError("bus " + std::to_string(bus) + " is not on the loop");
    if (sols.size() != pi.size()) throw ArgumentError("one solution per scenario required");
    const std::size_t n = loop.size();
    const int sides[2] = {loop.branches[static_cast<std::size_t>(k)], loop.branches[(k + n - 1) % n]};
    double total = 0.0;
    for (std::size_t w = 0; w < sols.size(); ++w) {
        double out = 0.0;
        for (int e : sides) {
            const BranchFlow& f = sols[w].flows.at(static_cast<std::size_t>(e));
            out += net.branch(e).from == bus ? f.p_ij : f.p_ji;
        }
        total += pi[w] * out;
    }
    return total;
}

std::vector<std::vector<int>> subpaths(const Loop& loop, const std::vector<double>& injection_by_position,
                                       double threshold) {
    const std::size_t n = loop.size();
    if (injection_by_position.size() != n) throw DimensionError("one injection per loop bus required");
    std::vector<std::size_t> cuts;
    for (std::size_t k = 0; k < n; ++k)
        if (injection_by_position[k] > threshold) cuts.push_back(k);
    if (cuts.empty()) throw NumericError("no bus injects power into the loop");

    std::vector<std::vector<int>> out;
    for (std::size_t c = 0; c < cuts.size(); ++c) {
        const std::size_t start = cuts[c];
        const std::size_t stop = c + 1 < cuts.size() ? cuts[c + 1] : cuts.front() + n;
        std::vector<int> path;
        for (std::size_t k = start; k < stop; ++k) path.push_back(loop.branches[k % n]);
        out.push_back(std::move(path));
    }
    return out;
}

int min_flow_branch(const std::vector<int>& path, const std::vector<double>& expected_abs) {
    if (path.empty()) throw ArgumentError("empty sub-path");
    int best = path.front();
    for (int e : path) {
        const double v = expected_abs.at(static_cast<std::size_t>(e));
        const double b = expected_abs[static_cast<std::size_t>(best)];
        if (v < b || (v == b && e < best)) best = e;
    }
    return best;
}

int min_flow_branch(const std::vector<int>& path, const std::vector<PowerFlowSolution>& sols,
                    const std::vector<double>& pi) {
    return min_flow_branch(path, expected_abs_flow(sols, pi));
}

std::vector<int> candidate_set(const Network& net, const Loop& loop, int branch, double expected_flow,
                               const SwitchStatus& alpha) {
    const auto it = std::find(loop.branches.begin(), loop.branches.end(), branch);
    if (it == loop.branches.end()) throw ArgumentError("branch " + std::to_string(branch) + " is not on the loop");
    const auto idx = static_cast<std::size_t>(it - loop.branches.begin());
    const Branch& br = net.branch(branch);
    std::vector<int> out{branch};
    int neighbour = -1;
    if (expected_flow > 0.0) neighbour = loop_neighbour(loop, idx, br.to);
    if (expected_flow < 0.0) neighbour = loop_neighbour(loop, idx, br.from);
    if (neighbour >= 0 && neighbour != branch && alpha.closed(static_cast<std::size_t>(neighbour)))
        out.push_back(neighbour);
    std::sort(out.begin(), out.end());
    return out;
}

TopologyEvaluation evaluate_topology(const Network& net, const SwitchStatus& alpha, const ScenarioSet& scen,
                                     const ObjectiveWeights& w, const Evaluator& ev, const SbrOptions& opts) {
    if (!is_radial(net, alpha)) throw PreconditionError("topology is not radial");
    TopologyEvaluation out;
    ExpectedLoss el;
    try {
        el = expected_loss(net, alpha, scen, opts.solver);
    } catch (const InfeasibleTopology& e) {
        out.reason = e.what();
        return out;
    }
    out.loss = el.value;
    if (opts.enforce_limits) {
        for (std::size_t s = 0; s < el.solutions.size(); ++s) {
            const auto v = check_limits(el.solutions[s], net, alpha);
            if (!v.empty()) {
                out.reason = "scenario " + std::to_string(s) + ": " + to_string(v.front().kind) + " limit at element " +
                             std::to_string(v.front().element);
                return out;
            }
        }
    }
    out.index = ev.expected_index(net, alpha, scen, el.solutions);
    out.score = objective_score(out.loss, out.index, w);
    out.feasible = std::isfinite(out.score);
    if (!out.feasible) out.reason = "non-finite objective";
    return out;
}

SbrResult one_stage_sbr(const Network& net, const SwitchStatus& alpha, const ScenarioSet& scen,
                        const ObjectiveWeights& w, const Evaluator& ev, const SbrOptions& opts) {
    check_dimension(net, alpha);
    require_resolved(w);
    scen.validate();
    Search search(net, scen, w, ev, opts);
    SbrResult out;
    out.weights = w;
    const int e = search.one_stage(alpha, 0, 0, out.trace);
    IterateRecord it{0, 0, {}, 0.0};
    SwitchStatus chosen = alpha;
    chosen.open(static_cast<std::size_t>(e));
    it.open = chosen.open_branches();
    it.objective = search.evaluate(chosen).score;
    out.iterates.push_back(it);
    fill_result(out, net, search, it);
    out.stage1_alpha = out.alpha_star;
    out.stage1_objective = out.objective;
    return out;
}

SbrResult one_stage_sbr(const Network& net, const ScenarioSet& scen, const ObjectiveWeights& w, const Evaluator& ev,
                        const SbrOptions& opts) {
    if (net.redundant_count() != 1)
        throw PreconditionError("single-loop search needs L = 1, the network has L = " +
                                std::to_string(net.redundant_count()));
    return one_stage_sbr(net, net.all_closed(), scen, resolve_weights(net, scen, w, ev, opts), ev, opts);
}

SbrResult two_stage_sbr(const Network& net, const ScenarioSet& scen, const ObjectiveWeights& w, const Evaluator& ev,
                        const SbrOptions& opts) {
    const std::size_t L = net.redundant_count();
    if (L == 0) throw PreconditionError("network is already radial");
    if (opts.n_max < 1) throw ArgumentError("n_max must be at least 1");
    SbrResult out;
    out.weights = resolve_weights(net, scen, w, ev, opts);
    Search search(net, scen, out.weights, ev, opts);

    // Stage 1: open the lowest-flow branch of every loop.
    const ExpectedLoss base = expected_loss(net, net.all_closed(), scen, meshed(opts.solver));
    const auto abs_flow = expected_abs_flow(base.solutions, scen.pi);
    std::vector<std::set<int>> loops;
    for (const Loop& loop : chordless_loops(net)) loops.emplace_back(loop.branches.begin(), loop.branches.end());

    SwitchStatus alpha = net.all_closed();
    std::vector<int> opened(L, -1);
    for (std::size_t l = 0; l < L; ++l) {
        const std::vector<int> members(loops[l].begin(), loops[l].end());
        const int e = min_flow_branch(members, abs_flow);
        alpha.open(static_cast<std::size_t>(e));
        opened[l] = e;
        for (std::size_t k = l + 1; k < L; ++k) {
            if (!loops[k].count(e)) continue;
            std::set<int> merged;
            std::set_symmetric_difference(loops[k].begin(), loops[k].end(), loops[l].begin(), loops[l].end(),
                                          std::inserter(merged, merged.end()));
            loops[k] = std::move(merged);
        }
    }
    if (!is_radial(net, alpha)) throw NumericError("first stage did not produce a radial topology");
    out.stage1_alpha = alpha;
    out.stage1_objective = search.evaluate(alpha).score;
    out.iterates.push_back({0, -1, alpha.open_branches(), out.stage1_objective});

    // Stage 2: close each opened branch in turn and search the single residual loop.
    for (int n = 1; n <= opts.n_max; ++n) {
        std::vector<double> gamma(L, kInf);
        for (std::size_t l = 0; l < L; ++l) {
            SwitchStatus residual = alpha;
            residual.close(static_cast<std::size_t>(opened[l]));
            try {
                const int e = search.one_stage(residual, n, static_cast<int>(l), out.trace);
                residual.open(static_cast<std::size_t>(e));
                opened[l] = e;
                alpha = residual;
                gamma[l] = search.evaluate(alpha).score;
            } catch (const InfeasibleTopology&) {
            } catch (const NoFeasibleTopology&) {
            }
            out.iterates.push_back({n, static_cast<int>(l), alpha.open_branches(), gamma[l]});
        }
        out.outer_iterations = n;
        bool settled = true;
        for (std::size_t l = 1; l < L; ++l) settled = settled && same_objective(gamma[l], gamma[0], opts.tie_tolerance);
        if (settled) break;
    }

    const IterateRecord* best = nullptr;
    for (const IterateRecord& it : out.iterates) {
        if (!std::isfinite(it.objective)) continue;
        if (!best || it.objective < best->objective || (it.outer > 0 && it.objective == best->objective)) best = &it;
    }
    if (!best) throw NoFeasibleTopology("no feasible topology was found");
    fill_result(out, net, search, *best);
    return out;
}

nlohmann::json to_json(const ObjectiveWeights& w) {
    return {{"k_l", w.k_l}, {"k_v", w.k_v}, {"loss_max", number(w.loss_max.value_or(kNaN))},
            {"index_max", number(w.index_max.value_or(kNaN))}};
}

nlohmann::json to_json(const SbrResult& r) {
    nlohmann::json iterates = nlohmann::json::array();
    for (const auto& it : r.iterates)
        iterates.push_back({{"outer", it.outer}, {"loop", it.loop}, {"open", it.open}, {"objective", number(it.objective)}});
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& c : r.trace)
        trace.push_back({{"outer", c.outer}, {"loop", c.loop}, {"branch", c.branch}, {"loss", number(c.loss)},
                         {"index", number(c.index)}, {"score", number(c.score)}, {"feasible", c.feasible}});
    return {{"open_branches", r.alpha_star.open_branches()},
            {"objective", number(r.objective)},
            {"expected_loss", number(r.loss)},
            {"expected_index", number(r.index)},
            {"weights", to_json(r.weights)},
            {"stage1", {{"open_branches", r.stage1_alpha.open_branches()}, {"objective", number(r.stage1_objective)}}},
            {"outer_iterations", r.outer_iterations},
            {"topologies_evaluated", r.topologies_evaluated},
            {"iterates", iterates},
            {"trace", trace}};
}

void write_trace_csv(std::ostream& out, const SbrResult& r) {
    out << "outer,loop,branch,loss,index,score,feasible\n";
    for (const auto& c : r.trace)
        out << c.outer << ',' << c.loop << ',' << c.branch << ',' << format_number(c.loss) << ','
            << format_number(c.index) << ',' << format_number(c.score) << ',' << (c.feasible ? 1 : 0) << '\n';
}

}  // namespace sdnr
