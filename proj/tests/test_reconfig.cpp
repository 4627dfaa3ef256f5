#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "sdnr/error.hpp"
#include "sdnr/oracle.hpp"
#include "sdnr/reconfig.hpp"

using namespace sdnr;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ObjectiveWeights fixed(double k_l, double k_v, double loss_max, double index_max) {
    ObjectiveWeights w;
    w.k_l = k_l;
    w.k_v = k_v;
    w.loss_max = loss_max;
    w.index_max = index_max;
    return w;
}

/// Ring with uneven loads so the flow split point is away from the middle.
Network skewed_ring(int n) {
    Network base = testing::ring(n);
    std::vector<Bus> buses = base.buses();
    for (int i = 1; i < n; ++i) {
        buses[i].p_load = 0.02 + 0.015 * i;
        buses[i].q_load = buses[i].p_load / 2;
    }
    return Network(1.0, buses, base.branches());
}

Loop plain_loop(int n) {
    Loop loop;
    for (int k = 0; k < n; ++k) {
        loop.branches.push_back(k);
        loop.buses.push_back(k);
    }
    return loop;
}

}  // namespace

TEST_CASE("objective score arithmetic") {
    const auto w = fixed(0.5, -0.5, 2.0, 4.0);
    CHECK(objective_score(1.0, 2.0, w) == doctest::Approx(0.0));
    CHECK(objective_score(2.0, 0.0, w) == doctest::Approx(0.5));
    CHECK(objective_score(0.0, 4.0, w) == doctest::Approx(-0.5));
    CHECK(objective_score(std::nan(""), 1.0, w) == kInf);
    CHECK(objective_score(1.0, kInf, w) == kInf);
    CHECK_THROWS_AS(objective_score(1.0, 1.0, ObjectiveWeights{}), ArgumentError);
    CHECK_THROWS_AS(objective_score(1.0, 1.0, fixed(0.5, -0.5, 0.0, 1.0)), ArgumentError);
}

TEST_CASE("weight resolution") {
    const Network net = testing::ring4();
    const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
    const Evaluator ev = Evaluator::exact();
    const auto w = resolve_weights(net, scen, ObjectiveWeights{}, ev);
    REQUIRE(w.resolved());

    SolverOptions meshed;
    meshed.allow_meshed = true;
    const auto sol = solve_pf(net, net.all_closed(), scen.scenarios[0], meshed);
    REQUIRE(sol.converged);
    CHECK(*w.loss_max == doctest::Approx(10.0 * sol.loss).epsilon(1e-12));
    CHECK(*w.index_max == doctest::Approx(sigma_min(jacobian(net, net.all_closed(), sol))).epsilon(1e-12));

    const auto given = resolve_weights(net, scen, fixed(1.0, -1.0, 3.0, 7.0), ev);
    CHECK(*given.loss_max == 3.0);
    CHECK(*given.index_max == 7.0);

    ObjectiveWeights bad;
    bad.k_v = 0.5;
    CHECK_THROWS_AS(resolve_weights(net, scen, bad, ev), ArgumentError);
    bad.k_v = -0.5;
    bad.k_l = 0.0;
    CHECK_THROWS_AS(resolve_weights(net, scen, bad, ev), ArgumentError);
}

TEST_CASE("loop injections on a ring fed at one bus") {
    const Network net = testing::ring4(0.1);
    const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
    SolverOptions meshed;
    meshed.allow_meshed = true;
    const auto sol = solve_pf(net, net.all_closed(), scen.scenarios[0], meshed);
    const auto loops = fundamental_loops(net, net.all_closed());
    REQUIRE(loops.size() == 1);
    const Loop& loop = loops[0];

    // every branch of every bus is on the loop, so injections equal bus injections
    double total = 0.0;
    for (int b = 0; b < 4; ++b) {
        const double inj = loop_injection(net, {sol}, scen.pi, loop, b);
        total += inj;
        if (b == 0)
            CHECK(inj == doctest::Approx(sol.sub_p).epsilon(1e-10));
        else
            CHECK(inj == doctest::Approx(-0.1).epsilon(1e-7));
    }
    CHECK(total == doctest::Approx(sol.loss).epsilon(1e-9));

    // two scenarios mix linearly
    Sample heavy = Sample::nominal(net);
    for (auto& p : heavy.p_d) p *= 2.0;
    const auto sol2 = solve_pf(net, net.all_closed(), heavy, meshed);
    const double mixed = loop_injection(net, {sol, sol2}, {0.25, 0.75}, loop, 2);
    CHECK(mixed == doctest::Approx(0.25 * -0.1 + 0.75 * -0.2).epsilon(1e-7));

    CHECK_THROWS_AS(loop_injection(net, {sol}, scen.pi, Loop{{0, 1}, {0, 1}}, 3), ArgumentError);
}

TEST_CASE("sub-paths between injecting buses") {
    const Loop loop = plain_loop(6);
    const auto paths = subpaths(loop, {0.5, -0.1, 0.2, -0.1, -0.1, -0.1});
    REQUIRE(paths.size() == 2);
    CHECK(paths[0] == std::vector<int>{0, 1});
    CHECK(paths[1] == std::vector<int>{2, 3, 4, 5});

    const auto single = subpaths(loop, {-0.1, -0.1, -0.1, 0.7, -0.1, -0.1});
    REQUIRE(single.size() == 1);
    CHECK(single[0] == std::vector<int>{3, 4, 5, 0, 1, 2});

    // an injection equal to the threshold does not cut
    CHECK(subpaths(loop, {0.5, 1e-7, -0.1, -0.1, -0.1, -0.1}, 1e-7).size() == 1);
    CHECK_THROWS_AS(subpaths(loop, std::vector<double>(6, -0.1)), NumericError);
    CHECK_THROWS_AS(subpaths(loop, {1.0, 2.0}), DimensionError);

    // sub-paths partition the loop
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> inj(6);
        for (double& x : inj) x = u(rng);
        inj[trial % 6] = 1.0;
        std::vector<int> all;
        for (const auto& p : subpaths(loop, inj)) all.insert(all.end(), p.begin(), p.end());
        std::sort(all.begin(), all.end());
        CHECK(all == std::vector<int>{0, 1, 2, 3, 4, 5});
    }
}

TEST_CASE("lowest expected flow branch") {
    const std::vector<double> flow{9.0, 9.0, 9.0, 0.5, 0.01, 0.3};
    CHECK(min_flow_branch({3, 4, 5}, flow) == 4);
    const std::vector<double> tied{0.2, 0.1, 0.1, 0.3};
    CHECK(min_flow_branch({2, 1, 3}, tied) == 1);
    CHECK(min_flow_branch({3, 2}, tied) == 2);
    CHECK_THROWS_AS(min_flow_branch({}, flow), ArgumentError);
}

TEST_CASE("candidate set follows the flow direction") {
    const Network net = testing::ring4();
    const auto loop = fundamental_loops(net, net.all_closed()).front();
    const SwitchStatus all = net.all_closed();
    // branch 1 runs 1 -> 2; branch 2 is downstream at bus 2, branch 0 upstream at bus 1
    CHECK(candidate_set(net, loop, 1, 0.3, all) == std::vector<int>{1, 2});
    CHECK(candidate_set(net, loop, 1, -0.3, all) == std::vector<int>{0, 1});
    CHECK(candidate_set(net, loop, 1, 0.0, all) == std::vector<int>{1});
    CHECK(candidate_set(net, loop, 1, 0.3, SwitchStatus::with_open(4, {2})) == std::vector<int>{1});
    // branch 3 runs 3 -> 0
    CHECK(candidate_set(net, loop, 3, 0.1, all) == std::vector<int>{0, 3});
    CHECK(candidate_set(net, loop, 3, -0.1, all) == std::vector<int>{2, 3});
    CHECK_THROWS_AS(candidate_set(net, plain_loop(3), 3, 0.1, all), ArgumentError);
}

TEST_CASE("topology evaluation") {
    const Network net = testing::ring4();
    const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
    const Evaluator ev = Evaluator::exact();
    const auto w = resolve_weights(net, scen, ObjectiveWeights{}, ev);
    CHECK_THROWS_AS(evaluate_topology(net, net.all_closed(), scen, w, ev), PreconditionError);

    const SwitchStatus alpha = SwitchStatus::with_open(4, {1});
    const auto r = evaluate_topology(net, alpha, scen, w, ev);
    REQUIRE(r.feasible);
    const auto sol = solve_pf(net, alpha, scen.scenarios[0]);
    CHECK(r.loss == doctest::Approx(sol.loss).epsilon(1e-12));
    CHECK(r.index == doctest::Approx(sigma_min(jacobian(net, alpha, sol))).epsilon(1e-12));
    CHECK(r.score == doctest::Approx(objective_score(r.loss, r.index, w)).epsilon(1e-12));

    // a voltage floor every topology violates
    std::vector<Bus> buses = net.buses();
    for (auto& b : buses) b.v_min = 0.9999;
    const Network tight(1.0, buses, net.branches());
    const auto bad = evaluate_topology(tight, alpha, scen, w, ev);
    CHECK_FALSE(bad.feasible);
    CHECK(bad.score == kInf);
    CHECK(!bad.reason.empty());
    SbrOptions loose;
    loose.enforce_limits = false;
    CHECK(evaluate_topology(tight, alpha, scen, w, ev, loose).feasible);
}

TEST_CASE("single-loop search against the exhaustive optimum") {
    const Evaluator ev = Evaluator::exact();
    for (int n : {4, 5, 6, 8}) {
        const Network net = skewed_ring(n);
        const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
        for (double k_v : {0.0, -0.5}) {
            ObjectiveWeights w;
            w.k_v = k_v;
            const auto res = one_stage_sbr(net, scen, w, ev);
            const auto oracle = brute_force_optimum(net, scen, w);
            CHECK(oracle.rows.size() == static_cast<std::size_t>(n));
            CHECK(res.objective == doctest::Approx(oracle.best_objective).epsilon(1e-12));
            CHECK(res.alpha_star.open_branches().size() == 1);
            CHECK(is_radial(net, res.alpha_star));
            CHECK(res.objective >= oracle.best_objective);
        }
    }
    const Network tree = testing::line3();
    CHECK_THROWS_AS(one_stage_sbr(tree, ScenarioSet::single(Sample::nominal(tree)), ObjectiveWeights{}, ev),
                    PreconditionError);
}

TEST_CASE("single-loop search on a residual network") {
    std::mt19937_64 rng(8);
    const Network net = testing::random_network(rng, 8, 2);
    const ScenarioSet scen = testing::random_scenarios(rng, net, 3);
    const Evaluator ev = Evaluator::exact();
    const auto w = resolve_weights(net, scen, ObjectiveWeights{}, ev);
    const auto loops = fundamental_loops(net, net.all_closed());
    SwitchStatus residual = net.all_closed();
    residual.open(static_cast<std::size_t>(loops[0].branches[0]));
    const auto res = one_stage_sbr(net, residual, scen, w, ev);
    CHECK(is_radial(net, res.alpha_star));
    CHECK(res.alpha_star.open_branches().size() == 2);
    for (const auto& c : res.trace) {
        SwitchStatus trial = residual;
        trial.open(static_cast<std::size_t>(c.branch));
        CHECK(is_radial(net, trial));
        CHECK(c.score >= res.objective);
    }
    CHECK_THROWS_AS(one_stage_sbr(net, net.all_closed(), scen, w, ev), PreconditionError);
    CHECK_THROWS_AS(one_stage_sbr(net, residual, scen, ObjectiveWeights{}, ev), ArgumentError);
}

TEST_CASE("a constant surrogate ranks by loss alone") {
    const Network net = skewed_ring(6);
    const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
    auto model = std::make_shared<PredictorModel>(PredictorModel::zero_weights(6, 6, {}, 0.3));
    const auto with_model = one_stage_sbr(net, scen, ObjectiveWeights{}, Evaluator::surrogate(model));
    ObjectiveWeights loss_only;
    loss_only.k_v = 0.0;
    const auto exact = one_stage_sbr(net, scen, loss_only, Evaluator::exact());
    CHECK(with_model.alpha_star == exact.alpha_star);
    CHECK(with_model.index == doctest::Approx(0.3));
}

TEST_CASE("two-stage search") {
    const Evaluator ev = Evaluator::exact();
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        std::mt19937_64 rng(seed);
        const Network net = testing::random_network(rng, 8, 2);
        const ScenarioSet scen = testing::random_scenarios(rng, net, 3);
        OracleReport oracle;
        try {
            oracle = brute_force_optimum(net, scen, ObjectiveWeights{});
        } catch (const NoFeasibleTopology&) {
            continue;
        }
        ++checked;
        const auto res = two_stage_sbr(net, scen, ObjectiveWeights{}, ev);
        CHECK(is_radial(net, res.alpha_star));
        CHECK(is_radial(net, res.stage1_alpha));
        CHECK(res.objective >= oracle.best_objective - 1e-12);
        CHECK(res.objective <= res.stage1_objective);
        CHECK(res.outer_iterations >= 1);
        CHECK(res.outer_iterations <= 5);
        CHECK(res.iterates.front().outer == 0);
        CHECK(res.topologies_evaluated >= 1);

        // every reported iterate re-scores to its recorded objective
        for (const auto& it : res.iterates) {
            if (!std::isfinite(it.objective)) continue;
            const auto alpha = SwitchStatus::with_open(net.num_branches(), it.open);
            CHECK(evaluate_topology(net, alpha, scen, res.weights, ev).score == it.objective);
            CHECK(it.objective >= res.objective);
        }
        for (const auto& c : res.trace) {
            CHECK(c.outer >= 1);
            CHECK(c.loop >= 0);
            CHECK(c.loop < 2);
        }

        const auto again = two_stage_sbr(net, scen, ObjectiveWeights{}, ev);
        CHECK(to_json(again).dump() == to_json(res).dump());
    }
    CHECK(checked >= 3);
}

TEST_CASE("two-stage search on a single loop matches the one-stage result") {
    const Network net = skewed_ring(7);
    const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
    const Evaluator ev = Evaluator::exact();
    const auto one = one_stage_sbr(net, scen, ObjectiveWeights{}, ev);
    const auto two = two_stage_sbr(net, scen, ObjectiveWeights{}, ev);
    CHECK(two.objective <= one.objective + 1e-15);
    CHECK(two.outer_iterations == 1);
}

TEST_CASE("two-stage argument checks") {
    const Evaluator ev = Evaluator::exact();
    const Network tree = testing::line3();
    CHECK_THROWS_AS(two_stage_sbr(tree, ScenarioSet::single(Sample::nominal(tree)), ObjectiveWeights{}, ev),
                    PreconditionError);
    const Network net = testing::ring4();
    const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
    SbrOptions opts;
    opts.n_max = 0;
    CHECK_THROWS_AS(two_stage_sbr(net, scen, ObjectiveWeights{}, ev, opts), ArgumentError);
    ObjectiveWeights wrong;
    wrong.k_v = 0.5;
    CHECK_THROWS_AS(two_stage_sbr(net, scen, wrong, ev), ArgumentError);

    std::vector<Bus> buses = net.buses();
    for (auto& b : buses) b.v_min = 0.9999;
    const Network tight(1.0, buses, net.branches());
    CHECK_THROWS_AS(two_stage_sbr(tight, scen, ObjectiveWeights{}, ev), NoFeasibleTopology);
}

TEST_CASE("search output serialization") {
    const Network net = load_network(testing::data_path("ieee33.json"));
    const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
    const auto res = two_stage_sbr(net, scen, ObjectiveWeights{}, Evaluator::exact());
    const auto doc = to_json(res);
    CHECK(doc["open_branches"].get<std::vector<int>>() == res.alpha_star.open_branches());
    CHECK(doc["open_branches"].size() == 5);
    CHECK(doc["trace"].size() == res.trace.size());
    CHECK(doc["weights"]["loss_max"].get<double>() == *res.weights.loss_max);

    std::ostringstream csv;
    write_trace_csv(csv, res);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "outer,loop,branch,loss,index,score,feasible");
    std::size_t rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == res.trace.size());
    CHECK(res.objective <= res.stage1_objective);
}
