#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "sdnr/error.hpp"
#include "sdnr/oracle.hpp"
#include "sdnr/surrogate.hpp"

using namespace sdnr;

TEST_CASE("exhaustive table on a four-bus ring") {
    const Network net = testing::ring4();
    const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
    const auto report = brute_force_optimum(net, scen, ObjectiveWeights{});
    REQUIRE(report.rows.size() == 4);
    CHECK(report.infeasible == 0);

    // independent minimum over the four single-branch openings
    const Evaluator ev = Evaluator::exact();
    double best = std::numeric_limits<double>::infinity();
    int best_open = -1;
    for (int e = 0; e < 4; ++e) {
        const SwitchStatus alpha = SwitchStatus::with_open(4, {e});
        const auto sol = solve_pf(net, alpha, scen.scenarios[0]);
        const double score = objective_score(sol.loss, sigma_min(jacobian(net, alpha, sol)), report.weights);
        if (score < best) {
            best = score;
            best_open = e;
        }
    }
    CHECK(report.best_objective == doctest::Approx(best).epsilon(1e-12));
    CHECK(report.best_alpha.open_branches() == std::vector<int>{best_open});
    // equal loads on a symmetric ring: the branch opposite the substation is best
    CHECK((best_open == 1 || best_open == 2));

    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(report.rows[i].config == i);
        CHECK(report.rows[i].eval.score >= report.best_objective);
    }
}

TEST_CASE("ties go to the earliest configuration") {
    // symmetric ring: opening branch 1 and branch 2 score the same
    const Network net = testing::ring4();
    const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
    ObjectiveWeights w;
    w.k_v = 0.0;
    const auto report = brute_force_optimum(net, scen, w);
    std::size_t first = report.rows.size();
    for (std::size_t i = 0; i < report.rows.size(); ++i)
        if (std::abs(report.rows[i].eval.score - report.best_objective) == 0.0) first = std::min(first, i);
    CHECK(report.best_row == first);
}

TEST_CASE("a tree has exactly one configuration") {
    const Network net = testing::line3();
    const auto report = brute_force_optimum(net, ScenarioSet::single(Sample::nominal(net)),
                                            [] {
                                                ObjectiveWeights w;
                                                w.loss_max = 1.0;
                                                w.index_max = 1.0;
                                                return w;
                                            }());
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].open.empty());
    CHECK(report.best_row == 0);
}

TEST_CASE("enumeration cap") {
    const Network net = load_network(testing::data_path("ieee33.json"));
    const ScenarioSet scen = ScenarioSet::single(Sample::nominal(net));
    try {
        brute_force_optimum(net, scen, ObjectiveWeights{}, {}, 50);
        FAIL("expected truncation");
    } catch (const EnumerationTruncated& e) {
        CHECK(e.partial_count() == 50);
        CHECK(e.exit_code() == 4);
    }
}

TEST_CASE("no feasible configuration") {
    const Network net = testing::ring4();
    std::vector<Bus> buses = net.buses();
    for (auto& b : buses) b.v_min = 0.9999;
    const Network tight(1.0, buses, net.branches());
    CHECK_THROWS_AS(brute_force_optimum(tight, ScenarioSet::single(Sample::nominal(tight)), ObjectiveWeights{}),
                    NoFeasibleTopology);
}

TEST_CASE("oracle table CSV") {
    std::mt19937_64 rng(12);
    const Network net = testing::random_network(rng, 7, 2);
    const ScenarioSet scen = testing::random_scenarios(rng, net, 2);
    const auto report = brute_force_optimum(net, scen, ObjectiveWeights{});
    std::ostringstream out;
    write_oracle_csv(out, report);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "config,open_branches,objective,loss,index,feasible");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 5);
        CHECK(std::count(line.begin(), line.end(), ';') == 1);
        ++rows;
    }
    CHECK(rows == report.rows.size());
    CHECK(rows == enumerate_radial(net).size());
}

TEST_CASE("the exhaustive optimum bounds the heuristic") {
    for (std::uint64_t seed = 20; seed < 26; ++seed) {
        std::mt19937_64 rng(seed);
        const Network net = testing::random_network(rng, 9, 2);
        const ScenarioSet scen = testing::random_scenarios(rng, net, 2);
        OracleReport report;
        try {
            report = brute_force_optimum(net, scen, ObjectiveWeights{});
        } catch (const NoFeasibleTopology&) {
            continue;
        }
        const auto res = two_stage_sbr(net, scen, ObjectiveWeights{}, Evaluator::exact());
        CHECK(report.best_objective <= res.objective);
        CHECK(report.weights.loss_max == res.weights.loss_max);
        CHECK(report.weights.index_max == res.weights.index_max);
    }
}

TEST_CASE("sweep on a flat case") {
    const Network net = testing::line3();
    const auto sol = bfs_sweep_pf(net, net.all_closed(), Sample::zeros(3));
    REQUIRE(sol.converged);
    for (double v : sol.V) CHECK(v == doctest::Approx(1.0));
    for (double t : sol.theta) CHECK(t == doctest::Approx(0.0));
    CHECK(sol.loss == doctest::Approx(0.0));
}

TEST_CASE("sweep matches the two-bus closed form") {
    for (double p : {0.1, 0.5, 1.0}) {
        const Network net = testing::two_bus(0.02, 0.04, p, p / 2);
        const auto sol = bfs_sweep_pf(net, net.all_closed(), Sample::nominal(net));
        REQUIRE(sol.converged);
        CHECK(sol.V[1] == doctest::Approx(testing::two_bus_voltage(0.02, 0.04, p, p / 2)).epsilon(1e-9));
    }
}

TEST_CASE("sweep and Newton agree on 33-bus radial configurations") {
    const Network net = load_network(testing::data_path("ieee33.json"));
    std::mt19937_64 rng(5);
    const ScenarioSet scen = testing::random_scenarios(rng, net, 4);
    const auto configs = sample_radial_configs(net, 20, 2);
    std::size_t compared = 0;
    for (const auto& alpha : configs)
        for (const auto& s : scen.scenarios) {
            const auto nr = solve_pf(net, alpha, s);
            const auto bfs = bfs_sweep_pf(net, alpha, s);
            // long feeders at heavy load sit past voltage collapse
            CHECK(nr.converged == bfs.converged);
            if (!nr.converged || !bfs.converged) continue;
            ++compared;
            double dv = 0.0;
            for (std::size_t i = 0; i < net.num_buses(); ++i) dv = std::max(dv, std::abs(nr.V[i] - bfs.V[i]));
            CHECK(dv <= 1e-6);
            CHECK(std::abs(nr.loss - bfs.loss) <= 1e-8);
        }
    CHECK(compared >= 60);
}

TEST_CASE("sweep rejects meshed topologies") {
    const Network net = testing::ring4();
    CHECK_THROWS_AS(bfs_sweep_pf(net, net.all_closed(), Sample::nominal(net)), TopologyError);
    CHECK_THROWS_AS(bfs_sweep_pf(net, SwitchStatus(3), Sample::nominal(net)), DimensionError);
}
