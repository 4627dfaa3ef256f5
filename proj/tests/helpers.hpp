#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sdnr/network.hpp"
#include "sdnr/powerflow.hpp"
#include "sdnr/scenario.hpp"

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(SDNR_DATA_DIR) + "/" + name; }

/// Admittance of a series impedance r + jx.
inline std::pair<double, double> admittance(double r, double x) {
    const std::complex<double> y = 1.0 / std::complex<double>(r, x);
    return {y.real(), y.imag()};
}

inline sdnr::Bus bus(int id, bool substation = false, double p_load = 0.0, double q_load = 0.0) {
    sdnr::Bus b;
    b.id = id;
    b.kind = substation ? sdnr::BusKind::Substation : sdnr::BusKind::Load;
    b.p_load = p_load;
    b.q_load = q_load;
    b.v_min = 0.9;
    b.v_max = 1.1;
    if (substation) {
        b.p_min = -10.0;
        b.p_max = 10.0;
        b.q_min = -10.0;
        b.q_max = 10.0;
    }
    return b;
}

inline sdnr::Branch branch(int id, int from, int to, double r, double x, double s_max = 1e9) {
    const auto [g, b] = admittance(r, x);
    sdnr::Branch br;
    br.id = id;
    br.from = from;
    br.to = to;
    br.g = g;
    br.b = b;
    br.s_max = s_max;
    return br;
}

inline sdnr::Network two_bus(double r = 0.02, double x = 0.04, double p = 0.5, double q = 0.2) {
    return sdnr::Network(1.0, {bus(0, true), bus(1, false, p, q)}, {branch(0, 0, 1, r, x)});
}

/// Path 0-1-2.
inline sdnr::Network line3() {
    return sdnr::Network(1.0, {bus(0, true), bus(1, false, 0.1, 0.05), bus(2, false, 0.1, 0.05)},
                         {branch(0, 0, 1, 0.01, 0.02), branch(1, 1, 2, 0.01, 0.02)});
}

/// Ring 0-1-2-3-0 with the substation at 0.
inline sdnr::Network ring4(double load = 0.1) {
    std::vector<sdnr::Bus> buses{bus(0, true)};
    for (int i = 1; i < 4; ++i) buses.push_back(bus(i, false, load, load / 2));
    return sdnr::Network(1.0, buses,
                         {branch(0, 0, 1, 0.01, 0.02), branch(1, 1, 2, 0.01, 0.02), branch(2, 2, 3, 0.01, 0.02),
                          branch(3, 3, 0, 0.01, 0.02)});
}

/// Ring of n buses, branch k joins k and k+1 (mod n).
inline sdnr::Network ring(int n, double load = 0.05) {
    std::vector<sdnr::Bus> buses{bus(0, true)};
    std::vector<sdnr::Branch> branches;
    for (int i = 1; i < n; ++i) buses.push_back(bus(i, false, load, load / 2));
    for (int k = 0; k < n; ++k) branches.push_back(branch(k, k, (k + 1) % n, 0.01, 0.02));
    return sdnr::Network(1.0, buses, branches);
}

/// Closed-form receiving-end voltage of a two-bus line feeding load P + jQ
/// from a 1.0 p.u. source through r + jx. Returns NaN past the nose.
inline double two_bus_voltage(double r, double x, double P, double Q) {
    const double a = 1.0 - 2.0 * (P * r + Q * x);
    const double disc = a * a - 4.0 * (P * P + Q * Q) * (r * r + x * x);
    if (disc < 0.0) return std::nan("");
    return std::sqrt((a + std::sqrt(disc)) / 2.0);
}

/// Largest load multiplier lambda for which (lambda P, lambda Q) has a solution.
inline double two_bus_loadability(double r, double x, double P, double Q) {
    const double a = P * r + Q * x;
    const double c = std::sqrt(P * P + Q * Q) * std::sqrt(r * r + x * x);
    return 1.0 / (2.0 * (a + c));
}

/// Random connected case: a random tree on `n` buses plus `loops` extra branches.
inline sdnr::Network random_network(std::mt19937_64& rng, int n, int loops) {
    std::uniform_real_distribution<double> imp(0.005, 0.03), load(0.01, 0.05), ratio(0.3, 0.6);
    std::vector<sdnr::Bus> buses{bus(0, true)};
    for (int i = 1; i < n; ++i) {
        const double p = load(rng);
        buses.push_back(bus(i, false, p, p * ratio(rng)));
        buses.back().ren_capacity = (i % 3 == 0) ? 0.04 : 0.0;
    }
    std::vector<sdnr::Branch> branches;
    std::set<std::pair<int, int>> used;
    for (int i = 1; i < n; ++i) {
        const int parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
        const int id = static_cast<int>(branches.size());
        branches.push_back(branch(id, parent, i, imp(rng), imp(rng) * 1.5));
        used.insert({std::min(parent, i), std::max(parent, i)});
    }
    std::uniform_int_distribution<int> pick(0, n - 1);
    while (static_cast<int>(branches.size()) < n - 1 + loops) {
        const int a = pick(rng), b = pick(rng);
        if (a == b || used.count({std::min(a, b), std::max(a, b)})) continue;
        used.insert({std::min(a, b), std::max(a, b)});
        const int id = static_cast<int>(branches.size());
        branches.push_back(branch(id, a, b, imp(rng), imp(rng) * 1.5));
    }
    return sdnr::Network(1.0, buses, branches);
}

/// `count` scenarios around the nominal load with renewable output, equal-ish weights.
inline sdnr::ScenarioSet random_scenarios(std::mt19937_64& rng, const sdnr::Network& net, int count) {
    std::uniform_real_distribution<double> scale(0.6, 1.3), ren(0.0, 1.0), w(0.5, 1.5);
    sdnr::ScenarioSet set;
    double total = 0.0;
    for (int k = 0; k < count; ++k) {
        sdnr::Sample s = sdnr::Sample::nominal(net);
        for (const auto& b : net.buses()) {
            if (b.kind == sdnr::BusKind::Substation) continue;
            const double f = scale(rng);
            s.p_d[b.id] *= f;
            s.q_d[b.id] *= f;
            s.p_r[b.id] = b.ren_capacity * ren(rng);
        }
        s.label = "s" + std::to_string(k);
        set.scenarios.push_back(s);
        set.pi.push_back(w(rng));
        total += set.pi.back();
    }
    for (double& p : set.pi) p /= total;
    return set;
}

/// Every pair visited explicitly.
inline double brute_consistency(const std::vector<double>& real, const std::vector<double>& pred) {
    std::uint64_t agree = 0, total = 0;
    for (std::size_t i = 0; i < real.size(); ++i)
        for (std::size_t j = i + 1; j < real.size(); ++j) {
            ++total;
            const int a = (real[i] > real[j]) - (real[i] < real[j]);
            const int b = (pred[i] > pred[j]) - (pred[i] < pred[j]);
            if (a == b) ++agree;
        }
    return 100.0 * static_cast<double>(agree) / static_cast<double>(total);
}

/// Bus injections from complex branch currents, S_i = sum V_i conj(y (V_i - V_j)).
inline void complex_injections(const sdnr::Network& net, const sdnr::SwitchStatus& alpha, const std::vector<double>& V,
                               const std::vector<double>& theta, std::vector<double>& p, std::vector<double>& q) {
    p.assign(net.num_buses(), 0.0);
    q.assign(net.num_buses(), 0.0);
    for (const auto& br : net.branches()) {
        if (!alpha.closed(br.id)) continue;
        const std::complex<double> y(br.g, br.b);
        const auto vi = std::polar(V[br.from], theta[br.from]);
        const auto vj = std::polar(V[br.to], theta[br.to]);
        const auto sij = vi * std::conj(y * (vi - vj));
        const auto sji = vj * std::conj(y * (vj - vi));
        p[br.from] += sij.real();
        q[br.from] += sij.imag();
        p[br.to] += sji.real();
        q[br.to] += sji.imag();
    }
}

/// Central differences of the bus injections with respect to
/// [angles of non-slack buses, magnitudes of non-slack buses].
inline Eigen::MatrixXd fd_jacobian(const sdnr::Network& net, const sdnr::SwitchStatus& alpha, std::vector<double> V,
                                   std::vector<double> theta, double h = 1e-6) {
    std::vector<int> slots;
    for (int i = 0; i < static_cast<int>(net.num_buses()); ++i)
        if (i != net.substation()) slots.push_back(i);
    const auto m = static_cast<Eigen::Index>(slots.size());
    Eigen::MatrixXd J(2 * m, 2 * m);
    auto column = [&](Eigen::Index col, std::vector<double>& var, int bus) {
        const double keep = var[bus];
        std::vector<double> pp, qp, pm, qm;
        var[bus] = keep + h;
        complex_injections(net, alpha, V, theta, pp, qp);
        var[bus] = keep - h;
        complex_injections(net, alpha, V, theta, pm, qm);
        var[bus] = keep;
        for (Eigen::Index r = 0; r < m; ++r) {
            J(r, col) = (pp[slots[r]] - pm[slots[r]]) / (2 * h);
            J(m + r, col) = (qp[slots[r]] - qm[slots[r]]) / (2 * h);
        }
    };
    for (Eigen::Index c = 0; c < m; ++c) {
        column(c, theta, slots[c]);
        column(m + c, V, slots[c]);
    }
    return J;
}

/// max |A - B| over entries, relative to max(|A_ij|, floor).
inline double max_relative_error(const Eigen::MatrixXd& exact, const Eigen::MatrixXd& approx, double floor) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < exact.rows(); ++i)
        for (Eigen::Index j = 0; j < exact.cols(); ++j)
            worst = std::max(worst, std::abs(exact(i, j) - approx(i, j)) / std::max(std::abs(exact(i, j)), floor));
    return worst;
}

}  // namespace testing
