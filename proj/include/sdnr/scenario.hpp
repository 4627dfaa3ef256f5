#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdnr/network.hpp"

namespace sdnr {

/// One time step of renewable output and demand, per bus, per-unit.
struct Sample {
    std::string label;
    std::vector<double> p_r, q_r;
    std::vector<double> p_d, q_d;

    static Sample zeros(std::size_t buses, std::string label = {});
    /// Nominal demand of the case, no renewables.
    static Sample nominal(const Network& net);

    std::size_t size() const { return p_d.size(); }
    bool operator==(const Sample&) const = default;
};

struct ScenarioSet {
    std::vector<Sample> scenarios;
    std::vector<double> pi;

    std::size_t size() const { return scenarios.size(); }
    /// Throws ArgumentError unless probabilities are positive, sum to one and match in length.
    void validate() const;

    static ScenarioSet single(Sample s);
};

struct BusInjections {
    std::vector<double> p, q;
};

/// Per-bus scaling applied to raw CSV values before they become per-unit.
struct ScaleConfig {
    double default_load = 1.0;
    double default_renewable = 1.0;
    std::map<int, double> load;
    std::map<int, double> renewable;

    double load_scale(int bus) const;
    double renewable_scale(int bus) const;
    static ScaleConfig from_json(const nlohmann::json& doc);
};

/// Reads `timestamp,<bus>:load_p,<bus>:ren_p,...`. Reactive power follows
/// from `power_factor`; renewable active power is multiplied by `renewable_scale`.
/// Lines starting with `#` before the header are skipped.
std::vector<Sample> ingest_timeseries(std::istream& csv, const Network& net, double power_factor,
                                      double renewable_scale, const ScaleConfig& scale = {});

/// q = p * tan(acos(pf)).
double reactive_from_active(double p, double power_factor);

struct KMedoidsResult {
    std::vector<std::size_t> medoids;     // sample indices, ascending
    std::vector<std::size_t> assignment;  // position in `medoids` per sample
    std::vector<double> cost_history;     // after BUILD, then after every accepted swap
};

/// PAM k-medoids (greedy BUILD then SWAP) under Euclidean distance on the
/// concatenated (p_r, p_d) vectors. The seed only orders candidates, which
/// decides ties.
KMedoidsResult kmedoids(const std::vector<Sample>& samples, int k, std::uint64_t seed);

/// Scenarios are the medoids, ordered by sample index; probabilities are cluster shares.
ScenarioSet kmedoids_reduce(const std::vector<Sample>& samples, int k, std::uint64_t seed);

/// Sum of distances from every sample to its nearest medoid.
double kmedoids_cost(const std::vector<Sample>& samples, const std::vector<std::size_t>& medoids);

/// p_i = p_r - p_d and q_i = q_r - q_d on load buses; the substation entry is 0.
BusInjections net_injections(const Sample& sample, const Network& net);

nlohmann::json to_json(const ScenarioSet& set);
ScenarioSet scenario_set_from_json(const nlohmann::json& doc);
ScenarioSet load_scenarios(const std::string& path);
void save_scenarios(const ScenarioSet& set, const std::string& path);

nlohmann::json to_json(const std::vector<Sample>& samples);
std::vector<Sample> samples_from_json(const nlohmann::json& doc);

/// Hourly synthetic time series in the ingest CSV layout: demand follows the
/// nominal load with a daily profile and noise; renewable buses mix a solar
/// shape with an AR(1) wind process scaled by their capacity.
void write_synthetic_timeseries(std::ostream& csv, const Network& net, int hours, std::uint64_t seed);

}  // namespace sdnr
