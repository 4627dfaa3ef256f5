#include "sdnr/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "sdnr/error.hpp"

namespace sdnr {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

enum class Column { Load, Renewable };

struct ColumnSpec {
    int bus;
    Column kind;
};

std::vector<double> features(const Sample& s) {
    std::vector<double> f;
    f.reserve(s.p_r.size() + s.p_d.size());
    f.insert(f.end(), s.p_r.begin(), s.p_r.end());
    f.insert(f.end(), s.p_d.begin(), s.p_d.end());
    return f;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

}  // namespace

Sample Sample::zeros(std::size_t buses, std::string label) {
    Sample s;
    s.label = std::move(label);
    s.p_r.assign(buses, 0.0);
    s.q_r.assign(buses, 0.0);
    s.p_d.assign(buses, 0.0);
    s.q_d.assign(buses, 0.0);
    return s;
}

Sample Sample::nominal(const Network& net) {
    Sample s = zeros(net.num_buses(), "nominal");
    for (const Bus& bus : net.buses()) {
        if (bus.kind == BusKind::Substation) continue;
        s.p_d[bus.id] = bus.p_load;
        s.q_d[bus.id] = bus.q_load;
    }
    return s;
}

void ScenarioSet::validate() const {
    if (scenarios.empty()) throw ArgumentError("scenario set is empty");
    if (scenarios.size() != pi.size())
        throw ArgumentError("scenario count " + std::to_string(scenarios.size()) + " does not match probability count " +
                            std::to_string(pi.size()));
    double total = 0.0;
    for (std::size_t w = 0; w < pi.size(); ++w) {
        if (!(pi[w] > 0.0)) throw ArgumentError("probability of scenario " + std::to_string(w) + " is not positive");
        total += pi[w];
    }
    if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("scenario probabilities sum to " + std::to_string(total));
}

ScenarioSet ScenarioSet::single(Sample s) {
    ScenarioSet set;
    set.scenarios.push_back(std::move(s));
    set.pi.push_back(1.0);
    return set;
}

double ScaleConfig::load_scale(int bus) const {
    auto it = load.find(bus);
    return it == load.end() ? default_load : it->second;
}

double ScaleConfig::renewable_scale(int bus) const {
    auto it = renewable.find(bus);
    return it == renewable.end() ? default_renewable : it->second;
}

ScaleConfig ScaleConfig::from_json(const nlohmann::json& doc) {
    ScaleConfig cfg;
    cfg.default_load = doc.value("default_load", 1.0);
    cfg.default_renewable = doc.value("default_renewable", 1.0);
    if (doc.contains("load"))
        for (const auto& [key, value] : doc.at("load").items()) cfg.load[std::stoi(key)] = value.get<double>();
    if (doc.contains("renewable"))
        for (const auto& [key, value] : doc.at("renewable").items()) cfg.renewable[std::stoi(key)] = value.get<double>();
    return cfg;
}

double reactive_from_active(double p, double power_factor) {
    if (!(power_factor > 0.0 && power_factor <= 1.0)) throw ArgumentError("power factor must lie in (0, 1]");
    if (power_factor == 1.0) return 0.0;
    return p * std::tan(std::acos(power_factor));
}

std::vector<Sample> ingest_timeseries(std::istream& csv, const Network& net, double power_factor,
                                      double renewable_scale, const ScaleConfig& scale) {
    if (!(power_factor > 0.0 && power_factor <= 1.0)) throw ArgumentError("power factor must lie in (0, 1]");
    std::string line;
    // leading '#' lines carry provenance
    do {
        if (!std::getline(csv, line)) throw IngestionError(0, "missing header");
    } while (!line.empty() && line[0] == '#');
    const auto header = split_csv_line(line);
    if (header.size() < 2) throw IngestionError(0, "header has no data columns");

    std::vector<ColumnSpec> columns;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string& name = header[c];
        const auto colon = name.find(':');
        if (colon == std::string::npos) throw IngestionError(0, "column '" + name + "' is not <bus>:<kind>");
        int bus = -1;
        try {
            std::size_t used = 0;
            bus = std::stoi(name.substr(0, colon), &used);
            if (used != colon) bus = -1;
        } catch (const std::exception&) {
            bus = -1;
        }
        if (bus < 0 || static_cast<std::size_t>(bus) >= net.num_buses() || net.bus(bus).kind == BusKind::Substation)
            throw IngestionError(0, "column '" + name + "' does not map to a non-substation bus");
        const std::string kind = name.substr(colon + 1);
        if (kind == "load_p") columns.push_back({bus, Column::Load});
        else if (kind == "ren_p") columns.push_back({bus, Column::Renewable});
        else throw IngestionError(0, "column '" + name + "' has unknown kind '" + kind + "'");
    }

    std::vector<Sample> samples;
    std::size_t row = 0;
    while (std::getline(csv, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw IngestionError(row, "expected " + std::to_string(header.size()) + " columns, found " + std::to_string(fields.size()));
        Sample s = Sample::zeros(net.num_buses(), fields[0]);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            double value = 0.0;
            try {
                std::size_t used = 0;
                value = std::stod(fields[c + 1], &used);
                if (used != fields[c + 1].size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw IngestionError(row, "column '" + header[c + 1] + "' is not a number");
            }
            if (!std::isfinite(value) || value < 0.0) throw IngestionError(row, "column '" + header[c + 1] + "' has negative or non-finite power");
            const int bus = columns[c].bus;
            if (columns[c].kind == Column::Load) {
                s.p_d[bus] += value * scale.load_scale(bus);
            } else {
                s.p_r[bus] += value * scale.renewable_scale(bus) * renewable_scale;
            }
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
            s.q_d[i] = reactive_from_active(s.p_d[i], power_factor);
            s.q_r[i] = reactive_from_active(s.p_r[i], power_factor);
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

double kmedoids_cost(const std::vector<Sample>& samples, const std::vector<std::size_t>& medoids) {
    double cost = 0.0;
    for (const Sample& s : samples) {
        const auto f = features(s);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m : medoids) best = std::min(best, distance(f, features(samples[m])));
        cost += best;
    }
    return cost;
}

KMedoidsResult kmedoids(const std::vector<Sample>& samples, int k, std::uint64_t seed) {
    const std::size_t n = samples.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw ArgumentError("k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");

    std::vector<std::vector<double>> feats;
    feats.reserve(n);
    for (const Sample& s : samples) feats.push_back(features(s));
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = distance(feats[i], feats[j]);
    auto D = [&](std::size_t i, std::size_t j) { return dist[i * n + j]; };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::uint8_t> is_medoid(n, 0);
    std::vector<std::size_t> medoids;
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

    // BUILD
    for (int added = 0; added < k; ++added) {
        double best_gain = -1.0;
        std::size_t best = n;
        for (std::size_t c : order) {
            if (is_medoid[c]) continue;
            double gain = 0.0;
            if (medoids.empty()) {
                for (std::size_t j = 0; j < n; ++j) gain -= D(c, j);
            } else {
                for (std::size_t j = 0; j < n; ++j) gain += std::max(0.0, nearest[j] - D(c, j));
            }
            if (best == n || gain > best_gain) {
                best_gain = gain;
                best = c;
            }
        }
        is_medoid[best] = 1;
        medoids.push_back(best);
        for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], D(best, j));
    }

    KMedoidsResult result;
    auto total = [&] { return std::accumulate(nearest.begin(), nearest.end(), 0.0); };

    // first and second nearest medoid distance per sample
    std::vector<double> d1(n), d2(n);
    std::vector<std::size_t> near1(n);
    auto refresh = [&] {
        for (std::size_t j = 0; j < n; ++j) {
            d1[j] = d2[j] = std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < medoids.size(); ++p) {
                const double d = D(medoids[p], j);
                if (d < d1[j]) {
                    d2[j] = d1[j];
                    d1[j] = d;
                    near1[j] = p;
                } else if (d < d2[j]) {
                    d2[j] = d;
                }
            }
            nearest[j] = d1[j];
        }
    };
    refresh();
    result.cost_history.push_back(total());

    // SWAP
    while (true) {
        double best_delta = 0.0;
        std::size_t best_slot = 0, best_candidate = n;
        const double scale = std::max(1.0, result.cost_history.back());
        for (std::size_t slot = 0; slot < medoids.size(); ++slot) {
            for (std::size_t h : order) {
                if (is_medoid[h]) continue;
                double delta = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double dh = D(h, j);
                    if (near1[j] == slot) delta += std::min(dh, d2[j]) - d1[j];
                    else if (dh < d1[j]) delta += dh - d1[j];
                }
                if (delta < best_delta - 1e-12 * scale) {
                    best_delta = delta;
                    best_slot = slot;
                    best_candidate = h;
                }
            }
        }
        if (best_candidate == n) break;
        is_medoid[medoids[best_slot]] = 0;
        medoids[best_slot] = best_candidate;
        is_medoid[best_candidate] = 1;
        refresh();
        result.cost_history.push_back(total());
    }

    std::sort(medoids.begin(), medoids.end());
    result.medoids = medoids;
    result.assignment.assign(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < medoids.size(); ++p) {
            const double d = D(medoids[p], j);
            if (d < best) {
                best = d;
                result.assignment[j] = p;
            }
        }
    }
    return result;
}

ScenarioSet kmedoids_reduce(const std::vector<Sample>& samples, int k, std::uint64_t seed) {
    const KMedoidsResult clusters = kmedoids(samples, k, seed);
    std::vector<std::size_t> counts(clusters.medoids.size(), 0);
    for (std::size_t a : clusters.assignment) ++counts[a];

    ScenarioSet set;
    const double n = static_cast<double>(samples.size());
    for (std::size_t p = 0; p < clusters.medoids.size(); ++p) {
        set.scenarios.push_back(samples[clusters.medoids[p]]);
        set.pi.push_back(static_cast<double>(counts[p]) / n);
    }
    return set;
}

BusInjections net_injections(const Sample& sample, const Network& net) {
    const std::size_t n = net.num_buses();
    if (sample.p_r.size() != n || sample.q_r.size() != n || sample.p_d.size() != n || sample.q_d.size() != n)
        throw DimensionError("sample vectors do not match the bus count " + std::to_string(n));
    BusInjections inj{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>(i) == net.substation()) continue;
        inj.p[i] = sample.p_r[i] - sample.p_d[i];
        inj.q[i] = sample.q_r[i] - sample.q_d[i];
    }
    return inj;
}

nlohmann::json to_json(const std::vector<Sample>& samples) {
    auto arr = nlohmann::json::array();
    for (const Sample& s : samples)
        arr.push_back({{"label", s.label}, {"p_r", s.p_r}, {"q_r", s.q_r}, {"p_d", s.p_d}, {"q_d", s.q_d}});
    return arr;
}

std::vector<Sample> samples_from_json(const nlohmann::json& doc) {
    std::vector<Sample> out;
    for (const auto& j : doc) {
        Sample s;
        s.label = j.value("label", std::string{});
        s.p_r = j.at("p_r").get<std::vector<double>>();
        s.q_r = j.at("q_r").get<std::vector<double>>();
        s.p_d = j.at("p_d").get<std::vector<double>>();
        s.q_d = j.at("q_d").get<std::vector<double>>();
        out.push_back(std::move(s));
    }
    return out;
}

nlohmann::json to_json(const ScenarioSet& set) {
    return {{"format", "sdnr-scenarios/1"}, {"samples", to_json(set.scenarios)}, {"probabilities", set.pi}};
}

ScenarioSet scenario_set_from_json(const nlohmann::json& doc) {
    ScenarioSet set;
    try {
        set.scenarios = samples_from_json(doc.at("samples"));
        set.pi = doc.at("probabilities").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("scenario schema: ") + e.what());
    }
    set.validate();
    return set;
}

ScenarioSet load_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario file '" + path + "'");
    try {
        return scenario_set_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

void save_scenarios(const ScenarioSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << to_json(set).dump() << '\n';
}

void write_synthetic_timeseries(std::ostream& csv, const Network& net, int hours, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<int> loads, renewables;
    for (const Bus& bus : net.buses()) {
        if (bus.kind == BusKind::Substation) continue;
        if (bus.p_load > 0.0) loads.push_back(bus.id);
        if (bus.ren_capacity > 0.0) renewables.push_back(bus.id);
    }

    csv << "timestamp";
    for (int b : loads) csv << ',' << b << ":load_p";
    for (int b : renewables) csv << ',' << b << ":ren_p";
    csv << '\n';

    std::vector<double> wind(renewables.size());
    for (double& w : wind) w = unit(rng);
    double cloud = 1.0;
    csv << std::setprecision(10);
    for (int h = 0; h < hours; ++h) {
        const int hour = h % 24;
        if (hour == 0) cloud = 0.3 + 0.7 * unit(rng);
        const double daily = 0.7 + 0.25 * std::sin(2.0 * std::numbers::pi * (hour - 9) / 24.0);
        const double weekly = (h / 24) % 7 >= 5 ? 0.9 : 1.0;
        csv << "h" << h;
        for (int b : loads) {
            const double factor = std::max(0.1, daily * weekly * (1.0 + noise(rng)));
            csv << ',' << net.bus(b).p_load * factor;
        }
        const double solar = std::max(0.0, std::sin(std::numbers::pi * (hour - 6) / 12.0)) * cloud;
        for (std::size_t r = 0; r < renewables.size(); ++r) {
            wind[r] = std::clamp(0.85 * wind[r] + 0.15 * unit(rng) + 0.1 * noise(rng), 0.0, 1.0);
            csv << ',' << net.bus(renewables[r]).ren_capacity * (0.5 * solar + 0.5 * wind[r]);
        }
        csv << '\n';
    }
}

}  // namespace sdnr
