#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdnr {

enum class BusKind { Substation, Load };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::Load;
    double v_min = 0.9;
    double v_max = 1.1;
    // Substation import box; ignored on load buses.
    double p_min = -1e9;
    double p_max = 1e9;
    double q_min = -1e9;
    double q_max = 1e9;
    // Optional nominal demand and renewable capacity, per-unit. Used to
    // build a nominal operating point and synthetic time series.
    double p_load = 0.0;
    double q_load = 0.0;
    double ren_capacity = 0.0;
    std::string name;
};

struct Branch {
    int id = 0;
    int from = 0;
    int to = 0;
    double g = 0.0;
    double b = 0.0;
    double s_max = 1e9;
    bool switchable = true;

    int other(int bus) const { return bus == from ? to : from; }
};

/// Open/closed status per branch, aligned with `Network::branches()`.
class SwitchStatus {
  public:
    SwitchStatus() = default;
    explicit SwitchStatus(std::size_t branch_count, bool closed = true)
        : closed_(branch_count, closed ? 1 : 0) {}

    static SwitchStatus with_open(std::size_t branch_count, const std::vector<int>& open);

    std::size_t size() const { return closed_.size(); }
    bool closed(std::size_t branch) const { return closed_[branch] != 0; }
    void set(std::size_t branch, bool closed) { closed_[branch] = closed ? 1 : 0; }
    void open(std::size_t branch) { closed_[branch] = 0; }
    void close(std::size_t branch) { closed_[branch] = 1; }

    std::size_t closed_count() const;
    std::vector<int> open_branches() const;

    bool operator==(const SwitchStatus&) const = default;

  private:
    std::vector<std::uint8_t> closed_;
};

/// A simple cycle. `branches[k]` joins `buses[k]` and `buses[(k + 1) % n]`.
struct Loop {
    std::vector<int> branches;
    std::vector<int> buses;

    std::size_t size() const { return branches.size(); }
    bool contains_branch(int branch) const;
    bool contains_bus(int bus) const;
    /// Position of `bus` in the cyclic bus sequence, or -1.
    int bus_position(int bus) const;
};

class Network {
  public:
    Network() = default;
    /// Validates every invariant of the case and throws on the first violation.
    Network(double base_mva, std::vector<Bus> buses, std::vector<Branch> branches);

    double base_mva() const { return base_mva_; }
    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const Bus& bus(int id) const { return buses_.at(static_cast<std::size_t>(id)); }
    const Branch& branch(int id) const { return branches_.at(static_cast<std::size_t>(id)); }
    std::size_t num_buses() const { return buses_.size(); }
    std::size_t num_branches() const { return branches_.size(); }
    int substation() const { return substation_; }
    /// L = |E| - (N - 1).
    std::size_t redundant_count() const { return branches_.size() + 1 - buses_.size(); }

    /// Branch ids incident to each bus, ascending.
    const std::vector<std::vector<int>>& incidence() const { return incidence_; }

    SwitchStatus all_closed() const { return SwitchStatus(branches_.size(), true); }

    /// Copy of the case with the branches in `drop` deleted and the rest renumbered.
    Network without_branches(const std::vector<int>& drop) const;

  private:
    double base_mva_ = 1.0;
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<std::vector<int>> incidence_;
    int substation_ = -1;
};

void check_dimension(const Network& net, const SwitchStatus& alpha);

/// Connected components of the closed-branch graph; returns the component id per bus.
std::vector<int> closed_components(const Network& net, const SwitchStatus& alpha, int* count = nullptr);

bool is_radial(const Network& net, const SwitchStatus& alpha);

/// Fundamental cycles of the closed-branch graph with respect to the spanning
/// tree that keeps branches greedily in ascending id, rooted at the
/// substation. One loop per non-tree branch, ordered by that branch's id.
std::vector<Loop> fundamental_loops(const Network& net, const SwitchStatus& alpha);

/// The L loops of the all-closed network.
std::vector<Loop> chordless_loops(const Network& net);

/// Calls `visit` for every radial configuration, ordered lexicographically by
/// the ascending set of opened branch ids. Returns the number visited. When
/// `cap` is given and more than `cap` configurations exist, throws
/// EnumerationTruncated after visiting `cap` of them. Returning false from
/// `visit` stops the walk early without error.
std::size_t enumerate_radial(const Network& net, std::optional<std::size_t> cap,
                             const std::function<bool(const SwitchStatus&)>& visit);

std::vector<SwitchStatus> enumerate_radial(const Network& net, std::optional<std::size_t> cap = std::nullopt);

nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& doc);
Network load_network(const std::string& path);
void save_network(const Network& net, const std::string& path);

}  // namespace sdnr
