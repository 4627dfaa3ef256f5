#include "sdnr/network.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <utility>

#include "sdnr/error.hpp"

namespace sdnr {

namespace {

class DisjointSets {
  public:
    explicit DisjointSets(std::size_t n) : parent_(n) { reset(); }

    void reset() { std::iota(parent_.begin(), parent_.end(), 0); }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[b] = a;
        return true;
    }

  private:
    std::vector<int> parent_;
};

std::string kind_name(BusKind kind) { return kind == BusKind::Substation ? "substation" : "load"; }

}  // namespace

SwitchStatus SwitchStatus::with_open(std::size_t branch_count, const std::vector<int>& open) {
    SwitchStatus s(branch_count, true);
    for (int e : open) {
        if (e < 0 || static_cast<std::size_t>(e) >= branch_count)
            throw DimensionError("branch id " + std::to_string(e) + " out of range");
        s.open(static_cast<std::size_t>(e));
    }
    return s;
}

std::size_t SwitchStatus::closed_count() const {
    return static_cast<std::size_t>(std::count(closed_.begin(), closed_.end(), std::uint8_t{1}));
}

std::vector<int> SwitchStatus::open_branches() const {
    std::vector<int> out;
    for (std::size_t e = 0; e < closed_.size(); ++e)
        if (!closed_[e]) out.push_back(static_cast<int>(e));
    return out;
}

bool Loop::contains_branch(int branch) const {
    return std::find(branches.begin(), branches.end(), branch) != branches.end();
}

bool Loop::contains_bus(int bus) const { return bus_position(bus) >= 0; }

int Loop::bus_position(int bus) const {
    auto it = std::find(buses.begin(), buses.end(), bus);
    return it == buses.end() ? -1 : static_cast<int>(it - buses.begin());
}

Network::Network(double base_mva, std::vector<Bus> buses, std::vector<Branch> branches)
    : base_mva_(base_mva), buses_(std::move(buses)), branches_(std::move(branches)) {
    if (!(base_mva_ > 0.0)) throw InputError("base_mva must be positive");
    if (buses_.empty()) throw InputError("network has no buses");

    const int n = static_cast<int>(buses_.size());
    for (int i = 0; i < n; ++i) {
        const Bus& bus = buses_[i];
        if (bus.id != i) throw InputError("bus ids must be contiguous 0..N-1; found " + std::to_string(bus.id) + " at position " + std::to_string(i));
        if (!(bus.v_min < bus.v_max)) throw InputError("bus " + std::to_string(i) + ": v_min must be below v_max");
        if (bus.kind == BusKind::Substation) {
            if (substation_ >= 0) throw TopologyError("multiple substation buses are not supported (buses " + std::to_string(substation_) + " and " + std::to_string(i) + ")");
            substation_ = i;
        }
    }
    if (substation_ < 0) throw TopologyError("network has no substation bus");

    std::set<std::pair<int, int>> pairs;
    incidence_.assign(buses_.size(), {});
    for (std::size_t k = 0; k < branches_.size(); ++k) {
        const Branch& br = branches_[k];
        const std::string tag = "branch " + std::to_string(k);
        if (br.id != static_cast<int>(k)) throw InputError("branch ids must be contiguous 0..E-1; found " + std::to_string(br.id) + " at position " + std::to_string(k));
        if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n) throw InputError(tag + ": endpoint out of range");
        if (br.from == br.to) throw InputError(tag + ": self loop");
        if (br.g == 0.0 && br.b == 0.0) throw InputError(tag + ": zero series admittance");
        if (br.g < 0.0) throw InputError(tag + ": negative series conductance");
        if (!pairs.emplace(std::min(br.from, br.to), std::max(br.from, br.to)).second)
            throw InputError(tag + ": duplicate branch between buses " + std::to_string(br.from) + " and " + std::to_string(br.to));
        incidence_[br.from].push_back(br.id);
        incidence_[br.to].push_back(br.id);
    }

    if (branches_.size() + 1 < buses_.size()) throw TopologyError("all-closed network is disconnected (too few branches)");
    int components = 0;
    closed_components(*this, all_closed(), &components);
    if (components != 1) throw TopologyError("all-closed network is disconnected");
}

Network Network::without_branches(const std::vector<int>& drop) const {
    std::vector<Branch> kept;
    for (const Branch& br : branches_) {
        if (std::find(drop.begin(), drop.end(), br.id) != drop.end()) continue;
        Branch copy = br;
        copy.id = static_cast<int>(kept.size());
        kept.push_back(copy);
    }
    return Network(base_mva_, buses_, std::move(kept));
}

void check_dimension(const Network& net, const SwitchStatus& alpha) {
    if (alpha.size() != net.num_branches())
        throw DimensionError("switch vector has " + std::to_string(alpha.size()) + " entries, network has " +
                             std::to_string(net.num_branches()) + " branches");
}

std::vector<int> closed_components(const Network& net, const SwitchStatus& alpha, int* count) {
    check_dimension(net, alpha);
    std::vector<int> comp(net.num_buses(), -1);
    int next = 0;
    std::vector<int> stack;
    for (std::size_t start = 0; start < net.num_buses(); ++start) {
        if (comp[start] >= 0) continue;
        comp[start] = next;
        stack.assign(1, static_cast<int>(start));
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int e : net.incidence()[u]) {
                if (!alpha.closed(e)) continue;
                int v = net.branch(e).other(u);
                if (comp[v] < 0) {
                    comp[v] = next;
                    stack.push_back(v);
                }
            }
        }
        ++next;
    }
    if (count) *count = next;
    return comp;
}

bool is_radial(const Network& net, const SwitchStatus& alpha) {
    check_dimension(net, alpha);
    if (alpha.closed_count() + 1 != net.num_buses()) return false;
    DisjointSets sets(net.num_buses());
    for (const Branch& br : net.branches())
        if (alpha.closed(br.id) && !sets.unite(br.from, br.to)) return false;
    return true;
}

std::vector<Loop> fundamental_loops(const Network& net, const SwitchStatus& alpha) {
    check_dimension(net, alpha);
    const std::size_t n = net.num_buses();
    std::vector<int> parent_branch(n, -1), depth(n, -1);
    std::vector<std::uint8_t> in_tree(net.num_branches(), 0);

    // spanning tree from branches taken in ascending id, so chords are the highest ids
    DisjointSets sets(n);
    for (const Branch& br : net.branches())
        if (alpha.closed(br.id) && sets.unite(br.from, br.to)) in_tree[br.id] = 1;

    std::queue<int> queue;
    queue.push(net.substation());
    depth[net.substation()] = 0;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop();
        for (int e : net.incidence()[u]) {
            if (!in_tree[e]) continue;
            int v = net.branch(e).other(u);
            if (depth[v] >= 0) continue;
            depth[v] = depth[u] + 1;
            parent_branch[v] = e;
            queue.push(v);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (depth[i] < 0) throw TopologyError("closed-branch graph is disconnected at bus " + std::to_string(i));

    auto parent = [&](int v) { return net.branch(parent_branch[v]).other(v); };

    std::vector<Loop> loops;
    for (const Branch& chord : net.branches()) {
        if (!alpha.closed(chord.id) || in_tree[chord.id]) continue;
        std::vector<int> up_u{chord.from}, up_v{chord.to};
        std::vector<int> edges_u, edges_v;
        int a = chord.from, b = chord.to;
        while (depth[a] > depth[b]) { edges_u.push_back(parent_branch[a]); a = parent(a); up_u.push_back(a); }
        while (depth[b] > depth[a]) { edges_v.push_back(parent_branch[b]); b = parent(b); up_v.push_back(b); }
        while (a != b) {
            edges_u.push_back(parent_branch[a]); a = parent(a); up_u.push_back(a);
            edges_v.push_back(parent_branch[b]); b = parent(b); up_v.push_back(b);
        }
        Loop loop;
        loop.buses = up_u;
        loop.branches = edges_u;
        for (std::size_t k = up_v.size() - 1; k-- > 0;) loop.buses.push_back(up_v[k]);
        for (std::size_t k = edges_v.size(); k-- > 0;) loop.branches.push_back(edges_v[k]);
        loop.branches.push_back(chord.id);
        loops.push_back(std::move(loop));
    }
    return loops;
}

std::vector<Loop> chordless_loops(const Network& net) { return fundamental_loops(net, net.all_closed()); }

std::size_t enumerate_radial(const Network& net, std::optional<std::size_t> cap,
                             const std::function<bool(const SwitchStatus&)>& visit) {
    const std::size_t L = net.redundant_count();
    const std::size_t E = net.num_branches();

    // Bridges can never be opened; only branches lying on some loop are candidates.
    std::vector<std::uint8_t> on_loop(E, 0);
    for (const Loop& loop : chordless_loops(net))
        for (int e : loop.branches) on_loop[e] = 1;
    std::vector<int> candidates;
    for (std::size_t e = 0; e < E; ++e)
        if (on_loop[e]) candidates.push_back(static_cast<int>(e));

    SwitchStatus alpha = net.all_closed();
    if (L == 0) {
        if (cap && *cap == 0) throw EnumerationTruncated(0);
        visit(alpha);
        return 1;
    }
    if (candidates.size() < L) return 0;

    DisjointSets sets(net.num_buses());
    std::vector<std::size_t> pick(L);
    std::iota(pick.begin(), pick.end(), 0);
    std::size_t visited = 0;
    const std::size_t m = candidates.size();
    while (true) {
        for (std::size_t k : pick) alpha.open(candidates[k]);
        sets.reset();
        bool tree = true;
        for (const Branch& br : net.branches()) {
            if (alpha.closed(br.id) && !sets.unite(br.from, br.to)) { tree = false; break; }
        }
        if (tree) {
            if (cap && visited == *cap) throw EnumerationTruncated(visited);
            ++visited;
            if (!visit(alpha)) return visited;
        }
        for (std::size_t k : pick) alpha.close(candidates[k]);

        // next L-combination of 0..m-1 in lexicographic order
        std::size_t i = L;
        while (i > 0 && pick[i - 1] == m - L + (i - 1)) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < L; ++j) pick[j] = pick[j - 1] + 1;
    }
    return visited;
}

std::vector<SwitchStatus> enumerate_radial(const Network& net, std::optional<std::size_t> cap) {
    std::vector<SwitchStatus> out;
    enumerate_radial(net, cap, [&](const SwitchStatus& a) {
        out.push_back(a);
        return true;
    });
    return out;
}

nlohmann::json to_json(const Network& net) {
    nlohmann::json doc;
    doc["format"] = "sdnr-network/1";
    doc["base_mva"] = net.base_mva();
    auto& buses = doc["buses"] = nlohmann::json::array();
    for (const Bus& bus : net.buses()) {
        nlohmann::json j{{"id", bus.id}, {"kind", kind_name(bus.kind)}, {"v_min", bus.v_min}, {"v_max", bus.v_max}};
        if (bus.kind == BusKind::Substation) {
            j["p_min"] = bus.p_min;
            j["p_max"] = bus.p_max;
            j["q_min"] = bus.q_min;
            j["q_max"] = bus.q_max;
        }
        if (bus.p_load != 0.0) j["p_load"] = bus.p_load;
        if (bus.q_load != 0.0) j["q_load"] = bus.q_load;
        if (bus.ren_capacity != 0.0) j["ren_capacity"] = bus.ren_capacity;
        if (!bus.name.empty()) j["name"] = bus.name;
        buses.push_back(std::move(j));
    }
    auto& branches = doc["branches"] = nlohmann::json::array();
    for (const Branch& br : net.branches()) {
        nlohmann::json j{{"id", br.id}, {"from", br.from}, {"to", br.to}, {"g", br.g}, {"b", br.b}, {"s_max", br.s_max}};
        if (!br.switchable) j["switchable"] = false;
        branches.push_back(std::move(j));
    }
    return doc;
}

Network network_from_json(const nlohmann::json& doc) {
    try {
        std::vector<Bus> buses;
        for (const auto& j : doc.at("buses")) {
            Bus bus;
            bus.id = j.at("id").get<int>();
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "substation") bus.kind = BusKind::Substation;
            else if (kind == "load" || kind == "non-substation") bus.kind = BusKind::Load;
            else throw InputError("bus " + std::to_string(bus.id) + ": unknown kind '" + kind + "'");
            bus.v_min = j.value("v_min", bus.v_min);
            bus.v_max = j.value("v_max", bus.v_max);
            bus.p_min = j.value("p_min", bus.p_min);
            bus.p_max = j.value("p_max", bus.p_max);
            bus.q_min = j.value("q_min", bus.q_min);
            bus.q_max = j.value("q_max", bus.q_max);
            bus.p_load = j.value("p_load", 0.0);
            bus.q_load = j.value("q_load", 0.0);
            bus.ren_capacity = j.value("ren_capacity", 0.0);
            bus.name = j.value("name", std::string{});
            buses.push_back(std::move(bus));
        }
        std::vector<Branch> branches;
        for (const auto& j : doc.at("branches")) {
            Branch br;
            br.id = j.at("id").get<int>();
            br.from = j.at("from").get<int>();
            br.to = j.at("to").get<int>();
            br.g = j.at("g").get<double>();
            br.b = j.at("b").get<double>();
            br.s_max = j.value("s_max", br.s_max);
            br.switchable = j.value("switchable", true);
            branches.push_back(br);
        }
        return Network(doc.at("base_mva").get<double>(), std::move(buses), std::move(branches));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("network schema: ") + e.what());
    }
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open network file '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
    try {
        return network_from_json(doc);
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << to_json(net).dump(1) << '\n';
}

}  // namespace sdnr
