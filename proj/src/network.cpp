#include "rdsma/network.hpp"

#include "rdsma/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace rdsma {

Network::Network(int node_count, std::vector<std::uint8_t> infection, const std::vector<Edge>& edges)
    : infection_(std::move(infection)) {
    if (node_count < 1)
        throw std::invalid_argument("network needs at least one node");
    if (static_cast<int>(infection_.size()) != node_count)
        throw std::invalid_argument("infection vector length differs from node count");
    for (auto z : infection_)
        if (z > 1)
            throw std::invalid_argument("infection values must be 0 or 1");
    adjacency_.resize(node_count);
    edges_.reserve(edges.size());
    edge_set_.reserve(edges.size() * 2);
    for (auto e : edges) {
        if (e.u < 0 || e.v < 0 || e.u >= node_count || e.v >= node_count)
            throw std::invalid_argument("edge endpoint out of range: " + std::to_string(e.u) + "-" +
                                        std::to_string(e.v));
        if (e.u == e.v)
            throw std::invalid_argument("self-loop at node " + std::to_string(e.u));
        if (!edge_set_.insert(key(e.u, e.v)).second)
            throw std::invalid_argument("duplicate edge " + std::to_string(e.u) + "-" + std::to_string(e.v));
        edges_.push_back(e);
        adjacency_[e.u].push_back(e.v);
        adjacency_[e.v].push_back(e.u);
    }
}

std::size_t Network::check(int i) const {
    if (i < 0 || i >= node_count())
        throw std::out_of_range("node id " + std::to_string(i) + " out of range");
    return static_cast<std::size_t>(i);
}

std::uint64_t Network::key(int u, int v) {
    if (u > v)
        std::swap(u, v);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) | static_cast<std::uint32_t>(v);
}

bool Network::has_edge(int u, int v) const {
    return u != v && edge_set_.count(key(u, v)) != 0;
}

std::vector<int> Network::degrees() const {
    std::vector<int> d(adjacency_.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = static_cast<int>(adjacency_[i].size());
    return d;
}

int Network::infected_count() const {
    return static_cast<int>(std::count(infection_.begin(), infection_.end(), std::uint8_t{1}));
}

double Network::prevalence() const {
    return static_cast<double>(infected_count()) / node_count();
}

void Network::replace_neighbor(int node, int from, int to) {
    auto& adj = adjacency_[node];
    auto it = std::find(adj.begin(), adj.end(), from);
    *it = to;
}

void Network::rewire(std::size_t a, std::size_t b, Edge new_a, Edge new_b) {
    const Edge old_a = edges_[a];
    const Edge old_b = edges_[b];
    edge_set_.erase(key(old_a.u, old_a.v));
    edge_set_.erase(key(old_b.u, old_b.v));
    // Drop the old incidences, then add the new ones; each endpoint keeps its
    // degree so every removal pairs with an insertion at the same node.
    auto drop = [this](int x, int y) {
        auto& adj = adjacency_[x];
        adj.erase(std::find(adj.begin(), adj.end(), y));
    };
    drop(old_a.u, old_a.v);
    drop(old_a.v, old_a.u);
    drop(old_b.u, old_b.v);
    drop(old_b.v, old_b.u);
    for (Edge e : {new_a, new_b}) {
        adjacency_[e.u].push_back(e.v);
        adjacency_[e.v].push_back(e.u);
        edge_set_.insert(key(e.u, e.v));
    }
    edges_[a] = new_a;
    edges_[b] = new_b;
}

double ClassTable::total() const {
    double s = 0;
    for (const auto& [k, v] : entries)
        s += v;
    return s;
}

double ClassTable::at(ClassKey k) const {
    auto it = entries.find(k);
    return it == entries.end() ? 0.0 : it->second;
}

double ClassTable::degree_sum() const {
    double s = 0;
    for (const auto& [k, v] : entries)
        s += k.degree * v;
    return s;
}

long cross_group_ties(const Network& net) {
    auto z = net.infection();
    long g = 0;
    for (auto e : net.edges())
        g += z[e.u] != z[e.v];
    return g;
}

int node_cross_alters(const Network& net, int i) {
    int x = 0;
    auto z = net.infection();
    for (int j : net.neighbors(i))
        x += z[j];
    return x;
}

ClassTable class_table(const Network& net) {
    ClassTable t;
    for (int i = 0; i < net.node_count(); ++i)
        t.entries[{net.degree(i), net.infected(i)}] += 1.0;
    return t;
}

NetStats mixing_and_ratios(const Network& net) {
    const long n1 = net.infected_count();
    const long n0 = net.node_count() - n1;
    if (n1 < 2 || n0 < 1)
        throw std::domain_error("mixing statistics need at least two infected and one uninfected node");
    NetStats s;
    auto z = net.infection();
    for (auto e : net.edges()) {
        if (z[e.u] != z[e.v])
            ++s.cross_ties;
        else if (z[e.u] == 1)
            ++s.within1_ties;
        else
            ++s.within0_ties;
    }
    s.mean_degree = 2.0 * net.edge_count() / net.node_count();

    const double density11 = s.within1_ties / (0.5 * n1 * (n1 - 1));
    const double density10 = static_cast<double>(s.cross_ties) / (n1 * n0);
    if (s.cross_ties == 0) {
        s.homophily_R = std::numeric_limits<double>::infinity();
        s.homophily_infinite = true;
    } else {
        s.homophily_R = density11 / density10;
    }

    const double dbar1 = (2.0 * s.within1_ties + s.cross_ties) / n1;
    const double dbar0 = (2.0 * s.within0_ties + s.cross_ties) / n0;
    if (dbar0 == 0.0) {
        s.activity_w = std::numeric_limits<double>::infinity();
        s.activity_infinite = true;
    } else {
        s.activity_w = dbar1 / dbar0;
    }
    return s;
}

std::vector<long> edgewise_shared_partners(const Network& net) {
    const int n = net.node_count();
    std::vector<long> ep(std::max(n - 1, 1), 0);
    for (auto e : net.edges()) {
        int a = e.u, b = e.v;
        if (net.degree(a) > net.degree(b))
            std::swap(a, b);
        int shared = 0;
        for (int w : net.neighbors(a))
            if (w != b && net.has_edge(w, b))
                ++shared;
        ++ep[shared];
    }
    return ep;
}

double gwesp(const Network& net, double theta) {
    if (!(theta >= 0.0))
        throw std::invalid_argument("gwesp decay theta must be non-negative");
    auto ep = edgewise_shared_partners(net);
    const double decay = 1.0 - std::exp(-theta);
    double s = 0.0;
    for (std::size_t i = 1; i < ep.size(); ++i)
        if (ep[i] != 0)
            s += (1.0 - std::pow(decay, static_cast<double>(i))) * ep[i];
    return std::exp(theta) * s;
}

Network read_network(const std::filesystem::path& dir) {
    auto nodes = csv::read(dir / "nodes.csv");
    const auto c_id = nodes.column("id");
    const auto c_inf = nodes.column("infected");
    const auto n = nodes.rows.size();
    std::vector<std::uint8_t> z(n, 0);
    std::vector<bool> seen(n, false);
    for (const auto& row : nodes.rows) {
        long id = csv::parse_long(row[c_id], "node id");
        long inf = csv::parse_long(row[c_inf], "infected");
        if (id < 0 || static_cast<std::size_t>(id) >= n || seen[id])
            throw std::runtime_error("node ids must be unique and contiguous from 0");
        if (inf != 0 && inf != 1)
            throw std::runtime_error("infected must be 0 or 1");
        seen[id] = true;
        z[id] = static_cast<std::uint8_t>(inf);
    }
    auto edge_table = csv::read(dir / "edges.csv");
    const auto c_u = edge_table.column("u");
    const auto c_v = edge_table.column("v");
    std::vector<Edge> edges;
    edges.reserve(edge_table.rows.size());
    for (const auto& row : edge_table.rows)
        edges.push_back({static_cast<int>(csv::parse_long(row[c_u], "u")),
                         static_cast<int>(csv::parse_long(row[c_v], "v"))});
    try {
        return Network(static_cast<int>(n), std::move(z), edges);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("invalid network files: ") + e.what());
    }
}

void write_network(const Network& net, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream nodes(dir / "nodes.csv");
    nodes << "id,infected\n";
    for (int i = 0; i < net.node_count(); ++i)
        nodes << i << ',' << net.infected(i) << '\n';
    std::vector<Edge> sorted(net.edges().begin(), net.edges().end());
    for (auto& e : sorted)
        if (e.u > e.v)
            std::swap(e.u, e.v);
    std::sort(sorted.begin(), sorted.end(), [](Edge a, Edge b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
    std::ofstream edges(dir / "edges.csv");
    edges << "u,v\n";
    for (auto e : sorted)
        edges << e.u << ',' << e.v << '\n';
    if (!nodes || !edges)
        throw std::runtime_error("failed writing network to " + dir.string());
}

} // namespace rdsma
