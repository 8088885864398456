#ifndef RDSMA_NETWORK_HPP
#define RDSMA_NETWORK_HPP

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <unordered_set>
#include <vector>

namespace rdsma {

struct Edge {
    int u = 0;
    int v = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// (degree, infection) equivalence class of a node.
struct ClassKey {
    int degree = 0;
    int infected = 0;
    friend auto operator<=>(const ClassKey&, const ClassKey&) = default;
};

/// Simple undirected graph over dense 0-based node ids with one binary
/// covariate (infection status) per node.
///
/// Read access is const and thread-safe. `rewire` is the only mutator; it
/// replaces two edges by two others and is used by the degree-preserving
/// generators on networks they own.
class Network {
public:
    Network() = default;

    /// Throws std::invalid_argument on self-loops, duplicate edges,
    /// out-of-range ids or infection values outside {0,1}.
    Network(int node_count, std::vector<std::uint8_t> infection, const std::vector<Edge>& edges);

    int node_count() const { return static_cast<int>(infection_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    int degree(int i) const { return static_cast<int>(adjacency_[check(i)].size()); }
    int infected(int i) const { return infection_[check(i)]; }
    std::span<const int> neighbors(int i) const { return adjacency_[check(i)]; }
    std::span<const std::uint8_t> infection() const { return infection_; }
    std::span<const Edge> edges() const { return edges_; }
    bool has_edge(int u, int v) const;

    std::vector<int> degrees() const;
    int infected_count() const;
    double prevalence() const;

    /// Replaces edges at positions a and b by `new_a` and `new_b`. The
    /// caller guarantees the result is simple and that the node multiset of
    /// the four endpoints is unchanged (so every degree is preserved).
    void rewire(std::size_t a, std::size_t b, Edge new_a, Edge new_b);

private:
    std::size_t check(int i) const;
    static std::uint64_t key(int u, int v);
    void replace_neighbor(int node, int from, int to);

    std::vector<std::uint8_t> infection_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<Edge> edges_;
    std::unordered_set<std::uint64_t> edge_set_;
};

enum class TableScale { integer_count, estimated };

/// Counts (or estimates) of nodes per (degree, infection) class.
struct ClassTable {
    std::map<ClassKey, double> entries;
    TableScale scale = TableScale::integer_count;

    double total() const;
    double at(ClassKey key) const;
    /// Sum of degree times count.
    double degree_sum() const;
};

struct NetStats {
    long cross_ties = 0;
    long within1_ties = 0;
    long within0_ties = 0;
    double mean_degree = 0.0;
    /// Ratio of infected-infected tie density to cross-group tie density;
    /// +infinity when there are no cross ties (see `homophily_infinite`).
    double homophily_R = 0.0;
    bool homophily_infinite = false;
    /// Mean degree of infected nodes over mean degree of uninfected nodes.
    double activity_w = 0.0;
    bool activity_infinite = false;
};

/// Number of edges joining an infected and an uninfected node.
long cross_group_ties(const Network& net);

/// x_i: number of infected neighbours of node i.
int node_cross_alters(const Network& net, int i);

ClassTable class_table(const Network& net);

/// Throws std::domain_error unless there are at least two infected and one
/// uninfected node.
NetStats mixing_and_ratios(const Network& net);

/// EP_0 .. EP_{N-2}: edges counted by their number of shared partners.
std::vector<long> edgewise_shared_partners(const Network& net);

double gwesp(const Network& net, double theta);

/// Reads `nodes.csv` (id,infected) and `edges.csv` (u,v) from `dir`.
Network read_network(const std::filesystem::path& dir);
void write_network(const Network& net, const std::filesystem::path& dir);

} // namespace rdsma

#endif
