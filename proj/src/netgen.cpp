#include "rdsma/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

namespace rdsma {

int MixingSpec::infected_count() const {
    return static_cast<int>(std::floor(N * prevalence + 0.5));
}

MixingCells solve_mixing_cells(const MixingSpec& spec) {
    if (spec.N < 2 || !(spec.prevalence > 0.0 && spec.prevalence < 1.0) || !(spec.mean_degree > 0.0) ||
        !(spec.homophily_R > 0.0) || !(spec.activity_w > 0.0))
        throw std::invalid_argument("mixing spec needs N >= 2, prevalence in (0,1) and positive d, R, w");
    const double n1 = spec.infected_count();
    const double n0 = spec.N - n1;
    if (n1 < 2 || n0 < 2)
        throw infeasible_network("mixing spec leaves fewer than two nodes in a group");

    // Mean degrees by group: d1 = (n1-1) p11 + n0 p10 and d0 = (n0-1) p00 + n1 p10,
    // with p11 = R p10, d1 = w d0 and (n1 d1 + n0 d0) / N = mean degree.
    const double dbar1 = spec.N * spec.mean_degree / (n1 + n0 / spec.activity_w);
    const double dbar0 = dbar1 / spec.activity_w;
    MixingCells c;
    c.p10 = dbar1 / ((n1 - 1) * spec.homophily_R + n0);
    c.p11 = spec.homophily_R * c.p10;
    c.p00 = (dbar0 - n1 * c.p10) / (n0 - 1);
    for (double p : {c.p11, c.p00, c.p10})
        if (!(p >= 0.0 && p <= 1.0))
            throw infeasible_network("mixing spec implies a tie probability outside [0,1]");
    return c;
}

namespace {

// Visits each index in [0, total) independently with probability p, using
// geometric gaps so sparse blocks cost O(successes).
template <class Visit>
void bernoulli_positions(std::uint64_t total, double p, Rng& rng, Visit&& visit) {
    if (p <= 0.0 || total == 0)
        return;
    if (p >= 1.0) {
        for (std::uint64_t i = 0; i < total; ++i)
            visit(i);
        return;
    }
    const double log_q = std::log1p(-p);
    std::uint64_t pos = 0;
    for (;;) {
        double u = uniform01(rng);
        double gap = std::floor(std::log1p(-u) / log_q);
        if (gap >= static_cast<double>(total - pos))
            return;
        pos += static_cast<std::uint64_t>(gap);
        visit(pos);
        ++pos;
        if (pos >= total)
            return;
    }
}

// Pairs (a < b) inside [first, first + size), enumerated row by row.
void triangle_block(int first, int size, double p, Rng& rng, std::vector<Edge>& out) {
    if (size < 2)
        return;
    const std::uint64_t total = static_cast<std::uint64_t>(size) * (size - 1) / 2;
    int row = 0;
    std::uint64_t row_start = 0;
    bernoulli_positions(total, p, rng, [&](std::uint64_t idx) {
        while (idx >= row_start + static_cast<std::uint64_t>(size - 1 - row)) {
            row_start += size - 1 - row;
            ++row;
        }
        int col = row + 1 + static_cast<int>(idx - row_start);
        out.push_back({first + row, first + col});
    });
}

} // namespace

Network gen_bernoulli_mixing(const MixingSpec& spec, Rng& rng) {
    const MixingCells cells = solve_mixing_cells(spec);
    const int n1 = spec.infected_count();
    const int n0 = spec.N - n1;
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(spec.N * spec.mean_degree * 0.6) + 16);
    triangle_block(0, n1, cells.p11, rng, edges);
    triangle_block(n1, n0, cells.p00, rng, edges);
    bernoulli_positions(static_cast<std::uint64_t>(n1) * n0, cells.p10, rng, [&](std::uint64_t idx) {
        edges.push_back({static_cast<int>(idx / n0), n1 + static_cast<int>(idx % n0)});
    });
    std::vector<std::uint8_t> z(spec.N, 0);
    std::fill(z.begin(), z.begin() + n1, std::uint8_t{1});
    return Network(spec.N, std::move(z), edges);
}

std::optional<int> repair_degree_parity(std::vector<int>& degrees, Rng& rng) {
    long sum = std::accumulate(degrees.begin(), degrees.end(), 0L);
    if (sum % 2 == 0)
        return std::nullopt;
    const int n = static_cast<int>(degrees.size());
    std::vector<int> eligible;
    for (int i = 0; i < n; ++i)
        if (degrees[i] < n - 1)
            eligible.push_back(i);
    if (eligible.empty())
        throw infeasible_network("cannot repair odd degree sum: every node is already at degree N-1");
    int pick = eligible[uniform_index(rng, eligible.size())];
    ++degrees[pick];
    return pick;
}

namespace {

std::uint64_t edge_key(int u, int v) {
    if (u > v)
        std::swap(u, v);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) | static_cast<std::uint32_t>(v);
}

} // namespace

Network reed_molloy(const std::vector<int>& degrees, const std::vector<std::uint8_t>& infection, Rng& rng) {
    const int n = static_cast<int>(degrees.size());
    if (static_cast<int>(infection.size()) != n)
        throw std::invalid_argument("degree and infection sequences differ in length");
    long sum = 0;
    for (int d : degrees) {
        if (d < 0 || d >= std::max(n, 1) || (n == 1 && d > 0))
            throw std::invalid_argument("degrees must lie in [0, N-1]");
        sum += d;
    }
    if (sum % 2 != 0)
        throw std::invalid_argument("degree sum must be even");

    std::vector<int> stubs;
    stubs.reserve(sum);
    for (int i = 0; i < n; ++i)
        stubs.insert(stubs.end(), degrees[i], i);
    std::shuffle(stubs.begin(), stubs.end(), rng);

    const std::size_t m = stubs.size() / 2;
    std::vector<Edge> edges(m);
    std::unordered_map<std::uint64_t, int> multiplicity;
    multiplicity.reserve(m * 2);
    for (std::size_t e = 0; e < m; ++e) {
        edges[e] = {stubs[2 * e], stubs[2 * e + 1]};
        ++multiplicity[edge_key(edges[e].u, edges[e].v)];
    }
    auto is_bad = [&](const Edge& e) { return e.u == e.v || multiplicity[edge_key(e.u, e.v)] > 1; };
    auto count_of = [&](int u, int v) {
        auto it = multiplicity.find(edge_key(u, v));
        return it == multiplicity.end() ? 0 : it->second;
    };

    std::vector<std::size_t> bad;
    auto collect_bad = [&] {
        bad.clear();
        for (std::size_t e = 0; e < m; ++e)
            if (is_bad(edges[e]))
                bad.push_back(e);
    };
    collect_bad();
    const long budget = 100L * static_cast<long>(std::max<std::size_t>(m, 1));
    long attempts = 0;
    while (!bad.empty()) {
        if (attempts >= budget || m < 2)
            throw infeasible_network("degree sequence could not be realised as a simple graph (repair budget spent)");
        ++attempts;
        const std::size_t slot = uniform_index(rng, bad.size());
        const std::size_t b = bad[slot];
        if (!is_bad(edges[b])) {
            bad[slot] = bad.back();
            bad.pop_back();
            if (bad.empty())
                collect_bad();
            continue;
        }
        std::size_t o = uniform_index(rng, m - 1);
        if (o >= b)
            ++o;
        Edge eb = edges[b];
        Edge eo = edges[o];
        if (uniform01(rng) < 0.5)
            std::swap(eo.u, eo.v);
        const Edge na{eb.u, eo.u};
        const Edge nb{eb.v, eo.v};
        if (na.u == na.v || nb.u == nb.v || edge_key(na.u, na.v) == edge_key(nb.u, nb.v))
            continue;
        if (count_of(na.u, na.v) > 0 || count_of(nb.u, nb.v) > 0)
            continue;
        --multiplicity[edge_key(eb.u, eb.v)];
        --multiplicity[edge_key(eo.u, eo.v)];
        ++multiplicity[edge_key(na.u, na.v)];
        ++multiplicity[edge_key(nb.u, nb.v)];
        edges[b] = na;
        edges[o] = nb;
        if (!is_bad(edges[b])) {
            bad[slot] = bad.back();
            bad.pop_back();
        }
        if (bad.empty())
            collect_bad();
    }
    return Network(n, infection, edges);
}

int tetrad_delta(const Network& net, const Tetrad& t) {
    auto z = net.infection();
    auto disc = [&](int a, int b) { return static_cast<int>(z[a] != z[b]); };
    return disc(t.i, t.j) + disc(t.k, t.l) - disc(t.i, t.l) - disc(t.j, t.k);
}

std::optional<SwapProposal> propose_swap(const Network& net, Rng& rng) {
    const auto m = static_cast<std::size_t>(net.edge_count());
    if (m < 2)
        return std::nullopt;
    SwapProposal p;
    p.edge_a = uniform_index(rng, m);
    p.edge_b = uniform_index(rng, m - 1);
    if (p.edge_b >= p.edge_a)
        ++p.edge_b;
    const Edge a = net.edges()[p.edge_a];
    const Edge b = net.edges()[p.edge_b];
    // Two independent coin flips orient the ordered pair of edges.
    const auto bits = rng();
    auto& q = p.quad;
    if (bits & 1U) {
        q.i = a.u;
        q.j = a.v;
    } else {
        q.i = a.v;
        q.j = a.u;
    }
    if (bits & 2U) {
        q.k = b.u;
        q.l = b.v;
    } else {
        q.k = b.v;
        q.l = b.u;
    }
    if (q.i == q.k || q.i == q.l || q.j == q.k || q.j == q.l)
        return std::nullopt;
    if (net.has_edge(q.i, q.l) || net.has_edge(q.j, q.k))
        return std::nullopt;
    p.delta_g = -tetrad_delta(net, q);
    return p;
}

void apply_swap(Network& net, const SwapProposal& p) {
    net.rewire(p.edge_a, p.edge_b, {p.quad.i, p.quad.l}, {p.quad.j, p.quad.k});
}

std::optional<Tetrad> sample_valid_tetrad(const Network& net, Rng& rng) {
    for (int attempt = 0; attempt < tetrad_max_attempts; ++attempt) {
        auto p = propose_swap(net, rng);
        if (!p)
            continue;
        // Valid "+" quads map one-to-one onto "-" quads by swapping j and l.
        if (rng() & 1U)
            return Tetrad{p->quad.i, p->quad.l, p->quad.k, p->quad.j};
        return p->quad;
    }
    return std::nullopt;
}

Network anneal_to_crossties(const Network& net, double target_g, Rng& rng, const AnnealSchedule& schedule,
                            AnnealReport* report) {
    Network cur = net;
    long g = cross_group_ties(cur);
    AnnealReport rep;
    rep.initial_g = g;
    double f = std::abs(g - target_g);
    double best_f = f;
    long best_g = g;
    // Swaps applied since the best state; undone in reverse if the run ends
    // on a worse state.
    std::vector<SwapProposal> since_best;
    const long budget = static_cast<long>(std::ceil(schedule.max_proposals_per_edge * cur.edge_count()));
    double temperature = schedule.initial_temperature;
    long proposals = 0;
    while (best_f >= 1.0 && proposals < budget) {
        ++proposals;
        temperature = std::max(temperature * schedule.cooling, schedule.min_temperature);
        auto p = propose_swap(cur, rng);
        if (!p)
            continue;
        const double f_new = std::abs(g + p->delta_g - target_g);
        const double worse = f_new - f;
        if (worse > 0.0 && uniform01(rng) >= std::exp(-worse / temperature))
            continue;
        apply_swap(cur, *p);
        g += p->delta_g;
        f = f_new;
        since_best.push_back(*p);
        if (f < best_f) {
            best_f = f;
            best_g = g;
            since_best.clear();
        }
    }
    for (auto it = since_best.rbegin(); it != since_best.rend(); ++it) {
        // After a swap the slots hold (i,l) and (j,k); swapping back restores
        // (i,j) and (k,l).
        cur.rewire(it->edge_a, it->edge_b, {it->quad.i, it->quad.j}, {it->quad.k, it->quad.l});
    }
    rep.final_g = best_g;
    rep.residual = best_f;
    rep.proposals = proposals;
    rep.reached = best_f < 1.0;
    if (report)
        *report = rep;
    return cur;
}

ErgmSampler::ErgmSampler(Network start, double eta)
    : net_(std::move(start)), eta_(eta), g_(cross_group_ties(net_)) {}

void ErgmSampler::advance(long proposals, Rng& rng) {
    for (long s = 0; s < proposals; ++s) {
        ++proposed_;
        auto p = propose_swap(net_, rng);
        if (!p)
            continue;
        const double log_ratio = eta_ * p->delta_g;
        if (log_ratio < 0.0 && uniform01(rng) >= std::exp(log_ratio))
            continue;
        apply_swap(net_, *p);
        g_ += p->delta_g;
        ++accepted_;
    }
}

std::vector<Network> ergm_mcmc_sample(const ErgmSpec& spec, const Network& start, int n_draws,
                                      const McmcOptions& options, Rng& rng) {
    if (start.degrees() != spec.degrees)
        throw std::invalid_argument("MCMC start network does not match the degree sequence");
    if (!std::equal(spec.infection.begin(), spec.infection.end(), start.infection().begin(), start.infection().end()))
        throw std::invalid_argument("MCMC start network does not match the infection vector");
    const long e = start.edge_count();
    const long burn = options.burn_in > 0 ? options.burn_in
                                          : static_cast<long>(std::ceil(options.burn_in_per_edge * e));
    const long spacing = options.spacing > 0 ? options.spacing
                                             : static_cast<long>(std::ceil(options.spacing_per_edge * e));
    ErgmSampler sampler(start, spec.eta);
    std::vector<Network> draws;
    draws.reserve(std::max(n_draws, 0));
    for (int d = 0; d < n_draws; ++d) {
        sampler.advance(d == 0 ? burn : spacing, rng);
        draws.push_back(sampler.current());
    }
    return draws;
}

} // namespace rdsma
