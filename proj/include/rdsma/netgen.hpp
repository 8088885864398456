#ifndef RDSMA_NETGEN_HPP
#define RDSMA_NETGEN_HPP

#include "rdsma/network.hpp"
#include "rdsma/random.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace rdsma {

/// Thrown when a requested network cannot be produced: densities outside
/// [0,1] or a degree sequence that stub matching cannot make simple.
class infeasible_network : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Population-level targets of the dyad-independent mixing model.
struct MixingSpec {
    int N = 1000;
    double prevalence = 0.2;
    double mean_degree = 7.0;
    double homophily_R = 5.0;
    double activity_w = 1.0;

    int infected_count() const;
};

/// Tie probabilities for the three cells of the 2x2 mixing matrix.
struct MixingCells {
    double p11 = 0.0;
    double p00 = 0.0;
    double p10 = 0.0;
};

MixingCells solve_mixing_cells(const MixingSpec& spec);

/// Each dyad present independently with its cell probability; nodes
/// 0 .. round(N*mu)-1 are infected.
Network gen_bernoulli_mixing(const MixingSpec& spec, Rng& rng);

/// Adds one to the degree of a uniformly chosen node when the degree sum is
/// odd. Returns the adjusted node, if any. Nodes already at N-1 are skipped.
std::optional<int> repair_degree_parity(std::vector<int>& degrees, Rng& rng);

/// Configuration-model construction with degree-preserving repair of
/// self-loops and multi-edges. Throws infeasible_network if the repair
/// budget (100 * E attempts) runs out.
Network reed_molloy(const std::vector<int>& degrees, const std::vector<std::uint8_t>& infection, Rng& rng);

/// Ordered node quad (i,j,k,l). In configuration "+" the network has ties
/// i-j and k-l and lacks i-l and j-k; "-" is the reverse. Toggling between
/// the two preserves every degree.
struct Tetrad {
    int i = 0, j = 0, k = 0, l = 0;
    friend auto operator<=>(const Tetrad&, const Tetrad&) = default;
};

/// Change in cross-group ties from the "-" to the "+" configuration of `t`.
int tetrad_delta(const Network& net, const Tetrad& t);

/// A proposed double-edge swap: edges at positions edge_a=(i,j) and
/// edge_b=(k,l) become (i,l) and (j,k).
struct SwapProposal {
    std::size_t edge_a = 0;
    std::size_t edge_b = 0;
    Tetrad quad;
    /// g(after) - g(before).
    int delta_g = 0;
};

/// One draw of an ordered edge pair with random orientations. Returns none
/// when the swap would not be simple (shared node or existing target edge).
std::optional<SwapProposal> propose_swap(const Network& net, Rng& rng);

void apply_swap(Network& net, const SwapProposal& p);

inline constexpr int tetrad_max_attempts = 10000;

/// Uniform draw from the valid ordered quads of `net` (both "+" and "-"
/// orientations), or none after `tetrad_max_attempts` rejections.
std::optional<Tetrad> sample_valid_tetrad(const Network& net, Rng& rng);

struct AnnealSchedule {
    double initial_temperature = 1.0;
    double cooling = 0.999;
    double min_temperature = 1e-4;
    /// Proposal budget as a multiple of the edge count.
    double max_proposals_per_edge = 500.0;
};

struct AnnealReport {
    long initial_g = 0;
    long final_g = 0;
    double residual = 0.0;
    long proposals = 0;
    bool reached = false;
};

/// Simulated annealing over degree-preserving swaps towards |g - target| < 1.
/// Returns the best network found; never throws on an unreachable target.
Network anneal_to_crossties(const Network& net, double target_g, Rng& rng, const AnnealSchedule& schedule = {},
                            AnnealReport* report = nullptr);

struct ErgmSpec {
    std::vector<int> degrees;
    std::vector<std::uint8_t> infection;
    double eta = 0.0;
};

struct McmcOptions {
    /// Proposals before the first retained draw, as a multiple of E.
    double burn_in_per_edge = 20.0;
    /// Proposals between retained draws, as a multiple of E.
    double spacing_per_edge = 2.0;
    /// Absolute overrides; used when positive.
    long burn_in = 0;
    long spacing = 0;
};

/// Metropolis-Hastings over double-edge swaps targeting
/// P(y) proportional to exp(eta * g(y, z)) on networks with the degrees and
/// infection vector of `start`.
class ErgmSampler {
public:
    ErgmSampler(Network start, double eta);

    /// Performs `proposals` MH steps.
    void advance(long proposals, Rng& rng);

    const Network& current() const { return net_; }
    long current_g() const { return g_; }
    long accepted() const { return accepted_; }
    long proposed() const { return proposed_; }

private:
    Network net_;
    double eta_;
    long g_;
    long accepted_ = 0;
    long proposed_ = 0;
};

/// Retained draws from a single chain started at `start`. Throws
/// std::invalid_argument if `start` does not match the spec.
std::vector<Network> ergm_mcmc_sample(const ErgmSpec& spec, const Network& start, int n_draws,
                                      const McmcOptions& options, Rng& rng);

} // namespace rdsma

#endif
