#ifndef RDSMA_ERGMFIT_HPP
#define RDSMA_ERGMFIT_HPP

#include "rdsma/netgen.hpp"
#include "rdsma/network.hpp"
#include "rdsma/random.hpp"

#include <optional>
#include <vector>

namespace rdsma {

inline constexpr double eta_cap = 10.0;

/// Sampled dyad-quads: the change statistic of each (g(+) - g(-)) and
/// whether the network currently holds the "+" configuration.
struct TetradSample {
    std::vector<int> deltas;
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return deltas.size(); }
};

/// Draws `size` valid tetrads from `net`. Stops early when the rejection
/// budget runs out, so the result may be shorter (empty for networks with
/// no valid swap).
TetradSample sample_tetrads(const Network& net, std::size_t size, Rng& rng);

/// Like sample_tetrads, but between draws the network takes `walk_steps`
/// swap proposals restricted to moves that leave g(y, z) unchanged, so the
/// sample pools tetrads over many networks sharing the cross-tie count.
TetradSample sample_tetrads_on_level(Network net, std::size_t size, int walk_steps, Rng& rng);

/// Tetradic pseudo-log-likelihood averaged over the sample:
///   mean_t [ eta * delta_t * label_t - log(1 + exp(eta * delta_t)) ].
/// Throws std::invalid_argument on an empty sample.
double tetradic_loglik(double eta, const TetradSample& sample);

/// d/d eta of tetradic_loglik: mean_t delta_t * (label_t - logistic(eta * delta_t)).
double tetradic_gradient(double eta, const TetradSample& sample);

struct MtpleFit {
    double eta_hat = 0.0;
    double loglik = 0.0;
    double gradient_at_opt = 0.0;
    std::size_t n_informative = 0;
    bool converged = false;
    /// All informative tetrads favour one direction; eta_hat is +/- eta_cap.
    bool separated = false;
};

/// Maximises the (concave) tetradic pseudo-likelihood by safeguarded Newton
/// iterations on [-eta_cap, eta_cap].
///
/// The dyad-wise pseudo-likelihood (logistic regression of each y_ij on its
/// change statistic) is not offered: conditional on the degree sequence a
/// single dyad is determined by the rest of the network, so its conditional
/// probabilities are degenerate and its maximiser is meaningless here.
MtpleFit fit_mtple(const TetradSample& sample);

struct NaturalParamOptions {
    std::size_t tetrad_count = 100000;
    /// g-preserving swap proposals between tetrad draws; 0 samples every
    /// tetrad from the annealed network itself.
    int level_walk_steps = 1;
    AnnealSchedule anneal;
};

struct NaturalParamFit {
    double eta_hat = 0.0;
    MtpleFit fit;
    Network reference;
    AnnealReport anneal;
    /// Node whose degree was raised by one to make the degree sum even.
    std::optional<int> parity_adjusted_node;
};

/// Node-level degree and infection sequences for an integer class table,
/// nodes laid out class by class in key order.
void realize_sequences(const ClassTable& table, std::vector<int>& degrees, std::vector<std::uint8_t>& infection);

/// Natural parameter of the degree- and infection-conditioned working model
/// whose cross-group tie count should match `target_g`: build a network
/// with the table's sequences, anneal it to the target, then fit the
/// tetradic pseudo-likelihood to tetrads drawn on (and around) it.
NaturalParamFit mean_value_to_natural(const ClassTable& table, double target_g, Rng& rng,
                                      const NaturalParamOptions& options = {});

} // namespace rdsma

#endif
