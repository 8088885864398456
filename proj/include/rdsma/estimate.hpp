#ifndef RDSMA_ESTIMATE_HPP
#define RDSMA_ESTIMATE_HPP

#include "rdsma/ergmfit.hpp"
#include "rdsma/netgen.hpp"
#include "rdsma/network.hpp"
#include "rdsma/random.hpp"
#include "rdsma/rdssim.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdsma {

/// Inclusion probabilities per (degree, infection) class.
struct WeightTable {
    std::map<ClassKey, double> pi;
    int iteration = 0;

    /// Throws std::out_of_range for a class without a weight.
    double at(ClassKey key) const;
    /// Weight of `key`, falling back to the nearest degree with the same
    /// infection status (ties to the lower degree).
    double nearest(ClassKey key) const;
};

/// Generalised Horvitz-Thompson (ratio) estimator of prevalence.
double hajek(const RdsSample& sample, const WeightTable& weights);
double naive_mean(const RdsSample& sample);
/// Hajek with inclusion probabilities proportional to degree.
double vh_estimate(const RdsSample& sample);

/// pi_k = (k / N) * sum over the sample of 1/d_j, clamped to (0, 1].
WeightTable initial_weights(const RdsSample& sample, double population_size);

struct DesignEstimates {
    /// Estimated class proportions (scale = estimated).
    ClassTable table;
    /// Estimated number of cross-group ties.
    double g = 0.0;
};

/// Weighted class proportions (divided by N) and cross-tie estimate.
/// Every record must carry infected_alters.
DesignEstimates design_estimates(const RdsSample& sample, const WeightTable& weights, double population_size);

struct RealizedPopulation {
    ClassTable table;
    /// Class moved up one degree to make the degree sum even, if any.
    std::optional<ClassKey> parity_adjusted_from;
};

/// Integer population of size N from estimated proportions: scale to N,
/// round by largest remainder, raise classes to their sampled counts
/// (taking units from the largest classes), then repair degree parity by
/// moving one node up one degree. Throws std::invalid_argument when the
/// sampled counts alone exceed N.
RealizedPopulation realize_population(const ClassTable& estimated, int population_size, const RdsSample& sample,
                                      Rng& rng);

/// pi = (U + 1) / (M * count + 1) for every realised class. Throws
/// std::invalid_argument if a class observed in `sample` has no realised
/// members.
WeightTable update_weights(const ClassCounts& counts, const ClassTable& realized, const RdsSample& sample);

struct MaConfig {
    int h = 3;
    int M1 = 25;
    int M2 = 20;
    int population_size = 0;
    NaturalParamOptions natural;
    McmcOptions mcmc;
    /// Simulated seeds reproduce the observed seeds' classes; otherwise
    /// they are drawn with probability proportional to degree.
    bool match_seed_classes = true;
    /// Simulated samples recruit by the sample's empirical offspring table;
    /// otherwise by the template's rule.
    bool empirical_offspring = true;
    unsigned threads = 1;

    void validate(std::size_t sample_size) const;
};

struct MaIteration {
    double eta_hat = 0.0;
    double g_tilde = 0.0;
    double anneal_residual = 0.0;
    bool fit_converged = false;
    long short_samples = 0;
    long simulated_samples = 0;
};

struct MaResult {
    double mu_hat = 0.0;
    WeightTable weights;
    ClassTable realized_table;
    std::vector<MaIteration> iterations;
    /// Final-iteration working-model parameter and reference network;
    /// the parametric bootstrap simulates from these.
    double eta_final = 0.0;
    Network reference_network;
    /// Design used for the simulated samples.
    SamplingDesign simulation_design;
};

/// Error raised inside the iterative loop, tagged with the iteration.
class ma_error : public std::runtime_error {
public:
    ma_error(int iteration, const std::string& what)
        : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

/// Design used to re-simulate `sample` under the working model: sample size
/// and seed count from the sample, seeds matched to the observed seed
/// classes (when requested) and no reseeding.
SamplingDesign simulation_design_for(const RdsSample& sample, const SamplingDesign& design_template,
                                     const MaConfig& cfg);

/// Model-assisted estimator. Missing infected_alters are filled from
/// referral patterns first. Deterministic in (sample, cfg, seed).
MaResult ma_estimate(RdsSample sample, const SamplingDesign& design_template, const MaConfig& cfg, std::uint64_t seed);

/// Point estimate and per-class weights as CSV (record,degree,infected,value).
void write_ma_result(const MaResult& result, const std::filesystem::path& path);
/// Per-iteration diagnostics CSV.
void write_ma_diagnostics(const MaResult& result, const std::filesystem::path& path);

} // namespace rdsma

#endif
