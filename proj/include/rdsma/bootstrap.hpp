#ifndef RDSMA_BOOTSTRAP_HPP
#define RDSMA_BOOTSTRAP_HPP

#include "rdsma/estimate.hpp"
#include "rdsma/rdssim.hpp"

#include <filesystem>
#include <vector>

namespace rdsma {

enum class BootstrapMode { full, fast };

struct BootstrapConfig {
    int B = 1000;
    BootstrapMode mode = BootstrapMode::fast;
    std::vector<double> ci_levels{0.95, 0.90};

    void validate() const;
};

struct Interval {
    double level = 0.0;
    double lower = 0.0;
    double upper = 0.0;

    bool contains(double value) const { return lower <= value && value <= upper; }
};

struct BootstrapResult {
    double mu_hat = 0.0;
    /// Successful replicate estimates in replicate order.
    std::vector<double> draws;
    double se = 0.0;
    std::vector<Interval> intervals;
    /// Replicates that failed twice and were dropped.
    int failures = 0;
};

/// Sample standard deviation of `draws` and Gaussian intervals
/// mu_hat +/- z * se truncated to [0, 1]. Throws std::invalid_argument for
/// fewer than two draws or a level outside (0, 1).
BootstrapResult summarize(const std::vector<double>& draws, double mu_hat, const std::vector<double>& levels);

/// Empirical quantile intervals of the draws (diagnostics only).
std::vector<Interval> percentile_intervals(std::vector<double> draws, const std::vector<double>& levels);

/// Parametric bootstrap from the final working model of `fit`: networks are
/// drawn from one chain started at fit.reference_network with parameter
/// fit.eta_final (burn-in and spacing from ma_cfg.mcmc), one RDS sample per
/// network under fit.simulation_design.
/// Full mode re-runs ma_estimate on each sample; fast mode reweights it with
/// fit.weights (nearest degree for unseen classes).
BootstrapResult parametric_bootstrap(const MaResult& fit, const SamplingDesign& design_template,
                                     const BootstrapConfig& cfg, const MaConfig& ma_cfg, std::uint64_t seed,
                                     unsigned threads = 1);

/// Draws CSV (replicate,estimate).
void write_bootstrap_draws(const BootstrapResult& result, const std::filesystem::path& path);
/// Summary CSV (mu_hat, se, failures, lower_L/upper_L per level).
void write_bootstrap_summary(const BootstrapResult& result, const std::filesystem::path& path);

} // namespace rdsma

#endif
