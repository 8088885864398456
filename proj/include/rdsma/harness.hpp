#ifndef RDSMA_HARNESS_HPP
#define RDSMA_HARNESS_HPP

#include "rdsma/bootstrap.hpp"
#include "rdsma/estimate.hpp"
#include "rdsma/netgen.hpp"
#include "rdsma/rdssim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rdsma {

enum class Estimator { mean, vh, ma };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

struct StudySpec {
    std::vector<MixingSpec> networks{MixingSpec{}};
    std::vector<SamplingDesign> designs{SamplingDesign{}};
    std::vector<Estimator> estimators{Estimator::mean, Estimator::vh, Estimator::ma};
    int replications = 200;
    /// population_size 0 means "use the true N of the cell".
    MaConfig ma;
    std::optional<BootstrapConfig> bootstrap;
    std::uint64_t master_seed = 1;
    /// Assumed population sizes for run_sensitivity_N.
    std::vector<int> sensitivity_pop_sizes;

    void validate() const;
};

/// Parses a flat `dotted.key = value` file (lists comma separated, `#`
/// comments). Throws std::invalid_argument naming the line for unknown keys
/// or malformed values.
StudySpec parse_study_config(const std::string& text);
StudySpec read_study_config(const std::filesystem::path& path);

struct StudyRow {
    MixingSpec network;
    SamplingDesign design;
    int assumed_pop_size = 0;
    Estimator estimator = Estimator::mean;
    int replications = 0;
    int failures = 0;
    double true_prevalence = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double observed_se = 0.0;
    /// Present when bootstrapping ran for this estimator.
    std::optional<double> mean_bootstrap_se;
    std::vector<std::pair<double, double>> coverage;
    double wall_seconds = 0.0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    /// One message per skipped (infeasible) cell.
    std::vector<std::string> skipped;
};

/// One fresh network and one RDS sample per replication; replication r of
/// cell c draws from streams derived from (master_seed, c, r).
StudyResult run_study(const StudySpec& spec, unsigned threads = 1);

/// Runs ma at every assumed population size on the same networks and
/// samples. Throws std::invalid_argument when a size is below the sample
/// size.
StudyResult run_sensitivity_N(const StudySpec& spec, const std::vector<int>& pop_sizes, unsigned threads = 1);

/// Result CSV. Wall time is omitted so reruns compare byte for byte.
void write_study_result(const StudyResult& result, const std::filesystem::path& path);
/// Per-row wall-clock seconds.
void write_study_timing(const StudyResult& result, const std::filesystem::path& path);

} // namespace rdsma

#endif
