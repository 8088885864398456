#ifndef RDSMA_RDSSIM_HPP
#define RDSMA_RDSSIM_HPP

#include "rdsma/network.hpp"
#include "rdsma/random.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

namespace rdsma {

enum class SeedMode { pps_degree_all, pps_degree_infected_only, match_classes };

/// Recruit-count distributions indexed by recruiter wave and infection
/// status. Waves past the last row reuse the last row.
struct OffspringTable {
    static constexpr int max_recruits = 3;
    using Distribution = std::array<double, max_recruits + 1>;
    /// rows[wave][infected]
    std::vector<std::array<Distribution, 2>> rows;

    const Distribution& at(int wave, int infected) const;
};

struct SamplingDesign {
    int n = 500;
    int n_seeds = 10;
    SeedMode seed_mode = SeedMode::pps_degree_all;
    /// Requested seed classes for SeedMode::match_classes (one per seed).
    std::vector<ClassKey> seed_classes;
    /// Fixed coupon count; ignored when `offspring` is set.
    int coupons = 2;
    std::optional<OffspringTable> offspring;
    /// Relative referral weight of infected alters (1 = unbiased).
    double referral_weight_infected = 1.0;
    bool reseed_on_dieout = true;

    /// Throws std::invalid_argument on an inconsistent design.
    void validate() const;
};

struct RdsRecord {
    int node_id = 0;
    int degree = 0;
    int infected = 0;
    /// Number of infected alters (x_i); may be an estimate, or absent.
    std::optional<double> infected_alters;
    int wave = 0;
    /// Node id of the recruiter; none for seeds.
    std::optional<int> recruiter;
};

struct RdsSample {
    std::vector<RdsRecord> records;
    std::vector<int> seed_ids;
    /// Recruitment died out before reaching n and no reseeding happened.
    bool short_sample = false;
    int reseeds = 0;

    std::size_t size() const { return records.size(); }
    ClassKey class_of(std::size_t r) const { return {records[r].degree, records[r].infected}; }
    /// Sampled class counts.
    std::map<ClassKey, int> class_counts() const;
    /// Classes of the seed records, in recruitment order.
    std::vector<ClassKey> seed_classes() const;
};

/// Throws std::invalid_argument when the eligible pool holds fewer than
/// n_seeds nodes (nodes of degree zero are never eligible).
std::vector<int> select_seeds(const Network& net, const SamplingDesign& design, Rng& rng);

RdsSample run_rds(const Network& net, const SamplingDesign& design, const std::vector<int>& seeds, Rng& rng);

/// Checks the recruitment forest, wave recursion, no-resampling and edge
/// validity against `net`. Returns an empty string when valid, otherwise a
/// description of the first violation.
std::string check_sample(const Network& net, const RdsSample& sample);

struct ClassCounts {
    std::map<ClassKey, long> U;
    long M = 0;
    long short_samples = 0;
};

/// M2 RDS samples (fresh seeds each time) from every network; sample k of
/// network m uses stream derive_seed(stream_seed, {m, k}).
ClassCounts simulate_class_counts(const std::vector<Network>& nets, const SamplingDesign& design, int M2,
                                  std::uint64_t stream_seed, unsigned threads = 1);

/// x-hat for every record: d_i times the observed fraction of cross-status
/// recruitment edges among edges touching status z_i (reported as infected
/// alters). Throws std::invalid_argument when the sample has no recruitment
/// edges.
std::vector<double> estimate_x_from_referrals(const RdsSample& sample);

/// Fills absent infected_alters with estimate_x_from_referrals. Returns the
/// number of filled records.
std::size_t fill_missing_alters(RdsSample& sample);

/// Empirical recruit-count distribution by (wave, infection). Respondents
/// in the final wave are excluded (they had no opportunity to recruit);
/// empty cells borrow the average of the neighbouring waves' cells of the
/// same status, or the status-pooled distribution.
OffspringTable empirical_offspring(const RdsSample& sample);

/// RDS sample CSV: id,recruiter_id,degree,infected,wave,cross_alters.
RdsSample read_rds_sample(const std::filesystem::path& path);
void write_rds_sample(const RdsSample& sample, const std::filesystem::path& path);

} // namespace rdsma

#endif
