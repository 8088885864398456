#include "rdsma/bootstrap.hpp"

#include "rdsma/csv.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

namespace rdsma {

void BootstrapConfig::validate() const {
    if (B < 2)
        throw std::invalid_argument("bootstrap needs B >= 2");
    for (double l : ci_levels)
        if (!(l > 0 && l < 1))
            throw std::invalid_argument("interval levels must lie in (0, 1)");
}

BootstrapResult summarize(const std::vector<double>& draws, double mu_hat, const std::vector<double>& levels) {
    if (draws.size() < 2)
        throw std::invalid_argument("need at least two bootstrap draws");
    BootstrapResult out;
    out.mu_hat = mu_hat;
    out.draws = draws;
    // deviations from the first draw keep constant inputs exactly at se = 0
    const double origin = draws.front();
    double shift = 0;
    for (double d : draws)
        shift += d - origin;
    shift /= static_cast<double>(draws.size());
    double ss = 0;
    for (double d : draws)
        ss += (d - origin - shift) * (d - origin - shift);
    out.se = std::sqrt(ss / static_cast<double>(draws.size() - 1));
    const boost::math::normal standard;
    for (double level : levels) {
        if (!(level > 0 && level < 1))
            throw std::invalid_argument("interval levels must lie in (0, 1)");
        const double z = boost::math::quantile(standard, (1 + level) / 2);
        out.intervals.push_back(
            {level, std::clamp(mu_hat - z * out.se, 0.0, 1.0), std::clamp(mu_hat + z * out.se, 0.0, 1.0)});
    }
    return out;
}

std::vector<Interval> percentile_intervals(std::vector<double> draws, const std::vector<double>& levels) {
    if (draws.size() < 2)
        throw std::invalid_argument("need at least two bootstrap draws");
    std::sort(draws.begin(), draws.end());
    auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(draws.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, draws.size() - 1);
        return draws[lo] + (pos - static_cast<double>(lo)) * (draws[hi] - draws[lo]);
    };
    std::vector<Interval> out;
    for (double level : levels)
        out.push_back({level, quantile((1 - level) / 2), quantile((1 + level) / 2)});
    return out;
}

namespace {

long proposals(double per_edge, long override_value, std::size_t edges) {
    if (override_value > 0)
        return override_value;
    return std::max(1L, std::lround(per_edge * static_cast<double>(edges)));
}

double fast_estimate(const RdsSample& sample, const WeightTable& weights) {
    double num = 0, den = 0;
    for (std::size_t r = 0; r < sample.size(); ++r) {
        const double pi = weights.nearest(sample.class_of(r));
        num += sample.records[r].infected / pi;
        den += 1.0 / pi;
    }
    if (!(den > 0))
        throw std::invalid_argument("empty bootstrap sample");
    return num / den;
}

} // namespace

BootstrapResult parametric_bootstrap(const MaResult& fit, const SamplingDesign& design_template,
                                     const BootstrapConfig& cfg, const MaConfig& ma_cfg, std::uint64_t seed,
                                     unsigned threads) {
    cfg.validate();
    const Network& start = fit.reference_network;
    if (start.node_count() == 0)
        throw std::invalid_argument("fit carries no reference network");
    const SamplingDesign& design = fit.simulation_design;
    const long burn_in = proposals(ma_cfg.mcmc.burn_in_per_edge, ma_cfg.mcmc.burn_in, start.edge_count());
    const long spacing = proposals(ma_cfg.mcmc.spacing_per_edge, ma_cfg.mcmc.spacing, start.edge_count());

    auto replicate = [&](const Network& net, std::size_t b, std::uint64_t attempt) {
        Rng rng = make_rng(seed, {2, b, attempt});
        const auto seeds = select_seeds(net, design, rng);
        const RdsSample sample = run_rds(net, design, seeds, rng);
        if (cfg.mode == BootstrapMode::fast)
            return fast_estimate(sample, fit.weights);
        MaConfig inner = ma_cfg;
        inner.threads = 1;
        return ma_estimate(sample, design_template, inner, derive_seed(seed, {3, b, attempt})).mu_hat;
    };

    std::vector<std::optional<double>> slots(static_cast<std::size_t>(cfg.B));
    ErgmSampler chain(start, fit.eta_final);
    Rng chain_rng = make_rng(seed, {1});
    chain.advance(burn_in, chain_rng);
    // Networks are drawn sequentially from the chain in blocks, and each
    // block's replicates run in parallel.
    const std::size_t block = std::max<std::size_t>(1, 4 * std::max(1u, threads));
    for (std::size_t first = 0; first < slots.size(); first += block) {
        const std::size_t count = std::min(block, slots.size() - first);
        std::vector<Network> nets;
        nets.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            if (first + i > 0)
                chain.advance(spacing, chain_rng);
            nets.push_back(chain.current());
        }
        parallel_for(count, threads, [&](std::size_t i) {
            const std::size_t b = first + i;
            for (std::uint64_t attempt = 0; attempt < 2; ++attempt) {
                try {
                    slots[b] = replicate(nets[i], b, attempt);
                    return;
                } catch (const std::exception&) {
                }
            }
        });
    }

    std::vector<double> draws;
    int failures = 0;
    for (const auto& s : slots) {
        if (s)
            draws.push_back(*s);
        else
            ++failures;
    }
    BootstrapResult out = summarize(draws, fit.mu_hat, cfg.ci_levels);
    out.failures = failures;
    return out;
}

void write_bootstrap_draws(const BootstrapResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "replicate,estimate\n";
    for (std::size_t b = 0; b < result.draws.size(); ++b)
        out << b + 1 << ',' << csv::format_double(result.draws[b]) << '\n';
}

void write_bootstrap_summary(const BootstrapResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "mu_hat,se,draws,failures";
    for (const auto& iv : result.intervals)
        out << ",lower_" << csv::format_double(iv.level) << ",upper_" << csv::format_double(iv.level);
    out << '\n'
        << csv::format_double(result.mu_hat) << ',' << csv::format_double(result.se) << ',' << result.draws.size()
        << ',' << result.failures;
    for (const auto& iv : result.intervals)
        out << ',' << csv::format_double(iv.lower) << ',' << csv::format_double(iv.upper);
    out << '\n';
}

} // namespace rdsma
