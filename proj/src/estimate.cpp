#include "rdsma/estimate.hpp"

#include "rdsma/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace rdsma {

double WeightTable::at(ClassKey key) const {
    auto it = pi.find(key);
    if (it == pi.end())
        throw std::out_of_range("no inclusion probability for class (degree " + std::to_string(key.degree) +
                                ", infected " + std::to_string(key.infected) + ")");
    return it->second;
}

double WeightTable::nearest(ClassKey key) const {
    if (auto it = pi.find(key); it != pi.end())
        return it->second;
    const double* best = nullptr;
    int best_gap = std::numeric_limits<int>::max();
    for (const auto& [k, v] : pi) {
        if (k.infected != key.infected)
            continue;
        const int gap = std::abs(k.degree - key.degree);
        if (gap < best_gap) {  // map order visits lower degrees first
            best_gap = gap;
            best = &v;
        }
    }
    if (!best)
        throw std::out_of_range("no inclusion probability for infection status " + std::to_string(key.infected));
    return *best;
}

double hajek(const RdsSample& sample, const WeightTable& weights) {
    if (sample.records.empty())
        throw std::invalid_argument("empty sample");
    double num = 0, den = 0;
    for (std::size_t r = 0; r < sample.size(); ++r) {
        const double pi = weights.at(sample.class_of(r));
        if (!(pi > 0))
            throw std::invalid_argument("inclusion probabilities must be positive");
        num += sample.records[r].infected / pi;
        den += 1.0 / pi;
    }
    return num / den;
}

double naive_mean(const RdsSample& sample) {
    if (sample.records.empty())
        throw std::invalid_argument("empty sample");
    double s = 0;
    for (const auto& rec : sample.records)
        s += rec.infected;
    return s / static_cast<double>(sample.size());
}

double vh_estimate(const RdsSample& sample) {
    if (sample.records.empty())
        throw std::invalid_argument("empty sample");
    double num = 0, den = 0;
    for (const auto& rec : sample.records) {
        if (rec.degree < 1)
            throw std::invalid_argument("degree-weighted estimator needs degrees >= 1");
        num += static_cast<double>(rec.infected) / rec.degree;
        den += 1.0 / rec.degree;
    }
    return num / den;
}

WeightTable initial_weights(const RdsSample& sample, double population_size) {
    if (population_size < static_cast<double>(sample.size()))
        throw std::invalid_argument("population size is smaller than the sample");
    double inv_degree_sum = 0;
    for (const auto& rec : sample.records) {
        if (rec.degree < 1)
            throw std::invalid_argument("initial weights need degrees >= 1");
        inv_degree_sum += 1.0 / rec.degree;
    }
    WeightTable w;
    for (std::size_t r = 0; r < sample.size(); ++r) {
        const ClassKey k = sample.class_of(r);
        w.pi[k] = std::min(1.0, k.degree / population_size * inv_degree_sum);
    }
    return w;
}

DesignEstimates design_estimates(const RdsSample& sample, const WeightTable& weights, double population_size) {
    if (!(population_size > 0))
        throw std::invalid_argument("population size must be positive");
    DesignEstimates out;
    out.table.scale = TableScale::estimated;
    for (std::size_t r = 0; r < sample.size(); ++r) {
        const auto& rec = sample.records[r];
        const double pi = weights.at(sample.class_of(r));
        if (!rec.infected_alters)
            throw std::invalid_argument("record for node " + std::to_string(rec.node_id) + " lacks infected alters");
        const double x = *rec.infected_alters;
        out.table.entries[sample.class_of(r)] += 1.0 / (population_size * pi);
        const double cross = rec.infected ? rec.degree - x : x;
        out.g += cross / (2.0 * pi);
    }
    return out;
}

RealizedPopulation realize_population(const ClassTable& estimated, int population_size, const RdsSample& sample,
                                      Rng& rng) {
    const auto minimum = sample.class_counts();
    long sampled = 0;
    for (const auto& [k, c] : minimum)
        sampled += c;
    if (sampled > population_size)
        throw std::invalid_argument("sampled class counts exceed the population size");
    const double mass = estimated.total();
    if (!(mass > 0))
        throw std::invalid_argument("estimated class table is empty");

    struct Cell {
        ClassKey key;
        long count;
        double remainder;
        long floor_count;
    };
    std::vector<Cell> cells;
    long assigned = 0;
    for (const auto& [k, v] : estimated.entries) {
        if (v < 0)
            throw std::invalid_argument("negative class estimate");
        const double target = v / mass * population_size;
        const long fl = static_cast<long>(std::floor(target));
        cells.push_back({k, fl, target - fl, fl});
        assigned += fl;
    }
    for (const auto& [k, c] : minimum)
        if (!estimated.entries.count(k))
            cells.push_back({k, 0, 0.0, 0});
    std::vector<std::size_t> order(cells.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cells[a].remainder > cells[b].remainder; });
    for (std::size_t t = 0; assigned < population_size; t = (t + 1) % order.size()) {
        ++cells[order[t]].count;
        ++assigned;
    }

    auto min_of = [&](const Cell& c) {
        auto it = minimum.find(c.key);
        return it == minimum.end() ? 0L : static_cast<long>(it->second);
    };
    for (auto& c : cells) {
        while (c.count < min_of(c)) {
            Cell* donor = nullptr;
            for (auto& d : cells)
                if (d.count > min_of(d) && (!donor || d.count > donor->count))
                    donor = &d;
            if (!donor)
                throw std::logic_error("no class can donate while raising sampled classes");
            --donor->count;
            ++c.count;
        }
    }

    RealizedPopulation out;
    out.table.scale = TableScale::integer_count;
    for (const auto& c : cells)
        if (c.count > 0)
            out.table.entries[c.key] = static_cast<double>(c.count);

    if (static_cast<long>(std::llround(out.table.degree_sum())) % 2 != 0) {
        // Pick one node uniformly among those not needed to cover the sample
        // (all nodes if none are spare) and raise its degree by one.
        std::vector<std::pair<ClassKey, long>> spare;
        long spare_total = 0;
        for (const auto& c : cells) {
            const long s = c.count - min_of(c);
            if (s > 0 && c.key.degree + 1 <= population_size - 1) {
                spare.push_back({c.key, s});
                spare_total += s;
            }
        }
        if (spare_total == 0) {
            for (const auto& c : cells)
                if (c.count > 0 && c.key.degree + 1 <= population_size - 1) {
                    spare.push_back({c.key, c.count});
                    spare_total += c.count;
                }
        }
        if (spare_total == 0)
            throw std::invalid_argument("cannot repair degree parity of the realised population");
        long u = static_cast<long>(uniform_index(rng, static_cast<std::size_t>(spare_total)));
        ClassKey from = spare.back().first;
        for (const auto& [k, s] : spare) {
            if (u < s) {
                from = k;
                break;
            }
            u -= s;
        }
        if (--out.table.entries[from] == 0)
            out.table.entries.erase(from);
        out.table.entries[{from.degree + 1, from.infected}] += 1;
        out.parity_adjusted_from = from;
    }
    return out;
}

WeightTable update_weights(const ClassCounts& counts, const ClassTable& realized, const RdsSample& sample) {
    for (const auto& [k, c] : sample.class_counts())
        if (realized.at(k) < 1)
            throw std::invalid_argument("sampled class (degree " + std::to_string(k.degree) + ", infected " +
                                        std::to_string(k.infected) + ") has no realised members");
    WeightTable w;
    for (const auto& [k, count] : realized.entries) {
        if (count < 1)
            continue;
        auto it = counts.U.find(k);
        const double u = it == counts.U.end() ? 0.0 : static_cast<double>(it->second);
        const double capacity = static_cast<double>(counts.M) * count;
        if (u > capacity)
            throw std::logic_error("class selected more often than its simulated members allow");
        w.pi[k] = (u + 1.0) / (capacity + 1.0);
    }
    return w;
}

void MaConfig::validate(std::size_t sample_size) const {
    if (h < 1)
        throw std::invalid_argument("MA needs at least one iteration");
    if (M1 < 1 || M2 < 1)
        throw std::invalid_argument("M1 and M2 must be positive");
    if (population_size < static_cast<long>(sample_size))
        throw std::invalid_argument("population size " + std::to_string(population_size) +
                                    " is smaller than the sample size " + std::to_string(sample_size));
}

SamplingDesign simulation_design_for(const RdsSample& sample, const SamplingDesign& design_template,
                                     const MaConfig& cfg) {
    SamplingDesign d = design_template;
    d.n = static_cast<int>(sample.size());
    auto seeds = sample.seed_classes();
    if (seeds.empty())
        throw std::invalid_argument("sample has no seeds");
    d.n_seeds = static_cast<int>(seeds.size());
    if (cfg.match_seed_classes) {
        d.seed_mode = SeedMode::match_classes;
        d.seed_classes = std::move(seeds);
    } else {
        d.seed_mode = SeedMode::pps_degree_all;
        d.seed_classes.clear();
    }
    if (cfg.empirical_offspring)
        d.offspring = empirical_offspring(sample);
    d.reseed_on_dieout = false;
    return d;
}

MaResult ma_estimate(RdsSample sample, const SamplingDesign& design_template, const MaConfig& cfg,
                     std::uint64_t seed) {
    cfg.validate(sample.size());
    fill_missing_alters(sample);
    MaResult result;
    result.simulation_design = simulation_design_for(sample, design_template, cfg);
    const int N = cfg.population_size;
    WeightTable weights = initial_weights(sample, N);
    for (int r = 1; r <= cfg.h; ++r) {
        try {
            Rng rng = make_rng(seed, {static_cast<std::uint64_t>(r), 0});
            const DesignEstimates est = design_estimates(sample, weights, N);
            RealizedPopulation population = realize_population(est.table, N, sample, rng);
            NaturalParamFit natural = mean_value_to_natural(population.table, est.g, rng, cfg.natural);

            ErgmSpec spec;
            spec.degrees = natural.reference.degrees();
            spec.infection.assign(natural.reference.infection().begin(), natural.reference.infection().end());
            spec.eta = natural.eta_hat;
            Rng chain = make_rng(seed, {static_cast<std::uint64_t>(r), 1});
            auto nets = ergm_mcmc_sample(spec, natural.reference, cfg.M1, cfg.mcmc, chain);
            const ClassCounts counts = simulate_class_counts(
                nets, result.simulation_design, cfg.M2, derive_seed(seed, {static_cast<std::uint64_t>(r), 2}),
                cfg.threads);
            weights = update_weights(counts, population.table, sample);
            weights.iteration = r;

            MaIteration it;
            it.eta_hat = natural.eta_hat;
            it.g_tilde = est.g;
            it.anneal_residual = natural.anneal.residual;
            it.fit_converged = natural.fit.converged;
            it.short_samples = counts.short_samples;
            it.simulated_samples = counts.M;
            result.iterations.push_back(it);
            result.realized_table = population.table;
            result.eta_final = natural.eta_hat;
            result.reference_network = std::move(natural.reference);
        } catch (const std::exception& e) {
            throw ma_error(r, e.what());
        }
    }
    result.weights = weights;
    result.mu_hat = hajek(sample, weights);
    return result;
}

void write_ma_result(const MaResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "record,degree,infected,value\n";
    out << "mu_hat,,," << csv::format_double(result.mu_hat) << '\n';
    for (const auto& [k, pi] : result.weights.pi)
        out << "weight," << k.degree << ',' << k.infected << ',' << csv::format_double(pi) << '\n';
}

void write_ma_diagnostics(const MaResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "iteration,eta_hat,g_tilde,anneal_residual,fit_converged,short_samples,simulated_samples\n";
    for (std::size_t r = 0; r < result.iterations.size(); ++r) {
        const auto& it = result.iterations[r];
        out << r + 1 << ',' << csv::format_double(it.eta_hat) << ',' << csv::format_double(it.g_tilde) << ','
            << csv::format_double(it.anneal_residual) << ',' << (it.fit_converged ? 1 : 0) << ','
            << it.short_samples << ',' << it.simulated_samples << '\n';
    }
}

} // namespace rdsma
