#include "rdsma/rdssim.hpp"

#include "rdsma/csv.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace rdsma {

const OffspringTable::Distribution& OffspringTable::at(int wave, int infected) const {
    if (rows.empty())
        throw std::logic_error("empty offspring table");
    const auto w = std::min<std::size_t>(static_cast<std::size_t>(std::max(wave, 0)), rows.size() - 1);
    return rows[w][infected ? 1 : 0];
}

void SamplingDesign::validate() const {
    if (n < 1)
        throw std::invalid_argument("sample size must be positive");
    if (n_seeds < 1 || n_seeds > n)
        throw std::invalid_argument("seed count must lie in [1, n]");
    if (seed_mode == SeedMode::match_classes && static_cast<int>(seed_classes.size()) != n_seeds)
        throw std::invalid_argument("match_classes needs one requested class per seed");
    if (!offspring && coupons < 0)
        throw std::invalid_argument("coupon count must be non-negative");
    if (!(referral_weight_infected > 0.0))
        throw std::invalid_argument("referral weight must be positive");
    if (offspring) {
        if (offspring->rows.empty())
            throw std::invalid_argument("offspring table has no rows");
        for (const auto& row : offspring->rows)
            for (const auto& dist : row) {
                double s = 0;
                for (double p : dist) {
                    if (p < 0)
                        throw std::invalid_argument("negative offspring probability");
                    s += p;
                }
                if (std::abs(s - 1.0) > 1e-9)
                    throw std::invalid_argument("offspring distribution does not sum to 1");
            }
    }
}

std::map<ClassKey, int> RdsSample::class_counts() const {
    std::map<ClassKey, int> c;
    for (std::size_t r = 0; r < records.size(); ++r)
        ++c[class_of(r)];
    return c;
}

std::vector<ClassKey> RdsSample::seed_classes() const {
    std::vector<ClassKey> out;
    for (std::size_t r = 0; r < records.size(); ++r)
        if (!records[r].recruiter)
            out.push_back(class_of(r));
    return out;
}

namespace {

// Sequential draws without replacement, probability proportional to weight.
std::vector<int> weighted_without_replacement(std::vector<int> items, std::vector<double> weights, std::size_t k,
                                              Rng& rng) {
    std::vector<int> out;
    out.reserve(k);
    while (out.size() < k && !items.empty()) {
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        std::size_t pick = items.size() - 1;
        if (total > 0) {
            double u = uniform01(rng) * total;
            for (std::size_t i = 0; i < items.size(); ++i) {
                u -= weights[i];
                if (u < 0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = uniform_index(rng, items.size());
        }
        out.push_back(items[pick]);
        items[pick] = items.back();
        items.pop_back();
        weights[pick] = weights.back();
        weights.pop_back();
    }
    return out;
}

std::vector<int> pps_degree(const Network& net, std::vector<int> pool, std::size_t k, Rng& rng) {
    std::vector<double> w(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        w[i] = net.degree(pool[i]);
    return weighted_without_replacement(std::move(pool), std::move(w), k, rng);
}

std::vector<int> match_seed_classes(const Network& net, const std::vector<ClassKey>& wanted, Rng& rng) {
    // by_degree[infected][degree] -> unselected nodes
    std::array<std::map<int, std::vector<int>>, 2> by_degree;
    for (int i = 0; i < net.node_count(); ++i)
        if (net.degree(i) > 0)
            by_degree[net.infected(i)][net.degree(i)].push_back(i);
    std::vector<int> seeds;
    for (auto want : wanted) {
        auto& groups = by_degree[want.infected ? 1 : 0];
        if (groups.empty())
            throw std::invalid_argument("no eligible node left with infection status " +
                                        std::to_string(want.infected) + " for seed matching");
        // Nearest available degree, ties to the lower degree.
        auto above = groups.lower_bound(want.degree);
        auto chosen = above;
        if (above == groups.end()) {
            chosen = std::prev(above);
        } else if (above->first != want.degree && above != groups.begin()) {
            auto below = std::prev(above);
            if (want.degree - below->first <= above->first - want.degree)
                chosen = below;
        }
        auto& nodes = chosen->second;
        const std::size_t pick = uniform_index(rng, nodes.size());
        seeds.push_back(nodes[pick]);
        nodes[pick] = nodes.back();
        nodes.pop_back();
        if (nodes.empty())
            groups.erase(chosen);
    }
    return seeds;
}

int draw_quota(const SamplingDesign& design, int wave, int infected, Rng& rng) {
    if (!design.offspring)
        return design.coupons;
    const auto& dist = design.offspring->at(wave, infected);
    double u = uniform01(rng);
    for (int c = 0; c < OffspringTable::max_recruits; ++c) {
        u -= dist[c];
        if (u < 0)
            return c;
    }
    return OffspringTable::max_recruits;
}

} // namespace

std::vector<int> select_seeds(const Network& net, const SamplingDesign& design, Rng& rng) {
    design.validate();
    if (design.seed_mode == SeedMode::match_classes)
        return match_seed_classes(net, design.seed_classes, rng);
    std::vector<int> pool;
    for (int i = 0; i < net.node_count(); ++i)
        if (net.degree(i) > 0 && (design.seed_mode == SeedMode::pps_degree_all || net.infected(i) == 1))
            pool.push_back(i);
    if (static_cast<int>(pool.size()) < design.n_seeds)
        throw std::invalid_argument("seed pool holds " + std::to_string(pool.size()) + " nodes, fewer than " +
                                    std::to_string(design.n_seeds) + " seeds");
    return pps_degree(net, std::move(pool), design.n_seeds, rng);
}

RdsSample run_rds(const Network& net, const SamplingDesign& design, const std::vector<int>& seeds, Rng& rng) {
    design.validate();
    const int N = net.node_count();
    std::vector<char> sampled(N, 0);
    RdsSample out;
    out.records.reserve(std::min(design.n, N));

    struct Pending {
        std::size_t record;
        int quota;
    };
    std::deque<Pending> queue;
    auto enroll = [&](int node, int wave, std::optional<int> recruiter) {
        RdsRecord rec;
        rec.node_id = node;
        rec.degree = net.degree(node);
        rec.infected = net.infected(node);
        rec.infected_alters = node_cross_alters(net, node);
        rec.wave = wave;
        rec.recruiter = recruiter;
        sampled[node] = 1;
        out.records.push_back(rec);
        queue.push_back({out.records.size() - 1, draw_quota(design, wave, rec.infected, rng)});
    };

    for (int s : seeds) {
        if (s < 0 || s >= N)
            throw std::invalid_argument("seed id out of range");
        if (sampled[s])
            throw std::invalid_argument("duplicate seed " + std::to_string(s));
        if (static_cast<int>(out.records.size()) >= design.n)
            break;
        enroll(s, 0, std::nullopt);
        out.seed_ids.push_back(s);
    }

    std::vector<int> eligible;
    std::vector<double> weights;
    while (static_cast<int>(out.records.size()) < design.n) {
        if (queue.empty()) {
            if (!design.reseed_on_dieout) {
                out.short_sample = true;
                break;
            }
            std::vector<int> pool;
            for (int i = 0; i < N; ++i)
                if (!sampled[i])
                    pool.push_back(i);
            if (pool.empty()) {
                out.short_sample = true;
                break;
            }
            const int seed = pps_degree(net, std::move(pool), 1, rng).front();
            enroll(seed, 0, std::nullopt);
            out.seed_ids.push_back(seed);
            ++out.reseeds;
            continue;
        }
        const Pending current = queue.front();
        queue.pop_front();
        const RdsRecord rec = out.records[current.record];

        eligible.clear();
        for (int j : net.neighbors(rec.node_id))
            if (!sampled[j])
                eligible.push_back(j);
        const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(current.quota), eligible.size());

        std::vector<int> recruits;
        if (design.referral_weight_infected == 1.0) {
            for (std::size_t t = 0; t < take; ++t) {
                const std::size_t pick = t + uniform_index(rng, eligible.size() - t);
                std::swap(eligible[t], eligible[pick]);
            }
            recruits.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(take));
        } else {
            weights.assign(eligible.size(), 1.0);
            for (std::size_t t = 0; t < eligible.size(); ++t)
                if (net.infected(eligible[t]))
                    weights[t] = design.referral_weight_infected;
            recruits = weighted_without_replacement(eligible, weights, take, rng);
        }
        for (int r : recruits) {
            if (static_cast<int>(out.records.size()) >= design.n)
                break;
            enroll(r, rec.wave + 1, rec.node_id);
        }

        // Unfulfilled recruitments pass to the next queued respondents of the
        // same status that hold fewer than the maximum number of recruits.
        int shortfall = current.quota - static_cast<int>(take);
        if (design.offspring && shortfall > 0) {
            for (auto& q : queue) {
                if (shortfall == 0)
                    break;
                if (out.records[q.record].infected != rec.infected || q.quota >= OffspringTable::max_recruits)
                    continue;
                const int give = std::min(shortfall, OffspringTable::max_recruits - q.quota);
                q.quota += give;
                shortfall -= give;
            }
        }
    }
    return out;
}

std::string check_sample(const Network& net, const RdsSample& sample) {
    std::unordered_map<int, std::size_t> position;
    for (std::size_t r = 0; r < sample.records.size(); ++r) {
        const auto& rec = sample.records[r];
        if (rec.node_id < 0 || rec.node_id >= net.node_count())
            return "record " + std::to_string(r) + ": node id out of range";
        if (!position.emplace(rec.node_id, r).second)
            return "node " + std::to_string(rec.node_id) + " sampled twice";
        if (rec.degree != net.degree(rec.node_id) || rec.infected != net.infected(rec.node_id))
            return "node " + std::to_string(rec.node_id) + ": degree or infection disagrees with network";
        if (!rec.recruiter) {
            if (rec.wave != 0)
                return "seed " + std::to_string(rec.node_id) + " not at wave 0";
            continue;
        }
        auto it = position.find(*rec.recruiter);
        if (it == position.end())
            return "node " + std::to_string(rec.node_id) + ": recruiter not sampled before it";
        if (rec.wave != sample.records[it->second].wave + 1)
            return "node " + std::to_string(rec.node_id) + ": wave is not recruiter wave + 1";
        if (!net.has_edge(rec.node_id, *rec.recruiter))
            return "node " + std::to_string(rec.node_id) + ": recruiter is not an alter";
    }
    return {};
}

ClassCounts simulate_class_counts(const std::vector<Network>& nets, const SamplingDesign& design, int M2,
                                  std::uint64_t stream_seed, unsigned threads) {
    if (nets.empty())
        throw std::invalid_argument("no networks to sample from");
    if (M2 < 1)
        throw std::invalid_argument("M2 must be positive");
    const std::size_t tasks = nets.size() * static_cast<std::size_t>(M2);
    std::vector<std::map<ClassKey, long>> per_task(tasks);
    std::vector<char> short_flag(tasks, 0);
    parallel_for(tasks, threads, [&](std::size_t t) {
        const std::size_t m = t / M2;
        const std::size_t k = t % M2;
        Rng rng = make_rng(stream_seed, {m, k});
        const Network& net = nets[m];
        auto seeds = select_seeds(net, design, rng);
        auto sample = run_rds(net, design, seeds, rng);
        for (const auto& rec : sample.records)
            ++per_task[t][{rec.degree, rec.infected}];
        short_flag[t] = sample.short_sample;
    });
    ClassCounts out;
    out.M = static_cast<long>(tasks);
    for (std::size_t t = 0; t < tasks; ++t) {
        for (const auto& [k, v] : per_task[t])
            out.U[k] += v;
        out.short_samples += short_flag[t];
    }
    return out;
}

std::vector<double> estimate_x_from_referrals(const RdsSample& sample) {
    std::unordered_map<int, int> status;
    for (const auto& rec : sample.records)
        status[rec.node_id] = rec.infected;
    long cross = 0, within0 = 0, within1 = 0;
    for (const auto& rec : sample.records) {
        if (!rec.recruiter)
            continue;
        auto it = status.find(*rec.recruiter);
        if (it == status.end())
            throw std::invalid_argument("recruiter " + std::to_string(*rec.recruiter) + " is not in the sample");
        if (it->second != rec.infected)
            ++cross;
        else if (rec.infected)
            ++within1;
        else
            ++within0;
    }
    const long edges = cross + within0 + within1;
    if (edges == 0)
        throw std::invalid_argument("sample has no recruitment edges");
    const double pooled = static_cast<double>(cross) / edges;
    const double p0 = cross + within0 > 0 ? static_cast<double>(cross) / (cross + within0) : pooled;
    const double p1 = cross + within1 > 0 ? static_cast<double>(cross) / (cross + within1) : pooled;
    std::vector<double> x(sample.records.size());
    for (std::size_t r = 0; r < x.size(); ++r) {
        const auto& rec = sample.records[r];
        x[r] = rec.infected ? rec.degree * (1.0 - p1) : rec.degree * p0;
    }
    return x;
}

std::size_t fill_missing_alters(RdsSample& sample) {
    std::size_t missing = 0;
    for (const auto& rec : sample.records)
        missing += !rec.infected_alters.has_value();
    if (missing == 0)
        return 0;
    auto x = estimate_x_from_referrals(sample);
    for (std::size_t r = 0; r < x.size(); ++r)
        if (!sample.records[r].infected_alters)
            sample.records[r].infected_alters = x[r];
    return missing;
}

OffspringTable empirical_offspring(const RdsSample& sample) {
    using Dist = OffspringTable::Distribution;
    const auto n = sample.records.size();
    if (n == 0)
        throw std::invalid_argument("empty sample");
    std::unordered_map<int, std::size_t> position;
    for (std::size_t r = 0; r < n; ++r)
        position[sample.records[r].node_id] = r;
    std::vector<int> recruits(n, 0);
    std::size_t last_processed = 0;
    bool any_recruit = false;
    for (std::size_t r = 0; r < n; ++r) {
        const auto& rec = sample.records[r];
        if (!rec.recruiter)
            continue;
        auto it = position.find(*rec.recruiter);
        if (it == position.end())
            throw std::invalid_argument("recruiter " + std::to_string(*rec.recruiter) + " is not in the sample");
        ++recruits[it->second];
        last_processed = std::max(last_processed, it->second);
        any_recruit = true;
    }
    // Respondents listed after the last active recruiter never had their turn
    // before the sample closed; their zero counts are not behaviour.
    const std::size_t usable = any_recruit ? last_processed + 1 : n;

    int max_wave = 0;
    for (std::size_t r = 0; r < usable; ++r)
        max_wave = std::max(max_wave, sample.records[r].wave);
    std::vector<std::array<Dist, 2>> counts(max_wave + 1);
    std::array<Dist, 2> pooled{};
    for (auto& row : counts)
        for (auto& d : row)
            d.fill(0.0);
    pooled[0].fill(0.0);
    pooled[1].fill(0.0);
    for (std::size_t r = 0; r < usable; ++r) {
        const auto& rec = sample.records[r];
        const int c = std::min(recruits[r], OffspringTable::max_recruits);
        counts[rec.wave][rec.infected][c] += 1;
        pooled[rec.infected][c] += 1;
    }
    auto total = [](const Dist& d) { return std::accumulate(d.begin(), d.end(), 0.0); };
    auto normalise = [&](Dist d) {
        const double t = total(d);
        for (auto& p : d)
            p /= t;
        return d;
    };
    Dist overall{};
    for (int c = 0; c <= OffspringTable::max_recruits; ++c)
        overall[c] = pooled[0][c] + pooled[1][c];

    OffspringTable table;
    table.rows.resize(counts.size());
    for (std::size_t w = 0; w < counts.size(); ++w) {
        for (int z = 0; z < 2; ++z) {
            if (total(counts[w][z]) > 0) {
                table.rows[w][z] = normalise(counts[w][z]);
                continue;
            }
            Dist neighbours{};
            neighbours.fill(0.0);
            int used = 0;
            for (std::size_t v : {w - 1, w + 1}) {
                if (v < counts.size() && total(counts[v][z]) > 0) {
                    auto d = normalise(counts[v][z]);
                    for (int c = 0; c <= OffspringTable::max_recruits; ++c)
                        neighbours[c] += d[c];
                    ++used;
                }
            }
            if (used > 0)
                table.rows[w][z] = normalise(neighbours);
            else if (total(pooled[z]) > 0)
                table.rows[w][z] = normalise(pooled[z]);
            else
                table.rows[w][z] = normalise(overall);
        }
    }
    return table;
}

RdsSample read_rds_sample(const std::filesystem::path& path) {
    auto t = csv::read(path);
    const auto c_id = t.column("id");
    const auto c_rec = t.column("recruiter_id");
    const auto c_deg = t.column("degree");
    const auto c_inf = t.column("infected");
    const auto c_wave = t.column("wave");
    const auto c_x = t.column("cross_alters");
    RdsSample s;
    for (const auto& row : t.rows) {
        RdsRecord rec;
        rec.node_id = static_cast<int>(csv::parse_long(row[c_id], "id"));
        if (auto r = csv::parse_optional_long(row[c_rec], "recruiter_id"))
            rec.recruiter = static_cast<int>(*r);
        rec.degree = static_cast<int>(csv::parse_long(row[c_deg], "degree"));
        rec.infected = static_cast<int>(csv::parse_long(row[c_inf], "infected"));
        rec.wave = static_cast<int>(csv::parse_long(row[c_wave], "wave"));
        rec.infected_alters = csv::parse_optional_double(row[c_x], "cross_alters");
        if (rec.infected != 0 && rec.infected != 1)
            throw std::runtime_error("infected must be 0 or 1");
        if (rec.degree < 0 || rec.wave < 0)
            throw std::runtime_error("degree and wave must be non-negative");
        if (rec.infected_alters && (*rec.infected_alters < 0 || *rec.infected_alters > rec.degree))
            throw std::runtime_error("cross_alters must lie in [0, degree]");
        if (!rec.recruiter)
            s.seed_ids.push_back(rec.node_id);
        s.records.push_back(rec);
    }
    if (s.records.empty())
        throw std::runtime_error(path.string() + ": no respondents");
    return s;
}

void write_rds_sample(const RdsSample& sample, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "id,recruiter_id,degree,infected,wave,cross_alters\n";
    for (const auto& rec : sample.records) {
        out << rec.node_id << ',';
        if (rec.recruiter)
            out << *rec.recruiter;
        out << ',' << rec.degree << ',' << rec.infected << ',' << rec.wave << ',';
        if (rec.infected_alters)
            out << csv::format_double(*rec.infected_alters);
        out << '\n';
    }
}

} // namespace rdsma
