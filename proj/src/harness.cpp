#include "rdsma/harness.hpp"

#include "rdsma/csv.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rdsma {

std::string to_string(Estimator e) {
    switch (e) {
    case Estimator::mean: return "mean";
    case Estimator::vh: return "vh";
    case Estimator::ma: return "ma";
    }
    return "?";
}

Estimator parse_estimator(const std::string& name) {
    if (name == "mean")
        return Estimator::mean;
    if (name == "vh")
        return Estimator::vh;
    if (name == "ma")
        return Estimator::ma;
    throw std::invalid_argument("unknown estimator '" + name + "' (expected mean, vh or ma)");
}

void StudySpec::validate() const {
    if (replications < 1)
        throw std::invalid_argument("replications must be >= 1");
    if (networks.empty() || designs.empty() || estimators.empty())
        throw std::invalid_argument("study grids must be nonempty");
    for (const auto& d : designs)
        d.validate();
    if (bootstrap)
        bootstrap->validate();
}

namespace {

std::string seed_mode_name(SeedMode m) {
    switch (m) {
    case SeedMode::pps_degree_all: return "all";
    case SeedMode::pps_degree_infected_only: return "infected";
    case SeedMode::match_classes: return "match";
    }
    return "?";
}

SeedMode parse_seed_mode(const std::string& s) {
    if (s == "all")
        return SeedMode::pps_degree_all;
    if (s == "infected")
        return SeedMode::pps_degree_infected_only;
    throw std::invalid_argument("unknown seed mode '" + s + "' (expected all or infected)");
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes")
        return true;
    if (s == "false" || s == "0" || s == "no")
        return false;
    throw std::invalid_argument("expected a boolean, got '" + s + "'");
}

std::vector<std::string> list_of(const std::string& value) {
    std::vector<std::string> out;
    for (auto& item : csv::split(value, ','))
        out.push_back(csv::trim(item));
    if (out.empty() || (out.size() == 1 && out[0].empty()))
        throw std::invalid_argument("empty value");
    return out;
}

template <class T, class F>
std::vector<T> map_list(const std::string& value, F parse) {
    std::vector<T> out;
    for (const auto& item : list_of(value))
        out.push_back(parse(item));
    return out;
}

long to_long(const std::string& s) { return csv::parse_long(s, "value"); }
double to_double(const std::string& s) { return csv::parse_double(s, "value"); }

std::string_view trim_view(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

StudySpec parse_study_config(const std::string& text) {
    std::vector<int> Ns{1000}, ns{500}, seeds{10}, coupons{2};
    std::vector<double> prev{0.2}, degree{7.0}, R{5.0}, w{1.0}, referral{1.0};
    std::vector<SeedMode> modes{SeedMode::pps_degree_all};
    std::vector<bool> reseed{true};
    StudySpec spec;
    spec.ma.population_size = 0;
    BootstrapConfig boot;
    bool boot_on = false;

    using Setter = std::function<void(const std::string&)>;
    auto ints = [](std::vector<int>& dst) {
        return Setter([&dst](const std::string& v) {
            dst = map_list<int>(v, [](const std::string& s) { return static_cast<int>(to_long(s)); });
        });
    };
    auto doubles = [](std::vector<double>& dst) {
        return Setter([&dst](const std::string& v) { dst = map_list<double>(v, to_double); });
    };
    auto one_int = [](int& dst) { return Setter([&dst](const std::string& v) { dst = static_cast<int>(to_long(v)); }); };
    auto one_double = [](double& dst) { return Setter([&dst](const std::string& v) { dst = to_double(v); }); };
    auto one_bool = [](bool& dst) { return Setter([&dst](const std::string& v) { dst = parse_bool(v); }); };

    std::map<std::string, Setter> setters{
        {"network.N", ints(Ns)},
        {"network.prevalence", doubles(prev)},
        {"network.mean_degree", doubles(degree)},
        {"network.homophily_R", doubles(R)},
        {"network.activity_w", doubles(w)},
        {"design.n", ints(ns)},
        {"design.n_seeds", ints(seeds)},
        {"design.coupons", ints(coupons)},
        {"design.referral_weight_infected", doubles(referral)},
        {"design.seed_mode", [&](const std::string& v) { modes = map_list<SeedMode>(v, parse_seed_mode); }},
        {"design.reseed_on_dieout", [&](const std::string& v) { reseed = map_list<bool>(v, parse_bool); }},
        {"estimators", [&](const std::string& v) { spec.estimators = map_list<Estimator>(v, parse_estimator); }},
        {"replications", one_int(spec.replications)},
        {"master_seed", [&](const std::string& v) { spec.master_seed = std::stoull(v); }},
        {"ma.h", one_int(spec.ma.h)},
        {"ma.M1", one_int(spec.ma.M1)},
        {"ma.M2", one_int(spec.ma.M2)},
        {"ma.pop_size", one_int(spec.ma.population_size)},
        {"ma.tetrad_n", [&](const std::string& v) { spec.ma.natural.tetrad_count = static_cast<std::size_t>(to_long(v)); }},
        {"ma.level_walk_steps", one_int(spec.ma.natural.level_walk_steps)},
        {"ma.burn_in_per_edge", one_double(spec.ma.mcmc.burn_in_per_edge)},
        {"ma.spacing_per_edge", one_double(spec.ma.mcmc.spacing_per_edge)},
        {"ma.match_seed_classes", one_bool(spec.ma.match_seed_classes)},
        {"ma.empirical_offspring", one_bool(spec.ma.empirical_offspring)},
        {"bootstrap.B",
         [&](const std::string& v) {
             boot.B = static_cast<int>(to_long(v));
             boot_on = boot.B > 0;
         }},
        {"bootstrap.mode",
         [&](const std::string& v) {
             if (v == "fast")
                 boot.mode = BootstrapMode::fast;
             else if (v == "full")
                 boot.mode = BootstrapMode::full;
             else
                 throw std::invalid_argument("unknown bootstrap mode '" + v + "'");
         }},
        {"bootstrap.levels", doubles(boot.ci_levels)},
        {"sensitivity.pop_sizes", ints(spec.sensitivity_pop_sizes)},
    };

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = line;
        if (auto hash = body.find('#'); hash != std::string_view::npos)
            body = body.substr(0, hash);
        body = trim_view(body);
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(trim_view(body.substr(0, eq)));
        const std::string value(trim_view(body.substr(eq + 1)));
        auto it = setters.find(key);
        if (it == setters.end())
            throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        try {
            it->second(value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("line " + std::to_string(line_no) + " (" + key + "): " + e.what());
        }
    }

    spec.networks.clear();
    for (int N : Ns)
        for (double p : prev)
            for (double d : degree)
                for (double r : R)
                    for (double a : w)
                        spec.networks.push_back({N, p, d, r, a});
    spec.designs.clear();
    for (int n : ns)
        for (int s : seeds)
            for (SeedMode m : modes)
                for (int c : coupons)
                    for (double rw : referral)
                        for (bool rs : reseed) {
                            SamplingDesign d;
                            d.n = n;
                            d.n_seeds = s;
                            d.seed_mode = m;
                            d.coupons = c;
                            d.referral_weight_infected = rw;
                            d.reseed_on_dieout = rs;
                            spec.designs.push_back(d);
                        }
    if (boot_on)
        spec.bootstrap = boot;
    spec.validate();
    return spec;
}

StudySpec read_study_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_study_config(ss.str());
}

namespace {

/// One estimator column evaluated on every replication.
struct Column {
    Estimator estimator;
    int assumed_pop_size;
    bool bootstrap;
};

struct Outcome {
    std::optional<double> estimate;
    std::optional<double> boot_se;
    std::vector<bool> covered;
    double seconds = 0.0;
};

struct TaskResult {
    double truth = 0.0;
    std::vector<Outcome> outcomes;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TaskResult run_task(const StudySpec& spec, const MixingSpec& ms, const SamplingDesign& design,
                    const std::vector<Column>& columns, std::size_t cell, std::size_t rep) {
    TaskResult out;
    out.outcomes.resize(columns.size());
    Network net;
    RdsSample sample;
    try {
        Rng net_rng = make_rng(spec.master_seed, {cell, rep, 0});
        net = gen_bernoulli_mixing(ms, net_rng);
        Rng sample_rng = make_rng(spec.master_seed, {cell, rep, 1});
        sample = run_rds(net, design, select_seeds(net, design, sample_rng), sample_rng);
    } catch (const std::exception&) {
        return out;
    }
    out.truth = net.prevalence();
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome& o = out.outcomes[c];
        try {
            switch (columns[c].estimator) {
            case Estimator::mean: o.estimate = naive_mean(sample); break;
            case Estimator::vh: o.estimate = vh_estimate(sample); break;
            case Estimator::ma: {
                MaConfig cfg = spec.ma;
                cfg.population_size = columns[c].assumed_pop_size;
                cfg.threads = 1;
                // The analyst does not know about referral bias.
                SamplingDesign analyst = design;
                analyst.referral_weight_infected = 1.0;
                const MaResult fit = ma_estimate(sample, analyst, cfg, derive_seed(spec.master_seed, {cell, rep, 2}));
                o.estimate = fit.mu_hat;
                if (columns[c].bootstrap) {
                    const BootstrapResult b = parametric_bootstrap(
                        fit, analyst, *spec.bootstrap, cfg, derive_seed(spec.master_seed, {cell, rep, 3}));
                    o.boot_se = b.se;
                    for (const auto& iv : b.intervals)
                        o.covered.push_back(iv.contains(out.truth));
                }
                break;
            }
            }
        } catch (const std::exception&) {
            o.estimate.reset();
            o.boot_se.reset();
            o.covered.clear();
        }
        o.seconds = seconds_since(t0);
    }
    return out;
}

StudyResult run_grid(const StudySpec& spec, const std::function<std::vector<Column>(const MixingSpec&)>& columns_for,
                     unsigned threads) {
    spec.validate();
    StudyResult result;
    struct Cell {
        std::size_t index;
        const MixingSpec* network;
        const SamplingDesign* design;
        std::vector<Column> columns;
    };
    std::vector<Cell> cells;
    std::size_t index = 0;
    for (const auto& ms : spec.networks) {
        for (const auto& d : spec.designs) {
            const std::size_t cell = index++;
            std::ostringstream label;
            label << "N=" << ms.N << " prevalence=" << ms.prevalence << " mean_degree=" << ms.mean_degree
                  << " R=" << ms.homophily_R << " w=" << ms.activity_w << " n=" << d.n;
            try {
                solve_mixing_cells(ms);
            } catch (const std::exception& e) {
                result.skipped.push_back(label.str() + ": " + e.what());
                continue;
            }
            if (d.n > ms.N) {
                result.skipped.push_back(label.str() + ": sample size exceeds N");
                continue;
            }
            cells.push_back({cell, &ms, &d, columns_for(ms)});
        }
    }

    const auto reps = static_cast<std::size_t>(spec.replications);
    std::vector<TaskResult> tasks(cells.size() * reps);
    parallel_for(tasks.size(), threads, [&](std::size_t t) {
        const Cell& c = cells[t / reps];
        tasks[t] = run_task(spec, *c.network, *c.design, c.columns, c.index, t % reps);
    });

    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const Cell& c = cells[ci];
        for (std::size_t col = 0; col < c.columns.size(); ++col) {
            StudyRow row;
            row.network = *c.network;
            row.design = *c.design;
            row.estimator = c.columns[col].estimator;
            row.assumed_pop_size = c.columns[col].estimator == Estimator::ma ? c.columns[col].assumed_pop_size : 0;
            std::vector<double> est, err, se;
            std::vector<int> covered;
            double truth_sum = 0;
            for (std::size_t r = 0; r < reps; ++r) {
                const TaskResult& tr = tasks[ci * reps + r];
                const Outcome& o = tr.outcomes.empty() ? Outcome{} : tr.outcomes[col];
                if (!tr.outcomes.empty())
                    row.wall_seconds += o.seconds;
                if (!o.estimate) {
                    ++row.failures;
                    continue;
                }
                est.push_back(*o.estimate);
                err.push_back(*o.estimate - tr.truth);
                truth_sum += tr.truth;
                if (o.boot_se) {
                    se.push_back(*o.boot_se);
                    if (covered.empty())
                        covered.assign(o.covered.size(), 0);
                    for (std::size_t l = 0; l < o.covered.size(); ++l)
                        covered[l] += o.covered[l] ? 1 : 0;
                }
            }
            row.replications = static_cast<int>(est.size());
            if (!est.empty()) {
                const double n = static_cast<double>(est.size());
                double m = 0, b = 0;
                for (std::size_t i = 0; i < est.size(); ++i) {
                    m += est[i];
                    b += err[i];
                }
                row.mean_estimate = m / n;
                row.bias = b / n;
                row.true_prevalence = truth_sum / n;
                if (est.size() > 1) {
                    double ss = 0;
                    for (double e : est)
                        ss += (e - row.mean_estimate) * (e - row.mean_estimate);
                    row.observed_se = std::sqrt(ss / (n - 1));
                }
            }
            if (!se.empty()) {
                double s = 0;
                for (double v : se)
                    s += v;
                row.mean_bootstrap_se = s / static_cast<double>(se.size());
                for (std::size_t l = 0; l < covered.size(); ++l)
                    row.coverage.push_back(
                        {spec.bootstrap->ci_levels[l], covered[l] / static_cast<double>(se.size())});
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

} // namespace

StudyResult run_study(const StudySpec& spec, unsigned threads) {
    return run_grid(
        spec,
        [&](const MixingSpec& ms) {
            std::vector<Column> cols;
            for (Estimator e : spec.estimators) {
                const int pop = spec.ma.population_size > 0 ? spec.ma.population_size : ms.N;
                cols.push_back({e, pop, e == Estimator::ma && spec.bootstrap.has_value()});
            }
            return cols;
        },
        threads);
}

StudyResult run_sensitivity_N(const StudySpec& spec, const std::vector<int>& pop_sizes, unsigned threads) {
    if (pop_sizes.empty())
        throw std::invalid_argument("no population sizes given");
    for (const auto& d : spec.designs)
        for (int p : pop_sizes)
            if (p < d.n)
                throw std::invalid_argument("assumed population size " + std::to_string(p) +
                                            " is below the sample size " + std::to_string(d.n));
    return run_grid(
        spec,
        [&](const MixingSpec&) {
            std::vector<Column> cols;
            for (int p : pop_sizes)
                cols.push_back({Estimator::ma, p, spec.bootstrap.has_value()});
            return cols;
        },
        threads);
}

void write_study_result(const StudyResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    std::vector<double> levels;
    for (const auto& row : result.rows)
        if (row.coverage.size() > levels.size()) {
            levels.clear();
            for (const auto& [l, c] : row.coverage)
                levels.push_back(l);
        }
    out << "N,prevalence,mean_degree,homophily_R,activity_w,n,n_seeds,seed_mode,coupons,referral_weight,"
           "estimator,assumed_N,replications,failures,true_prevalence,mean_estimate,bias,observed_se,"
           "mean_bootstrap_se";
    for (double l : levels)
        out << ",coverage_" << csv::format_double(l);
    out << '\n';
    auto f = csv::format_double;
    for (const auto& r : result.rows) {
        out << r.network.N << ',' << f(r.network.prevalence) << ',' << f(r.network.mean_degree) << ','
            << f(r.network.homophily_R) << ',' << f(r.network.activity_w) << ',' << r.design.n << ','
            << r.design.n_seeds << ',' << seed_mode_name(r.design.seed_mode) << ',' << r.design.coupons << ','
            << f(r.design.referral_weight_infected) << ',' << to_string(r.estimator) << ',';
        if (r.estimator == Estimator::ma)
            out << r.assumed_pop_size;
        out << ',' << r.replications << ',' << r.failures << ',' << f(r.true_prevalence) << ','
            << f(r.mean_estimate) << ',' << f(r.bias) << ',' << f(r.observed_se) << ',';
        if (r.mean_bootstrap_se)
            out << f(*r.mean_bootstrap_se);
        for (std::size_t l = 0; l < levels.size(); ++l) {
            out << ',';
            if (l < r.coverage.size())
                out << f(r.coverage[l].second);
        }
        out << '\n';
    }
}

void write_study_timing(const StudyResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "row,estimator,wall_seconds\n";
    for (std::size_t i = 0; i < result.rows.size(); ++i)
        out << i + 1 << ',' << to_string(result.rows[i].estimator) << ','
            << csv::format_double(result.rows[i].wall_seconds) << '\n';
}

} // namespace rdsma
