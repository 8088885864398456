#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rdsma/bootstrap.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rdsma;

namespace {

struct Fixture {
    Network net;
    RdsSample sample;
    SamplingDesign design;
    MaConfig cfg;
    MaResult fit;
};

Fixture fitted(const Network& g, std::uint64_t seed) {
    Fixture f;
    f.net = g;
    f.design.n = 150;
    f.design.n_seeds = 5;
    Rng rng(seed);
    f.sample = run_rds(g, f.design, select_seeds(g, f.design, rng), rng);
    f.cfg.M1 = 5;
    f.cfg.M2 = 5;
    f.cfg.natural.tetrad_count = 5000;
    f.cfg.population_size = g.node_count();
    f.fit = ma_estimate(f.sample, f.design, f.cfg, seed + 1);
    return f;
}

} // namespace

TEST_CASE("summarize") {
    BootstrapResult flat = summarize({0.2, 0.2, 0.2}, 0.2, {0.95, 0.9});
    CHECK(flat.se == 0);
    for (const auto& iv : flat.intervals) {
        CHECK(iv.lower == doctest::Approx(0.2));
        CHECK(iv.upper == doctest::Approx(0.2));
    }

    const double a = 0.01 / std::sqrt(2.0);
    BootstrapResult r = summarize({0.2 - a, 0.2 + a}, 0.2, {0.95});
    CHECK(r.se == doctest::Approx(0.01));
    CHECK(r.intervals[0].lower == doctest::Approx(0.1804).epsilon(1e-4));
    CHECK(r.intervals[0].upper == doctest::Approx(0.2196).epsilon(1e-4));
    CHECK(r.intervals[0].contains(0.2));

    const double b = 0.02 / std::sqrt(2.0);
    BootstrapResult t = summarize({0.01 - b, 0.01 + b}, 0.01, {0.95});
    CHECK(t.intervals[0].lower == 0);

    std::vector<double> draws{0.18, 0.22, 0.2, 0.25, 0.19, 0.21, 0.17};
    CHECK(summarize(draws, 0.2, {0.9}).se == doctest::Approx(oracle::sample_sd(draws)).epsilon(1e-12));

    CHECK_THROWS_AS(summarize({0.2}, 0.2, {0.95}), std::invalid_argument);
    CHECK_THROWS_AS(summarize({0.2, 0.3}, 0.2, {1.0}), std::invalid_argument);

    auto pct = percentile_intervals({0.1, 0.2, 0.3, 0.4, 0.5}, {0.5});
    CHECK(pct[0].lower == doctest::Approx(0.2));
    CHECK(pct[0].upper == doctest::Approx(0.4));
}

TEST_CASE("config validation") {
    BootstrapConfig c;
    c.B = 1;
    CHECK_THROWS(c.validate());
    c.B = 10;
    c.ci_levels = {0};
    CHECK_THROWS(c.validate());
}

TEST_CASE("all-infected population gives a degenerate bootstrap") {
    Rng rng(51);
    Network g = reed_molloy(std::vector<int>(300, 4), std::vector<std::uint8_t>(300, 1), rng);
    Fixture f = fitted(g, 52);
    CHECK(f.fit.mu_hat == 1);
    BootstrapConfig bc;
    bc.B = 20;
    for (BootstrapMode mode : {BootstrapMode::fast, BootstrapMode::full}) {
        bc.mode = mode;
        BootstrapResult r = parametric_bootstrap(f.fit, f.design, bc, f.cfg, 3);
        CHECK(r.se == 0);
        CHECK(r.failures == 0);
        for (double d : r.draws)
            CHECK(d == 1);
    }
}

TEST_CASE("bootstrap on a mixed population") {
    Rng rng(53);
    MixingSpec ms;
    ms.N = 400;
    ms.homophily_R = 3;
    Fixture f = fitted(gen_bernoulli_mixing(ms, rng), 54);
    BootstrapConfig bc;
    bc.B = 100;

    BootstrapResult fast = parametric_bootstrap(f.fit, f.design, bc, f.cfg, 9);
    CHECK(fast.draws.size() == 100);
    CHECK(fast.failures == 0);
    CHECK(fast.se > 0);
    CHECK(fast.mu_hat == f.fit.mu_hat);
    for (const auto& iv : fast.intervals)
        CHECK(iv.contains(fast.mu_hat));

    SUBCASE("seeded determinism, thread independent") {
        BootstrapResult again = parametric_bootstrap(f.fit, f.design, bc, f.cfg, 9, 4);
        CHECK(again.draws == fast.draws);
    }
    SUBCASE("fast and full agree within 25 percent") {
        bc.mode = BootstrapMode::full;
        BootstrapResult full = parametric_bootstrap(f.fit, f.design, bc, f.cfg, 9);
        CHECK(full.draws.size() + full.failures == 100);
        CHECK(std::abs(fast.se - full.se) <= 0.25 * full.se);
    }
    SUBCASE("CSV output") {
        auto dir = std::filesystem::temp_directory_path();
        write_bootstrap_draws(fast, dir / "rdsma_draws.csv");
        write_bootstrap_summary(fast, dir / "rdsma_summary.csv");
        std::ifstream d(dir / "rdsma_draws.csv");
        std::string line;
        int lines = 0;
        while (std::getline(d, line))
            ++lines;
        CHECK(lines == 101);
        std::ifstream s(dir / "rdsma_summary.csv");
        std::getline(s, line);
        CHECK(line == "mu_hat,se,draws,failures,lower_0.95,upper_0.95,lower_0.9,upper_0.9");
    }
}

TEST_CASE("replicates that keep failing are dropped") {
    Rng rng(55);
    Fixture f = fitted(gen_bernoulli_mixing(MixingSpec{300, 0.2, 6, 1, 1}, rng), 56);
    // more seeds than nodes: every replicate fails twice
    f.fit.simulation_design.n_seeds = 1000;
    f.fit.simulation_design.n = 1000;
    f.fit.simulation_design.seed_mode = SeedMode::pps_degree_all;
    BootstrapConfig bc;
    bc.B = 5;
    CHECK_THROWS_AS(parametric_bootstrap(f.fit, f.design, bc, f.cfg, 1), std::invalid_argument);
}
