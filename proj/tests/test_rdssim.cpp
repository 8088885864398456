#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rdsma/netgen.hpp"
#include "rdsma/rdssim.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace rdsma;

namespace {

double chi2_critical(double df) { return boost::math::quantile(boost::math::chi_squared(df), 0.999); }

Network eight_node() {
    // two 4-cycles joined by a bridge plus chords
    return Network(8, {1, 0, 1, 0, 0, 1, 0, 0},
                   {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {5, 7}, {1, 6}});
}

SamplingDesign design_of(int n, int seeds, int coupons) {
    SamplingDesign d;
    d.n = n;
    d.n_seeds = seeds;
    d.coupons = coupons;
    return d;
}

} // namespace

TEST_CASE("design validation") {
    SamplingDesign d = design_of(5, 6, 2);
    CHECK_THROWS(d.validate());
    d = design_of(5, 2, 2);
    d.referral_weight_infected = 0;
    CHECK_THROWS(d.validate());
    d = design_of(5, 2, 2);
    d.seed_mode = SeedMode::match_classes;
    CHECK_THROWS(d.validate());
    OffspringTable bad;
    bad.rows.push_back({OffspringTable::Distribution{0.5, 0.5, 0.5, 0}, OffspringTable::Distribution{1, 0, 0, 0}});
    d = design_of(5, 2, 2);
    d.offspring = bad;
    CHECK_THROWS(d.validate());
}

TEST_CASE("select_seeds") {
    Rng rng(31);
    SUBCASE("equal degrees give a uniform sample without replacement") {
        std::vector<Edge> ring;
        for (int i = 0; i < 10; ++i)
            ring.push_back({i, (i + 1) % 10});
        Network g(10, std::vector<std::uint8_t>(10, 0), ring);
        std::map<std::set<int>, double> freq;
        const int reps = 10000;
        for (int r = 0; r < reps; ++r) {
            auto s = select_seeds(g, design_of(5, 2, 2), rng);
            CHECK(s.size() == 2);
            CHECK(s[0] != s[1]);
            ++freq[{s[0], s[1]}];
        }
        CHECK(freq.size() == 45);
        std::vector<double> obs, exp;
        for (auto& [k, v] : freq) {
            obs.push_back(v);
            exp.push_back(reps / 45.0);
        }
        CHECK(oracle::chi_square(obs, exp) < chi2_critical(44));
    }
    SUBCASE("sequential PPS by degree matches exact ordered-pair probabilities") {
        Network g = eight_node();
        const auto d = g.degrees();
        double D = 0;
        for (int x : d)
            D += x;
        std::map<std::pair<int, int>, double> freq;
        const int reps = 40000;
        for (int r = 0; r < reps; ++r) {
            auto s = select_seeds(g, design_of(5, 2, 2), rng);
            ++freq[{s[0], s[1]}];
        }
        std::vector<double> obs, exp;
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b) {
                if (a == b)
                    continue;
                obs.push_back(freq[{a, b}]);
                exp.push_back(reps * d[a] / D * d[b] / (D - d[a]));
            }
        CHECK(oracle::chi_square(obs, exp) < chi2_critical(obs.size() - 1.0));
    }
    SUBCASE("infected-only pool") {
        Network g = eight_node();
        SamplingDesign d = design_of(5, 3, 2);
        d.seed_mode = SeedMode::pps_degree_infected_only;
        auto s = select_seeds(g, d, rng);
        CHECK(std::set<int>(s.begin(), s.end()) == std::set<int>{0, 2, 5});
        d.n_seeds = 4;
        CHECK_THROWS_AS(select_seeds(g, d, rng), std::invalid_argument);
    }
    SUBCASE("degree-zero nodes are never seeds") {
        Network g(4, {0, 0, 0, 0}, {{0, 1}});
        CHECK_THROWS_AS(select_seeds(g, design_of(3, 3, 2), rng), std::invalid_argument);
    }
    SUBCASE("match_classes with nearest-degree fallback") {
        Network g = eight_node();
        // degrees: 0:3 1:3 2:3 3:3 4:3 5:3 6:3 7:3 -> make a richer graph
        Network h(6, {1, 1, 0, 0, 0, 1}, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {3, 4}, {4, 5}});
        // degrees: 0:3(inf) 1:2(inf) 2:2 3:2 4:2 5:1(inf)
        SamplingDesign d = design_of(4, 2, 2);
        d.seed_mode = SeedMode::match_classes;
        d.seed_classes = {{3, 1}, {5, 0}};
        for (int rep = 0; rep < 20; ++rep) {
            auto s = select_seeds(h, d, rng);
            CHECK(s[0] == 0);
            CHECK((s[1] == 2 || s[1] == 3 || s[1] == 4));
        }
        d.seed_classes = {{2, 1}, {1, 1}};
        auto s = select_seeds(h, d, rng);
        CHECK(s[0] == 1);
        CHECK(s[1] == 5);
        Rng a(5), b(5);
        d.seed_classes = {{9, 0}, {9, 0}};
        CHECK(select_seeds(h, d, a) == select_seeds(h, d, b));
        (void)g;
    }
}

TEST_CASE("run_rds on forced structures") {
    Rng rng(32);
    SUBCASE("star from the centre") {
        Network star(6, {0, 1, 0, 1, 0, 1}, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
        SamplingDesign d = design_of(6, 1, 2);
        d.reseed_on_dieout = false;
        RdsSample s = run_rds(star, d, {0}, rng);
        CHECK(s.size() == 3);
        CHECK(s.short_sample);
        CHECK(s.records[0].wave == 0);
        for (std::size_t r = 1; r < s.size(); ++r) {
            CHECK(s.records[r].wave == 1);
            CHECK(s.records[r].recruiter == 0);
        }
        CHECK(check_sample(star, s).empty());
    }
    SUBCASE("path from the middle") {
        Network path(5, {0, 0, 1, 0, 0}, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
        RdsSample s = run_rds(path, design_of(5, 1, 2), {2}, rng);
        REQUIRE(s.size() == 5);
        for (const auto& rec : s.records)
            CHECK(rec.wave == std::abs(rec.node_id - 2));
        CHECK(!s.short_sample);
        CHECK(s.records[0].infected_alters == 0);
        CHECK(s.records[1].infected_alters == 1);
    }
    SUBCASE("stops mid-respondent at n") {
        Network star(6, {0, 0, 0, 0, 0, 0}, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
        RdsSample s = run_rds(star, design_of(2, 1, 3), {0}, rng);
        CHECK(s.size() == 2);
    }
    SUBCASE("reseeding reaches n on a disconnected network") {
        Network g(6, {0, 1, 0, 1, 0, 1}, {{0, 1}, {2, 3}, {4, 5}});
        RdsSample s = run_rds(g, design_of(6, 1, 2), {0}, rng);
        CHECK(s.size() == 6);
        CHECK(s.reseeds == 2);
        CHECK(s.seed_ids.size() == 3);
        CHECK(check_sample(g, s).empty());
    }
    SUBCASE("duplicate or invalid seeds") {
        Network path(3, {0, 0, 0}, {{0, 1}, {1, 2}});
        CHECK_THROWS(run_rds(path, design_of(3, 2, 2), {1, 1}, rng));
        CHECK_THROWS(run_rds(path, design_of(3, 1, 2), {7}, rng));
    }
}

TEST_CASE("inclusion frequencies match trajectory enumeration") {
    Network g = eight_node();
    for (double w : {1.0, 1.5}) {
        oracle::TrajectoryOracle oracle_run{g, 2, 6, w, {}};
        oracle_run.run({3});
        SamplingDesign d = design_of(6, 1, 2);
        d.referral_weight_infected = w;
        d.reseed_on_dieout = false;
        Rng rng(33);
        const int reps = 100000;
        std::vector<double> freq(8, 0);
        for (int r = 0; r < reps; ++r)
            for (const auto& rec : run_rds(g, d, {3}, rng).records)
                freq[rec.node_id] += 1;
        for (int i = 0; i < 8; ++i) {
            const double p = oracle_run.inclusion[i];
            const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / reps);
            CHECK(std::abs(freq[i] / reps - p) < 3 * se + 1e-9);
        }
    }
}

TEST_CASE("exchangeable recruitment without referral bias") {
    // recruiter 0 with four alters and one coupon: each alter equally likely
    Network g(5, {0, 1, 1, 0, 0}, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
    Rng rng(34);
    std::vector<double> freq(5, 0);
    const int reps = 40000;
    for (int r = 0; r < reps; ++r)
        freq[run_rds(g, design_of(2, 1, 1), {0}, rng).records[1].node_id] += 1;
    CHECK(oracle::chi_square({freq[1], freq[2], freq[3], freq[4]}, std::vector<double>(4, reps / 4.0)) <
          chi2_critical(3));
}

TEST_CASE("offspring tables and shortfall redistribution") {
    Rng rng(35);
    // seeds 0 (infected, one alter) and 1 (infected, four alters); node 6 is
    // an uninfected seed queued between them.
    Network g(12, {1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
              {{0, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 7}, {6, 8}, {6, 9}, {6, 10}, {6, 11}});
    OffspringTable t;
    t.rows.push_back({OffspringTable::Distribution{0, 0, 1, 0}, OffspringTable::Distribution{0, 0, 1, 0}});
    t.rows.push_back({OffspringTable::Distribution{1, 0, 0, 0}, OffspringTable::Distribution{1, 0, 0, 0}});
    CHECK(&t.at(7, 1) == &t.rows[1][1]);
    SamplingDesign d = design_of(12, 3, 2);
    d.offspring = t;
    d.reseed_on_dieout = false;
    RdsSample s = run_rds(g, d, {0, 6, 1}, rng);
    std::map<int, int> recruits;
    for (const auto& rec : s.records)
        if (rec.recruiter)
            ++recruits[*rec.recruiter];
    CHECK(recruits[0] == 1);
    CHECK(recruits[6] == 2);
    CHECK(recruits[1] == 3);
    CHECK(check_sample(g, s).empty());

    SUBCASE("quota drawn from the wave and status cell") {
        OffspringTable u;
        u.rows.push_back({OffspringTable::Distribution{0, 1, 0, 0}, OffspringTable::Distribution{0, 0, 0, 1}});
        SamplingDesign e = design_of(12, 1, 2);
        e.offspring = u;
        e.reseed_on_dieout = false;
        Network star(5, {1, 0, 0, 0, 0}, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
        CHECK(run_rds(star, e, {0}, rng).size() == 4);
        Network star0(5, {0, 0, 0, 0, 0}, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
        CHECK(run_rds(star0, e, {0}, rng).size() == 2);
    }
}

TEST_CASE("simulated samples satisfy the structural checks") {
    Rng rng(36);
    for (int rep = 0; rep < 30; ++rep) {
        MixingSpec ms;
        ms.N = 400;
        Network g = gen_bernoulli_mixing(ms, rng);
        SamplingDesign d = design_of(200, 5, 2);
        d.referral_weight_infected = rep % 2 ? 1.2 : 1.0;
        d.seed_mode = rep % 3 ? SeedMode::pps_degree_all : SeedMode::pps_degree_infected_only;
        RdsSample s = run_rds(g, d, select_seeds(g, d, rng), rng);
        CHECK(check_sample(g, s) == "");
        CHECK(s.size() == 200);
    }
    SUBCASE("check_sample catches violations") {
        Network path(3, {0, 0, 0}, {{0, 1}, {1, 2}});
        RdsSample s = run_rds(path, design_of(3, 1, 2), {0}, rng);
        RdsSample bad = s;
        bad.records[2].wave = 5;
        CHECK(!check_sample(path, bad).empty());
        bad = s;
        bad.records[2].recruiter = 0;
        CHECK(!check_sample(path, bad).empty());
        bad = s;
        bad.records[2].node_id = 0;
        CHECK(!check_sample(path, bad).empty());
    }
    SUBCASE("determinism") {
        Network g = gen_bernoulli_mixing(MixingSpec{}, rng);
        SamplingDesign d;
        Rng a(8), b(8);
        RdsSample x = run_rds(g, d, select_seeds(g, d, a), a);
        RdsSample y = run_rds(g, d, select_seeds(g, d, b), b);
        REQUIRE(x.size() == y.size());
        for (std::size_t r = 0; r < x.size(); ++r)
            CHECK(x.records[r].node_id == y.records[r].node_id);
    }
}

TEST_CASE("simulate_class_counts") {
    Rng rng(37);
    SUBCASE("census") {
        Network g = eight_node();
        SamplingDesign d = design_of(8, 1, 8);
        d.reseed_on_dieout = false;
        ClassCounts c = simulate_class_counts({g}, d, 1, 5);
        CHECK(c.M == 1);
        const ClassTable t = class_table(g);
        CHECK(c.U.size() == t.entries.size());
        for (const auto& [k, v] : t.entries)
            CHECK(c.U[k] == v);
    }
    SUBCASE("absent classes stay zero and counts scale with M2") {
        MixingSpec ms;
        ms.N = 500;
        std::vector<Network> nets{gen_bernoulli_mixing(ms, rng), gen_bernoulli_mixing(ms, rng)};
        SamplingDesign d = design_of(100, 5, 2);
        ClassCounts one = simulate_class_counts(nets, d, 150, 7);
        ClassCounts two = simulate_class_counts(nets, d, 300, 8);
        CHECK(one.M == 300);
        CHECK(two.M == 600);
        CHECK(one.U.count({400, 0}) == 0);
        for (const auto& [k, v] : one.U)
            if (v >= 2000)
                CHECK((two.U[k] / static_cast<double>(v) >= 1.8 && two.U[k] / static_cast<double>(v) <= 2.2));
        long total = 0;
        for (const auto& [k, v] : one.U)
            total += v;
        CHECK(total <= one.M * 100);
    }
    SUBCASE("independent of thread count") {
        MixingSpec ms;
        ms.N = 300;
        std::vector<Network> nets{gen_bernoulli_mixing(ms, rng)};
        SamplingDesign d = design_of(100, 5, 2);
        CHECK(simulate_class_counts(nets, d, 12, 3, 1).U == simulate_class_counts(nets, d, 12, 3, 4).U);
    }
}

TEST_CASE("estimate_x_from_referrals") {
    RdsSample s;
    s.records = {{0, 4, 1, {}, 0, {}}, {1, 3, 0, {}, 1, 0}, {2, 5, 0, {}, 1, 0}, {3, 2, 1, {}, 2, 1}};
    SUBCASE("all recruitment edges cross-status") {
        auto x = estimate_x_from_referrals(s);
        CHECK(x[1] == doctest::Approx(3));
        CHECK(x[2] == doctest::Approx(5));
        CHECK(x[0] == doctest::Approx(0));
    }
    SUBCASE("no cross-status edges") {
        for (auto& r : s.records)
            r.infected = 0;
        s.records[3].infected = 0;
        auto x = estimate_x_from_referrals(s);
        for (double v : x)
            CHECK(v == 0);
        for (auto& r : s.records)
            r.infected = 1;
        auto y = estimate_x_from_referrals(s);
        for (std::size_t r = 0; r < y.size(); ++r)
            CHECK(y[r] == doctest::Approx(s.records[r].degree));
    }
    SUBCASE("no recruitment edges") {
        RdsSample seeds_only;
        seeds_only.records = {{0, 4, 1, {}, 0, {}}};
        CHECK_THROWS_AS(estimate_x_from_referrals(seeds_only), std::invalid_argument);
    }
    SUBCASE("fill keeps observed values") {
        s.records[0].infected_alters = 2.0;
        CHECK(fill_missing_alters(s) == 3);
        CHECK(s.records[0].infected_alters == 2.0);
        CHECK(s.records[1].infected_alters.has_value());
    }
    SUBCASE("beats the uninformed guess on a dense sample") {
        Rng rng(38);
        MixingSpec ms;
        ms.N = 600;
        Network g = gen_bernoulli_mixing(ms, rng);
        SamplingDesign d = design_of(500, 10, 3);
        RdsSample t = run_rds(g, d, select_seeds(g, d, rng), rng);
        auto xh = estimate_x_from_referrals(t);
        double err = 0, naive = 0;
        for (std::size_t r = 0; r < t.size(); ++r) {
            const double x = *t.records[r].infected_alters;
            err += std::abs(xh[r] - x);
            naive += std::abs(t.records[r].degree / 2.0 - x);
        }
        CHECK(err < naive);
    }
}

TEST_CASE("empirical_offspring") {
    // 0 -> 1, 2 ; 1 -> 3 and the sample closes, so 2 and 3 never recruit
    RdsSample s;
    s.records = {{0, 3, 1, 1.0, 0, {}}, {1, 2, 0, 1.0, 1, 0}, {2, 2, 1, 1.0, 1, 0}, {3, 1, 0, 0.0, 2, 1}};
    OffspringTable t = empirical_offspring(s);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1][2] == doctest::Approx(1));
    CHECK(t.rows[1][0][1] == doctest::Approx(1));
    // unobserved cells borrow from the neighbouring wave
    CHECK(t.rows[1][1][2] == doctest::Approx(1));
    CHECK(t.rows[0][0][1] == doctest::Approx(1));
    for (const auto& row : t.rows)
        for (const auto& dist : row) {
            double total = 0;
            for (double p : dist)
                total += p;
            CHECK(total == doctest::Approx(1));
        }
}

TEST_CASE("sample CSV round trip") {
    auto path = std::filesystem::temp_directory_path() / "rdsma_sample.csv";
    RdsSample s;
    s.records = {{7, 3, 1, 1.0, 0, {}}, {9, 2, 0, {}, 1, 7}};
    write_rds_sample(s, path);
    RdsSample r = read_rds_sample(path);
    REQUIRE(r.size() == 2);
    CHECK(r.records[0].recruiter == std::nullopt);
    CHECK(r.records[1].recruiter == 7);
    CHECK(r.records[1].infected_alters == std::nullopt);
    CHECK(r.records[0].infected_alters == 1.0);
    CHECK(r.seed_ids == std::vector<int>{7});
    std::ofstream(path) << "id,recruiter_id,degree,infected,wave,cross_alters\n1,,2,3,0,\n";
    CHECK_THROWS(read_rds_sample(path));
    std::filesystem::remove(path);
}
