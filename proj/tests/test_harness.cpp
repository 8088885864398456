#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rdsma/harness.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rdsma;

namespace {

const char* small_config = R"(
# small grid for tests
network.N = 300
network.mean_degree = 6
network.homophily_R = 1, 5
design.n = 150
design.n_seeds = 5
design.seed_mode = infected
replications = 4
ma.M1 = 3
ma.M2 = 3
ma.tetrad_n = 3000
ma.burn_in_per_edge = 5
master_seed = 77
)";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_of(const StudyResult& r) {
    auto path = std::filesystem::temp_directory_path() / "rdsma_study_test.csv";
    write_study_result(r, path);
    return slurp(path);
}

} // namespace

TEST_CASE("config parsing") {
    StudySpec s = parse_study_config(small_config);
    CHECK(s.networks.size() == 2);
    CHECK(s.networks[1].homophily_R == 5);
    CHECK(s.networks[0].N == 300);
    CHECK(s.designs.size() == 1);
    CHECK(s.designs[0].seed_mode == SeedMode::pps_degree_infected_only);
    CHECK(s.replications == 4);
    CHECK(s.master_seed == 77);
    CHECK(s.ma.natural.tetrad_count == 3000);
    CHECK(s.ma.population_size == 0);
    CHECK(!s.bootstrap);
    CHECK(s.estimators.size() == 3);

    StudySpec b = parse_study_config("bootstrap.B = 50\nbootstrap.mode = full\nbootstrap.levels = 0.8\n"
                                     "estimators = ma\ndesign.n_seeds = 4, 8\ndesign.referral_weight_infected = 1, 1.2");
    REQUIRE(b.bootstrap);
    CHECK(b.bootstrap->B == 50);
    CHECK(b.bootstrap->mode == BootstrapMode::full);
    CHECK(b.bootstrap->ci_levels == std::vector<double>{0.8});
    CHECK(b.designs.size() == 4);
    CHECK(b.estimators == std::vector<Estimator>{Estimator::ma});

    CHECK_THROWS_WITH_AS(parse_study_config("network.N = 10\nnetwork.colour = 3\n"),
                         doctest::Contains("line 2: unknown key 'network.colour'"), std::invalid_argument);
    CHECK_THROWS_AS(parse_study_config("replications = many"), std::invalid_argument);
    CHECK_THROWS_AS(parse_study_config("replications 5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_study_config("replications = 0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_study_config("estimators = mean, sh"), std::invalid_argument);
    CHECK_THROWS_AS(parse_study_config("design.seed_mode = random"), std::invalid_argument);
    CHECK_THROWS_AS(parse_study_config("bootstrap.B = 1"), std::invalid_argument);
}

TEST_CASE("run_study") {
    const StudySpec spec = parse_study_config(small_config);
    const StudyResult one = run_study(spec, 1);
    REQUIRE(one.rows.size() == 6);
    CHECK(one.skipped.empty());
    for (const auto& r : one.rows) {
        CHECK(r.replications + r.failures == 4);
        CHECK(r.bias == doctest::Approx(r.mean_estimate - r.true_prevalence));
        CHECK(r.true_prevalence == doctest::Approx(0.2));
        CHECK(r.observed_se >= 0);
    }
    CHECK(one.rows[0].estimator == Estimator::mean);
    CHECK(one.rows[2].estimator == Estimator::ma);
    CHECK(one.rows[2].assumed_pop_size == 300);

    SUBCASE("byte-identical across thread counts") {
        CHECK(csv_of(one) == csv_of(run_study(spec, 3)));
    }
    SUBCASE("infeasible cells are skipped without shifting other cells' seeds") {
        StudySpec a = spec;
        a.networks[0].mean_degree = 500;
        const StudyResult r = run_study(a, 1);
        CHECK(r.skipped.size() == 1);
        REQUIRE(r.rows.size() == 3);
        for (int c = 0; c < 3; ++c)
            CHECK(r.rows[c].mean_estimate == one.rows[3 + c].mean_estimate);
    }
}

TEST_CASE("bootstrap columns") {
    StudySpec spec = parse_study_config(std::string(small_config) + "bootstrap.B = 10\nestimators = vh, ma\n");
    spec.replications = 2;
    spec.networks.resize(1);
    const StudyResult r = run_study(spec, 1);
    REQUIRE(r.rows.size() == 2);
    CHECK(!r.rows[0].mean_bootstrap_se);
    REQUIRE(r.rows[1].mean_bootstrap_se);
    REQUIRE(r.rows[1].coverage.size() == 2);
    for (const auto& [level, c] : r.rows[1].coverage)
        CHECK((c >= 0 && c <= 1));
    const std::string csv = csv_of(r);
    CHECK(csv.find("coverage_0.95,coverage_0.9\n") != std::string::npos);
}

TEST_CASE("run_sensitivity_N") {
    StudySpec spec = parse_study_config(small_config);
    spec.networks.resize(1);
    spec.networks[0].homophily_R = 5;
    CHECK_THROWS_AS(run_sensitivity_N(spec, {100, 300}, 1), std::invalid_argument);

    const StudyResult r = run_sensitivity_N(spec, {300, 300, 150}, 1);
    REQUIRE(r.rows.size() == 3);
    // identical samples and streams: only the assumed size differs
    CHECK(r.rows[0].mean_estimate == r.rows[1].mean_estimate);
    CHECK(r.rows[2].assumed_pop_size == 150);

    spec.estimators = {Estimator::mean};
    const StudyResult naive = run_study(spec, 1);
    const double mean = naive.rows[0].mean_estimate;
    CHECK(std::abs(r.rows[2].mean_estimate - mean) < std::abs(r.rows[0].mean_estimate - mean));
}

TEST_CASE("shipped configs parse and validate") {
    int seen = 0;
    for (const auto& entry : std::filesystem::directory_iterator(RDSMA_CONFIG_DIR)) {
        if (entry.path().extension() != ".conf")
            continue;
        CAPTURE(entry.path().string());
        StudySpec s;
        CHECK_NOTHROW(s = read_study_config(entry.path().string()));
        CHECK_NOTHROW(s.validate());
        ++seen;
    }
    CHECK(seen >= 4);
}
