#include "rdsma/bootstrap.hpp"
#include "rdsma/csv.hpp"
#include "rdsma/estimate.hpp"
#include "rdsma/harness.hpp"
#include "rdsma/netgen.hpp"
#include "rdsma/network.hpp"
#include "rdsma/rdssim.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace rdsma;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out;
};

struct DesignFlags {
    int n = 500;
    int seeds = 10;
    std::string seed_mode = "all";
    int coupons = 2;
    double referral_weight = 1.0;
    bool no_reseed = false;

    void add(CLI::App* cmd) {
        cmd->add_option("--n", n, "Target sample size")->capture_default_str();
        cmd->add_option("--seeds", seeds, "Number of seeds")->capture_default_str();
        cmd->add_option("--seed-mode", seed_mode, "Seed selection")
            ->check(CLI::IsMember({"all", "infected"}))
            ->capture_default_str();
        cmd->add_option("--coupons", coupons, "Coupons per respondent")->capture_default_str();
        cmd->add_option("--referral-weight", referral_weight, "Relative referral weight of infected alters")
            ->capture_default_str();
        cmd->add_flag("--no-reseed", no_reseed, "Stop at die-out instead of adding a seed");
    }

    SamplingDesign design() const {
        SamplingDesign d;
        d.n = n;
        d.n_seeds = seeds;
        d.seed_mode = seed_mode == "infected" ? SeedMode::pps_degree_infected_only : SeedMode::pps_degree_all;
        d.coupons = coupons;
        d.referral_weight_infected = referral_weight;
        d.reseed_on_dieout = !no_reseed;
        d.validate();
        return d;
    }
};

struct MaFlags {
    std::string input;
    int pop_size = 0;
    int iters = 3;
    int m1 = 25;
    int m2 = 20;
    std::size_t tetrad_n = 100000;
    std::string offspring = "empirical";
    int coupons = 2;

    void add(CLI::App* cmd) {
        cmd->add_option("--in", input, "RDS sample CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("--pop-size", pop_size, "Assumed population size");
        cmd->add_option("--ma-iters", iters, "Iterations of the weight update")->capture_default_str();
        cmd->add_option("--m1", m1, "Networks simulated per iteration")->capture_default_str();
        cmd->add_option("--m2", m2, "RDS samples per simulated network")->capture_default_str();
        cmd->add_option("--tetrad-n", tetrad_n, "Tetrads used to fit the working model")->capture_default_str();
        cmd->add_option("--offspring", offspring, "Recruitment rule for simulated samples")
            ->check(CLI::IsMember({"fixed", "empirical"}))
            ->capture_default_str();
        cmd->add_option("--coupons", coupons, "Coupons per respondent in simulated samples (--offspring fixed)")->capture_default_str();
    }

    MaConfig config(const RdsSample& sample, unsigned threads) const {
        if (pop_size <= 0)
            throw CLI::ValidationError("--pop-size", "required for the ma estimator");
        MaConfig cfg;
        cfg.h = iters;
        cfg.M1 = m1;
        cfg.M2 = m2;
        cfg.population_size = pop_size;
        cfg.natural.tetrad_count = tetrad_n;
        cfg.empirical_offspring = offspring == "empirical";
        cfg.threads = threads;
        cfg.validate(sample.size());
        return cfg;
    }

    SamplingDesign design_template() const {
        SamplingDesign d;
        d.coupons = coupons;
        return d;
    }
};

fs::path require_out(const Globals& g) {
    if (g.out.empty())
        throw CLI::RequiredError("--out");
    return g.out;
}

void write_point(double value, const fs::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "record,degree,infected,value\nmu_hat,,," << csv::format_double(value) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-assisted estimation for respondent-driven sampling"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output path");

    MixingSpec mixing;
    auto* gen = app.add_subcommand("gen-net", "Generate a population network (writes nodes.csv and edges.csv)");
    gen->add_option("--N", mixing.N, "Population size")->capture_default_str();
    gen->add_option("--prevalence", mixing.prevalence, "Proportion infected")->capture_default_str();
    gen->add_option("--mean-degree", mixing.mean_degree, "Mean degree")->capture_default_str();
    gen->add_option("--homophily", mixing.homophily_R, "Homophily ratio R")->capture_default_str();
    gen->add_option("--activity", mixing.activity_w, "Activity ratio w")->capture_default_str();

    std::string net_dir;
    DesignFlags design_flags;
    auto* sample_cmd = app.add_subcommand("sample", "Draw one RDS sample from a network");
    sample_cmd->add_option("--net", net_dir, "Directory with nodes.csv and edges.csv")
        ->required()
        ->check(CLI::ExistingDirectory);
    design_flags.add(sample_cmd);

    MaFlags est_flags;
    std::string estimator = "ma";
    auto* est = app.add_subcommand("estimate", "Estimate prevalence from an RDS sample");
    est->add_option("--estimator", estimator, "Estimator")
        ->check(CLI::IsMember({"mean", "vh", "ma"}))
        ->capture_default_str();
    est_flags.add(est);

    MaFlags boot_flags;
    BootstrapConfig boot_cfg;
    std::string boot_mode = "fast";
    auto* boot = app.add_subcommand("bootstrap", "MA estimate with parametric-bootstrap uncertainty (--out is a directory)");
    boot_flags.add(boot);
    boot->add_option("--B", boot_cfg.B, "Bootstrap replicates")->capture_default_str();
    boot->add_option("--mode", boot_mode, "Re-estimation per replicate")
        ->check(CLI::IsMember({"fast", "full"}))
        ->capture_default_str();
    boot->add_option("--levels", boot_cfg.ci_levels, "Interval levels")->delimiter(',');

    std::string config_path;
    std::string timing_path;
    auto* study = app.add_subcommand("study", "Run a simulation study from a config file");
    study->add_option("--config", config_path, "Study config")->required()->check(CLI::ExistingFile);
    study->add_option("--timing", timing_path, "Optional CSV of wall-clock seconds per row");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            Rng rng = make_rng(g.seed, {});
            const fs::path dir = require_out(g);
            fs::create_directories(dir);
            write_network(gen_bernoulli_mixing(mixing, rng), dir);
        } else if (*sample_cmd) {
            const Network net = read_network(net_dir);
            const SamplingDesign d = design_flags.design();
            Rng rng = make_rng(g.seed, {});
            const RdsSample s = run_rds(net, d, select_seeds(net, d, rng), rng);
            if (s.short_sample)
                std::cerr << "warning: recruitment died out after " << s.size() << " respondents\n";
            write_rds_sample(s, require_out(g));
        } else if (*est) {
            const RdsSample s = read_rds_sample(est_flags.input);
            const fs::path out = require_out(g);
            if (estimator == "mean") {
                write_point(naive_mean(s), out);
            } else if (estimator == "vh") {
                write_point(vh_estimate(s), out);
            } else {
                const MaResult fit = ma_estimate(s, est_flags.design_template(), est_flags.config(s, g.threads), g.seed);
                write_ma_result(fit, out);
                fs::path diag = out;
                diag.replace_extension(".diagnostics.csv");
                write_ma_diagnostics(fit, diag);
            }
        } else if (*boot) {
            const RdsSample s = read_rds_sample(boot_flags.input);
            const fs::path dir = require_out(g);
            fs::create_directories(dir);
            boot_cfg.mode = boot_mode == "full" ? BootstrapMode::full : BootstrapMode::fast;
            const MaConfig cfg = boot_flags.config(s, g.threads);
            const SamplingDesign tmpl = boot_flags.design_template();
            const MaResult fit = ma_estimate(s, tmpl, cfg, derive_seed(g.seed, {0}));
            write_ma_result(fit, dir / "estimate.csv");
            write_ma_diagnostics(fit, dir / "diagnostics.csv");
            const BootstrapResult res = parametric_bootstrap(fit, tmpl, boot_cfg, cfg, derive_seed(g.seed, {1}), g.threads);
            write_bootstrap_draws(res, dir / "draws.csv");
            write_bootstrap_summary(res, dir / "summary.csv");
            if (res.failures > 0)
                std::cerr << "warning: " << res.failures << " bootstrap replicates failed\n";
        } else if (*study) {
            StudySpec spec = read_study_config(config_path);
            if (app.count("--seed") > 0)
                spec.master_seed = g.seed;
            const StudyResult res = spec.sensitivity_pop_sizes.empty()
                                        ? run_study(spec, g.threads)
                                        : run_sensitivity_N(spec, spec.sensitivity_pop_sizes, g.threads);
            for (const auto& msg : res.skipped)
                std::cerr << "skipped cell " << msg << '\n';
            write_study_result(res, require_out(g));
            if (!timing_path.empty())
                write_study_timing(res, timing_path);
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
