#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "interplab/errors.hpp"
#include "interplab/gap.hpp"
#include "interplab/interpolators.hpp"
#include "interplab/report.hpp"

namespace {

using namespace interplab;

LambdaSchedule schedule_of(const std::string& name) {
    if (name == "sqrt") return LambdaSchedule::sqrt_n;
    if (name == "log") return LambdaSchedule::log_n;
    if (name == "pow08") return LambdaSchedule::pow08;
    throw usage_error("unknown lambda schedule: " + name);
}

// Small deterministic instance generator for the self-check suite.
ProblemSpec random_tiny_spec(RngStream& s, index_t& n_out) {
    ProblemSpec sp;
    sp.d_S = static_cast<index_t>(s.next_u64() % 3);  // 0, 1, 2
    n_out = sp.d_S + 1 + static_cast<index_t>(s.next_u64() % 3);
    index_t excess = 1 + static_cast<index_t>(s.next_u64() % 2);
    sp.d_J = n_out - sp.d_S + excess;  // kernel dim exactly `excess`, within oracle reach
    sp.lambda = 0.5 + 2.5 * s.uniform();
    sp.sigma2 = 0.5 + s.uniform();
    sp.w_star_S = dvec(sp.d_S);
    for (index_t i = 0; i < sp.d_S; ++i) sp.w_star_S(i) = s.normal();
    return sp;
}

std::vector<SelfCheckRow> run_selfcheck(uint64_t seed) {
    std::vector<SelfCheckRow> rows;
    auto push = [&](const std::string& name, bool pass, const std::string& detail) {
        rows.push_back({name, pass, detail});
    };

    // Dual solver against direct enumeration of the feasible set.
    {
        RngStream s = RngStream::substream(seed, 1);
        double worst = 0.0;
        for (int rep = 0; rep < 24; ++rep) {
            index_t n = 0;
            ProblemSpec sp = random_tiny_spec(s, n);
            SampleSet S = sample_dataset(sp, n, s);
            PopulationModel model = PopulationModel::from_spec(sp);
            Predictor mn = min_norm(S);
            double B = mn.w.norm() * (1.0 + 1.5 * s.uniform());
            GapResult g = worst_case_gap(S, model, mn.w, B, GapMode::dense);
            double oracle = brute_force_gap_oracle(S, model, mn.w, B);
            worst = std::max(worst, std::abs(g.value - oracle) / std::abs(oracle));
        }
        push("dual-vs-oracle", worst <= 1e-6, "max rel err " + format_double(worst));
    }

    // At budget exactly ||w_mn|| the worst case collapses to its risk.
    {
        RngStream s = RngStream::substream(seed, 2);
        double worst = 0.0;
        for (int rep = 0; rep < 24; ++rep) {
            index_t n = 0;
            ProblemSpec sp = random_tiny_spec(s, n);
            SampleSet S = sample_dataset(sp, n, s);
            PopulationModel model = PopulationModel::from_spec(sp);
            Predictor mn = min_norm(S);
            GapResult g = worst_case_gap(S, model, mn.w, mn.w.norm(), GapMode::dense);
            double ld = population_risk(mn.w, model);
            worst = std::max(worst, std::abs(g.value - ld) / ld);
        }
        push("min-norm-budget-identity", worst <= 1e-10, "max rel err " + format_double(worst));
    }

    // Structured two-valued path against the dense eigendecomposition path.
    {
        RngStream s = RngStream::substream(seed, 3);
        double worst = 0.0;
        for (int rep = 0; rep < 12; ++rep) {
            ProblemSpec sp;
            sp.d_S = 2;
            sp.d_J = 40;
            sp.lambda = 1.0 + 3.0 * s.uniform();
            sp.sigma2 = 1.0;
            sp.w_star_S = dvec(2);
            sp.w_star_S << s.normal(), s.normal();
            index_t n = 12;
            SampleSet S = sample_dataset(sp, n, s);
            PopulationModel model = PopulationModel::from_spec(sp);
            Predictor mn = min_norm(S);
            double B = 1.4 * mn.w.norm();
            GapResult a = worst_case_gap(S, model, mn.w, B, GapMode::dense);
            GapResult b = worst_case_gap(S, model, mn.w, B, GapMode::matrix_free);
            worst = std::max(worst, std::abs(a.value - b.value) / a.value);
        }
        push("two-valued-vs-dense", worst <= 1e-8, "max rel err " + format_double(worst));
    }

    // General-covariance iterative path against the dense path.
    {
        RngStream s = RngStream::substream(seed, 4);
        double worst = 0.0;
        for (int rep = 0; rep < 8; ++rep) {
            ProblemSpec sp;
            sp.d_S = 0;
            sp.d_J = 36;
            sp.lambda = static_cast<double>(sp.d_J);
            sp.sigma2 = 1.0;
            index_t n = 9;
            SampleSet S = sample_dataset(sp, n, s);
            dvec diag(sp.p());
            for (index_t i = 0; i < sp.p(); ++i) diag(i) = 0.5 + 1.5 * s.uniform();
            dvec ws = dvec::Zero(sp.p());
            PopulationModel model = PopulationModel::general(diag, ws, 1.0);
            Predictor mn = min_norm(S);
            double B = 1.5 * mn.w.norm();
            GapResult a = worst_case_gap(S, model, mn.w, B, GapMode::dense);
            GapResult b = worst_case_gap(S, model, mn.w, B, GapMode::matrix_free);
            worst = std::max(worst, std::abs(a.value - b.value) / a.value);
        }
        push("iterative-vs-dense", worst <= 1e-6, "max rel err " + format_double(worst));
    }

    // Dual tightness ratio bracket and the orthogonality identities.
    {
        RngStream s = RngStream::substream(seed, 5);
        double gmin = 1e300, gmax = -1e300, worst_resid = 0.0;
        for (int rep = 0; rep < 24; ++rep) {
            ProblemSpec sp;
            sp.d_S = 1 + static_cast<index_t>(s.next_u64() % 2);
            sp.d_J = 30;
            sp.lambda = 1.0 + 3.0 * s.uniform();
            sp.sigma2 = 0.5 + s.uniform();
            sp.w_star_S = dvec(sp.d_S);
            for (index_t i = 0; i < sp.d_S; ++i) sp.w_star_S(i) = s.normal();
            index_t n = 10;
            SampleSet S = sample_dataset(sp, n, s);
            PopulationModel model = PopulationModel::from_spec(sp);
            MrDecomposition d = gap_decomposition_mr(S, model, GapMode::dense);
            if (!d.degenerate) {
                gmin = std::min(gmin, d.gamma_n);
                gmax = std::max(gmax, d.gamma_n);
            }
            worst_resid = std::max(worst_resid, d.orthogonality_residual);
        }
        bool ok = gmin >= 1.0 - 1e-9 && gmax <= 4.0 + 1e-9 && worst_resid <= 1e-8;
        push("tightness-ratio-bracket", ok,
             "gamma in [" + format_double(gmin) + ", " + format_double(gmax) + "], resid " +
                 format_double(worst_resid));
    }

    // Remainder bracket of the ball decomposition.
    {
        RngStream s = RngStream::substream(seed, 6);
        bool ok = true;
        double worst = 0.0;
        for (int rep = 0; rep < 24; ++rep) {
            index_t n = 0;
            ProblemSpec sp = random_tiny_spec(s, n);
            SampleSet S = sample_dataset(sp, n, s);
            PopulationModel model = PopulationModel::from_spec(sp);
            Predictor mn = min_norm(S);
            BallDecomposition b =
                gap_decomposition_ball(S, model, 1.5 * mn.w.norm(), GapMode::dense);
            double slack = 1e-9 * (1.0 + std::abs(b.gap.value));
            if (b.remainder < -slack || b.remainder > b.remainder_bound + slack) ok = false;
            worst = std::max(worst, b.remainder - b.remainder_bound);
        }
        push("remainder-bracket", ok, "max overshoot " + format_double(worst));
    }

    // Monte Carlo determinism across worker counts.
    {
        auto task = [](RngStream& s) { return s.normal() * s.normal() + s.uniform(); };
        McEstimate a = run_monte_carlo(task, 64, seed, 1);
        McEstimate b = run_monte_carlo(task, 64, seed, 8);
        bool ok = a.mean == b.mean && a.std_error == b.std_error;
        push("mc-thread-determinism", ok,
             ok ? "bitwise equal across 1 and 8 workers" : "mismatch across worker counts");
    }

    return rows;
}

void apply_w_star_generator(RunConfig& cfg, const std::string& gen) {
    if (!cfg.w_star.empty()) return;
    cfg.w_star.assign(static_cast<size_t>(cfg.d_s), 0.0);
    if (gen == "zeros") return;
    double v = 1.0;
    if (gen == "unit" && cfg.d_s > 0) v = 1.0 / std::sqrt(static_cast<double>(cfg.d_s));
    if (gen == "ones" || gen == "unit")
        for (auto& x : cfg.w_star) x = v;
}

void check_ascending(const std::vector<index_t>& grid, const std::string& name) {
    if (grid.empty()) throw usage_error(name + " must not be empty");
    for (size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw usage_error(name + " must be strictly ascending at entry " +
                              std::to_string(i));
}

void resolve_output(RunConfig& cfg) {
    if (cfg.out_path.empty()) return;
    const char* dir = std::getenv("INTERPLAB_OUTDIR");
    if (dir && *dir && cfg.out_path.front() != '/')
        cfg.out_path = std::string(dir) + "/" + cfg.out_path;
}

void emit(const RecordTable& table, const RunConfig& cfg, double seconds) {
    std::cout << (cfg.format == "json" ? json_string(table) : csv_string(table));
    if (!cfg.out_path.empty()) {
        write_report(table, cfg);
        std::cerr << "# wrote " << cfg.out_path << " and " << cfg.out_path
                  << ".manifest.json\n";
    }
    std::cerr << "# " << cfg.command << ": " << table.size() << " record(s) in "
              << format_double(seconds) << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Worst-case generalization gap laboratory for norm-ball interpolators"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read option defaults from a config file");

    RunConfig cfg;
    std::string w_star_gen = "zeros";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", cfg.seed, "master RNG seed")->capture_default_str();
        cmd->add_option("--trials", cfg.trials, "Monte Carlo trials")
            ->check(CLI::Range(static_cast<index_t>(2), static_cast<index_t>(1000000)))
            ->capture_default_str();
        cmd->add_option("--threads", cfg.threads, "worker threads (0 = hardware)")
            ->check(CLI::Range(0, 1024))
            ->capture_default_str();
        cmd->add_option("--out", cfg.out_path, "output file path (default: stdout only)");
        cmd->add_option("--format", cfg.format, "output format")
            ->check(CLI::IsMember({"csv", "json"}))
            ->capture_default_str();
    };
    auto add_spec = [&](CLI::App* cmd) {
        cmd->add_option("--d-s", cfg.d_s, "signal dimension")
            ->check(CLI::Range(static_cast<index_t>(0), static_cast<index_t>(100000)))
            ->capture_default_str();
        cmd->add_option("--d-j", cfg.d_j, "junk dimension (0 = 10 n)")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--lambda", cfg.lambda, "total junk variance (0 = schedule value)")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--schedule", cfg.schedule, "lambda_n schedule")
            ->check(CLI::IsMember({"sqrt", "log", "pow08"}))
            ->capture_default_str();
        cmd->add_option("--sigma2", cfg.sigma2, "noise variance")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        cmd->add_option("--w-star", cfg.w_star, "signal coefficients, comma separated")
            ->delimiter(',');
        cmd->add_option("--w-star-gen", w_star_gen, "generator when --w-star is absent")
            ->check(CLI::IsMember({"zeros", "ones", "unit"}))
            ->capture_default_str();
    };

    auto* gap_cmd = app.add_subcommand("gap", "worst-case gap for one sampled instance");
    add_common(gap_cmd);
    add_spec(gap_cmd);
    gap_cmd->add_option("--n", cfg.n, "sample size")->check(CLI::PositiveNumber);
    gap_cmd->add_option("--b-factor,--B-factor", cfg.b_factor, "budget as a multiple of ||w_mn||")
        ->check(CLI::Range(1.0, 1e6))
        ->capture_default_str();

    auto* alpha_cmd = app.add_subcommand("alpha-sweep", "worst-case gap vs budget inflation");
    add_common(alpha_cmd);
    add_spec(alpha_cmd);
    alpha_cmd->add_option("--n", cfg.n, "sample size")->check(CLI::PositiveNumber);
    alpha_cmd->add_option("--alphas", cfg.alphas, "budget factors, comma separated")
        ->delimiter(',');

    auto* flip_cmd = app.add_subcommand("flip", "junk-negated adversarial interpolator");
    add_common(flip_cmd);
    add_spec(flip_cmd);
    flip_cmd->add_option("--n", cfg.n, "sample size")->check(CLI::PositiveNumber);

    auto* norms_cmd = app.add_subcommand("norms", "interpolator norm limits vs d_J");
    add_common(norms_cmd);
    add_spec(norms_cmd);
    norms_cmd->add_option("--n", cfg.n, "sample size")->check(CLI::PositiveNumber);
    norms_cmd->add_option("--d-j-grid", cfg.d_j_grid, "junk dimensions, comma separated")
        ->delimiter(',');

    auto* dd_cmd = app.add_subcommand("double-descent", "minimal-risk interpolator risk vs p");
    add_common(dd_cmd);
    dd_cmd->add_option("--n", cfg.n, "sample size")->check(CLI::PositiveNumber);
    dd_cmd->add_option("--sigma2", cfg.sigma2, "noise variance")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    dd_cmd->add_option("--p-grid", cfg.p_grid, "feature dimensions, comma separated")
        ->delimiter(',');

    auto* sweep_cmd = app.add_subcommand("sweep-n", "consistency and divergence across n");
    add_common(sweep_cmd);
    add_spec(sweep_cmd);
    sweep_cmd->add_option("--n-grid", cfg.n_grid, "sample sizes, comma separated")
        ->delimiter(',');
    sweep_cmd->add_option("--d-j-factor", cfg.d_j_factor, "junk dimension as a multiple of n")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* ridge_cmd = app.add_subcommand("ridge-equiv", "min-norm signal block vs explicit ridge");
    add_common(ridge_cmd);
    add_spec(ridge_cmd);
    ridge_cmd->add_option("--n", cfg.n, "sample size")->check(CLI::PositiveNumber);
    ridge_cmd->add_option("--d-j-grid", cfg.d_j_grid, "junk dimensions, comma separated")
        ->delimiter(',');

    auto* self_cmd = app.add_subcommand("selfcheck", "dual-vs-oracle suite and identity checks");
    add_common(self_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        cfg.command = sub->get_name();
        resolve_output(cfg);

        const bool wants_spec = cfg.command == "gap" || cfg.command == "alpha-sweep" ||
                                cfg.command == "flip" || cfg.command == "norms" ||
                                cfg.command == "ridge-equiv";
        if (wants_spec) {
            if (cfg.d_j == 0) cfg.d_j = 10 * cfg.n;
            if (cfg.lambda <= 0.0) cfg.lambda = lambda_of_n(schedule_of(cfg.schedule), cfg.n);
            apply_w_star_generator(cfg, w_star_gen);
        }
        if (cfg.command == "sweep-n") apply_w_star_generator(cfg, w_star_gen);

        auto t0 = std::chrono::steady_clock::now();
        RecordTable table;
        int exit_code = 0;

        if (cfg.command == "gap") {
            ProblemSpec sp = cfg.to_problem_spec();
            sp.validate();
            RngStream stream = RngStream::substream(cfg.seed, 0);
            SampleSet S = sample_dataset(sp, cfg.n, stream);
            PopulationModel model = PopulationModel::from_spec(sp);
            Predictor mn = min_norm(S);
            BallDecomposition ball =
                gap_decomposition_ball(S, model, cfg.b_factor * mn.w.norm(), GapMode::auto_select);
            table = gap_records(ball, cfg);
        } else if (cfg.command == "alpha-sweep") {
            if (cfg.alphas.empty()) cfg.alphas = {1.0, 1.5, 2.0};
            ProblemSpec sp = cfg.to_problem_spec();
            sp.validate();
            table = alpha_records(
                alpha_sweep(sp, cfg.n, cfg.alphas, cfg.trials, cfg.seed, cfg.threads), cfg);
        } else if (cfg.command == "flip") {
            ProblemSpec sp = cfg.to_problem_spec();
            sp.validate();
            table = flip_records(flip_experiment(sp, cfg.n, cfg.trials, cfg.seed, cfg.threads),
                                 cfg);
        } else if (cfg.command == "norms") {
            if (cfg.d_j_grid.empty()) cfg.d_j_grid = {100, 1000, 10000};
            check_ascending(cfg.d_j_grid, "--d-j-grid");
            ProblemSpec sp = cfg.to_problem_spec();
            sp.d_J = cfg.d_j_grid.back();
            sp.validate();
            table = norm_records(
                norm_limit_check(sp, cfg.n, cfg.d_j_grid, cfg.trials, cfg.seed, cfg.threads),
                cfg);
        } else if (cfg.command == "double-descent") {
            if (cfg.p_grid.empty())
                cfg.p_grid = {cfg.n + 2, 2 * cfg.n, 4 * cfg.n, 10 * cfg.n};
            check_ascending(cfg.p_grid, "--p-grid");
            table = descent_records(double_descent_curve(cfg.n, cfg.p_grid, cfg.sigma2,
                                                         cfg.trials, cfg.seed, cfg.threads),
                                    cfg);
        } else if (cfg.command == "sweep-n") {
            if (cfg.n_grid.empty()) cfg.n_grid = {50, 100, 200, 400};
            check_ascending(cfg.n_grid, "--n-grid");
            ProblemSpec tmpl = cfg.to_problem_spec();
            tmpl.d_J = 0;  // per-n resolution inside the sweep
            tmpl.lambda = 0.0;
            table = sweep_records(
                consistency_divergence_sweep(tmpl, cfg.n_grid, schedule_of(cfg.schedule),
                                             cfg.d_j_factor, cfg.trials, cfg.seed, cfg.threads),
                cfg);
        } else if (cfg.command == "ridge-equiv") {
            if (cfg.d_j_grid.empty()) cfg.d_j_grid = {100, 1000, 10000};
            check_ascending(cfg.d_j_grid, "--d-j-grid");
            ProblemSpec sp = cfg.to_problem_spec();
            sp.d_J = cfg.d_j_grid.back();
            sp.validate();
            table = ridge_records(ridge_equivalence_curve(sp, cfg.n, cfg.d_j_grid, cfg.trials,
                                                          cfg.seed, cfg.threads),
                                  cfg);
        } else if (cfg.command == "selfcheck") {
            std::vector<SelfCheckRow> checks = run_selfcheck(cfg.seed);
            table = selfcheck_records(checks, cfg);
            for (const auto& c : checks)
                if (!c.pass) exit_code = 3;
        } else {
            throw usage_error("unknown command: " + cfg.command);
        }

        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        emit(table, cfg, seconds);
        return exit_code;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const precondition_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
