#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "interplab/errors.hpp"
#include "interplab/report.hpp"

using namespace interplab;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(static_cast<bool>(is));
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// Byte-compares `text` against the checked-in golden file; with
// INTERPLAB_REGEN_GOLDEN=1 it rewrites the golden instead.  A missing golden
// is a failure, never a silent pass.
void golden_compare(const std::string& name, const std::string& text) {
    const char* dir = std::getenv("INTERPLAB_GOLDEN_DIR");
#ifdef INTERPLAB_GOLDEN_DIR
    if (!dir) dir = INTERPLAB_GOLDEN_DIR;
#endif
    REQUIRE_MESSAGE(dir != nullptr, "INTERPLAB_GOLDEN_DIR is not set");
    fs::path p = fs::path(dir) / name;
    const char* regen = std::getenv("INTERPLAB_REGEN_GOLDEN");
    if (regen && std::string(regen) == "1") {
        std::ofstream os(p, std::ios::binary | std::ios::trunc);
        REQUIRE(static_cast<bool>(os));
        os << text;
        return;
    }
    REQUIRE_MESSAGE(fs::exists(p), "missing golden file: " << p.string());
    CHECK_MESSAGE(read_file(p) == text, "schema drift against " << p.string());
}

McEstimate est(double mean, double se) {
    McEstimate e;
    e.mean = mean;
    e.std_error = se;
    e.trials = 16;
    e.seed = 7;
    return e;
}

RunConfig base_config(const std::string& command) {
    RunConfig cfg;
    cfg.command = command;
    cfg.n = 20;
    cfg.d_s = 1;
    cfg.d_j = 200;
    cfg.lambda = 4.5;
    cfg.sigma2 = 1.0;
    cfg.b_factor = 1.5;
    cfg.trials = 16;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("double formatting is shortest round-trip") {
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(-2.25) == "-2.25");
    CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");

    RngStream s(31);
    for (int i = 0; i < 200; ++i) {
        double x = s.normal() * std::pow(10.0, static_cast<double>(i % 40) - 20.0);
        CHECK(std::stod(format_double(x)) == x);
    }
}

TEST_CASE("csv escaping and value rendering") {
    RunRecord r;
    r.cells = {{"name", std::string("a,b")},
               {"quote", std::string("say \"hi\"")},
               {"line", std::string("x\ny")},
               {"flag", true},
               {"off", false},
               {"num", 2.5},
               {"count", static_cast<std::int64_t>(12)}};
    std::string csv = csv_string({r});
    CHECK(csv ==
          "name,quote,line,flag,off,num,count\n"
          "\"a,b\",\"say \"\"hi\"\"\",\"x\ny\",true,false,2.5,12\n");
}

TEST_CASE("csv rejects mixed schemas") {
    RunRecord a, b;
    a.cells = {{"x", 1.0}};
    b.cells = {{"y", 1.0}};
    CHECK_THROWS_AS(csv_string({a, b}), error);
    b.cells = {{"x", 1.0}, {"y", 2.0}};
    CHECK_THROWS_AS(csv_string({a, b}), error);
    CHECK(csv_string({}) == "");
}

TEST_CASE("json output preserves column order and round-trips") {
    RunRecord r;
    r.cells = {{"zeta", 1.5}, {"alpha", std::string("s")}, {"mid", true}};
    std::string js = json_string({r, r});
    ojson parsed = ojson::parse(js);
    REQUIRE(parsed.is_array());
    REQUIRE(parsed.size() == 2);
    std::vector<std::string> keys;
    for (auto it = parsed[0].begin(); it != parsed[0].end(); ++it) keys.push_back(it.key());
    REQUIRE(keys.size() == 3);
    CHECK(keys[0] == "zeta");
    CHECK(keys[1] == "alpha");
    CHECK(keys[2] == "mid");
    CHECK(parsed[1]["zeta"].get<double>() == 1.5);
    CHECK(js.back() == '\n');
}

TEST_CASE("manifest carries the full configuration and no timing") {
    RunConfig cfg = base_config("alpha-sweep");
    cfg.alphas = {1.0, 2.0};
    cfg.threads = 3;
    cfg.out_path = "out.csv";
    ojson m = manifest_json(cfg);
    CHECK(m["tool"] == "interplab");
    CHECK(m["command"] == "alpha-sweep");
    CHECK(m["seed"].get<uint64_t>() == 7);
    CHECK(m["config"]["n"].get<int>() == 20);
    CHECK(m["config"]["alphas"].size() == 2);
    CHECK(m["config"]["threads"].get<int>() == 3);
    CHECK(m["config"]["output"] == "out.csv");
    CHECK_FALSE(m.contains("timestamp"));
    CHECK_FALSE(m.contains("wall_seconds"));
    std::string once = m.dump(2);
    CHECK(once == manifest_json(cfg).dump(2));
}

TEST_CASE("atomic writes leave no partial artifacts") {
    fs::path dir = fs::temp_directory_path() / "interplab_report_test";
    fs::create_directories(dir);
    fs::path target = dir / "data.csv";

    write_text_atomic(target.string(), "a,b\n1,2\n");
    CHECK(read_file(target) == "a,b\n1,2\n");
    CHECK_FALSE(fs::exists(target.string() + ".tmp"));

    write_text_atomic(target.string(), "other\n");
    CHECK(read_file(target) == "other\n");

    fs::path missing = dir / "no_such_subdir" / "data.csv";
    CHECK_THROWS_AS(write_text_atomic(missing.string(), "x"), io_error);
    CHECK_FALSE(fs::exists(missing));
    fs::remove_all(dir);
}

TEST_CASE("write_report emits data plus manifest, byte-stable on rerun") {
    fs::path dir = fs::temp_directory_path() / "interplab_report_rerun";
    fs::create_directories(dir);
    RunConfig cfg = base_config("gap");
    cfg.out_path = (dir / "gap.csv").string();

    BallDecomposition ball;
    ball.gap.value = 2.5;
    ball.gap.lambda_star = 1.25;
    ball.gap.kappa = 0.75;
    ball.gap.anchor_risk = 1.5;
    ball.gap.excess_budget = 0.5;
    ball.gap.path = GapPath::two_valued;
    ball.anchor_ld = 1.5;
    ball.remainder = 0.625;
    ball.remainder_bound = 0.75;
    ball.kernel_residual = 0.0;

    RecordTable t = gap_records(ball, cfg);
    write_report(t, cfg);
    std::string first = read_file(cfg.out_path);
    std::string manifest = read_file(cfg.out_path + ".manifest.json");
    write_report(t, cfg);
    CHECK(read_file(cfg.out_path) == first);
    CHECK(read_file(cfg.out_path + ".manifest.json") == manifest);
    CHECK(ojson::parse(manifest)["command"] == "gap");

    RunConfig bad = cfg;
    bad.format = "xml";
    CHECK_THROWS_AS(write_report(t, bad), usage_error);
    bad = cfg;
    bad.out_path.clear();
    CHECK_THROWS_AS(write_report(t, bad), usage_error);
    fs::remove_all(dir);
}

TEST_CASE("schema freeze: gap table") {
    RunConfig cfg = base_config("gap");
    BallDecomposition ball;
    ball.gap.value = 3.5;
    ball.gap.lambda_star = 1.125;
    ball.gap.kappa = 0.875;
    ball.gap.anchor_risk = 1.25;
    ball.gap.excess_budget = 2.0;
    ball.gap.hard_case = false;
    ball.gap.degenerate = false;
    ball.gap.path = GapPath::two_valued;
    ball.anchor_ld = 1.25;
    ball.remainder = 0.5;
    ball.remainder_bound = 0.625;
    ball.kernel_residual = 0.0;
    golden_compare("gap.csv", csv_string(gap_records(ball, cfg)));
}

TEST_CASE("schema freeze: alpha table with its pinned header") {
    RunConfig cfg = base_config("alpha-sweep");
    std::vector<AlphaRow> rows(2);
    rows[0].alpha = 1.0;
    rows[0].gap = est(1.0625, 0.125);
    rows[0].target = 1.0;
    rows[0].tolerance = 0.375;
    rows[0].pass = true;
    rows[1].alpha = 2.0;
    rows[1].gap = est(4.5, 0.25);
    rows[1].target = 4.0;
    rows[1].tolerance = 0.75;
    rows[1].pass = true;
    std::string csv = csv_string(alpha_records(rows, cfg));
    CHECK(csv.rfind("alpha,gap_mean,gap_se,target,tolerance,pass,seed,trials\n", 0) == 0);
    golden_compare("alpha_sweep.csv", csv);
}

TEST_CASE("schema freeze: flip table") {
    RunConfig cfg = base_config("flip");
    FlipResult res;
    res.ls_tilde = est(3.75, 0.0625);
    res.ld_tilde = est(1.125, 0.03125);
    res.ls_target = 3.8;
    res.ld_target = 1.0;
    golden_compare("flip.csv", csv_string(flip_records(res, cfg)));
}

TEST_CASE("schema freeze: norms table") {
    RunConfig cfg = base_config("norms");
    NormCheckResult res;
    res.limits.mr_norm2 = 5.0;
    res.limits.mn_norm2 = 4.5;
    res.limits.diff = 0.5;
    res.limits.beta_n = 1.25;
    res.limits.mn_size_product = 1.5;
    NormRow row;
    row.d_j = 400;
    row.mr_norm2 = est(5.0625, 0.125);
    row.mn_norm2 = est(4.5625, 0.125);
    res.rows = {row};
    golden_compare("norms.csv", csv_string(norm_records(res, cfg)));
}

TEST_CASE("schema freeze: double descent table") {
    RunConfig cfg = base_config("double-descent");
    std::vector<DescentRow> rows(1);
    rows[0].p = 40;
    rows[0].formula = 1.95;
    rows[0].risk = est(2.0, 0.125);
    golden_compare("double_descent.csv", csv_string(descent_records(rows, cfg)));
}

TEST_CASE("schema freeze: sweep table") {
    RunConfig cfg = base_config("sweep-n");
    std::vector<SweepRow> rows(1);
    rows[0].n = 50;
    rows[0].lambda = 7.0625;
    rows[0].d_j = 2500;
    rows[0].excess_mn = est(0.5, 0.03125);
    rows[0].excess_ridge = est(0.25, 0.015625);
    rows[0].dev_product = est(6.5, 0.25);
    rows[0].kappa_product = est(5.5, 0.25);
    golden_compare("sweep_n.csv", csv_string(sweep_records(rows, cfg)));
}

TEST_CASE("schema freeze: ridge equivalence table") {
    RunConfig cfg = base_config("ridge-equiv");
    std::vector<RidgeEquivRow> rows(1);
    rows[0].d_j = 1000;
    rows[0].signal_err = est(0.0625, 0.015625);
    rows[0].junk_pred = est(0.125, 0.03125);
    rows[0].ridge_norm = est(0.875, 0.0625);
    golden_compare("ridge_equiv.csv", csv_string(ridge_records(rows, cfg)));
}

TEST_CASE("schema freeze: selfcheck table") {
    RunConfig cfg = base_config("selfcheck");
    std::vector<SelfCheckRow> checks = {{"dual-vs-oracle", true, "max rel err 1e-09"},
                                        {"mc-thread-determinism", true, "bitwise equal"}};
    golden_compare("selfcheck.csv", csv_string(selfcheck_records(checks, cfg)));
}
