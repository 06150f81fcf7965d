#include "interplab/report.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <system_error>

#include "interplab/errors.hpp"

#ifndef INTERPLAB_VERSION
#define INTERPLAB_VERSION "dev"
#endif

namespace interplab {

namespace {

namespace fs = std::filesystem;

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::string csv_cell(const ojson& v) {
    if (v.is_string()) return csv_escape(v.get<std::string>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_float()) return format_double(v.get<double>());
    return v.dump();
}

const char* path_name(GapPath path) {
    switch (path) {
        case GapPath::dense: return "dense";
        case GapPath::two_valued: return "two-valued";
        case GapPath::conjugate_gradient: return "cg";
        case GapPath::short_circuit: return "short-circuit";
    }
    return "unknown";
}

ojson index_list(const std::vector<index_t>& v) {
    ojson a = ojson::array();
    for (index_t x : v) a.push_back(static_cast<std::int64_t>(x));
    return a;
}

ojson double_list(const std::vector<double>& v) {
    ojson a = ojson::array();
    for (double x : v) a.push_back(x);
    return a;
}

}  // namespace

ProblemSpec RunConfig::to_problem_spec() const {
    ProblemSpec sp;
    sp.d_S = d_s;
    sp.d_J = d_j;
    sp.lambda = lambda;
    sp.sigma2 = sigma2;
    sp.w_star_S = dvec::Zero(d_s);
    if (!w_star.empty()) {
        if (static_cast<index_t>(w_star.size()) != d_s)
            throw usage_error("w_star length does not match d_S");
        for (index_t i = 0; i < d_s; ++i) sp.w_star_S(i) = w_star[static_cast<size_t>(i)];
    }
    return sp;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc())
        throw error("failed to format a double");
    return std::string(buf, res.ptr);
}

RecordTable gap_records(const BallDecomposition& ball, const RunConfig& cfg) {
    RunRecord r;
    r.cells = {{"n", static_cast<std::int64_t>(cfg.n)},
               {"d_s", static_cast<std::int64_t>(cfg.d_s)},
               {"d_j", static_cast<std::int64_t>(cfg.d_j)},
               {"lambda", cfg.lambda},
               {"sigma2", cfg.sigma2},
               {"b_factor", cfg.b_factor},
               {"value", ball.gap.value},
               {"lambda_star", ball.gap.lambda_star},
               {"kappa", ball.gap.kappa},
               {"anchor_risk", ball.gap.anchor_risk},
               {"excess_budget", ball.gap.excess_budget},
               {"remainder", ball.remainder},
               {"remainder_bound", ball.remainder_bound},
               {"hard_case", ball.gap.hard_case},
               {"degenerate", ball.gap.degenerate},
               {"path", path_name(ball.gap.path)},
               {"seed", cfg.seed}};
    return {r};
}

RecordTable alpha_records(const std::vector<AlphaRow>& rows, const RunConfig& cfg) {
    RecordTable out;
    for (const auto& row : rows) {
        RunRecord r;
        r.cells = {{"alpha", row.alpha},
                   {"gap_mean", row.gap.mean},
                   {"gap_se", row.gap.std_error},
                   {"target", row.target},
                   {"tolerance", row.tolerance},
                   {"pass", row.pass},
                   {"seed", cfg.seed},
                   {"trials", static_cast<std::int64_t>(cfg.trials)}};
        out.push_back(r);
    }
    return out;
}

RecordTable flip_records(const FlipResult& result, const RunConfig& cfg) {
    RunRecord r;
    r.cells = {{"n", static_cast<std::int64_t>(cfg.n)},
               {"d_s", static_cast<std::int64_t>(cfg.d_s)},
               {"d_j", static_cast<std::int64_t>(cfg.d_j)},
               {"lambda", cfg.lambda},
               {"sigma2", cfg.sigma2},
               {"ls_mean", result.ls_tilde.mean},
               {"ls_se", result.ls_tilde.std_error},
               {"ls_target", result.ls_target},
               {"ld_mean", result.ld_tilde.mean},
               {"ld_se", result.ld_tilde.std_error},
               {"ld_target", result.ld_target},
               {"seed", cfg.seed},
               {"trials", static_cast<std::int64_t>(cfg.trials)}};
    return {r};
}

RecordTable norm_records(const NormCheckResult& result, const RunConfig& cfg) {
    RecordTable out;
    for (const auto& row : result.rows) {
        RunRecord r;
        r.cells = {{"d_j", static_cast<std::int64_t>(row.d_j)},
                   {"mr_norm2_mean", row.mr_norm2.mean},
                   {"mr_norm2_se", row.mr_norm2.std_error},
                   {"mn_norm2_mean", row.mn_norm2.mean},
                   {"mn_norm2_se", row.mn_norm2.std_error},
                   {"mr_limit", result.limits.mr_norm2},
                   {"mn_limit", result.limits.mn_norm2},
                   {"diff_limit", result.limits.diff},
                   {"beta_n", result.limits.beta_n},
                   {"mn_size_product", result.limits.mn_size_product},
                   {"seed", cfg.seed},
                   {"trials", static_cast<std::int64_t>(cfg.trials)}};
        out.push_back(r);
    }
    return out;
}

RecordTable descent_records(const std::vector<DescentRow>& rows, const RunConfig& cfg) {
    RecordTable out;
    for (const auto& row : rows) {
        RunRecord r;
        r.cells = {{"n", static_cast<std::int64_t>(cfg.n)},
                   {"p", static_cast<std::int64_t>(row.p)},
                   {"formula", row.formula},
                   {"risk_mean", row.risk.mean},
                   {"risk_se", row.risk.std_error},
                   {"sigma2", cfg.sigma2},
                   {"seed", cfg.seed},
                   {"trials", static_cast<std::int64_t>(cfg.trials)}};
        out.push_back(r);
    }
    return out;
}

RecordTable sweep_records(const std::vector<SweepRow>& rows, const RunConfig& cfg) {
    RecordTable out;
    for (const auto& row : rows) {
        RunRecord r;
        r.cells = {{"n", static_cast<std::int64_t>(row.n)},
                   {"lambda", row.lambda},
                   {"d_j", static_cast<std::int64_t>(row.d_j)},
                   {"excess_mn_mean", row.excess_mn.mean},
                   {"excess_mn_se", row.excess_mn.std_error},
                   {"excess_ridge_mean", row.excess_ridge.mean},
                   {"excess_ridge_se", row.excess_ridge.std_error},
                   {"dev_product_mean", row.dev_product.mean},
                   {"dev_product_se", row.dev_product.std_error},
                   {"kappa_product_mean", row.kappa_product.mean},
                   {"kappa_product_se", row.kappa_product.std_error},
                   {"seed", cfg.seed},
                   {"trials", static_cast<std::int64_t>(cfg.trials)}};
        out.push_back(r);
    }
    return out;
}

RecordTable ridge_records(const std::vector<RidgeEquivRow>& rows, const RunConfig& cfg) {
    RecordTable out;
    for (const auto& row : rows) {
        RunRecord r;
        r.cells = {{"n", static_cast<std::int64_t>(cfg.n)},
                   {"d_j", static_cast<std::int64_t>(row.d_j)},
                   {"signal_err_mean", row.signal_err.mean},
                   {"signal_err_se", row.signal_err.std_error},
                   {"junk_pred_mean", row.junk_pred.mean},
                   {"junk_pred_se", row.junk_pred.std_error},
                   {"ridge_norm_mean", row.ridge_norm.mean},
                   {"ridge_norm_se", row.ridge_norm.std_error},
                   {"seed", cfg.seed},
                   {"trials", static_cast<std::int64_t>(cfg.trials)}};
        out.push_back(r);
    }
    return out;
}

RecordTable selfcheck_records(const std::vector<SelfCheckRow>& checks, const RunConfig& cfg) {
    RecordTable out;
    for (const auto& c : checks) {
        RunRecord r;
        r.cells = {{"check", c.name}, {"pass", c.pass}, {"detail", c.detail}, {"seed", cfg.seed}};
        out.push_back(r);
    }
    return out;
}

std::string csv_string(const RecordTable& records) {
    if (records.empty()) return "";
    std::string out;
    const auto& head = records.front().cells;
    for (size_t i = 0; i < head.size(); ++i) {
        if (i) out += ',';
        out += head[i].first;
    }
    out += '\n';
    for (const auto& rec : records) {
        if (rec.cells.size() != head.size())
            throw error("record schema mismatch inside one table");
        for (size_t i = 0; i < rec.cells.size(); ++i) {
            if (rec.cells[i].first != head[i].first)
                throw error("record schema mismatch inside one table");
            if (i) out += ',';
            out += csv_cell(rec.cells[i].second);
        }
        out += '\n';
    }
    return out;
}

std::string json_string(const RecordTable& records) {
    ojson arr = ojson::array();
    for (const auto& rec : records) {
        ojson obj = ojson::object();
        for (const auto& cell : rec.cells) obj[cell.first] = cell.second;
        arr.push_back(obj);
    }
    return arr.dump(2) + "\n";
}

ojson manifest_json(const RunConfig& cfg) {
    ojson m = ojson::object();
    m["tool"] = "interplab";
    m["version"] = INTERPLAB_VERSION;
    m["command"] = cfg.command;
    m["seed"] = cfg.seed;
    ojson c = ojson::object();
    c["n"] = static_cast<std::int64_t>(cfg.n);
    c["n_grid"] = index_list(cfg.n_grid);
    c["d_s"] = static_cast<std::int64_t>(cfg.d_s);
    c["d_j"] = static_cast<std::int64_t>(cfg.d_j);
    c["d_j_grid"] = index_list(cfg.d_j_grid);
    c["d_j_factor"] = static_cast<std::int64_t>(cfg.d_j_factor);
    c["lambda"] = cfg.lambda;
    c["schedule"] = cfg.schedule;
    c["sigma2"] = cfg.sigma2;
    c["w_star"] = double_list(cfg.w_star);
    c["alphas"] = double_list(cfg.alphas);
    c["p_grid"] = index_list(cfg.p_grid);
    c["b_factor"] = cfg.b_factor;
    c["trials"] = static_cast<std::int64_t>(cfg.trials);
    c["threads"] = cfg.threads;
    c["format"] = cfg.format;
    c["output"] = cfg.out_path;
    m["config"] = c;
    return m;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    fs::path target(path);
    fs::path dir = target.parent_path();
    if (!dir.empty()) {
        std::error_code ec;
        if (!fs::is_directory(dir, ec))
            throw io_error("output directory does not exist: " + dir.string());
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw io_error("cannot open " + tmp.string() + " for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        os.flush();
        if (!os) {
            os.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw io_error("failed while writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        std::error_code ec2;
        fs::remove(tmp, ec2);
        throw io_error("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

void write_report(const RecordTable& records, const RunConfig& cfg) {
    if (cfg.out_path.empty()) throw usage_error("no output path configured");
    std::string body;
    if (cfg.format == "csv") {
        body = csv_string(records);
    } else if (cfg.format == "json") {
        body = json_string(records);
    } else {
        throw usage_error("unknown output format: " + cfg.format);
    }
    write_text_atomic(cfg.out_path, body);
    write_text_atomic(cfg.out_path + ".manifest.json", manifest_json(cfg).dump(2) + "\n");
}

}  // namespace interplab
