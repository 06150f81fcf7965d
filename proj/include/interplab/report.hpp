#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "interplab/experiments.hpp"
#include "interplab/gap.hpp"

namespace interplab {

using ojson = nlohmann::ordered_json;

// Fully resolved run description: every default that influenced a run is
// filled in here before dispatch, and the whole struct is echoed into the
// manifest sidecar.
struct RunConfig {
    std::string command;

    index_t n = 100;
    std::vector<index_t> n_grid;
    index_t d_s = 1;
    index_t d_j = 0;  // resolved before dispatch; 10 n by default
    std::vector<index_t> d_j_grid;
    index_t d_j_factor = 10;
    double lambda = 0.0;  // resolved numeric value; sweeps use the schedule per n
    std::string schedule = "sqrt";
    double sigma2 = 1.0;
    std::vector<double> w_star;
    std::vector<double> alphas;
    std::vector<index_t> p_grid;
    double b_factor = 1.0;

    index_t trials = 1000;
    uint64_t seed = 42;
    int threads = 0;  // 0 = hardware concurrency
    std::string out_path;
    std::string format = "csv";

    ProblemSpec to_problem_spec() const;
};

// One output row: ordered (column, value) cells.  wall_seconds feeds the
// console log only; persisted artifacts must be byte-stable across reruns,
// so no timing ever reaches them.
struct RunRecord {
    std::vector<std::pair<std::string, ojson>> cells;
    double wall_seconds = 0.0;
};

using RecordTable = std::vector<RunRecord>;

struct SelfCheckRow {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Shortest round-trip decimal text for a double, locale-independent.
std::string format_double(double v);

RecordTable gap_records(const BallDecomposition& ball, const RunConfig& cfg);
RecordTable alpha_records(const std::vector<AlphaRow>& rows, const RunConfig& cfg);
RecordTable flip_records(const FlipResult& result, const RunConfig& cfg);
RecordTable norm_records(const NormCheckResult& result, const RunConfig& cfg);
RecordTable descent_records(const std::vector<DescentRow>& rows, const RunConfig& cfg);
RecordTable sweep_records(const std::vector<SweepRow>& rows, const RunConfig& cfg);
RecordTable ridge_records(const std::vector<RidgeEquivRow>& rows, const RunConfig& cfg);
RecordTable selfcheck_records(const std::vector<SelfCheckRow>& checks, const RunConfig& cfg);

// CSV with a fixed header per command: stable column order, '.' decimal,
// LF line endings.  All records must share one schema.
std::string csv_string(const RecordTable& records);
std::string json_string(const RecordTable& records);
ojson manifest_json(const RunConfig& cfg);

// Writes content to path via a temp file in the same directory plus rename;
// an interrupted write never leaves a partial target behind.
void write_text_atomic(const std::string& path, const std::string& content);

// Persists the table in cfg.format at cfg.out_path together with the
// manifest sidecar <out_path>.manifest.json.
void write_report(const RecordTable& records, const RunConfig& cfg);

}  // namespace interplab
