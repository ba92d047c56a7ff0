#pragma once

// Experiment harness: named experiments with flat-file configs, deterministic
// seeding, typed result rows, and CSV / JSON / plot-data emission.  The same
// driver backs the CLI and the acceptance binary, so "simlab verify" and the
// test suite cannot drift apart.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "simlab/levy_env.hpp"

namespace simlab {

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    std::string experiment_id;
    LevyModel model = LevyModel::drifted_brownian(1.0);
    // Numeric knobs beyond the model block (sample counts, grid steps, depths).
    // Kept sorted by key so serialization is canonical.
    std::map<std::string, double> params;
    int replicas = 1;
    std::uint64_t master_seed = 20260819ull;
    std::string output_path;  // optional default emission directory

    double param(const std::string& key, double fallback) const;
    bool has_param(const std::string& key) const;
};

// Parse the flat "key = value" format (one optional `model { ... }` block,
// '#' comments, blank lines ignored).  Throws std::invalid_argument with the
// offending line on malformed input.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical text form; parse(serialize(c)) reproduces c exactly (doubles are
// printed shortest-round-trip).
std::string serialize_config(const ExperimentConfig& cfg);

// FNV-1a 64 over the canonical serialization, as 16 lowercase hex chars.
std::string config_hash(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Results

// How a row's estimate is judged against its target:
//   abs     : |estimate - target| <= tolerance
//   rel     : |estimate - target| <= tolerance * |target|
//   greater : estimate > target          (tolerance unused; KS p-values)
//   info    : recorded, never gates
enum class RowRule { Abs, Rel, Greater, Info };

// Where the target number comes from:
//   identity    : definitional / bookkeeping quantity, true by construction
//   closed-form : analytic formula for the limiting object
//   mc-derived  : produced by an independent sampler or brute-force oracle
enum class RowBasis { Identity, ClosedForm, McDerived, None };

const char* to_string(RowRule r);
const char* to_string(RowBasis b);

struct ResultRow {
    std::string name;
    double estimate = 0.0;
    double mc_error = 0.0;   // NaN when not a Monte Carlo quantity
    double target = 0.0;     // NaN for info rows without a reference value
    double tolerance = 0.0;  // NaN when the rule ignores it
    RowRule rule = RowRule::Info;
    RowBasis basis = RowBasis::None;
    // Desk-scale bookkeeping (e.g. "t=e^{h+phi};h=10;phi=3"), empty if N/A.
    std::string scale;
    bool pass = true;
};

// Evaluate `pass` from the rule; info rows always pass.
bool evaluate_row(ResultRow& row);

struct PlotCurve {
    std::string name;          // file stem; [a-z0-9_] only
    std::vector<double> x;     // strictly increasing
    std::vector<double> y;
    std::vector<double> yerr;  // empty, or same length as x
};

struct ExperimentResult {
    ExperimentConfig config;
    std::string hash;  // config_hash(config)
    std::vector<ResultRow> rows;
    std::vector<PlotCurve> curves;
    double wall_time_sec = 0.0;  // in-memory / log only, never emitted

    bool all_pass() const;
    const ResultRow* find_row(const std::string& name) const;
};

// ---------------------------------------------------------------------------
// Emission (UTF-8, '.' decimal separator, LF line endings)

std::string csv_text(const ExperimentResult& res);
std::string json_text(const ExperimentResult& res);
// Inverse of json_text (estimate/target null maps back to NaN).
ExperimentResult result_from_json(const std::string& text);
std::string plotdata_text(const PlotCurve& curve);

// Writes <dir>/result.csv, <dir>/result.json and <dir>/<curve>.dat for each
// curve, creating <dir> if needed.  Returns the file paths written.
std::vector<std::string> emit_all(const ExperimentResult& res,
                                  const std::string& dir);

// ---------------------------------------------------------------------------
// Registry and execution

struct ExperimentInfo {
    std::string id;
    std::string summary;
};

// All runnable experiment ids with one-line summaries, in fixed order.
std::vector<ExperimentInfo> list_experiments();

// Default config for an id (throws std::invalid_argument on unknown id).
ExperimentConfig default_config(const std::string& id);

// Run one experiment.  Unknown experiment ids and unknown param keys throw
// std::invalid_argument.  Implemented in experiments.cpp.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Names of the params run_experiment accepts for this id.
std::vector<std::string> accepted_params(const std::string& id);

// Deterministic parallel map: body(i) for i in [0, n), results landing in
// caller-owned slots so the outcome is independent of the worker count.
// max_threads == 0 uses the hardware count.
void parallel_for(int n, const std::function<void(int)>& body,
                  int max_threads = 0);

// ---------------------------------------------------------------------------
// Acceptance verification (shared by `simlab verify` and the test binary)

struct VerifyOptions {
    bool quick = false;            // shrunken sizes; informational only
    std::uint64_t master_seed = 20260819ull;
    std::string out_dir;           // empty: no files written
    std::vector<int> only;         // criterion numbers; empty = all
};

struct CriterionOutcome {
    int index = 0;
    std::string experiment_id;
    std::string variant;  // "" or a parameter-point label like "kappa0.5"
    bool pass = false;
    std::string detail;   // one-line human summary
    double wall_time_sec = 0.0;
};

// Runs the acceptance suite, printing one "CRITERION k ...: PASS/FAIL" line
// per criterion to `log`.  Returns all outcomes; the failure count is the
// number of outcomes with pass == false.
std::vector<CriterionOutcome> verify_acceptance(const VerifyOptions& opt,
                                                std::ostream& log);

}  // namespace simlab
