#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "simlab/harness.hpp"

using namespace simlab;

namespace {

ExperimentResult tiny_result() {
    ExperimentResult res;
    res.config = default_config("integral_test");
    res.hash = config_hash(res.config);
    ResultRow row;
    row.name = "alpha";
    row.estimate = 1.5;
    row.mc_error = 0.1;
    row.target = 1.4;
    row.tolerance = 0.2;
    row.rule = RowRule::Abs;
    row.basis = RowBasis::ClosedForm;
    evaluate_row(row);
    res.rows.push_back(row);
    PlotCurve c;
    c.name = "curve_a";
    c.x = {1.0, 2.0, 3.0};
    c.y = {0.1, 0.2, 0.3};
    res.curves.push_back(c);
    return res;
}

}  // namespace

TEST_CASE("config round-trips through serialize and parse") {
    ExperimentConfig cfg = default_config("exp_functional_tail");
    cfg.replicas = 3;
    cfg.master_seed = 987654321ull;
    cfg.params["tail_cut"] = 35.0;
    const std::string text = serialize_config(cfg);
    const ExperimentConfig back = parse_config(text);
    CHECK(back.experiment_id == cfg.experiment_id);
    CHECK(back.replicas == cfg.replicas);
    CHECK(back.master_seed == cfg.master_seed);
    CHECK(back.params == cfg.params);
    CHECK(back.model.kind == cfg.model.kind);
    CHECK(back.model.kappa_drift == cfg.model.kappa_drift);
    CHECK(serialize_config(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("parse_config accepts comments and rejects junk") {
    const char* good =
        "# comment line\n"
        "experiment_id = integral_test\n"
        "replicas = 2\n"
        "model {\n"
        "  kind = drifted_brownian\n"
        "  kappa = 0.75\n"
        "}\n";
    const ExperimentConfig cfg = parse_config(good);
    CHECK(cfg.experiment_id == "integral_test");
    CHECK(cfg.replicas == 2);
    CHECK(cfg.model.kappa_drift == doctest::Approx(0.75));
    CHECK_THROWS(parse_config("model {\n kind = nonsense\n}\n"));
    CHECK_THROWS(parse_config("replicas = -2\n"));
    CHECK_THROWS(parse_config("master_seed = notanumber\n"));
}

TEST_CASE("unknown experiments and parameters are rejected") {
    CHECK_THROWS(default_config("no_such_experiment"));
    ExperimentConfig cfg = default_config("integral_test");
    cfg.params["bogus_knob"] = 1.0;
    CHECK_THROWS(run_experiment(cfg));
}

TEST_CASE("row evaluation semantics") {
    ResultRow r;
    r.estimate = 1.0;
    r.target = 1.05;
    r.tolerance = 0.1;
    r.rule = RowRule::Abs;
    evaluate_row(r);
    CHECK(r.pass);
    r.tolerance = 0.01;
    evaluate_row(r);
    CHECK_FALSE(r.pass);
    r.rule = RowRule::Rel;
    r.tolerance = 0.10;
    evaluate_row(r);
    CHECK(r.pass);
    r.rule = RowRule::Greater;
    r.target = 0.5;
    evaluate_row(r);
    CHECK(r.pass);
    r.estimate = 0.4;
    evaluate_row(r);
    CHECK_FALSE(r.pass);
    r.rule = RowRule::Info;
    evaluate_row(r);
    CHECK(r.pass);
    r.rule = RowRule::Abs;
    r.estimate = std::nan("");
    evaluate_row(r);
    CHECK_FALSE(r.pass);
}

TEST_CASE("csv and plotdata formats hold their invariants") {
    const ExperimentResult res = tiny_result();
    const std::string csv = csv_text(res);
    // Header plus one row.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(csv.find("alpha") != std::string::npos);
    CHECK(csv.find("closed-form") != std::string::npos);

    const std::string dat = plotdata_text(res.curves[0]);
    CHECK(dat.find("curve_a") != std::string::npos);

    PlotCurve bad;
    bad.name = "b";
    bad.x = {1.0, 1.0};
    bad.y = {0.0, 0.0};
    CHECK_THROWS(plotdata_text(bad));
    PlotCurve mismatched;
    mismatched.name = "c";
    mismatched.x = {1.0, 2.0};
    mismatched.y = {0.0};
    CHECK_THROWS(plotdata_text(mismatched));
}

TEST_CASE("json round-trips the result") {
    const ExperimentResult res = tiny_result();
    const std::string js = json_text(res);
    const ExperimentResult back = result_from_json(js);
    CHECK(back.hash == res.hash);
    REQUIRE(back.rows.size() == res.rows.size());
    CHECK(back.rows[0].name == res.rows[0].name);
    CHECK(back.rows[0].estimate == doctest::Approx(res.rows[0].estimate));
    CHECK(back.rows[0].pass == res.rows[0].pass);
    CHECK(back.config.experiment_id == res.config.experiment_id);
}

TEST_CASE("emit_all writes the expected tree") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "simlab_emit_test";
    fs::remove_all(dir);
    emit_all(tiny_result(), dir.string());
    CHECK(fs::exists(dir / "result.csv"));
    CHECK(fs::exists(dir / "result.json"));
    CHECK(fs::exists(dir / "curve_a.dat"));
    std::ifstream in(dir / "result.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "name,estimate,mc_error,target,tolerance,rule,basis,scale,pass");
    fs::remove_all(dir);
}

TEST_CASE("experiment registry lists sixteen entries with descriptions") {
    const auto infos = list_experiments();
    CHECK(infos.size() == 16);
    for (const auto& e : infos) {
        CHECK(!e.id.empty());
        CHECK(!e.summary.empty());
        // Defaults exist and only accepted keys appear in them.
        const ExperimentConfig cfg = default_config(e.id);
        const auto accepted = accepted_params(e.id);
        for (const auto& [k, v] : cfg.params) {
            (void)v;
            CHECK(std::find(accepted.begin(), accepted.end(), k) !=
                  accepted.end());
        }
    }
}

TEST_CASE("a small experiment run is deterministic end to end") {
    ExperimentConfig cfg = default_config("kappa_root_check");
    cfg.params["n_models"] = 8;
    const ExperimentResult a = run_experiment(cfg);
    const ExperimentResult b = run_experiment(cfg);
    CHECK(csv_text(a) == csv_text(b));
    CHECK(json_text(a) == json_text(b));
    CHECK(a.all_pass());
    ExperimentConfig other = cfg;
    other.master_seed += 1;
    const ExperimentResult c = run_experiment(other);
    CHECK(json_text(a) != json_text(c));  // config (and usually rows) differ
}

TEST_CASE("parallel_for is schedule independent and propagates exceptions") {
    const int n = 1000;
    std::vector<double> one(n), four(n);
    parallel_for(n, [&](int i) { one[static_cast<std::size_t>(i)] = i * 0.5; }, 1);
    parallel_for(n, [&](int i) { four[static_cast<std::size_t>(i)] = i * 0.5; }, 4);
    CHECK(one == four);
    CHECK_THROWS(parallel_for(16, [&](int i) {
        if (i == 7) throw std::runtime_error("boom");
    }, 3));
    std::atomic<int> count{0};
    parallel_for(0, [&](int) { count.fetch_add(1); }, 2);
    CHECK(count.load() == 0);
}
