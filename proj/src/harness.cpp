#include "simlab/harness.hpp"

#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace simlab {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Shortest round-trip decimal form ('.' separator, locale-independent).
std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& line) {
    const std::string t = trim(s);
    double v = 0.0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw std::invalid_argument("config: bad numeric value in line: " + line);
    return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& line) {
    const std::string t = trim(s);
    std::uint64_t v = 0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw std::invalid_argument("config: bad integer value in line: " + line);
    return v;
}

}  // namespace

double ExperimentConfig::param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

bool ExperimentConfig::has_param(const std::string& key) const {
    return params.find(key) != params.end();
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.model = LevyModel::drifted_brownian(1.0);

    bool in_model = false;
    bool saw_model = false;
    std::string kind;
    std::map<std::string, double> model_vals;

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        if (!in_model && line == "model {") {
            if (saw_model)
                throw std::invalid_argument("config: repeated model block");
            in_model = true;
            saw_model = true;
            continue;
        }
        if (in_model && line == "}") {
            in_model = false;
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value, got: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config: empty key in line: " + line);

        if (in_model) {
            if (key == "kind") {
                kind = val;
            } else if (key == "kappa" || key == "alpha" || key == "C" ||
                       key == "d") {
                model_vals[key] = parse_double(val, line);
            } else {
                throw std::invalid_argument("config: unknown model key: " + key);
            }
            continue;
        }

        if (key == "experiment_id") {
            cfg.experiment_id = val;
        } else if (key == "output_path") {
            cfg.output_path = val;
        } else if (key == "replicas") {
            const std::uint64_t r = parse_u64(val, line);
            if (r < 1 || r > 1000000)
                throw std::invalid_argument("config: replicas out of range");
            cfg.replicas = static_cast<int>(r);
        } else if (key == "master_seed") {
            cfg.master_seed = parse_u64(val, line);
        } else {
            cfg.params[key] = parse_double(val, line);
        }
    }
    if (in_model) throw std::invalid_argument("config: unterminated model block");

    if (saw_model) {
        auto need = [&](const char* k) {
            auto it = model_vals.find(k);
            if (it == model_vals.end())
                throw std::invalid_argument(std::string("config: model block missing ") + k);
            return it->second;
        };
        if (kind == "drifted_brownian") {
            cfg.model = LevyModel::drifted_brownian(need("kappa"));
        } else if (kind == "stable_with_drift") {
            cfg.model = LevyModel::stable_with_drift(need("alpha"), need("C"),
                                                     need("d"));
        } else {
            throw std::invalid_argument("config: unknown model kind: " + kind);
        }
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    out += "experiment_id = " + cfg.experiment_id + "\n";
    out += "replicas = " + std::to_string(cfg.replicas) + "\n";
    out += "master_seed = " + std::to_string(cfg.master_seed) + "\n";
    out += "output_path = " + cfg.output_path + "\n";
    out += "model {\n";
    if (cfg.model.kind == ModelKind::DriftedBrownian) {
        out += "  kind = drifted_brownian\n";
        out += "  kappa = " + fmt_double(cfg.model.kappa_drift) + "\n";
    } else {
        out += "  kind = stable_with_drift\n";
        out += "  alpha = " + fmt_double(cfg.model.alpha) + "\n";
        out += "  C = " + fmt_double(cfg.model.scale_C) + "\n";
        out += "  d = " + fmt_double(cfg.model.drift_d) + "\n";
    }
    out += "}\n";
    for (const auto& [k, v] : cfg.params) out += k + " = " + fmt_double(v) + "\n";
    return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string s = serialize_config(cfg);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
}

const char* to_string(RowRule r) {
    switch (r) {
        case RowRule::Abs: return "abs";
        case RowRule::Rel: return "rel";
        case RowRule::Greater: return "greater";
        case RowRule::Info: return "info";
    }
    return "info";
}

const char* to_string(RowBasis b) {
    switch (b) {
        case RowBasis::Identity: return "identity";
        case RowBasis::ClosedForm: return "closed-form";
        case RowBasis::McDerived: return "mc-derived";
        case RowBasis::None: return "";
    }
    return "";
}

bool evaluate_row(ResultRow& row) {
    switch (row.rule) {
        case RowRule::Info:
            row.pass = true;
            break;
        case RowRule::Greater:
            row.pass = row.estimate > row.target;
            break;
        case RowRule::Abs:
            row.pass = std::fabs(row.estimate - row.target) <= row.tolerance;
            break;
        case RowRule::Rel:
            row.pass = std::fabs(row.estimate - row.target) <=
                       row.tolerance * std::fabs(row.target);
            break;
    }
    return row.pass;
}

bool ExperimentResult::all_pass() const {
    for (const auto& r : rows)
        if (!r.pass) return false;
    return true;
}

const ResultRow* ExperimentResult::find_row(const std::string& name) const {
    for (const auto& r : rows)
        if (r.name == name) return &r;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

std::string csv_field_double(double v) {
    if (std::isnan(v)) return "";
    return fmt_double(v);
}

std::string csv_sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return out;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment_id"] = cfg.experiment_id;
    j["replicas"] = cfg.replicas;
    j["master_seed"] = cfg.master_seed;
    j["output_path"] = cfg.output_path;
    nlohmann::json jm;
    if (cfg.model.kind == ModelKind::DriftedBrownian) {
        jm["kind"] = "drifted_brownian";
        jm["kappa"] = cfg.model.kappa_drift;
    } else {
        jm["kind"] = "stable_with_drift";
        jm["alpha"] = cfg.model.alpha;
        jm["C"] = cfg.model.scale_C;
        jm["d"] = cfg.model.drift_d;
    }
    j["model"] = jm;
    j["params"] = cfg.params;  // std::map keeps keys sorted
    return j;
}

}  // namespace

std::string csv_text(const ExperimentResult& res) {
    std::string out =
        "name,estimate,mc_error,target,tolerance,rule,basis,scale,pass\n";
    for (const auto& r : res.rows) {
        out += csv_sanitize(r.name) + ",";
        out += csv_field_double(r.estimate) + ",";
        out += csv_field_double(r.mc_error) + ",";
        out += csv_field_double(r.target) + ",";
        out += csv_field_double(r.tolerance) + ",";
        out += std::string(to_string(r.rule)) + ",";
        out += std::string(to_string(r.basis)) + ",";
        out += csv_sanitize(r.scale) + ",";
        out += r.pass ? "pass" : "fail";
        out += "\n";
    }
    return out;
}

std::string json_text(const ExperimentResult& res) {
    nlohmann::json j;
    j["config"] = config_to_json(res.config);
    j["config_hash"] = res.hash;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : res.rows) {
        nlohmann::json jr;
        jr["name"] = r.name;
        jr["estimate"] = r.estimate;
        jr["mc_error"] = r.mc_error;
        jr["target"] = r.target;
        jr["tolerance"] = r.tolerance;
        jr["rule"] = to_string(r.rule);
        jr["basis"] = to_string(r.basis);
        jr["scale"] = r.scale;
        jr["pass"] = r.pass;
        rows.push_back(jr);
    }
    j["rows"] = rows;
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& c : res.curves) curves.push_back(c.name);
    j["curves"] = curves;
    return j.dump(2) + "\n";
}

namespace {

double json_double(const nlohmann::json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

RowRule rule_from_string(const std::string& s) {
    if (s == "abs") return RowRule::Abs;
    if (s == "rel") return RowRule::Rel;
    if (s == "greater") return RowRule::Greater;
    return RowRule::Info;
}

RowBasis basis_from_string(const std::string& s) {
    if (s == "identity") return RowBasis::Identity;
    if (s == "closed-form") return RowBasis::ClosedForm;
    if (s == "mc-derived") return RowBasis::McDerived;
    return RowBasis::None;
}

}  // namespace

ExperimentResult result_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ExperimentResult res;
    const auto& jc = j.at("config");
    res.config.experiment_id = jc.at("experiment_id").get<std::string>();
    res.config.replicas = jc.at("replicas").get<int>();
    res.config.master_seed = jc.at("master_seed").get<std::uint64_t>();
    res.config.output_path = jc.at("output_path").get<std::string>();
    const auto& jm = jc.at("model");
    const std::string kind = jm.at("kind").get<std::string>();
    if (kind == "drifted_brownian") {
        res.config.model =
            LevyModel::drifted_brownian(jm.at("kappa").get<double>());
    } else {
        res.config.model = LevyModel::stable_with_drift(
            jm.at("alpha").get<double>(), jm.at("C").get<double>(),
            jm.at("d").get<double>());
    }
    for (const auto& [k, v] : jc.at("params").items())
        res.config.params[k] = v.get<double>();
    res.hash = j.at("config_hash").get<std::string>();
    for (const auto& jr : j.at("rows")) {
        ResultRow r;
        r.name = jr.at("name").get<std::string>();
        r.estimate = json_double(jr.at("estimate"));
        r.mc_error = json_double(jr.at("mc_error"));
        r.target = json_double(jr.at("target"));
        r.tolerance = json_double(jr.at("tolerance"));
        r.rule = rule_from_string(jr.at("rule").get<std::string>());
        r.basis = basis_from_string(jr.at("basis").get<std::string>());
        r.scale = jr.at("scale").get<std::string>();
        r.pass = jr.at("pass").get<bool>();
        res.rows.push_back(std::move(r));
    }
    return res;
}

std::string plotdata_text(const PlotCurve& curve) {
    if (!curve.yerr.empty() && curve.yerr.size() != curve.x.size())
        throw std::logic_error("plot curve yerr length mismatch: " + curve.name);
    if (curve.y.size() != curve.x.size())
        throw std::logic_error("plot curve y length mismatch: " + curve.name);
    for (std::size_t i = 1; i < curve.x.size(); ++i)
        if (!(curve.x[i] > curve.x[i - 1]))
            throw std::logic_error("plot curve x not strictly increasing: " +
                                   curve.name);
    std::string out = "# " + curve.name +
                      (curve.yerr.empty() ? " : x y\n" : " : x y yerr\n");
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        out += fmt_double(curve.x[i]) + " " + fmt_double(curve.y[i]);
        if (!curve.yerr.empty()) out += " " + fmt_double(curve.yerr[i]);
        out += "\n";
    }
    return out;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write: " + path);
}

bool valid_curve_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::islower(static_cast<unsigned char>(c)) ||
              std::isdigit(static_cast<unsigned char>(c)) || c == '_'))
            return false;
    return true;
}

}  // namespace

std::vector<std::string> emit_all(const ExperimentResult& res,
                                  const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;
    const std::string csv_path = (fs::path(dir) / "result.csv").string();
    write_file(csv_path, csv_text(res));
    written.push_back(csv_path);
    const std::string json_path = (fs::path(dir) / "result.json").string();
    write_file(json_path, json_text(res));
    written.push_back(json_path);
    for (const auto& c : res.curves) {
        if (!valid_curve_name(c.name))
            throw std::logic_error("bad plot curve name: " + c.name);
        const std::string p = (fs::path(dir) / (c.name + ".dat")).string();
        write_file(p, plotdata_text(c));
        written.push_back(p);
    }
    return written;
}

// ---------------------------------------------------------------------------
// Deterministic parallel map

void parallel_for(int n, const std::function<void(int)>& body,
                  int max_threads) {
    if (n <= 0) return;
    int workers = max_threads > 0
                      ? max_threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (workers > n) workers = n;
    if (workers == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace simlab
