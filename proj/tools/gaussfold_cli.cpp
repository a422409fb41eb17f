// gaussfold command-line front end.
//
// Each command reads a JSON config (optional), applies flag overrides, validates,
// runs, and writes CSV/JSON outputs that carry the resolved config and version.

#include "gaussfold/casestudy.hpp"
#include "gaussfold/csv.hpp"
#include "gaussfold/decompose.hpp"
#include "gaussfold/fisher.hpp"
#include "gaussfold/inference.hpp"
#include "gaussfold/serialize.hpp"
#include "gaussfold/stats.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace gaussfold;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw IoError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void save_json(const fs::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

/// "key=value" with a dotted key; the value is parsed as JSON when possible.
void apply_override(Json& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), raw = kv.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(raw);
    } catch (const Json::parse_error&) {
        value = raw;
    }
    Json* node = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "JSON config file");
        cmd->add_option("--set", sets, "override a config key, e.g. --set rho=0.5");
        cmd->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
        cmd->add_option("--seed", seed, "base seed (default: config, then GAUSSFOLD_SEED)");
        cmd->add_option("-j,--threads", threads, "worker threads");
    }

    /// Config file, then --set, then the dedicated flags.
    Json resolve() const {
        Json cfg = config_path.empty() ? Json::object() : load_json(config_path);
        if (!cfg.is_object()) throw InvalidArgument("config must be a JSON object");
        for (const auto& s : sets) apply_override(cfg, s);
        if (seed) cfg["seed"] = *seed;
        if (threads) cfg["threads"] = *threads;
        if (!cfg.contains("seed")) {
            if (const char* env = std::getenv("GAUSSFOLD_SEED")) {
                try {
                    cfg["seed"] = std::stoull(env);
                } catch (const std::exception&) {
                    throw InvalidArgument(std::string("GAUSSFOLD_SEED is not an integer: ") + env);
                }
            }
        }
        return cfg;
    }
};

std::string provenance_line(const Json& cfg) {
    return std::string("gaussfold ") + GAUSSFOLD_VERSION + " config=" + cfg.dump();
}

Json with_provenance(Json body, const Json& cfg) {
    body["provenance"] = {{"version", GAUSSFOLD_VERSION}, {"config", cfg}};
    return body;
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
}

/// Reads a key, recording the default in the config when it is absent so that
/// the provenance written with every output is the complete resolved config.
template <class T>
T get_or(Json& cfg, const char* key, T fallback) {
    if (!cfg.contains(key)) {
        cfg[key] = fallback;
        return fallback;
    }
    try {
        return cfg.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
    }
}

std::uint64_t seed_of(Json& cfg, std::uint64_t fallback) { return get_or<std::uint64_t>(cfg, "seed", fallback); }

// ---------------------------------------------------------------- decompose

OrthogonalPlan plan_from_spec(const Json& spec, int n, int p, std::uint64_t seed) {
    require(spec.is_object() && spec.contains("kind"), "plan spec needs a \"kind\"");
    const std::string kind = spec.at("kind").get<std::string>();
    auto sizes = [&]() { return spec.at("sizes").get<std::vector<int>>(); };
    if (kind == "sample_split") return make_plan_sample_split(n, sizes(), seed);
    if (kind == "info_preserving") return make_plan_info_preserving(n, sizes(), seed);
    if (kind == "thinning") return make_plan_thinning(vec_from_json(spec.at("eps")), n);
    if (kind == "fission") return make_plan_fission(n);
    if (kind == "dependent") {
        const Vec q = vec_from_json(spec.at("q"));
        return make_plan_dependent(n, static_cast<int>(q.size()), q, seed);
    }
    if (kind == "independent")
        return plan_independent(n, p, spec.value("k", 2), spec.value("covariance_known", false), seed);
    if (kind == "custom") {
        return make_plan_custom(mat_from_json(spec.at("q")), n, sizes(), spec.value("interleave", std::vector<int>{}),
                                spec.value("row_order", std::vector<int>{}));
    }
    // a complete serialized plan, e.g. from an earlier run
    return plan_from_json(spec);
}

int cmd_decompose(Json& cfg, const fs::path& out) {
    const std::string input = get_or<std::string>(cfg, "input", "");
    require(!input.empty(), "decompose needs \"input\" (a CSV data matrix)");
    require(cfg.contains("plan"), "decompose needs a \"plan\" spec");
    const Mat x = csv::read_matrix(input).values;
    require(x.rows() >= 1 && x.cols() >= 1, "input matrix is empty");
    const int n = static_cast<int>(x.rows()), p = static_cast<int>(x.cols());
    const std::uint64_t seed = seed_of(cfg, 0);
    const OrthogonalPlan plan = plan_from_spec(cfg.at("plan"), n, p, seed);
    const CovModel sp =
        cfg.contains("sigma_prime") ? cov_from_json(cfg.at("sigma_prime"), p) : CovModel::identity(p);
    const FoldSet folds = general_decompose(x, plan, sp, seed);

    const std::vector<std::string> comments{provenance_line(cfg)};
    Json manifest = {{"plan", plan_to_json(plan)},
                     {"sigma_prime", cov_to_json(sp)},
                     {"n", n},
                     {"p", p},
                     {"seed", seed},
                     {"folds", Json::array()}};
    for (int k = 0; k < static_cast<int>(folds.folds.size()); ++k) {
        const std::string name = "fold_" + std::to_string(k + 1) + ".csv";
        csv::write_matrix((out / name).string(), folds.folds[static_cast<std::size_t>(k)], {}, comments);
        manifest["folds"].push_back(name);
    }
    save_json(out / "plan.json", with_provenance(manifest, cfg));
    std::cout << "wrote " << folds.folds.size() << " folds and plan.json to " << out.string() << '\n';
    return kOk;
}

int cmd_reconstruct(Json& cfg, const fs::path& out) {
    const std::string plan_path = get_or<std::string>(cfg, "plan", "");
    require(!plan_path.empty(), "reconstruct needs \"plan\" (the plan.json written by decompose)");
    const Json manifest = load_json(plan_path);
    const fs::path dir = fs::path(plan_path).parent_path();
    const int p = manifest.at("p").get<int>();
    FoldSet folds{{}, plan_from_json(manifest.at("plan")), cov_from_json(manifest.at("sigma_prime"), p),
                  manifest.at("n").get<int>(), p};
    for (const auto& name : manifest.at("folds")) {
        folds.folds.push_back(csv::read_matrix((dir / name.get<std::string>()).string()).values);
    }
    require(static_cast<int>(folds.folds.size()) == folds.plan.folds(), "fold count does not match the plan");
    for (int k = 0; k < folds.plan.folds(); ++k) {
        const Mat& f = folds.folds[static_cast<std::size_t>(k)];
        require(f.rows() == folds.plan.sizes[static_cast<std::size_t>(k)] && f.cols() == folds.p,
                "fold " + std::to_string(k + 1) + " has the wrong shape");
    }
    const Mat x = reconstruct(folds);
    const std::string name = get_or<std::string>(cfg, "output", "reconstructed.csv");
    csv::write_matrix((out / name).string(), x, {}, {provenance_line(cfg)});
    std::cout << "wrote " << (out / name).string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- simulate

SimConfig sim_config(Json& cfg) {
    SimConfig c;
    c.a = get_or(cfg, "a", c.a);
    c.b = get_or(cfg, "b", c.b);
    c.rho = get_or(cfg, "rho", c.rho);
    c.null_setting = get_or(cfg, "null_setting", !cfg.contains("omega"));
    c.omega = get_or(cfg, "omega", c.omega);
    c.q1 = get_or(cfg, "q1", c.q1);
    c.replicates = get_or(cfg, "replicates", c.replicates);
    c.seed = seed_of(cfg, c.seed);
    c.threads = get_or(cfg, "threads", c.threads);
    c.centered = get_or(cfg, "centered", c.centered);
    if (!cfg.contains("methods")) cfg["methods"] = {"a", "b", "c"};
    {
        c.methods.clear();
        for (const auto& m : cfg.at("methods")) {
            const std::string s = m.get<std::string>();
            require(s.size() == 1, "methods are single letters a, b or c");
            c.methods.push_back(method_from_code(s[0]));
        }
    }
    c.lrt.penalty = get_or(cfg, "penalty", c.lrt.penalty);
    c.lrt.bfgs.max_iter = get_or(cfg, "max_iter", c.lrt.bfgs.max_iter);
    require(c.a >= 2 && c.b >= 2, "a and b must be at least 2");
    require(c.rho > 0.0 && c.rho < 1.0, "rho must lie in (0, 1)");
    require(c.replicates >= 1, "replicates must be positive");
    require(c.threads >= 1, "threads must be positive");
    require(!c.methods.empty(), "at least one method");
    for (double q : c.q1) require(q > 0.0 && q < 1.0, "every q1 must lie in (0, 1)");
    if (!c.null_setting) require(c.omega > -1.0 && c.omega < 1.0, "omega must lie in (-1, 1)");
    return c;
}

int cmd_simulate(Json& cfg, const fs::path& out) {
    const SimConfig sc = sim_config(cfg);
    const std::vector<ReplicateRow> rows = simulate(sc);

    std::ostringstream csvout;
    csvout << "# " << provenance_line(cfg) << '\n';
    csvout << "replicate,seed,omega,method,q1,sel_i,sel_j,detected,statistic,p_value,ok,iterations_alt,"
              "iterations_null,converged,null_delta,error\n";
    struct Group {
        std::vector<double> p;
        int detected = 0, rejected = 0, failed = 0, total = 0;
    };
    std::map<std::pair<char, double>, Group> groups;
    int failures = 0;
    for (const auto& r : rows) {
        csvout << r.replicate << ',' << r.seed << ',' << csv::format_double(r.omega) << ',' << method_code(r.method)
               << ',' << csv::format_double(r.q1) << ',' << r.sel_i << ',' << r.sel_j << ',' << int(r.detected) << ','
               << csv::format_double(r.statistic) << ',' << csv::format_double(r.p_value) << ',' << int(r.ok) << ','
               << r.iterations_alt << ',' << r.iterations_null << ',' << int(r.converged) << ','
               << csv::format_double(r.null_delta) << ',' << csv::quote(r.error) << '\n';
        Group& g = groups[{method_code(r.method), r.q1}];
        ++g.total;
        if (!r.ok) {
            ++g.failed;
            ++failures;
            continue;
        }
        g.p.push_back(r.p_value);
        if (r.detected) ++g.detected;
        if (r.detected && r.p_value < 0.05) ++g.rejected;
    }
    write_text(out / "replicates.csv", csvout.str());

    Json summary = {{"failures", failures}, {"groups", Json::array()}};
    for (const auto& [key, g] : groups) {
        Json j = {{"method", std::string(1, key.first)},
                  {"q1", key.second},
                  {"replicates", g.total},
                  {"failed", g.failed},
                  {"detection_rate", g.total ? double(g.detected) / g.total : 0.0},
                  {"conditional_power", g.detected ? double(g.rejected) / g.detected : 0.0}};
        if (!g.p.empty()) {
            const KsResult ks = ks_uniform(g.p);
            j["ks_statistic"] = ks.statistic;
            j["ks_p_value"] = ks.p_value;
        }
        summary["groups"].push_back(j);
    }
    save_json(out / "summary.json", with_provenance(summary, cfg));
    std::cout << "simulated " << rows.size() << " tests (" << failures << " failed fits) into " << out.string() << '\n';
    return failures > 0 ? kNumericalError : kOk;
}

// ---------------------------------------------------------------- validate-clusters

Linkage linkage_of(Json& cfg) { return linkage_from_string(get_or<std::string>(cfg, "linkage", "average")); }

LatentVariance latent_of(Json& cfg) {
    const std::string s = get_or<std::string>(cfg, "latent", "unit");
    if (s == "unit") return LatentVariance::Unit;
    if (s == "stationary") return LatentVariance::Stationary;
    throw InvalidArgument("latent must be \"unit\" or \"stationary\"");
}

void write_curve(const fs::path& path, const ValidationCurve& c, const Json& cfg) {
    std::ostringstream s;
    s << "# " << provenance_line(cfg) << '\n' << "h,cll,repaired,repair_change\n";
    for (const auto& pt : c.points)
        s << pt.h << ',' << csv::format_double(pt.cll) << ',' << int(pt.repaired) << ','
          << csv::format_double(pt.repair_change) << '\n';
    write_text(path, s.str());
}

int cmd_validate_clusters(Json& cfg, const fs::path& out) {
    const double q1 = get_or(cfg, "q1", std::pow(0.5, 0.25));
    require(q1 > 0.0 && q1 < 1.0, "q1 must lie in (0, 1)");
    if (cfg.contains("input")) {
        const Mat x = csv::read_matrix(cfg.at("input").get<std::string>()).values;
        require(x.rows() >= 2 && x.cols() >= 2, "input must be an a x b matrix with a, b >= 2");
        const ClusterRun run = run_cluster_validation(x, q1, seed_of(cfg, 0), linkage_of(cfg), latent_of(cfg));
        write_curve(out / "curve.csv", run.curve, cfg);
        std::ostringstream s;
        s << "# " << provenance_line(cfg) << '\n' << "row,cluster\n";
        const auto& labels = run.path.clusters(run.curve.h_hat);
        for (std::size_t i = 0; i < labels.size(); ++i) s << i << ',' << labels[i] << '\n';
        write_text(out / "assignments.csv", s.str());
        bool any_repair = false, large = false;
        for (const auto& pt : run.curve.points) {
            any_repair = any_repair || pt.repaired;
            large = large || pt.large_repair;
        }
        const Json summary = {{"h_hat", run.curve.h_hat},
                              {"rho_hat", run.estimate.rho_hat},
                              {"delta_floored", run.estimate.floored},
                              {"any_repair", any_repair},
                              {"large_repair", large},
                              {"curve", curve_to_json(run.curve)}};
        save_json(out / "summary.json", with_provenance(summary, cfg));
        std::cout << "selected " << run.curve.h_hat << " clusters\n";
        return kOk;
    }

    ClusterStudyConfig sc;
    sc.a = get_or(cfg, "a", sc.a);
    sc.b = get_or(cfg, "b", sc.b);
    sc.blocks = get_or(cfg, "blocks", sc.blocks);
    sc.within = get_or(cfg, "within", sc.within);
    sc.rho = get_or(cfg, "rho", sc.rho);
    sc.q1 = q1;
    sc.replicates = get_or(cfg, "replicates", sc.replicates);
    sc.seed = seed_of(cfg, sc.seed);
    sc.threads = get_or(cfg, "threads", sc.threads);
    sc.linkage = linkage_of(cfg);
    sc.latent = latent_of(cfg);
    const std::vector<ClusterStudyRow> rows = cluster_study(sc);

    std::ostringstream s;
    s << "# " << provenance_line(cfg) << '\n' << "replicate,seed,h_hat,rho_hat,recovered,any_repair,ok,error\n";
    int hits = 0, failures = 0;
    std::map<int, int> counts;
    for (const auto& r : rows) {
        s << r.replicate << ',' << r.seed << ',' << r.h_hat << ',' << csv::format_double(r.rho_hat) << ','
          << int(r.recovered) << ',' << int(r.any_repair) << ',' << int(r.ok) << ',' << csv::quote(r.error) << '\n';
        if (!r.ok) ++failures;
        else ++counts[r.h_hat];
        if (r.recovered) ++hits;
    }
    write_text(out / "study.csv", s.str());
    if (!rows.empty() && rows.front().ok) write_curve(out / "curve.csv", rows.front().curve, cfg);
    Json hist = Json::object();
    for (const auto& [h, c] : counts) hist[std::to_string(h)] = c;
    const Json summary = {{"replicates", sc.replicates},
                          {"recovered", hits},
                          {"recovery_rate", double(hits) / sc.replicates},
                          {"failures", failures},
                          {"h_hat_counts", hist}};
    save_json(out / "summary.json", with_provenance(summary, cfg));
    std::cout << "recovered " << sc.blocks << " blocks in " << hits << "/" << sc.replicates << " replicates\n";
    return failures > 0 ? kNumericalError : kOk;
}

// ---------------------------------------------------------------- fisher-report

/// Mean model theta plus one of: fixed covariance, scale phi * S0, or
/// compound symmetry phi1 I + phi2 11^T.
ParamModel model_from_json(const Json& j) {
    require(j.is_object(), "\"model\" must be an object");
    const Vec theta = vec_from_json(j.at("mean"));
    const Eigen::Index p = theta.size();
    require(p >= 1, "model mean must be non-empty");
    const std::string cov = j.value("covariance", std::string("fixed"));
    if (cov == "fixed") return mean_model(theta, cov_from_json(j.at("sigma"), p));
    ParamModel pm;
    pm.theta = theta;
    pm.mu_of_theta = [](const Vec& t) { return t; };
    pm.mu_jacobian = [p](const Vec&) { return Mat(Mat::Identity(p, p)); };
    if (cov == "scale") {
        const Mat s0 = cov_from_json(j.at("sigma"), p).materialize();
        pm.phi = Vec::Constant(1, j.value("phi", 1.0));
        pm.sigma_of_phi = [s0](const Vec& f) { return CovModel::dense(f(0) * s0); };
        pm.sigma_derivs = [s0](const Vec&) { return std::vector<Mat>{s0}; };
    } else if (cov == "compound") {
        pm.phi = vec_from_json(j.at("phi"));
        require(pm.phi.size() == 2, "compound covariance takes phi = [phi1, phi2]");
        pm.sigma_of_phi = [p](const Vec& f) {
            return CovModel::dense(f(0) * Mat::Identity(p, p) + f(1) * Mat::Ones(p, p));
        };
        pm.sigma_derivs = [p](const Vec&) { return std::vector<Mat>{Mat::Identity(p, p), Mat::Ones(p, p)}; };
    } else {
        throw InvalidArgument("model covariance must be fixed, scale or compound");
    }
    pm.validate();
    return pm;
}

int cmd_fisher_report(Json& cfg, const fs::path& out) {
    require(cfg.contains("model"), "fisher-report needs a \"model\"");
    const ParamModel pm = model_from_json(cfg.at("model"));
    const Eigen::Index p = pm.dim();
    Json body = Json::object();
    std::string table;

    CovModel sp = cfg.contains("sigma_prime") ? cov_from_json(cfg.at("sigma_prime"), p) : CovModel::identity(p);
    double q1 = get_or(cfg, "q1", std::sqrt(0.5));
    if (cfg.contains("tune")) {
        const Json& t = cfg.at("tune");
        const double gamma = t.value("gamma", 0.5);
        const CovModel guess = t.contains("s_guess") ? cov_from_json(t.at("s_guess"), p) : pm.sigma();
        const TuneResult tr = tune_sigma_prime(gamma, guess, pm, t.value("include_diagonal", false));
        body["tune"] = {{"gamma", gamma},
                        {"q1", tr.q1},
                        {"sigma_prime", tr.sigma_prime},
                        {"objective", tr.objective},
                        {"iterations", tr.iterations},
                        {"converged", tr.converged}};
        q1 = tr.q1;
        sp = CovModel::isotropic(tr.sigma_prime, p);
        table += "tuned: q1 = " + csv::format_double(tr.q1) + ", sigma' = " + csv::format_double(tr.sigma_prime) + "\n";
    }
    require(q1 > 0.0 && q1 < 1.0, "q1 must lie in (0, 1)");
    const FisherReport r = fisher_fission(pm, q1, sp);
    body["report"] = report_to_json(r);
    table += r.table();
    if (cfg.contains("plan")) {
        const Json& ps = cfg.at("plan");
        const int n = ps.value("n", 1);
        const OrthogonalPlan plan = plan_from_spec(ps, n, static_cast<int>(p), seed_of(cfg, 0));
        Json shares = Json::array();
        for (const auto& f : fisher_split(plan)) shares.push_back({{"mean", f.mean}, {"cov", f.cov}});
        body["fold_shares"] = shares;
    }
    save_json(out / "fisher.json", with_provenance(body, cfg));
    write_text(out / "fisher.txt", "# " + provenance_line(cfg) + "\n" + table);
    std::cout << table;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gaussfold: split Gaussian data into folds and validate models on them"};
    app.set_version_flag("--version", std::string(GAUSSFOLD_VERSION));
    app.require_subcommand(1);

    struct Command {
        CLI::App* app;
        Common common;
        int (*run)(Json&, const fs::path&);
    };
    std::vector<std::unique_ptr<Command>> commands;
    auto add = [&](const char* name, const char* help, int (*run)(Json&, const fs::path&)) {
        auto c = std::make_unique<Command>();
        c->app = app.add_subcommand(name, help);
        c->common.attach(c->app);
        c->run = run;
        commands.push_back(std::move(c));
        return commands.back().get();
    };

    std::string input, plan_path;
    Command* dec = add("decompose", "split a data matrix into folds", cmd_decompose);
    dec->app->add_option("-i,--input", input, "data CSV (rows are observations)");
    Command* rec = add("reconstruct", "recover the data from folds and plan.json", cmd_reconstruct);
    rec->app->add_option("-p,--plan", plan_path, "plan.json written by decompose");
    add("simulate", "selective-inference Monte Carlo over methods a, b, c", cmd_simulate);
    Command* val = add("validate-clusters", "cluster-count selection by conditional likelihood", cmd_validate_clusters);
    val->app->add_option("-i,--input", input, "a x b data CSV (omit for a synthetic study)");
    add("fisher-report", "Fisher information of a two-fold split", cmd_fisher_report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    for (const auto& c : commands) {
        if (!c->app->parsed()) continue;
        try {
            Json cfg = c->common.resolve();
            if (!input.empty()) cfg["input"] = input;
            if (!plan_path.empty()) cfg["plan"] = plan_path;
            cfg["command"] = c->app->get_name();
            const fs::path out = prepare_out(c->common.out_dir);
            return c->run(cfg, out);
        } catch (const NumericalError& e) {
            std::cerr << "numerical failure: " << e.what() << '\n';
            return kNumericalError;
        } catch (const InvalidArgument& e) {
            std::cerr << "invalid configuration: " << e.what() << '\n';
            return kConfigError;
        } catch (const IoError& e) {
            std::cerr << "io error: " << e.what() << '\n';
            return kConfigError;
        } catch (const Json::exception& e) {
            std::cerr << "invalid configuration: " << e.what() << '\n';
            return kConfigError;
        }
    }
    return kConfigError;
}
