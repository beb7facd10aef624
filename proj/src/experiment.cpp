// Copyright 2026 The robustq Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "robustq/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "robustq/errors.hpp"
#include "robustq/numeric.hpp"

namespace robustq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

[[noreturn]] void config_fail(const std::string& path, const std::string& why) {
    throw ConfigError(path + ": " + why);
}

double get_number(const json& j, const std::string& path, const char* key, double def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number()) config_fail(path + "." + key, "expected number");
    return j[key].get<double>();
}

long get_integer(const json& j, const std::string& path, const char* key, long def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number_integer()) config_fail(path + "." + key, "expected integer");
    return j[key].get<long>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_boolean()) config_fail(path + "." + key, "expected boolean");
    return j[key].get<bool>();
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       const std::string& def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_string()) config_fail(path + "." + key, "expected string");
    return j[key].get<std::string>();
}

NuSpec parse_nu(const json& j, const std::string& path) {
    if (!j.is_object()) config_fail(path, "expected object");
    const std::string family = get_string(j, path, "family", "");
    NuSpec nu;
    if (family == "uniform") {
        nu = NuSpec::uniform(get_number(j, path, "lo", 0.0), get_number(j, path, "hi", 1.0));
    } else if (family == "beta") {
        nu = NuSpec::beta(get_number(j, path, "a", 1.0), get_number(j, path, "b", 1.0));
    } else if (family == "student_t") {
        nu = NuSpec::student_t(get_number(j, path, "loc", 0.0), get_number(j, path, "scale", 0.03),
                               get_number(j, path, "dof", 2.0));
    } else if (family == "point_mass") {
        nu = NuSpec::point_mass(get_number(j, path, "y", 0.0));
    } else if (family == "empirical") {
        if (!j.contains("samples") || !j["samples"].is_array())
            config_fail(path + ".samples", "expected array");
        std::vector<double> samples;
        for (const auto& v : j["samples"]) samples.push_back(v.get<double>());
        nu = NuSpec::empirical(std::move(samples));
    } else {
        config_fail(path + ".family",
                    "expected one of uniform|beta|student_t|point_mass|empirical");
    }
    nu.stratified = get_bool(j, path, "stratified", true);
    nu.validate();
    return nu;
}

AmbiguityConfig parse_ambiguity(const json& j, const std::string& path, const NuSpec& default_nu) {
    AmbiguityConfig cfg;
    cfg.nu = default_nu;
    cfg.epsilon = get_number(j, path, "epsilon", cfg.epsilon);
    cfg.delta = get_number(j, path, "delta", cfg.delta);
    cfg.n_nu = static_cast<int>(get_integer(j, path, "n_nu", cfg.n_nu));
    if (j.contains("nu")) cfg.nu = parse_nu(j["nu"], path + ".nu");
    const std::string policy = get_string(j, path, "epsilon_bar_policy", "error");
    if (policy == "error")
        cfg.epsilon_bar_policy = EpsilonBarPolicy::Error;
    else if (policy == "warn_and_drop")
        cfg.epsilon_bar_policy = EpsilonBarPolicy::WarnAndDrop;
    else
        config_fail(path + ".epsilon_bar_policy", "expected error|warn_and_drop");
    cfg.validate();
    return cfg;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (kind != "train" && kind != "eval" && kind != "cdf-probe" && kind != "oracle-check")
        config_fail("$.kind", "expected train|eval|cdf-probe|oracle-check");
    if (repetitions < 1) config_fail("$.repetitions", "must be >= 1");
    if (workers < 1) config_fail("$.workers", "must be >= 1");
    if (env.name != "gambling" && env.name != "portfolio")
        config_fail("$.env.name", "expected gambling|portfolio");
    if (env.name == "gambling") {
        if (!(env.true_alpha > 0.0 && env.true_beta > 0.0))
            config_fail("$.env.true_alpha/true_beta", "must be positive");
        if (env.fit_samples < 2) config_fail("$.env.fit_samples", "must be >= 2");
        if (!(env.reward_factor > 0.0)) config_fail("$.env.reward_factor", "must be positive");
    }
    if (eval.mode != "true" && eval.mode != "reference")
        config_fail("$.eval.mode", "expected true|reference");
    if (eval.episodes < 1) config_fail("$.eval.episodes", "must be >= 1");
    if (eval.steps_per_episode < 1) config_fail("$.eval.steps_per_episode", "must be >= 1");
    if (kind == "train" || kind == "eval") train.validate();
    if (kind == "cdf-probe") probe.validate();
    if (kind == "eval" && checkpoint_dir.empty())
        config_fail("$.checkpoint_dir", "required for eval");
    if (env.name == "portfolio" && env.simulator != "synthetic" && env.simulator != "csv")
        config_fail("$.env.simulator", "expected synthetic|csv");
    if (env.name == "portfolio" && env.simulator == "csv" && env.csv_path.empty())
        config_fail("$.env.csv_path", "required when simulator is csv");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    cfg.kind = get_string(j, "$", "kind", "");
    cfg.seed = static_cast<std::uint64_t>(get_integer(j, "$", "seed", 1));
    cfg.out_dir = get_string(j, "$", "out", cfg.out_dir);
    cfg.overwrite = get_bool(j, "$", "overwrite", false);
    cfg.repetitions = static_cast<int>(get_integer(j, "$", "repetitions", 1));
    cfg.workers = static_cast<int>(get_integer(j, "$", "workers", 1));
    cfg.checkpoint_dir = get_string(j, "$", "checkpoint_dir", "");

    if (j.contains("env")) {
        const json& e = j["env"];
        cfg.env.name = get_string(e, "$.env", "name", cfg.env.name);
        cfg.env.reward_factor = get_number(e, "$.env", "reward_factor", cfg.env.reward_factor);
        cfg.env.true_alpha = get_number(e, "$.env", "true_alpha", cfg.env.true_alpha);
        cfg.env.true_beta = get_number(e, "$.env", "true_beta", cfg.env.true_beta);
        cfg.env.fit_samples =
            static_cast<int>(get_integer(e, "$.env", "fit_samples", cfg.env.fit_samples));
        cfg.env.simulator = get_string(e, "$.env", "simulator", cfg.env.simulator);
        cfg.env.csv_path = get_string(e, "$.env", "csv_path", cfg.env.csv_path);
        cfg.env.portfolio.transaction_cost =
            get_number(e, "$.env", "transaction_cost", cfg.env.portfolio.transaction_cost);
        cfg.env.train_transaction_cost = get_number(e, "$.env", "train_transaction_cost",
                                                    cfg.env.portfolio.transaction_cost);
        cfg.env.portfolio.risk_free =
            get_number(e, "$.env", "risk_free", cfg.env.portfolio.risk_free);
        cfg.env.portfolio.log_return_bound =
            get_number(e, "$.env", "log_return_bound", cfg.env.portfolio.log_return_bound);
    }

    if (j.contains("train")) {
        const json& t = j["train"];
        TrainConfig& tc = cfg.train;
        tc.discount = get_number(t, "$.train", "discount", tc.discount);
        tc.batch_size = static_cast<int>(get_integer(t, "$.train", "batch_size", tc.batch_size));
        tc.grad_steps_per_update = static_cast<int>(
            get_integer(t, "$.train", "grad_steps_per_update", tc.grad_steps_per_update));
        tc.target_sync_period = static_cast<int>(
            get_integer(t, "$.train", "target_sync_period", tc.target_sync_period));
        tc.update_every =
            static_cast<int>(get_integer(t, "$.train", "update_every", tc.update_every));
        tc.total_steps = get_integer(t, "$.train", "total_steps", tc.total_steps);
        tc.warmup_steps = get_integer(t, "$.train", "warmup_steps", tc.warmup_steps);
        tc.buffer_capacity = static_cast<std::size_t>(
            get_integer(t, "$.train", "buffer_capacity", static_cast<long>(tc.buffer_capacity)));
        tc.lr = get_number(t, "$.train", "lr", tc.lr);
        tc.n_envs = static_cast<int>(get_integer(t, "$.train", "n_envs", tc.n_envs));
        tc.explore_start = get_number(t, "$.train", "explore_start", tc.explore_start);
        tc.explore_end = get_number(t, "$.train", "explore_end", tc.explore_end);
        tc.explore_frac = get_number(t, "$.train", "explore_frac", tc.explore_frac);
        if (t.contains("hidden")) {
            if (!t["hidden"].is_array()) config_fail("$.train.hidden", "expected array");
            tc.hidden.clear();
            for (const auto& h : t["hidden"]) {
                const long v = h.get<long>();
                if (v < 1) config_fail("$.train.hidden", "layer sizes must be positive");
                tc.hidden.push_back(static_cast<std::size_t>(v));
            }
        }
    }
    if (j.contains("ambiguity") && !j["ambiguity"].is_null()) {
        // the trading environment's natural prior is a heavy-tailed
        // location-scale law on the log return
        const NuSpec default_nu = cfg.env.name == "portfolio"
                                      ? NuSpec::student_t(0.0, 0.03, 2.0)
                                      : NuSpec::uniform(0.0, 1.0);
        cfg.train.ambiguity = parse_ambiguity(j["ambiguity"], "$.ambiguity", default_nu);
    }

    if (j.contains("eval")) {
        const json& e = j["eval"];
        cfg.eval.episodes = static_cast<int>(get_integer(e, "$.eval", "episodes", cfg.eval.episodes));
        cfg.eval.steps_per_episode =
            get_integer(e, "$.eval", "steps_per_episode", cfg.eval.steps_per_episode);
        cfg.eval.mode = get_string(e, "$.eval", "mode", cfg.eval.mode);
    }

    if (j.contains("cdf_probe")) {
        const json& p = j["cdf_probe"];
        CdfProbeParams& pp = cfg.probe;
        pp.ref_alpha = get_number(p, "$.cdf_probe", "ref_alpha", pp.ref_alpha);
        pp.ref_beta = get_number(p, "$.cdf_probe", "ref_beta", pp.ref_beta);
        pp.epsilon = get_number(p, "$.cdf_probe", "epsilon", pp.epsilon);
        pp.discount = get_number(p, "$.cdf_probe", "discount", pp.discount);
        pp.n_nu = static_cast<int>(get_integer(p, "$.cdf_probe", "n_nu", pp.n_nu));
        pp.outer_nodes =
            static_cast<int>(get_integer(p, "$.cdf_probe", "outer_nodes", pp.outer_nodes));
        pp.value_sweeps =
            static_cast<int>(get_integer(p, "$.cdf_probe", "value_sweeps", pp.value_sweeps));
        if (p.contains("deltas")) {
            if (!p["deltas"].is_array()) config_fail("$.cdf_probe.deltas", "expected array");
            pp.deltas.clear();
            for (const auto& d : p["deltas"]) pp.deltas.push_back(d.get<double>());
        }
        const long grid_points = get_integer(p, "$.cdf_probe", "grid_points", 41);
        if (grid_points < 2) config_fail("$.cdf_probe.grid_points", "must be >= 2");
        pp.grid.resize(static_cast<std::size_t>(grid_points));
        for (long i = 0; i < grid_points; ++i)
            pp.grid[static_cast<std::size_t>(i)] =
                static_cast<double>(i) / static_cast<double>(grid_points - 1);
        if (p.contains("nu")) pp.nu = parse_nu(p["nu"], "$.cdf_probe.nu");
    }

    if (j.contains("oracle_check")) {
        const json& o = j["oracle_check"];
        cfg.oracle.duality_instances = static_cast<int>(
            get_integer(o, "$.oracle_check", "duality_instances", cfg.oracle.duality_instances));
        cfg.oracle.duality_tol =
            get_number(o, "$.oracle_check", "duality_tol", cfg.oracle.duality_tol);
        cfg.oracle.sweep_gap_tol =
            get_number(o, "$.oracle_check", "sweep_gap_tol", cfg.oracle.sweep_gap_tol);
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

std::string resolve_output_dir(const std::string& requested, bool overwrite) {
    fs::path base(requested);
    if (overwrite || !fs::exists(base) || fs::is_empty(base)) {
        fs::create_directories(base);
        return base.string();
    }
    // never append into an existing run: pick a fresh timestamped subdirectory
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::gmtime(&tt));
    fs::path candidate = base / stamp;
    int suffix = 1;
    while (fs::exists(candidate)) candidate = base / (std::string(stamp) + "-" + std::to_string(suffix++));
    fs::create_directories(candidate);
    return candidate.string();
}

std::uint64_t game_seed(const ExperimentConfig& cfg, int game) {
    return mix_seed(cfg.seed, 0x67616d65ULL, static_cast<std::uint64_t>(game));
}

BetaFit game_reference_fit(const ExperimentConfig& cfg, int game) {
    Rng rng(mix_seed(game_seed(cfg, game), 0x66697400ULL));
    std::vector<double> samples(static_cast<std::size_t>(cfg.env.fit_samples));
    for (double& s : samples) s = rng.beta(cfg.env.true_alpha, cfg.env.true_beta);
    return fit_beta_mom(samples);
}

namespace {

std::unique_ptr<ReturnSimulator> make_simulator(const ExperimentConfig& cfg, bool historical) {
    if (historical) {
        PriceSeries series = load_price_csv(cfg.env.csv_path);
        return std::make_unique<HistoricalReplaySimulator>(std::move(series), cfg.env.portfolio);
    }
    return std::make_unique<SyntheticHeavyTailSimulator>(cfg.env.synthetic_model,
                                                         cfg.env.portfolio);
}

}  // namespace

std::unique_ptr<Environment> make_train_env(const ExperimentConfig& cfg, int game) {
    if (cfg.env.name == "gambling") {
        const BetaFit fit = game_reference_fit(cfg, game);
        GamblingParams true_p{cfg.env.true_alpha, cfg.env.true_beta, cfg.env.reward_factor};
        GamblingParams ref_p{fit.alpha, fit.beta, cfg.env.reward_factor};
        // agents always train against the fitted reference law
        return std::make_unique<GamblingEnv>(true_p, ref_p, GamblingMode::ReferenceDist);
    }
    PortfolioParams params = cfg.env.portfolio;
    params.transaction_cost = cfg.env.train_transaction_cost;
    return std::make_unique<PortfolioEnv>(make_simulator(cfg, cfg.env.simulator == "csv"), params);
}

std::unique_ptr<Environment> make_eval_env(const ExperimentConfig& cfg, int game) {
    if (cfg.env.name == "gambling") {
        const BetaFit fit = game_reference_fit(cfg, game);
        GamblingParams true_p{cfg.env.true_alpha, cfg.env.true_beta, cfg.env.reward_factor};
        GamblingParams ref_p{fit.alpha, fit.beta, cfg.env.reward_factor};
        const GamblingMode mode =
            cfg.eval.mode == "true" ? GamblingMode::TrueDist : GamblingMode::ReferenceDist;
        return std::make_unique<GamblingEnv>(true_p, ref_p, mode);
    }
    const bool historical = cfg.eval.mode == "true";
    if (historical && cfg.env.csv_path.empty())
        throw ConfigError("$.env.csv_path: required to evaluate the portfolio on the true series");
    return std::make_unique<PortfolioEnv>(make_simulator(cfg, historical), cfg.env.portfolio);
}

namespace {

std::string checkpoint_name(int game) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ckpt_g%03d.txt", game);
    return buf;
}

std::string train_log_name(int game) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "train_log_g%03d.csv", game);
    return buf;
}

/// Runs fn(game) for every game on `workers` threads; results land in a
/// vector indexed by game so aggregation is scheduling-independent.
void parallel_games(int repetitions, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1) {
        for (int g = 0; g < repetitions; ++g) fn(g);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const int g = next.fetch_add(1);
                if (g >= repetitions) return;
                try {
                    fn(g);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IngestError("write_train_log_csv: cannot open " + path);
    out << "step,loss,mean_lambda,eps_bar_negatives,mean_target,explore_eps\n";
    for (const TrainLogRow& r : rows)
        out << r.step << ',' << fmt(r.loss) << ',' << fmt(r.mean_lambda) << ','
            << r.eps_bar_negatives << ',' << fmt(r.mean_target) << ',' << fmt(r.explore_eps)
            << '\n';
}

void write_summary_csv(const std::string& path, const std::vector<GameResult>& games) {
    std::ofstream out(path);
    if (!out) throw IngestError("write_summary_csv: cannot open " + path);
    out << "game,mean,std,min,q05,q10,q50,max\n";
    for (const GameResult& g : games)
        out << g.game << ',' << fmt(g.stats.mean) << ',' << fmt(g.stats.stddev) << ','
            << fmt(g.stats.min) << ',' << fmt(g.stats.q05) << ',' << fmt(g.stats.q10) << ','
            << fmt(g.stats.q50) << ',' << fmt(g.stats.max) << '\n';
}

void write_summary_json(const std::string& path, const std::vector<GameResult>& games) {
    VecD means;
    for (const GameResult& g : games) means.push_back(g.stats.mean);
    json j;
    j["games"] = games.size();
    j["mean"] = stats::mean(means);
    j["std"] = stats::stddev(means);
    j["min"] = stats::min(means);
    j["q05"] = stats::quantile(means, 0.05);
    j["q10"] = stats::quantile(means, 0.10);
    j["q50"] = stats::quantile(means, 0.50);
    j["max"] = stats::max(means);
    if (games.front().stats.has_portfolio_metrics) {
        VecD wealth, dd;
        for (const GameResult& g : games) {
            wealth.push_back(g.stats.wealth);
            dd.push_back(g.stats.max_drawdown);
        }
        j["wealth"] = stats::mean(wealth);
        j["max_drawdown"] = stats::mean(dd);
    }
    std::ofstream out(path);
    if (!out) throw IngestError("write_summary_json: cannot open " + path);
    out << j.dump(2) << '\n';
}

RunSummary run_train(const ExperimentConfig& cfg) {
    cfg.validate();
    RunSummary summary;
    summary.out_dir = resolve_output_dir(cfg.out_dir, cfg.overwrite);
    summary.games.resize(static_cast<std::size_t>(cfg.repetitions));

    parallel_games(cfg.repetitions, cfg.workers, [&](int g) {
        std::unique_ptr<Environment> env = make_train_env(cfg, g);
        TrainConfig tc = cfg.train;
        tc.seed = game_seed(cfg, g);
        const TrainResult trained = train(*env, tc);

        const std::string ckpt = (fs::path(summary.out_dir) / checkpoint_name(g)).string();
        save_checkpoint(trained.net, ckpt);
        write_train_log_csv((fs::path(summary.out_dir) / train_log_name(g)).string(), trained.log);

        std::unique_ptr<Environment> eval_env = make_eval_env(cfg, g);
        const EvalStats stats =
            evaluate_policy(trained.net, *eval_env, cfg.eval.episodes, cfg.eval.steps_per_episode,
                            mix_seed(game_seed(cfg, g), 0x65766c00ULL));
        summary.games[static_cast<std::size_t>(g)] = {g, stats, ckpt};
    });

    write_summary_csv((fs::path(summary.out_dir) / "summary.csv").string(), summary.games);
    write_summary_json((fs::path(summary.out_dir) / "summary.json").string(), summary.games);
    return summary;
}

RunSummary run_eval(const ExperimentConfig& cfg) {
    cfg.validate();
    // fail fast with the full list of missing checkpoints
    std::vector<std::string> missing;
    for (int g = 0; g < cfg.repetitions; ++g) {
        const std::string path = (fs::path(cfg.checkpoint_dir) / checkpoint_name(g)).string();
        if (!fs::exists(path)) missing.push_back(path);
    }
    if (!missing.empty()) {
        std::string msg = "run_eval: missing checkpoints:";
        for (const std::string& m : missing) msg += "\n  " + m;
        throw IngestError(msg);
    }

    RunSummary summary;
    summary.out_dir = resolve_output_dir(cfg.out_dir, cfg.overwrite);
    summary.games.resize(static_cast<std::size_t>(cfg.repetitions));
    parallel_games(cfg.repetitions, cfg.workers, [&](int g) {
        const std::string ckpt = (fs::path(cfg.checkpoint_dir) / checkpoint_name(g)).string();
        const QNetwork net = load_checkpoint(ckpt);
        std::unique_ptr<Environment> eval_env = make_eval_env(cfg, g);
        const EvalStats stats =
            evaluate_policy(net, *eval_env, cfg.eval.episodes, cfg.eval.steps_per_episode,
                            mix_seed(game_seed(cfg, g), 0x65766c00ULL));
        summary.games[static_cast<std::size_t>(g)] = {g, stats, ckpt};
    });
    write_summary_csv((fs::path(summary.out_dir) / "summary.csv").string(), summary.games);
    write_summary_json((fs::path(summary.out_dir) / "summary.json").string(), summary.games);
    return summary;
}

std::string run_cdf_probe(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::string out_dir = resolve_output_dir(cfg.out_dir, cfg.overwrite);
    const std::vector<CdfCurve> curves = worst_case_cdf(cfg.probe);
    json manifest;
    manifest["epsilon"] = cfg.probe.epsilon;
    manifest["files"] = json::array();
    for (const CdfCurve& c : curves) {
        char name[64];
        std::snprintf(name, sizeof name, "curve_delta_%g.csv", c.delta);
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path);
        if (!out) throw IngestError("run_cdf_probe: cannot open " + path);
        out << "x0,value\n";
        for (std::size_t i = 0; i < c.x0.size(); ++i)
            out << fmt(c.x0[i]) << ',' << fmt(c.value[i]) << '\n';
        manifest["files"].push_back(name);
    }
    std::ofstream mf((fs::path(out_dir) / "manifest.json").string());
    mf << manifest.dump(2) << '\n';
    return out_dir;
}

namespace {

/// Random feasible instance: the radius always covers the self-distance so
/// the reference weights sit inside the ball and the one-sample duality
/// precondition holds.
DiscreteRobustInstance random_instance(Rng& rng, int min_points = 2, int max_points = 4) {
    DiscreteRobustInstance inst;
    const int n = min_points + static_cast<int>(rng.below(
                                   static_cast<std::uint64_t>(max_points - min_points + 1)));
    for (int i = 0; i < n; ++i) inst.support.push_back({rng.uniform(0.0, 1.5)});
    auto simplex = [&](double floor) {
        VecD w(static_cast<std::size_t>(n));
        double s = 0.0;
        for (double& x : w) {
            x = floor + rng.uniform01();
            s += x;
        }
        for (double& x : w) x /= s;
        return w;
    };
    inst.p_hat = simplex(0.0);
    inst.nu = simplex(0.15);  // keep the prior comfortably full-support
    inst.payoff.resize(static_cast<std::size_t>(n));
    for (double& f : inst.payoff) f = rng.uniform(-1.0, 1.0);
    inst.delta = rng.uniform(0.05, 0.5);
    inst.epsilon = 1.0;  // placeholder until the self-distance is known
    const double self = sinkhorn_distance_discrete(
        inst, std::span<const double>(inst.p_hat.data(), inst.p_hat.size()));
    inst.epsilon = self + rng.uniform(0.02, 0.35);
    return inst;
}

}  // namespace

OracleCheckReport run_oracle_check(const ExperimentConfig& cfg, const OracleCheckOptions& opts) {
    OracleCheckReport report;
    const std::string out_dir = resolve_output_dir(cfg.out_dir, cfg.overwrite);
    const auto dual_post = opts.dual_post ? opts.dual_post : [](double v) { return v; };

    // strong duality on random instances
    {
        Rng rng(mix_seed(cfg.seed, 0x6f726163ULL));
        double worst = 0.0;
        std::optional<DiscreteRobustInstance> failing;
        for (int i = 0; i < cfg.oracle.duality_instances; ++i) {
            const DiscreteRobustInstance inst = random_instance(rng);
            const double dual = dual_post(dual_robust_value_discrete(inst));
            const PrimalResult primal = primal_robust_value(inst);
            const double gap = primal.feasible ? std::abs(primal.value - dual) : 1e9;
            if (gap > worst) {
                worst = gap;
                if (gap > cfg.oracle.duality_tol) failing = inst;
            }
        }
        report.lines.push_back({"strong_duality", worst <= cfg.oracle.duality_tol, worst,
                                cfg.oracle.duality_tol});
        if (failing) {
            report.failing_instance_path =
                (fs::path(out_dir) / "failing_instance.txt").string();
            save_instance(*failing, report.failing_instance_path);
        }
    }

    // nesting: tighter radius and stronger regularization shrink the ball
    {
        DiscreteRobustInstance inst;
        inst.support = {{0.0}, {0.6}, {1.2}};
        inst.p_hat = {0.5, 0.3, 0.2};
        inst.nu = {0.4, 0.35, 0.25};
        inst.payoff = {1.0, 0.2, -0.5};
        inst.delta = 0.1;
        double violation = 0.0;
        double prev = 1e300;
        for (double eps : {0.12, 0.2, 0.3, 0.45}) {
            inst.epsilon = eps;
            const double v = dual_robust_value_discrete(inst);
            violation = std::max(violation, v - prev);  // must be non-increasing in eps
            prev = v;
        }
        inst.epsilon = 0.3;
        prev = -1e300;
        for (double delta : {0.05, 0.1, 0.3}) {
            inst.delta = delta;
            const double v = dual_robust_value_discrete(inst);
            violation = std::max(violation, prev - v);  // must be non-decreasing in delta
            prev = v;
        }
        report.lines.push_back({"nesting_monotonicity", violation <= 1e-9, violation, 1e-9});
    }

    // vanishing regularization approaches the unregularized transport value
    {
        DiscreteRobustInstance inst;
        inst.support = {{0.0}, {1.0}};
        inst.p_hat = {0.7, 0.3};
        inst.nu = {0.5, 0.5};
        inst.payoff = {1.0, 0.0};
        inst.epsilon = 0.2;
        inst.delta = 0.0;
        const PrimalResult lp = primal_robust_value(inst);
        double prev = 1e300;
        double violation = 0.0;
        double final_gap = 0.0;
        for (double delta : {1e-1, 1e-2, 1e-3}) {
            inst.delta = delta;
            const double v = dual_robust_value_discrete(inst);
            violation = std::max(violation, v - prev);              // decreasing in delta
            violation = std::max(violation, lp.value - v - 1e-9);   // bounded below by the LP value
            final_gap = v - lp.value;
            prev = v;
        }
        const bool pass = violation <= 1e-9 && final_gap <= cfg.oracle.sweep_gap_tol &&
                          final_gap >= -1e-9;
        report.lines.push_back(
            {"vanishing_regularization_gap", pass, final_gap, cfg.oracle.sweep_gap_tol});
        if (violation > 1e-9)
            report.lines.push_back({"vanishing_regularization_monotone", false, violation, 1e-9});
    }

    report.all_pass = true;
    for (const OracleCheckLine& l : report.lines) report.all_pass = report.all_pass && l.pass;

    std::ofstream out((fs::path(out_dir) / "report.txt").string());
    for (const OracleCheckLine& l : report.lines)
        out << (l.pass ? "PASS" : "FAIL") << ' ' << l.name << " observed=" << fmt(l.observed)
            << " tolerance=" << fmt(l.tolerance) << '\n';
    return report;
}

}  // namespace robustq
