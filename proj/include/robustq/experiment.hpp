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
//
// Config-driven experiment runner behind the command-line tool: repeated
// training games with fresh method-of-moments fits, checkpointed evaluation,
// the worst-case-CDF probe, and the oracle self-check suite. All randomness
// derives from the single config seed; per-game work parallelizes over a
// worker pool with deterministic aggregation.

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "robustq/cdf_probe.hpp"
#include "robustq/env.hpp"
#include "robustq/gambling.hpp"
#include "robustq/oracle.hpp"
#include "robustq/portfolio.hpp"
#include "robustq/trainer.hpp"

namespace robustq {

struct EnvSpec {
    std::string name = "gambling";  // gambling | portfolio

    // gambling
    double reward_factor = 5.0;
    double true_alpha = 1.2;
    double true_beta = 2.0;
    int fit_samples = 5;

    // portfolio
    std::string simulator = "synthetic";  // synthetic | csv
    std::string csv_path;
    PortfolioParams portfolio;
    double train_transaction_cost = 0.0005;
    SyntheticHeavyTailSimulator::Model synthetic_model;
};

struct EvalSpec {
    int episodes = 10;
    long steps_per_episode = 10000;
    // gambling: "true" evaluates under the true law, "reference" under the
    // fitted one. portfolio: "reference" uses the synthetic simulator,
    // "true" replays the ingested price series.
    std::string mode = "true";
};

struct OracleCheckSpec {
    int duality_instances = 50;
    double duality_tol = 1e-3;
    double sweep_gap_tol = 5e-3;
};

struct ExperimentConfig {
    std::string kind;  // train | eval | cdf-probe | oracle-check
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";
    bool overwrite = false;
    int repetitions = 1;
    int workers = 1;
    EnvSpec env;
    TrainConfig train;
    EvalSpec eval;
    CdfProbeParams probe;
    OracleCheckSpec oracle;
    std::string checkpoint_dir;  // eval: where ckpt_gNNN.txt live

    void validate() const;  // throws ConfigError with the offending field path
};

/// Parses and validates a JSON config file. Field errors name their path,
/// e.g. "$.train.batch_size: expected positive integer".
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text);

/// Returns the directory to write into: the requested one when it is unused
/// or --overwrite is set, otherwise a fresh timestamped subdirectory.
/// Creates the directory.
std::string resolve_output_dir(const std::string& requested, bool overwrite);

/// Reproducible per-game derivations.
std::uint64_t game_seed(const ExperimentConfig& cfg, int game);
BetaFit game_reference_fit(const ExperimentConfig& cfg, int game);

std::unique_ptr<Environment> make_train_env(const ExperimentConfig& cfg, int game);
std::unique_ptr<Environment> make_eval_env(const ExperimentConfig& cfg, int game);

struct GameResult {
    int game = 0;
    EvalStats stats;
    std::string checkpoint_path;
};

struct RunSummary {
    std::string out_dir;
    std::vector<GameResult> games;
};

/// Per game: fit the reference, train, checkpoint, log, evaluate. Writes
/// ckpt_gNNN.txt, train_log_gNNN.csv, summary.csv (one row per game) and
/// summary.json (aggregate over the per-game means).
RunSummary run_train(const ExperimentConfig& cfg);

/// Loads ckpt_gNNN.txt for each game from checkpoint_dir and evaluates under
/// the configured mode. Missing checkpoints raise IngestError listing paths.
RunSummary run_eval(const ExperimentConfig& cfg);

/// Emits one curve CSV per configured delta (x0,value rows) plus a manifest.
std::string run_cdf_probe(const ExperimentConfig& cfg);

struct OracleCheckLine {
    std::string name;
    bool pass = false;
    double observed = 0.0;
    double tolerance = 0.0;
};

struct OracleCheckReport {
    bool all_pass = false;
    std::vector<OracleCheckLine> lines;
    std::string failing_instance_path;  // serialized offending instance, if any
};

struct OracleCheckOptions {
    /// Applied to every dual value in the duality check; identity in
    /// production, replaceable by tests to verify the checker trips.
    std::function<double(double)> dual_post;
};

/// Strong-duality, nesting and vanishing-regularization suites over seeded
/// random and fixed instances. Writes report.txt; serializes the first
/// failing instance next to it.
OracleCheckReport run_oracle_check(const ExperimentConfig& cfg,
                                   const OracleCheckOptions& opts = {});

/// Writers shared by the runners (exposed for tests).
void write_summary_csv(const std::string& path, const std::vector<GameResult>& games);
void write_summary_json(const std::string& path, const std::vector<GameResult>& games);
void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows);

}  // namespace robustq
