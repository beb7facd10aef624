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

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "robustq/experiment.hpp"
#include "robustq/numeric.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string checkpoint_dir;
    long seed = -1;
    int workers = 0;
    bool overwrite = false;
};

void add_common(CLI::App* cmd, CommonFlags* flags, bool config_required = true) {
    auto* opt = cmd->add_option("--config", flags->config_path, "JSON experiment config");
    if (config_required) opt->required();
    cmd->add_option("--seed", flags->seed, "Override the config seed");
    cmd->add_option("--out", flags->out_dir, "Override the output directory");
    cmd->add_option("--workers", flags->workers, "Override the worker count");
    cmd->add_option("--checkpoints", flags->checkpoint_dir,
                    "Directory holding ckpt_gNNN.txt files (eval)");
    cmd->add_flag("--overwrite", flags->overwrite,
                  "Write into the output directory even if it already has files");
}

robustq::ExperimentConfig load_with_overrides(const CommonFlags& flags,
                                              const std::string& expected_kind) {
    robustq::ExperimentConfig cfg = flags.config_path.empty()
                                        ? robustq::ExperimentConfig{}
                                        : robustq::load_experiment_config(flags.config_path);
    if (flags.config_path.empty()) cfg.kind = expected_kind;
    if (cfg.kind != expected_kind)
        throw robustq::ConfigError("$.kind: config declares '" + cfg.kind +
                                   "' but the subcommand is '" + expected_kind + "'");
    if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.workers > 0) cfg.workers = flags.workers;
    if (!flags.checkpoint_dir.empty()) cfg.checkpoint_dir = flags.checkpoint_dir;
    if (flags.overwrite) cfg.overwrite = true;
    cfg.validate();
    return cfg;
}

void print_summary(const robustq::RunSummary& summary) {
    std::printf("out: %s\n", summary.out_dir.c_str());
    robustq::VecD means;
    for (const auto& g : summary.games) means.push_back(g.stats.mean);
    std::printf("games=%zu mean=%.6f q05=%.6f q50=%.6f\n", summary.games.size(),
                robustq::stats::mean(means), robustq::stats::quantile(means, 0.05),
                robustq::stats::quantile(means, 0.50));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributionally robust Q-learning toolkit"};
    app.require_subcommand(1);

    CommonFlags train_flags, eval_flags, probe_flags, oracle_flags;
    CLI::App* train_cmd = app.add_subcommand("train", "Run repeated training games");
    add_common(train_cmd, &train_flags);
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate saved checkpoints");
    add_common(eval_cmd, &eval_flags);
    CLI::App* probe_cmd = app.add_subcommand("cdf-probe", "Worst-case CDF curves per delta");
    add_common(probe_cmd, &probe_flags);
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle-check", "Run the oracle self-check suite");
    add_common(oracle_cmd, &oracle_flags, /*config_required=*/false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            print_summary(robustq::run_train(load_with_overrides(train_flags, "train")));
        } else if (eval_cmd->parsed()) {
            print_summary(robustq::run_eval(load_with_overrides(eval_flags, "eval")));
        } else if (probe_cmd->parsed()) {
            const std::string out =
                robustq::run_cdf_probe(load_with_overrides(probe_flags, "cdf-probe"));
            std::printf("out: %s\n", out.c_str());
        } else if (oracle_cmd->parsed()) {
            robustq::ExperimentConfig cfg = load_with_overrides(oracle_flags, "oracle-check");
            const robustq::OracleCheckReport report = robustq::run_oracle_check(cfg);
            for (const auto& line : report.lines)
                std::printf("%s %s observed=%.3g tolerance=%.3g\n",
                            line.pass ? "PASS" : "FAIL", line.name.c_str(), line.observed,
                            line.tolerance);
            if (!report.all_pass) {
                if (!report.failing_instance_path.empty())
                    std::fprintf(stderr, "failing instance: %s\n",
                                 report.failing_instance_path.c_str());
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
