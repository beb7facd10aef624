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
// Training loop shared by the plain and the robust algorithm: environment
// interaction with linear epsilon-greedy decay, a ring replay buffer, squared
// error against bootstrap targets (robust dual targets when an ambiguity
// config is present), and a periodically synchronized target network.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "robustq/env.hpp"
#include "robustq/nn.hpp"
#include "robustq/replay.hpp"
#include "robustq/sinkhorn_dual.hpp"

namespace robustq {

struct TrainConfig {
    double discount = 0.9;
    int batch_size = 32;
    int grad_steps_per_update = 1;   // gradient steps per sampled batch
    int target_sync_period = 250;    // gradient steps between hard target copies
    int update_every = 1;            // environment steps between updates
    long total_steps = 6000;
    long warmup_steps = 500;         // buffer fill before the first update
    std::size_t buffer_capacity = 4096;
    std::vector<std::size_t> hidden{32, 32};
    double lr = 1e-3;
    int n_envs = 1;                  // round-robin stepped instances
    std::uint64_t seed = 0;
    double explore_start = 1.0;
    double explore_end = 0.05;
    double explore_frac = 0.5;       // fraction of total steps spent decaying
    std::optional<AmbiguityConfig> ambiguity;  // absent: plain DQN
    SolveOptions solver{};

    void validate() const;  // throws ConfigError
};

struct TrainLogRow {
    long step = 0;
    double loss = 0.0;
    double mean_lambda = 0.0;
    int eps_bar_negatives = 0;
    double mean_target = 0.0;
    double explore_eps = 0.0;
};

struct TrainResult {
    QNetwork net;
    std::vector<TrainLogRow> log;
    long gradient_steps = 0;
    long dropped_targets = 0;
    long nonconverged_solves = 0;
};

/// Epsilon-greedy action; greedy ties break to the lowest index.
std::size_t select_action(const QNetwork& net, const VecD& state, double explore_eps,
                          std::size_t num_actions, Rng& rng);

/// Linear decay from explore_start to explore_end over explore_frac of the run.
double exploration_eps(const TrainConfig& cfg, long step);

/// Mean squared error gradients against fixed targets; only the taken
/// action's output carries a gradient. NaN targets (dropped transitions) are
/// excluded from the average. Returns the batch loss through loss_out.
Gradients squared_loss_gradients(const QNetwork& net, std::span<const Transition> batch,
                                 std::span<const double> targets, double* loss_out);

TrainResult train(Environment& env, const TrainConfig& cfg);

struct EvalStats {
    VecD episode_mean_rewards;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double q05 = 0.0;
    double q10 = 0.0;
    double q50 = 0.0;
    double max = 0.0;
    // Portfolio metrics (episode means), populated when rewards are log
    // returns. Volatility and the ratios are annualized with 252 periods;
    // downside deviation zeroises positive log returns first.
    bool has_portfolio_metrics = false;
    double wealth = 0.0;
    double max_drawdown = 0.0;
    double ann_volatility = 0.0;
    double sharpe = 0.0;
    double downside_deviation = 0.0;
    double sortino = 0.0;
};

/// Greedy rollouts on cloned environment instances; per-episode seeds derive
/// from the passed stream so episodes are independent and reproducible.
EvalStats evaluate_policy(const QNetwork& net, const Environment& env, int episodes,
                          long steps_per_episode, std::uint64_t seed);

/// Risk metrics for a single log-return series (exposed for the portfolio
/// summary and its tests).
struct LogReturnMetrics {
    double wealth = 0.0;
    double max_drawdown = 0.0;
    double ann_volatility = 0.0;
    double sharpe = 0.0;
    double downside_deviation = 0.0;
    double sortino = 0.0;
};
LogReturnMetrics log_return_metrics(const VecD& log_returns, double periods_per_year = 252.0);

/// Maximum peak-to-trough ratio loss of a wealth path, as a negative number.
double max_drawdown(const VecD& wealth_path);

}  // namespace robustq
