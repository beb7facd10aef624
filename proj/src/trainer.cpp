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

#include "robustq/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "robustq/errors.hpp"
#include "robustq/numeric.hpp"

namespace robustq {

void TrainConfig::validate() const {
    if (!(discount > 0.0 && discount < 1.0))
        throw ConfigError("TrainConfig: discount must lie in (0, 1)");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (grad_steps_per_update < 1)
        throw ConfigError("TrainConfig: grad_steps_per_update must be >= 1");
    if (target_sync_period < 1) throw ConfigError("TrainConfig: target_sync_period must be >= 1");
    if (update_every < 1) throw ConfigError("TrainConfig: update_every must be >= 1");
    if (total_steps < 0) throw ConfigError("TrainConfig: total_steps must be >= 0");
    if (buffer_capacity == 0) throw ConfigError("TrainConfig: buffer_capacity must be positive");
    if (n_envs < 1) throw ConfigError("TrainConfig: n_envs must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be positive");
    if (!(explore_start >= 0.0 && explore_start <= 1.0 && explore_end >= 0.0 &&
          explore_end <= 1.0))
        throw ConfigError("TrainConfig: exploration rates must lie in [0, 1]");
    if (!(explore_frac > 0.0 && explore_frac <= 1.0))
        throw ConfigError("TrainConfig: explore_frac must lie in (0, 1]");
    if (ambiguity) ambiguity->validate();
}

std::size_t select_action(const QNetwork& net, const VecD& state, double explore_eps,
                          std::size_t num_actions, Rng& rng) {
    if (!(explore_eps >= 0.0 && explore_eps <= 1.0))
        throw InputError("select_action: explore_eps must lie in [0, 1]");
    if (explore_eps > 0.0 && rng.uniform01() < explore_eps) return rng.below(num_actions);
    const VecD q = forward(net, state);
    std::size_t best = 0;
    for (std::size_t a = 1; a < std::min(num_actions, q.size()); ++a)
        if (q[a] > q[best]) best = a;  // strict: ties keep the lowest index
    return best;
}

double exploration_eps(const TrainConfig& cfg, long step) {
    const double decay_steps =
        std::max(1.0, cfg.explore_frac * static_cast<double>(cfg.total_steps));
    const double t = std::min(1.0, static_cast<double>(step) / decay_steps);
    return cfg.explore_start + t * (cfg.explore_end - cfg.explore_start);
}

Gradients squared_loss_gradients(const QNetwork& net, std::span<const Transition> batch,
                                 std::span<const double> targets, double* loss_out) {
    if (batch.size() != targets.size())
        throw InputError("squared_loss_gradients: batch/target size mismatch");
    std::vector<VecD> states;
    std::vector<VecD> output_grads;
    states.reserve(batch.size());
    output_grads.reserve(batch.size());
    double loss = 0.0;
    std::size_t effective = 0;
    for (std::size_t i = 0; i < batch.size(); ++i)
        if (!std::isnan(targets[i])) ++effective;
    if (effective == 0) {
        if (loss_out) *loss_out = 0.0;
        return Gradients::zeros_like(net);
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (std::isnan(targets[i])) continue;  // dropped transition
        const VecD q = forward(net, batch[i].state);
        const double diff = q[static_cast<std::size_t>(batch[i].action)] - targets[i];
        loss += diff * diff;
        VecD g(net.output_dim(), 0.0);
        g[static_cast<std::size_t>(batch[i].action)] =
            2.0 * diff / static_cast<double>(effective);
        states.push_back(batch[i].state);
        output_grads.push_back(std::move(g));
    }
    loss /= static_cast<double>(effective);
    if (loss_out) *loss_out = loss;
    return backward(net, states, output_grads);
}

TrainResult train(Environment& env, const TrainConfig& cfg) {
    cfg.validate();
    Rng init_rng(mix_seed(cfg.seed, 0x6e657400ULL));  // network init stream
    Rng action_rng(mix_seed(cfg.seed, 0x61637400ULL));
    Rng env_rng(mix_seed(cfg.seed, 0x656e7600ULL));
    Rng batch_rng(mix_seed(cfg.seed, 0x62617400ULL));

    std::vector<std::size_t> sizes;
    sizes.push_back(env.state_dim());
    for (std::size_t h : cfg.hidden) sizes.push_back(h);
    sizes.push_back(env.num_actions());

    TrainResult result{QNetwork(sizes, init_rng), {}, 0, 0, 0};
    if (cfg.total_steps == 0) return result;

    QNetwork target = sync_target(result.net);
    AdamState opt = AdamState::init(result.net, cfg.lr);
    ReplayBuffer buffer(cfg.buffer_capacity);
    LambdaCache cache;

    const DualTargetModel model = env.dual_target_model(cfg.discount);
    const std::size_t num_actions = env.num_actions();

    std::vector<std::unique_ptr<Environment>> envs;
    std::vector<VecD> states;
    for (int e = 0; e < cfg.n_envs; ++e) {
        envs.push_back(env.clone());
        states.push_back(envs.back()->reset(env_rng));
    }

    const long min_fill =
        std::max<long>(cfg.warmup_steps, static_cast<long>(cfg.batch_size));
    long update_counter = 0;

    for (long t = 0; t < cfg.total_steps; ++t) {
        const std::size_t e = static_cast<std::size_t>(t % cfg.n_envs);
        const double eps = exploration_eps(cfg, t);
        const std::size_t action = select_action(result.net, states[e], eps, num_actions, action_rng);
        Environment::Outcome outcome = envs[e]->step(states[e], action, env_rng);
        const std::size_t slot = buffer.add(
            {states[e], static_cast<int>(action), outcome.reward, outcome.next_state});
        cache.invalidate(slot);  // slot reuse voids the cached multiplier
        states[e] = std::move(outcome.next_state);

        if (static_cast<long>(buffer.size()) < min_fill) continue;
        if ((t + 1) % cfg.update_every != 0) continue;

        ++update_counter;
        const std::vector<std::size_t> slots =
            buffer.sample_slots(static_cast<std::size_t>(cfg.batch_size), batch_rng);
        std::vector<Transition> batch;
        batch.reserve(slots.size());
        for (std::size_t s : slots) batch.push_back(buffer.at(s));

        const QValueFn target_fn = [&target](const VecD& x) { return forward(target, x); };
        std::vector<double> targets;
        RobustBatchStats stats;
        if (cfg.ambiguity) {
            targets = robust_target_batch(batch, slots, target_fn, model, *cfg.ambiguity, &cache,
                                          cfg.seed, static_cast<std::uint64_t>(update_counter),
                                          &stats, cfg.solver);
            result.dropped_targets += stats.dropped;
            result.nonconverged_solves += stats.nonconverged;
        } else {
            targets = dqn_target_batch(batch, target_fn, cfg.discount);
        }

        double loss = 0.0;
        for (int m = 0; m < cfg.grad_steps_per_update; ++m) {
            double step_loss = 0.0;
            Gradients g = squared_loss_gradients(result.net, batch, targets, &step_loss);
            if (m == 0) loss = step_loss;
            adam_step(result.net, g, opt);
            ++result.gradient_steps;
            if (result.gradient_steps % cfg.target_sync_period == 0)
                target = sync_target(result.net);
        }
        if (!result.net.parameters_finite())
            throw TrainingError("train: parameters became non-finite at step " + std::to_string(t));

        double mean_target = 0.0;
        int counted = 0;
        for (double tv : targets)
            if (!std::isnan(tv)) {
                mean_target += tv;
                ++counted;
            }
        if (counted > 0) mean_target /= counted;
        result.log.push_back({t + 1, loss, stats.mean_lambda, stats.eps_bar_negatives, mean_target,
                              eps});
    }
    return result;
}

double max_drawdown(const VecD& wealth_path) {
    if (wealth_path.empty()) throw InputError("max_drawdown: empty path");
    double peak = wealth_path.front();
    double worst = 0.0;
    for (double w : wealth_path) {
        peak = std::max(peak, w);
        worst = std::min(worst, w / peak - 1.0);
    }
    return worst;
}

LogReturnMetrics log_return_metrics(const VecD& log_returns, double periods_per_year) {
    if (log_returns.empty()) throw InputError("log_return_metrics: empty series");
    LogReturnMetrics m;
    const double mu = stats::mean(log_returns);
    const double sd = stats::stddev(log_returns);
    VecD zeroised = log_returns;
    for (double& r : zeroised) r = std::min(r, 0.0);
    const double dd = stats::stddev(zeroised);
    const double root_p = std::sqrt(periods_per_year);

    double log_wealth = 0.0;
    VecD wealth_path;
    wealth_path.reserve(log_returns.size() + 1);
    wealth_path.push_back(1.0);
    for (double r : log_returns) {
        log_wealth += r;
        wealth_path.push_back(std::exp(log_wealth));
    }
    m.wealth = wealth_path.back();
    m.max_drawdown = max_drawdown(wealth_path);
    m.ann_volatility = sd * root_p;
    m.sharpe = sd > 0.0 ? mu / sd * root_p : 0.0;
    m.downside_deviation = dd * root_p;
    m.sortino = dd > 0.0 ? mu / dd * root_p : 0.0;
    return m;
}

EvalStats evaluate_policy(const QNetwork& net, const Environment& env, int episodes,
                          long steps_per_episode, std::uint64_t seed) {
    if (episodes < 1) throw InputError("evaluate_policy: episodes must be >= 1");
    if (steps_per_episode < 1) throw InputError("evaluate_policy: steps_per_episode must be >= 1");
    EvalStats out;
    out.has_portfolio_metrics = env.reward_is_log_return();
    VecD wealths, drawdowns, vols, sharpes, downsides, sortinos;

    for (int ep = 0; ep < episodes; ++ep) {
        Rng rng(mix_seed(seed, 0x6576616cULL, static_cast<std::uint64_t>(ep)));
        std::unique_ptr<Environment> e = env.clone();
        VecD state = e->reset(rng);
        VecD rewards;
        rewards.reserve(static_cast<std::size_t>(steps_per_episode));
        for (long t = 0; t < steps_per_episode; ++t) {
            const std::size_t action = select_action(net, state, 0.0, e->num_actions(), rng);
            Environment::Outcome o = e->step(state, action, rng);
            rewards.push_back(o.reward);
            state = std::move(o.next_state);
        }
        out.episode_mean_rewards.push_back(stats::mean(rewards));
        if (out.has_portfolio_metrics) {
            const LogReturnMetrics m = log_return_metrics(rewards);
            wealths.push_back(m.wealth);
            drawdowns.push_back(m.max_drawdown);
            vols.push_back(m.ann_volatility);
            sharpes.push_back(m.sharpe);
            downsides.push_back(m.downside_deviation);
            sortinos.push_back(m.sortino);
        }
    }

    const VecD& em = out.episode_mean_rewards;
    out.mean = stats::mean(em);
    out.stddev = stats::stddev(em);
    out.min = stats::min(em);
    out.q05 = stats::quantile(em, 0.05);
    out.q10 = stats::quantile(em, 0.10);
    out.q50 = stats::quantile(em, 0.50);
    out.max = stats::max(em);
    if (out.has_portfolio_metrics) {
        out.wealth = stats::mean(wealths);
        out.max_drawdown = stats::mean(drawdowns);
        out.ann_volatility = stats::mean(vols);
        out.sharpe = stats::mean(sharpes);
        out.downside_deviation = stats::mean(downsides);
        out.sortino = stats::mean(sortinos);
    }
    return out;
}

}  // namespace robustq
