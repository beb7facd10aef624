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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "robustq/errors.hpp"
#include "robustq/portfolio.hpp"
#include "robustq/trainer.hpp"

using namespace robustq;

namespace {

/// Two states {0, 1}; the matching action pays 1, the other 0; the state
/// toggles deterministically. Small enough that value iteration is exact.
class ToggleEnv : public Environment {
public:
    std::size_t state_dim() const override { return 1; }
    std::size_t num_actions() const override { return 2; }
    double action_value(std::size_t action) const override { return static_cast<double>(action); }
    VecD reset(Rng& rng) override { return {static_cast<double>(rng.below(2))}; }
    Outcome step(const VecD& state, std::size_t action, Rng&) override {
        const VecD next{1.0 - state[0]};
        return {next, reward(state, action, next)};
    }
    double reward(const VecD& state, std::size_t action, const VecD&) const override {
        return (state[0] > 0.5) == (action == 1) ? 1.0 : 0.0;
    }
    VecD state_from_nu(const VecD&, std::size_t, double y) const override { return {y}; }
    std::unique_ptr<Environment> clone() const override { return std::make_unique<ToggleEnv>(*this); }
};

/// Reward is a constant on every step.
class ConstRewardEnv : public Environment {
public:
    explicit ConstRewardEnv(double r) : r_(r) {}
    std::size_t state_dim() const override { return 1; }
    std::size_t num_actions() const override { return 2; }
    double action_value(std::size_t action) const override { return static_cast<double>(action); }
    VecD reset(Rng&) override { return {0.0}; }
    Outcome step(const VecD& state, std::size_t, Rng&) override { return {state, r_}; }
    double reward(const VecD&, std::size_t, const VecD&) const override { return r_; }
    VecD state_from_nu(const VecD&, std::size_t, double y) const override { return {y}; }
    std::unique_ptr<Environment> clone() const override {
        return std::make_unique<ConstRewardEnv>(*this);
    }

private:
    double r_;
};

/// Tabular value iteration on the toggle game.
void toggle_q_star(double discount, double q_star[2][2]) {
    double v[2] = {0.0, 0.0};
    for (int it = 0; it < 10000; ++it) {
        double nv[2];
        for (int s = 0; s < 2; ++s) {
            const double q_match = 1.0 + discount * v[1 - s];
            const double q_miss = 0.0 + discount * v[1 - s];
            nv[s] = std::max(q_match, q_miss);
        }
        v[0] = nv[0];
        v[1] = nv[1];
    }
    for (int s = 0; s < 2; ++s) {
        q_star[s][s] = 1.0 + discount * v[1 - s];  // matching action index == state
        q_star[s][1 - s] = 0.0 + discount * v[1 - s];
    }
}

TrainConfig toggle_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.discount = 0.8;
    cfg.batch_size = 16;
    cfg.total_steps = 4000;
    cfg.warmup_steps = 64;
    cfg.buffer_capacity = 1024;
    cfg.hidden = {32, 32};
    cfg.lr = 2e-3;
    cfg.target_sync_period = 100;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("full exploration draws actions uniformly") {
    QNetwork net = QNetwork::zeros({1, 3});
    Rng rng(13);
    int counts[3] = {0, 0, 0};
    const int n = 10000;
    for (int i = 0; i < n; ++i) ++counts[select_action(net, {0.5}, 1.0, 3, rng)];
    double chi2 = 0.0;
    for (int c : counts) {
        const double expect = n / 3.0;
        chi2 += (c - expect) * (c - expect) / expect;
    }
    CHECK(chi2 < 9.21);  // 1% critical value at 2 degrees of freedom
}

TEST_CASE("greedy selection breaks ties toward the lowest index") {
    QNetwork net = QNetwork::zeros({1, 3});
    net.bias(0) = {0.1, 0.9, 0.9};
    Rng rng(0);
    CHECK(select_action(net, {0.0}, 0.0, 3, rng) == 1);
}

TEST_CASE("seeded action selection replays identically") {
    Rng init(3);
    QNetwork net({1, 8, 3}, init);
    auto run = [&net]() {
        Rng rng(99);
        std::vector<std::size_t> actions;
        for (int i = 0; i < 200; ++i)
            actions.push_back(select_action(net, {i / 200.0}, 0.3, 3, rng));
        return actions;
    };
    CHECK(run() == run());
}

TEST_CASE("exploration decays linearly to the floor") {
    TrainConfig cfg = toggle_config(0);
    cfg.total_steps = 1000;
    cfg.explore_start = 1.0;
    cfg.explore_end = 0.05;
    cfg.explore_frac = 0.5;
    CHECK(exploration_eps(cfg, 0) == doctest::Approx(1.0));
    CHECK(exploration_eps(cfg, 250) == doctest::Approx(0.525));
    CHECK(exploration_eps(cfg, 500) == doctest::Approx(0.05));
    CHECK(exploration_eps(cfg, 900) == doctest::Approx(0.05));
}

TEST_CASE("loss gradient treats targets as constants") {
    Rng rng(7);
    QNetwork net({1, 6, 2}, rng);
    std::vector<Transition> batch{{{0.2}, 0, 0.0, {0.8}}, {{0.9}, 1, 0.0, {0.1}}};
    std::vector<double> targets{0.3, -0.4};

    double loss = 0.0;
    const Gradients got = squared_loss_gradients(net, batch, targets, &loss);

    // manual: 2 (Q - target) dQ/dtheta through the taken action only
    std::vector<VecD> states;
    std::vector<VecD> gs;
    double want_loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const VecD q = forward(net, batch[i].state);
        const double diff = q[static_cast<std::size_t>(batch[i].action)] - targets[i];
        want_loss += diff * diff / 2.0;
        VecD g(2, 0.0);
        g[static_cast<std::size_t>(batch[i].action)] = 2.0 * diff / 2.0;
        states.push_back(batch[i].state);
        gs.push_back(g);
    }
    const Gradients want = backward(net, states, gs);
    CHECK(loss == doctest::Approx(want_loss));
    for (std::size_t l = 0; l < net.num_layers(); ++l)
        for (std::size_t k = 0; k < want.weights[l].data.size(); ++k)
            CHECK(got.weights[l].data[k] == doctest::Approx(want.weights[l].data[k]).epsilon(1e-12));

    // finite-difference spot check on one weight
    const double h = 1e-6;
    double* theta = &net.weight(0).data[0];
    auto loss_at = [&]() {
        double acc = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const VecD q = forward(net, batch[i].state);
            const double diff = q[static_cast<std::size_t>(batch[i].action)] - targets[i];
            acc += diff * diff / 2.0;
        }
        return acc;
    };
    const double saved = *theta;
    *theta = saved + h;
    const double up = loss_at();
    *theta = saved - h;
    const double down = loss_at();
    *theta = saved;
    CHECK(got.weights[0].data[0] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4));
}

TEST_CASE("dropped targets are excluded from the squared loss") {
    Rng rng(8);
    QNetwork net({1, 4, 2}, rng);
    std::vector<Transition> batch{{{0.2}, 0, 0.0, {0.8}}, {{0.9}, 1, 0.0, {0.1}}};
    std::vector<double> targets{0.3, std::nan("")};
    double loss = 0.0;
    const Gradients g = squared_loss_gradients(net, batch, targets, &loss);
    const VecD q = forward(net, {0.2});
    CHECK(loss == doctest::Approx((q[0] - 0.3) * (q[0] - 0.3)));
    CHECK(g.all_finite());
}

TEST_CASE("zero steps return the freshly initialized network and no log") {
    ToggleEnv env;
    TrainConfig cfg = toggle_config(5);
    cfg.total_steps = 0;
    const TrainResult a = train(env, cfg);
    const TrainResult b = train(env, cfg);
    CHECK(a.log.empty());
    CHECK(a.net.parameters_finite());
    for (std::size_t l = 0; l < a.net.num_layers(); ++l)
        for (std::size_t k = 0; k < a.net.weight(l).data.size(); ++k)
            CHECK(a.net.weight(l).data[k] == b.net.weight(l).data[k]);
}

TEST_CASE("plain training solves the toggle game to the value-iteration fixed point") {
    ToggleEnv env;
    TrainConfig cfg = toggle_config(41);
    const TrainResult result = train(env, cfg);
    double q_star[2][2];
    toggle_q_star(cfg.discount, q_star);
    double worst = 0.0;
    for (int s = 0; s < 2; ++s) {
        const VecD q = forward(result.net, {static_cast<double>(s)});
        for (int a = 0; a < 2; ++a) worst = std::max(worst, std::abs(q[a] - q_star[s][a]));
        // greedy policy must match the state
        CHECK((q[1] > q[0]) == (s == 1));
    }
    CHECK(worst < 0.05);
    CHECK(result.log.size() > 0);
    // a plain run never touches the robust path
    for (const TrainLogRow& row : result.log) {
        CHECK(row.mean_lambda == 0.0);
        CHECK(row.eps_bar_negatives == 0);
    }
}

TEST_CASE("identical seeds train to bitwise-identical networks") {
    ToggleEnv env;
    TrainConfig cfg = toggle_config(17);
    cfg.total_steps = 600;
    const TrainResult a = train(env, cfg);
    const TrainResult b = train(env, cfg);
    for (std::size_t l = 0; l < a.net.num_layers(); ++l)
        for (std::size_t k = 0; k < a.net.weight(l).data.size(); ++k)
            CHECK(a.net.weight(l).data[k] == b.net.weight(l).data[k]);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
}

TEST_CASE("a tight ball with a matched prior reproduces plain training") {
    ToggleEnv env;
    TrainConfig plain = toggle_config(29);
    const TrainResult dqn = train(env, plain);

    TrainConfig robust = toggle_config(29);
    AmbiguityConfig amb;
    amb.epsilon = 1e-3;
    amb.delta = 1e-4;
    amb.nu = NuSpec::empirical({0.0, 1.0});  // exactly the reachable states
    amb.n_nu = 2;
    robust.ambiguity = amb;
    const TrainResult rdqn = train(env, robust);

    double worst = 0.0;
    for (int s = 0; s < 2; ++s) {
        const VecD qa = forward(dqn.net, {static_cast<double>(s)});
        const VecD qb = forward(rdqn.net, {static_cast<double>(s)});
        for (int a = 0; a < 2; ++a) worst = std::max(worst, std::abs(qa[a] - qb[a]));
    }
    CHECK(worst < 0.1);
}

TEST_CASE("slot reuse drops the cached multiplier the trainer wrote") {
    // the trainer wiring contract: every buffer add invalidates that slot
    ReplayBuffer buffer(2);
    LambdaCache cache;
    auto add = [&](double x) {
        const std::size_t slot = buffer.add({{x}, 0, 0.0, {x}});
        cache.invalidate(slot);
        return slot;
    };
    CHECK(add(0.1) == 0);
    cache.put(0, 1.25);
    CHECK(add(0.2) == 1);
    CHECK(cache.get(0).has_value());  // untouched slot keeps its entry
    CHECK(add(0.3) == 0);             // ring wraps, slot 0 reused
    CHECK_FALSE(cache.get(0).has_value());
}

TEST_CASE("config validation flags broken fields") {
    TrainConfig cfg = toggle_config(0);
    cfg.discount = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = toggle_config(0);
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = toggle_config(0);
    cfg.explore_frac = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("constant-reward evaluation reports the constant with no spread") {
    ConstRewardEnv env(0.37);
    QNetwork net = QNetwork::zeros({1, 2});
    const EvalStats stats = evaluate_policy(net, env, 5, 100, 123);
    CHECK(stats.mean == doctest::Approx(0.37));
    CHECK(stats.stddev == doctest::Approx(0.0));
    CHECK(stats.min == doctest::Approx(0.37));
    CHECK(stats.max == doctest::Approx(0.37));
}

TEST_CASE("two-point log-return series produces the hand-computed risk metrics") {
    const VecD series{0.01, -0.01};
    const LogReturnMetrics m = log_return_metrics(series);
    CHECK(m.wealth == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.sortino == doctest::Approx(0.0));  // zero mean return
    // zeroised series {0, -0.01}: population standard deviation 0.005
    CHECK(m.downside_deviation == doctest::Approx(0.005 * std::sqrt(252.0)).epsilon(1e-12));
    CHECK(m.ann_volatility == doctest::Approx(0.01 * std::sqrt(252.0)).epsilon(1e-12));
    // peak after the up-move, trough at the end
    CHECK(m.max_drawdown == doctest::Approx(std::exp(-0.01) - 1.0).epsilon(1e-12));
}

TEST_CASE("max drawdown of the canonical path is minus one half") {
    CHECK(max_drawdown({1.0, 2.0, 1.0, 3.0}) == doctest::Approx(-0.5));
}

TEST_CASE("robust training on the trading environment with batched episodes") {
    // heavy-tailed returns occasionally land outside the prior's reach; the
    // drop policy excludes those transitions and training carries on
    PortfolioParams params;
    SyntheticHeavyTailSimulator::Model model;
    PortfolioEnv env(std::make_unique<SyntheticHeavyTailSimulator>(model, params), params);

    TrainConfig cfg;
    cfg.discount = 0.9;
    cfg.batch_size = 8;
    cfg.total_steps = 400;
    cfg.warmup_steps = 100;
    cfg.buffer_capacity = 512;
    cfg.hidden = {16};
    cfg.n_envs = 4;  // round-robin stepped instances fill the buffer together
    cfg.seed = 3;
    AmbiguityConfig amb;
    amb.epsilon = 3e-3;
    amb.delta = 1e-4;
    amb.n_nu = 16;
    amb.nu = NuSpec::student_t(0.0, 0.03, 2.0);
    amb.epsilon_bar_policy = EpsilonBarPolicy::WarnAndDrop;
    cfg.ambiguity = amb;

    const TrainResult result = train(env, cfg);
    CHECK(result.net.parameters_finite());
    CHECK(result.log.size() > 0);
    CHECK(result.dropped_targets >= 0);
    double mean_lambda_seen = 0.0;
    for (const TrainLogRow& row : result.log) mean_lambda_seen += row.mean_lambda;
    CHECK(mean_lambda_seen > 0.0);  // robust targets actually ran
}
