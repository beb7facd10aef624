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

#include <cmath>
#include <vector>

#include "robustq/errors.hpp"
#include "robustq/nn.hpp"
#include "robustq/sinkhorn_dual.hpp"

using namespace robustq;

namespace {

// Independent long-double transcription of the dual objective with the
// max-shift identity; the oracle for value checks below.
long double dual_value_reference(long double lp, const std::vector<double>& payoffs,
                                 const std::vector<double>& distances, long double eps,
                                 long double delta) {
    const long double ld = lp * delta;
    long double cmax = -1e30L;
    std::vector<long double> c(payoffs.size());
    for (std::size_t j = 0; j < payoffs.size(); ++j) {
        c[j] = (-(long double)payoffs[j] - lp * (long double)distances[j]) / ld;
        if (c[j] > cmax) cmax = c[j];
    }
    long double s = 0.0L;
    for (long double cj : c) s += expl(cj - cmax);
    return -lp * eps - ld * (cmax + logl(s / (long double)payoffs.size()));
}

// Unshifted long-double evaluation; only valid where the exponents stay
// inside the extended range.
long double dual_value_unstabilized(long double lp, const std::vector<double>& payoffs,
                                    const std::vector<double>& distances, long double eps,
                                    long double delta) {
    const long double ld = lp * delta;
    long double acc = 0.0L;
    for (std::size_t j = 0; j < payoffs.size(); ++j)
        acc += expl((-(long double)payoffs[j] - lp * (long double)distances[j]) / ld);
    return -lp * eps - ld * logl(acc / (long double)payoffs.size());
}

// Golden-section maximization over the multiplier, independent of the
// production search.
double golden_max_multiplier(const std::vector<double>& payoffs,
                             const std::vector<double>& distances, double eps, double delta,
                             double lo = 1e-6, double hi = 1e3) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(lo), b = std::log(hi);
    auto f = [&](double t) {
        return (double)dual_value_reference(std::exp((long double)t), payoffs, distances, eps,
                                            delta);
    };
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < 300; ++i) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
    }
    return std::max(f1, f2);
}

AmbiguityConfig test_cfg(double eps, double delta) {
    AmbiguityConfig cfg;
    cfg.epsilon = eps;
    cfg.delta = delta;
    cfg.nu = NuSpec::uniform(0.0, 1.0);
    cfg.n_nu = 8;
    return cfg;
}

}  // namespace

TEST_CASE("softplus hits the analytic values and the large-x asymptote") {
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(std::abs(softplus(1000.0) - 1000.0) < 1e-12);
    CHECK(softplus(0.7) == doctest::Approx(std::log1p(std::exp(0.7))).epsilon(1e-14));
    CHECK(softplus(0.7) == doctest::Approx(1.1031860).epsilon(1e-6));
    CHECK(std::isfinite(softplus(-1000.0)));
    CHECK(softplus(-700.0) > 0.0);  // e^-700 is still representable
    // inverse round trip
    for (double y : {1e-3, 0.5, 1.3, 31.0, 100.0})
        CHECK(softplus(softplus_inv(y)) == doctest::Approx(y).epsilon(1e-12));
}

TEST_CASE("stable_log_mean_exp on constants, shifts and a hand value") {
    const std::vector<double> constant{2.5, 2.5, 2.5};
    CHECK(stable_log_mean_exp(constant) == doctest::Approx(2.5).epsilon(1e-14));

    const std::vector<double> base{0.3, -1.2, 2.0, 0.0};
    std::vector<double> shifted = base;
    for (double& v : shifted) v += 1e6;
    CHECK(stable_log_mean_exp(shifted) ==
          doctest::Approx(stable_log_mean_exp(base) + 1e6).epsilon(1e-12));

    const std::vector<double> pair{0.0, std::log(3.0)};  // mean of (1, 3) is 2
    CHECK(stable_log_mean_exp(pair) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    CHECK_THROWS_AS(stable_log_mean_exp(std::vector<double>{}), InputError);
}

TEST_CASE("stratified uniform sampling returns the quantile grid") {
    Rng rng(0);
    const auto ys = sample_nu(NuSpec::uniform(0.0, 1.0), 3, rng);
    REQUIRE(ys.size() == 3);
    CHECK(ys[0] == doctest::Approx(0.25));
    CHECK(ys[1] == doctest::Approx(0.50));
    CHECK(ys[2] == doctest::Approx(0.75));
}

TEST_CASE("point mass sampling repeats the atom") {
    Rng rng(0);
    const auto ys = sample_nu(NuSpec::point_mass(0.42), 5, rng);
    for (double y : ys) CHECK(y == 0.42);
}

TEST_CASE("stratified scaled student-t matches the closed-form quantile at dof 2") {
    // T^{-1}_{dof=2}(p) = (2p - 1) / sqrt(2 p (1 - p))
    Rng rng(0);
    const auto ys = sample_nu(NuSpec::student_t(0.0, 0.03, 2.0), 5, rng);
    REQUIRE(ys.size() == 5);
    for (int i = 1; i <= 5; ++i) {
        const double p = i / 6.0;
        const double want = 0.03 * (2.0 * p - 1.0) / std::sqrt(2.0 * p * (1.0 - p));
        CHECK(ys[static_cast<std::size_t>(i - 1)] == doctest::Approx(want).epsilon(1e-10));
    }
    CHECK(ys[2] == doctest::Approx(0.0).epsilon(1e-12));  // symmetric about the location
    CHECK(ys[0] == doctest::Approx(-ys[4]).epsilon(1e-10));
}

TEST_CASE("stratified empirical sampling passes the list through exactly") {
    Rng rng(0);
    const std::vector<double> atoms{0.1, 0.1, 0.7, 0.9};
    const auto ys = sample_nu(NuSpec::empirical(atoms), 4, rng);
    CHECK(ys == atoms);
    CHECK_THROWS_AS(sample_nu(NuSpec::empirical(atoms), 3, rng), ConfigError);
}

TEST_CASE("effective radius on coincident, single and mixed samples") {
    AmbiguityConfig cfg = test_cfg(0.5, 1.0);
    auto cost = [](const VecD& a, const VecD& b) { return euclidean_distance(a, b); };

    const VecD ref{0.3};
    CHECK(epsilon_bar(ref, {{0.3}, {0.3}, {0.3}}, cfg, cost) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(epsilon_bar(ref, {{1.0}}, cfg, cost) == doctest::Approx(0.5 - 0.7).epsilon(1e-12));

    // distances {0, 1}: eps + delta * log((1 + e^{-1})/2), evaluated directly
    const double want = 0.5 + std::log((1.0 + std::exp(-1.0)) / 2.0);
    CHECK(epsilon_bar({0.0}, {{0.0}, {1.0}}, cfg, cost) == doctest::Approx(want).epsilon(1e-12));
    CHECK(want == doctest::Approx(0.1201145).epsilon(1e-6));
}

TEST_CASE("constant payoffs collapse the objective to f0 minus lambda times the radius") {
    AmbiguityConfig cfg = test_cfg(0.2, 0.3);
    const std::vector<double> payoffs{1.7, 1.7, 1.7};
    const std::vector<double> distances{0.0, 0.4, 0.9};
    const double eb = epsilon_bar_from_distances(distances, cfg);
    for (double raw : {-2.0, 0.0, 1.0, 3.0}) {
        const auto ev = dual_objective(raw, payoffs, distances, cfg);
        CHECK(ev.value == doctest::Approx(1.7 - softplus(raw) * eb).epsilon(1e-12));
    }
}

TEST_CASE("zero distances reduce the objective to a soft minimum of the payoffs") {
    AmbiguityConfig cfg = test_cfg(0.1, 0.5);
    const std::vector<double> payoffs{1.0, 2.0, 0.5};
    const std::vector<double> zeros{0.0, 0.0, 0.0};
    for (double raw : {0.0, 1.5}) {
        const double lp = softplus(raw);
        std::vector<double> scaled(payoffs.size());
        for (std::size_t j = 0; j < payoffs.size(); ++j) scaled[j] = -payoffs[j] / (lp * cfg.delta);
        const double want = -lp * cfg.epsilon - lp * cfg.delta * stable_log_mean_exp(scaled);
        CHECK(dual_objective(raw, payoffs, zeros, cfg).value ==
              doctest::Approx(want).epsilon(1e-12));
        // Jensen: the log-mean-exp form never exceeds the mean payoff
        const double mean_payoff = (1.0 + 2.0 + 0.5) / 3.0;
        CHECK(dual_objective(raw, payoffs, zeros, cfg).value <= mean_payoff + 1e-12);
    }
}

TEST_CASE("objective value matches an independent extended-precision transcription") {
    AmbiguityConfig cfg = test_cfg(0.1, 0.5);
    const std::vector<double> payoffs{1.0, 2.0};
    const std::vector<double> distances{0.0, 0.5};
    const double raw = softplus_inv(2.0);  // multiplier exactly 2
    const auto ev = dual_objective(raw, payoffs, distances, cfg);
    const long double want = dual_value_reference(2.0L, payoffs, distances, 0.1L, 0.5L);
    CHECK(ev.value == doctest::Approx((double)want).epsilon(1e-12));
    CHECK(dual_value_at_multiplier(2.0, payoffs, distances, 0.1, 0.5) ==
          doctest::Approx((double)want).epsilon(1e-12));
}

TEST_CASE("analytic raw-parameter gradient matches central finite differences") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        AmbiguityConfig cfg = test_cfg(rng.uniform(0.0, 0.4), rng.uniform(0.05, 1.0));
        std::vector<double> payoffs(5), distances(5);
        for (int j = 0; j < 5; ++j) {
            payoffs[j] = rng.uniform(-2.0, 2.0);
            distances[j] = rng.uniform(0.0, 1.5);
        }
        const double raw = rng.uniform(-2.0, 3.0);
        const auto ev = dual_objective(raw, payoffs, distances, cfg);
        const double h = 1e-6;
        const double up = dual_objective(raw + h, payoffs, distances, cfg).value;
        const double down = dual_objective(raw - h, payoffs, distances, cfg).value;
        const double fd = (up - down) / (2.0 * h);
        CHECK(ev.grad_raw == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("sampled objective has no interior local minimum over a multiplier log grid") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        AmbiguityConfig cfg = test_cfg(rng.uniform(0.01, 0.4), rng.uniform(0.05, 0.8));
        std::vector<double> payoffs(6), distances(6);
        for (int j = 0; j < 6; ++j) {
            payoffs[j] = rng.uniform(-2.0, 2.0);
            distances[j] = rng.uniform(0.0, 1.5);
        }
        std::vector<double> values;
        for (int k = 0; k < 100; ++k) {
            const double lp = std::exp(std::log(1e-4) +
                                       (std::log(1e3) - std::log(1e-4)) * k / 99.0);
            values.push_back(
                dual_value_at_multiplier(lp, payoffs, distances, cfg.epsilon, cfg.delta));
        }
        for (std::size_t k = 1; k + 1 < values.size(); ++k) {
            const bool interior_min =
                values[k] < values[k - 1] - 1e-12 && values[k] < values[k + 1] - 1e-12;
            CHECK_FALSE(interior_min);
        }
    }
}

TEST_CASE("ascent on constant payoffs drives the multiplier small") {
    AmbiguityConfig cfg = test_cfg(0.15, 0.05);
    const std::vector<double> payoffs{0.8, 0.8, 0.8};
    const std::vector<double> distances{0.0, 0.3, 0.6};
    const DualSolveResult res = solve_lambda(payoffs, distances, cfg);
    CHECK(res.epsilon_bar > 0.0);
    // exact identity at the stopping multiplier
    CHECK(res.value == doctest::Approx(0.8 - res.lambda_star * res.epsilon_bar).epsilon(1e-10));
    CHECK(res.lambda_star < 1e-6);  // boundary case resolved to the multiplier floor
    CHECK(res.converged);
    CHECK(res.value == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("warm start at the optimum stops within two iterations") {
    AmbiguityConfig cfg = test_cfg(0.3, 0.5);
    const std::vector<double> payoffs{1.0, 2.0};
    const std::vector<double> distances{0.0, 0.5};
    SolveOptions exact;
    exact.exact = true;
    const DualSolveResult truth = solve_lambda(payoffs, distances, cfg, {}, exact);
    const DualSolveResult warm = solve_lambda(payoffs, distances, cfg, truth.lambda_raw);
    CHECK(warm.from_cache);
    CHECK(warm.iterations <= 2);
    CHECK(warm.value == doctest::Approx(truth.value).epsilon(1e-6));
}

TEST_CASE("ascent value agrees with a golden-section oracle") {
    AmbiguityConfig cfg = test_cfg(0.3, 0.5);
    const std::vector<double> payoffs{1.0, 2.0};
    const std::vector<double> distances{0.0, 0.5};
    REQUIRE(epsilon_bar_from_distances(distances, cfg) > 0.0);
    const DualSolveResult res = solve_lambda(payoffs, distances, cfg);
    const double oracle = golden_max_multiplier(payoffs, distances, 0.3, 0.5);
    CHECK(std::abs(res.value - oracle) < 1e-3);
}

TEST_CASE("ascent tracks the golden-section oracle across random instances") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        AmbiguityConfig cfg = test_cfg(rng.uniform(0.02, 0.3), rng.uniform(0.05, 0.6));
        std::vector<double> payoffs(6), distances(6);
        for (int j = 0; j < 6; ++j) {
            payoffs[j] = rng.uniform(-1.0, 1.0);
            distances[j] = rng.uniform(0.0, 1.2);
        }
        if (epsilon_bar_from_distances(distances, cfg) < 0.0) continue;
        const DualSolveResult res = solve_lambda(payoffs, distances, cfg);
        const double oracle = golden_max_multiplier(payoffs, distances, cfg.epsilon, cfg.delta);
        CHECK(std::abs(res.value - oracle) < 2e-3);
    }
}

TEST_CASE("tiny regularization with large payoffs stays finite and accurate") {
    // multipliers large enough that the unshifted exponents overflow double
    // but fit in extended precision
    const std::vector<double> payoffs{10.0, -10.0, 7.5};
    const std::vector<double> distances{0.0, 1e-3, 5e-4};
    const double delta = 1e-6;
    for (double lp : {1500.0, 2500.0}) {
        const double got = dual_value_at_multiplier(lp, payoffs, distances, 0.0, delta);
        CHECK(std::isfinite(got));
        const long double want = dual_value_unstabilized(lp, payoffs, distances, 0.0L, 1e-6L);
        REQUIRE(std::isfinite((double)want));
        CHECK(std::abs(got - (double)want) <=
              1e-9 * std::max(1.0, std::abs((double)want)));
    }
}

namespace {

DualTargetModel scalar_model(std::function<double(double, double)> reward_xy, double discount) {
    DualTargetModel m;
    m.reward = [reward_xy](const VecD& x, int, const VecD& xn) { return reward_xy(x[0], xn[0]); };
    m.state_from_nu = [](const VecD&, int, double y) { return VecD{y}; };
    m.cost = [](const VecD& a, const VecD& b) { return std::abs(a[0] - b[0]); };
    m.discount = discount;
    return m;
}

}  // namespace

TEST_CASE("constant reward with zero discount returns the constant as target") {
    AmbiguityConfig cfg = test_cfg(0.0, 0.1);
    cfg.nu = NuSpec::point_mass(0.4);
    cfg.n_nu = 4;
    const DualTargetModel model = scalar_model([](double, double) { return 3.25; }, 0.0);
    const std::vector<Transition> batch{{{0.2}, 0, 3.25, {0.4}}};
    const std::vector<std::size_t> slots{0};
    const QValueFn q0 = [](const VecD&) { return VecD{0.0}; };
    const auto targets = robust_target_batch(batch, slots, q0, model, cfg, nullptr, 1, 1);
    CHECK(targets[0] == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("point-mass prior at the stored next state recovers the plain target") {
    // with the prior concentrated on x' and zero radius the dual equals
    // r(x, a, x') + discount * max_b Q(x', b) exactly
    Rng rng(5);
    QNetwork net({1, 8, 3}, rng);
    AmbiguityConfig cfg = test_cfg(0.0, 1e-3);
    cfg.nu = NuSpec::point_mass(0.7);
    cfg.n_nu = 4;
    auto reward = [](double x, double y) { return 2.0 * (y - x); };
    const DualTargetModel model = scalar_model(reward, 0.9);
    const std::vector<Transition> batch{{{0.2}, 0, reward(0.2, 0.7), {0.7}}};
    const std::vector<std::size_t> slots{3};
    const QValueFn qf = [&net](const VecD& x) { return forward(net, x); };
    const auto targets = robust_target_batch(batch, slots, qf, model, cfg, nullptr, 1, 1);
    const VecD q = forward(net, {0.7});
    const double plain = reward(0.2, 0.7) + 0.9 * *std::max_element(q.begin(), q.end());
    CHECK(targets[0] == doctest::Approx(plain).epsilon(1e-9));

    // and it matches the non-robust batch path
    const auto dqn = dqn_target_batch(batch, qf, 0.9);
    CHECK(dqn[0] == doctest::Approx(plain).epsilon(1e-12));
}

TEST_CASE("negative effective radius follows the configured policy") {
    AmbiguityConfig cfg = test_cfg(0.0, 0.05);
    cfg.nu = NuSpec::point_mass(1.0);  // far from the stored next state
    cfg.n_nu = 2;
    const DualTargetModel model = scalar_model([](double, double) { return 1.0; }, 0.0);
    const std::vector<Transition> batch{{{0.0}, 0, 1.0, {0.0}}};
    const std::vector<std::size_t> slots{0};
    const QValueFn q0 = [](const VecD&) { return VecD{0.0}; };

    CHECK_THROWS_AS(robust_target_batch(batch, slots, q0, model, cfg, nullptr, 1, 1),
                    TrainingError);

    cfg.epsilon_bar_policy = EpsilonBarPolicy::WarnAndDrop;
    RobustBatchStats stats;
    const auto targets = robust_target_batch(batch, slots, q0, model, cfg, nullptr, 1, 1, &stats);
    CHECK(std::isnan(targets[0]));
    CHECK(stats.eps_bar_negatives == 1);
    CHECK(stats.dropped == 1);
}

TEST_CASE("lambda cache stores raw parameters per slot and speeds the next solve") {
    AmbiguityConfig cfg = test_cfg(0.2, 0.02);
    cfg.nu = NuSpec::uniform(0.0, 1.0);
    cfg.n_nu = 16;
    const DualTargetModel model =
        scalar_model([](double x, double y) { return y - x; }, 0.0);
    const std::vector<Transition> batch{{{0.2}, 0, 0.3, {0.5}}, {{0.8}, 0, -0.1, {0.7}}};
    const std::vector<std::size_t> slots{4, 9};
    const QValueFn q0 = [](const VecD&) { return VecD{0.0}; };
    LambdaCache cache;
    const auto first = robust_target_batch(batch, slots, q0, model, cfg, &cache, 7, 1);
    CHECK(cache.size() == 2);
    CHECK(cache.get(4).has_value());
    CHECK(cache.get(9).has_value());
    const auto second = robust_target_batch(batch, slots, q0, model, cfg, &cache, 7, 2);
    CHECK(first[0] == doctest::Approx(second[0]).epsilon(1e-6));
    CHECK(first[1] == doctest::Approx(second[1]).epsilon(1e-6));
    cache.invalidate(4);
    CHECK_FALSE(cache.get(4).has_value());
    cache.clear();
    CHECK(cache.size() == 0);
}

TEST_CASE("robust target is non-increasing in the ball radius") {
    SolveOptions exact;
    exact.exact = true;
    const DualTargetModel model =
        scalar_model([](double x, double y) { return 2.0 * (y - x); }, 0.0);
    const std::vector<Transition> batch{{{0.3}, 0, 0.0, {0.6}}};
    const std::vector<std::size_t> slots{0};
    const QValueFn q0 = [](const VecD&) { return VecD{0.0}; };
    double prev = 1e300;
    for (double eps : {0.02, 0.05, 0.1, 0.2, 0.4}) {
        AmbiguityConfig cfg = test_cfg(eps, 1e-3);
        cfg.n_nu = 16;
        const auto targets =
            robust_target_batch(batch, slots, q0, model, cfg, nullptr, 11, 1, nullptr, exact);
        CHECK(targets[0] <= prev + 1e-9);
        prev = targets[0];
    }
}

TEST_CASE("robust target never exceeds the prior-sample average payoff bound") {
    // the ball contains the reweighted prior itself, so the worst case lies
    // below the best payoff and above the worst payoff seen by the prior
    AmbiguityConfig cfg = test_cfg(0.25, 0.2);
    cfg.n_nu = 16;
    const DualTargetModel model =
        scalar_model([](double x, double y) { return y - x; }, 0.0);
    const std::vector<Transition> batch{{{0.1}, 0, 0.0, {0.5}}};
    const std::vector<std::size_t> slots{0};
    const QValueFn q0 = [](const VecD&) { return VecD{0.0}; };
    SolveOptions exact;
    exact.exact = true;
    const auto targets =
        robust_target_batch(batch, slots, q0, model, cfg, nullptr, 3, 1, nullptr, exact);
    Rng rng(0);
    const auto ys = sample_nu(cfg.nu, cfg.n_nu, rng);
    double lo = 1e300, hi = -1e300;
    for (double y : ys) {
        lo = std::min(lo, y - 0.1);
        hi = std::max(hi, y - 0.1);
    }
    CHECK(targets[0] >= lo - 1e-6);
    CHECK(targets[0] <= hi + 1e-6);
}

TEST_CASE("plain targets recompute as reward plus discounted best continuation") {
    Rng rng(77);
    QNetwork net({1, 6, 3}, rng);
    const QValueFn qf = [&net](const VecD& x) { return forward(net, x); };
    std::vector<Transition> batch;
    for (int i = 0; i < 5; ++i)
        batch.push_back({{rng.uniform01()}, static_cast<int>(rng.below(3)), rng.uniform(-1, 1),
                         {rng.uniform01()}});
    const auto dqn0 = dqn_target_batch(batch, qf, 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i)
        CHECK(dqn0[i] == doctest::Approx(batch[i].reward).epsilon(1e-14));
    const auto dqn = dqn_target_batch(batch, qf, 0.9);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const VecD q = forward(net, batch[i].next_state);
        CHECK(dqn[i] == doctest::Approx(batch[i].reward +
                                        0.9 * *std::max_element(q.begin(), q.end())));
    }
}

TEST_CASE("robust operator contracts two value tables at rate discount") {
    // common prior draws, exact maximization, 1-d probe states
    const double discount = 0.9;
    Rng rng(99);
    std::vector<double> probe(20);
    for (double& p : probe) p = rng.uniform01();
    VecD q1(probe.size()), q2(probe.size());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        q1[i] = rng.uniform(-1, 1);
        q2[i] = rng.uniform(-1, 1);
    }
    AmbiguityConfig cfg = test_cfg(0.15, 0.01);
    cfg.nu = NuSpec::empirical(probe);
    cfg.n_nu = static_cast<int>(probe.size());
    SolveOptions exact;
    exact.exact = true;

    auto table_fn = [&](const VecD& table) {
        return [&probe, table](const VecD& x) {
            for (std::size_t i = 0; i < probe.size(); ++i)
                if (probe[i] == x[0]) return VecD{table[i]};
            return VecD{0.0};
        };
    };
    const DualTargetModel model = scalar_model([](double, double) { return 0.0; }, discount);

    double sup_h = 0.0, sup_q = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        sup_q = std::max(sup_q, std::abs(q1[i] - q2[i]));
        const std::vector<Transition> batch{{{probe[i]}, 0, 0.0, {probe[i]}}};
        const std::vector<std::size_t> slots{i};
        const auto t1 =
            robust_target_batch(batch, slots, table_fn(q1), model, cfg, nullptr, 1, 1, nullptr,
                                exact);
        const auto t2 =
            robust_target_batch(batch, slots, table_fn(q2), model, cfg, nullptr, 1, 1, nullptr,
                                exact);
        sup_h = std::max(sup_h, std::abs(t1[0] - t2[0]));
    }
    CHECK(sup_h <= discount * sup_q + 1e-6);
}
