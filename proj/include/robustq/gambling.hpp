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
// Gambling on the unit square: the state is a number in [0, 1], the agent
// bets on its next draw with a in {-1, 0, +1}. Actions shift the Beta
// parameters of the next draw through a softplus, and losses are amplified
// by an asymmetric penalty factor.

#pragma once

#include <utility>
#include <vector>

#include "robustq/env.hpp"
#include "robustq/linalg.hpp"
#include "robustq/rng.hpp"

namespace robustq {

/// Beta environment parameters: the true game uses (1.2, 2); an agent plays
/// against parameters fitted from a handful of draws.
struct GamblingParams {
    double alpha_prime = 1.2;
    double beta_prime = 2.0;
    double reward_factor = 1.0;  // multiplies the reward only when negative
};

/// Shape parameters of the next-state draw: (alpha', beta') when a = 0, else
/// (softplus(alpha' - a x), softplus(beta' + a (1 - x))).
std::pair<double, double> gambling_shape_params(double x, int a, const GamblingParams& p);

/// a (x' - x), multiplied by the penalty factor when negative.
double gambling_reward(double x, int a, double x_next, const GamblingParams& p);

/// One transition; a in {-1, 0, +1}.
std::pair<double, double> gambling_step(double x, int a, const GamblingParams& p, Rng& rng);

struct BetaFit {
    double alpha = 0.0;
    double beta = 0.0;
    bool degenerate = false;  // variance too large for a method-of-moments fit
};

/// Method-of-moments Beta fit from samples in (0, 1): with m the sample mean
/// and v the biased sample variance, t = m(1 - m)/v - 1, alpha = m t,
/// beta = (1 - m) t. A non-positive t is clamped to 1e-3 and flagged.
BetaFit fit_beta_mom(const std::vector<double>& samples);

/// E[r(x, a, X')] under the Beta transition law, by adaptive quadrature split
/// at the reward kink x' = x; absolute tolerance 1e-8.
double gambling_expected_reward(double x, int a, const GamblingParams& p);

/// Tabulated expected rewards on a fine state grid; picks the
/// highest-expected-reward action. Proxy for the optimal policy when the
/// true parameters are known.
class GreedyExpectedRewardPolicy {
public:
    explicit GreedyExpectedRewardPolicy(const GamblingParams& params, int grid_points = 2001);
    /// Returns the action in {-1, 0, +1}; ties break toward the lower value.
    int act(double x) const;
    double expected_reward(double x, int a) const;

private:
    VecD grid_;
    VecD er_down_;  // a = -1
    VecD er_up_;    // a = +1
};

enum class GamblingMode { TrueDist, ReferenceDist };

/// The playable environment. Holds both the true parameters and the fitted
/// reference parameters; `mode` selects which law drives transitions. The
/// penalty factor applies in both modes.
class GamblingEnv : public Environment {
public:
    GamblingEnv(GamblingParams true_params, GamblingParams reference_params, GamblingMode mode);

    /// Same parameters for both laws (no ambiguity), e.g. for benchmarks.
    explicit GamblingEnv(GamblingParams params);

    std::size_t state_dim() const override { return 1; }
    std::size_t num_actions() const override { return 3; }
    double action_value(std::size_t action) const override;  // {-1, 0, +1}

    VecD reset(Rng& rng) override;
    Outcome step(const VecD& state, std::size_t action, Rng& rng) override;
    double reward(const VecD& state, std::size_t action, const VecD& next_state) const override;
    VecD state_from_nu(const VecD& state, std::size_t action, double y) const override;
    std::unique_ptr<Environment> clone() const override;

    GamblingMode mode() const { return mode_; }
    void set_mode(GamblingMode m) { mode_ = m; }
    const GamblingParams& active_params() const {
        return mode_ == GamblingMode::TrueDist ? true_params_ : reference_params_;
    }
    const GamblingParams& true_params() const { return true_params_; }
    const GamblingParams& reference_params() const { return reference_params_; }

private:
    GamblingParams true_params_;
    GamblingParams reference_params_;
    GamblingMode mode_;
};

}  // namespace robustq
