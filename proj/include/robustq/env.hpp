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

#pragma once

#include <memory>

#include "robustq/linalg.hpp"
#include "robustq/rng.hpp"
#include "robustq/sinkhorn_dual.hpp"

namespace robustq {

/// Environment contract for the trainer and the robust-target machinery.
/// Environments carry no hidden RNG; randomness is passed in, so instances
/// can be cloned and stepped independently.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::size_t state_dim() const = 0;
    virtual std::size_t num_actions() const = 0;
    /// Numeric value of the action at this index (e.g. a gamble direction or
    /// a portfolio weight).
    virtual double action_value(std::size_t action) const = 0;

    virtual VecD reset(Rng& rng) = 0;

    struct Outcome {
        VecD next_state;
        double reward = 0.0;
    };
    virtual Outcome step(const VecD& state, std::size_t action, Rng& rng) = 0;

    /// Known reward function; robust targets re-evaluate it at prior samples.
    virtual double reward(const VecD& state, std::size_t action, const VecD& next_state) const = 0;

    /// Candidate next state built from a prior draw y.
    virtual VecD state_from_nu(const VecD& state, std::size_t action, double y) const = 0;

    /// Transport cost between the stored next state and a candidate.
    /// Full-state Euclidean by default.
    virtual double transport_cost(const VecD& x_next_ref, const VecD& candidate) const {
        return euclidean_distance(x_next_ref, candidate);
    }

    /// True when per-step rewards are portfolio log returns, enabling the
    /// wealth/risk evaluation metrics.
    virtual bool reward_is_log_return() const { return false; }

    virtual std::unique_ptr<Environment> clone() const = 0;

    /// Bundles this environment's reward, candidate map and cost for the
    /// robust-target batch computation.
    DualTargetModel dual_target_model(double discount) const {
        DualTargetModel m;
        m.reward = [this](const VecD& x, int a, const VecD& xn) {
            return reward(x, static_cast<std::size_t>(a), xn);
        };
        m.state_from_nu = [this](const VecD& x, int a, double y) {
            return state_from_nu(x, static_cast<std::size_t>(a), y);
        };
        m.cost = [this](const VecD& ref, const VecD& cand) { return transport_cost(ref, cand); };
        m.discount = discount;
        return m;
    }
};

}  // namespace robustq
