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
// Single-asset trading environment. The state stacks a 60-step log-return
// window, log wealth, the current position on a discrete weight grid, and
// the calendar-year gap to the next step. Only the next log return is
// uncertain, so the ambiguity ball lives on that one coordinate and the
// transport cost is 1-dimensional.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "robustq/env.hpp"
#include "robustq/linalg.hpp"
#include "robustq/rng.hpp"

namespace robustq {

namespace portfolio {
inline constexpr std::size_t kWindow = 60;
inline constexpr std::size_t kIdxNewestReturn = kWindow - 1;
inline constexpr std::size_t kIdxWealth = kWindow;      // log portfolio value
inline constexpr std::size_t kIdxPosition = kWindow + 1;
inline constexpr std::size_t kIdxDt = kWindow + 2;      // calendar years to next step
inline constexpr std::size_t kStateDim = kWindow + 3;   // 63
}  // namespace portfolio

struct PortfolioParams {
    double transaction_cost = 0.0005;  // fraction of traded notional
    double risk_free = 0.024;          // continuously compounded annual rate
    double log_return_bound = 0.25;    // per-step clamp on |log return|
    double default_dt = 1.0 / 252.0;
};

/// Per-period portfolio log return for weight `a`, previous weight
/// `position`, realized asset log return `y` and period length `dt`:
///   log(1 + a(e^y - 1) + (1 - a)(e^{r_f dt} - 1) - c |a - position|).
/// Throws NumericalError when the argument of the log is not positive,
/// which signals a violated log-return bound.
double portfolio_reward(double a, double position, double y, double dt, const PortfolioParams& p);

/// Reward evaluated from a state vector (position and dt read off the state).
double portfolio_reward(const VecD& state, double a, double y, const PortfolioParams& p);

/// Deterministic transition pieces: shift the window, append y, accrue log
/// wealth by the reward, set position = a and the next period length.
VecD portfolio_build_next_state(const VecD& state, double a, double y, double dt_next,
                                const PortfolioParams& p);

struct PriceSeries {
    VecD log_returns;
    VecD dts;  // calendar-day gaps / 365.25
};

/// Reads a `date,close` CSV with ISO dates in ascending order and positive
/// closes. Throws IngestError with the offending line number.
PriceSeries load_price_csv(const std::string& path);

/// Source of next log returns. Implementations clamp their output to the
/// configured bound and count how often the clamp fired.
class ReturnSimulator {
public:
    virtual ~ReturnSimulator() = default;
    struct Draw {
        double log_return = 0.0;
        double dt = 0.0;
    };
    virtual Draw next(const VecD& window, Rng& rng) = 0;
    virtual std::unique_ptr<ReturnSimulator> clone() const = 0;
    long clamp_count() const { return clamps_; }

protected:
    long clamps_ = 0;
};

/// Heavy-tailed synthetic model: Student-t innovations scaled by an EWMA
/// estimate of recent realized variance blended with a base level, which
/// produces volatility clustering. Constant dt.
class SyntheticHeavyTailSimulator : public ReturnSimulator {
public:
    struct Model {
        double annual_drift = 0.06;
        double annual_vol = 0.16;
        double t_dof = 5.0;
        double ewma_decay = 0.94;
        double cluster_weight = 0.5;  // blend between base and realized variance
    };
    SyntheticHeavyTailSimulator(Model model, const PortfolioParams& params);
    Draw next(const VecD& window, Rng& rng) override;
    std::unique_ptr<ReturnSimulator> clone() const override;

private:
    Model model_;
    double bound_;
    double dt_;
};

/// Replays an ingested price series; wraps around at the end so the horizon
/// stays unbounded.
class HistoricalReplaySimulator : public ReturnSimulator {
public:
    HistoricalReplaySimulator(PriceSeries series, const PortfolioParams& params);
    Draw next(const VecD& window, Rng& rng) override;
    std::unique_ptr<ReturnSimulator> clone() const override;
    std::size_t cursor() const { return cursor_; }

private:
    PriceSeries series_;
    double bound_;
    std::size_t cursor_ = 0;
};

class PortfolioEnv : public Environment {
public:
    PortfolioEnv(std::unique_ptr<ReturnSimulator> simulator, PortfolioParams params);
    PortfolioEnv(const PortfolioEnv& other);

    std::size_t state_dim() const override { return portfolio::kStateDim; }
    std::size_t num_actions() const override { return 9; }
    double action_value(std::size_t action) const override;  // -1, -0.75, ..., +1

    VecD reset(Rng& rng) override;
    Outcome step(const VecD& state, std::size_t action, Rng& rng) override;
    double reward(const VecD& state, std::size_t action, const VecD& next_state) const override;
    VecD state_from_nu(const VecD& state, std::size_t action, double y) const override;
    /// Distance on the newest log return only.
    double transport_cost(const VecD& x_next_ref, const VecD& candidate) const override;
    bool reward_is_log_return() const override { return true; }
    std::unique_ptr<Environment> clone() const override;

    const PortfolioParams& params() const { return params_; }
    long simulator_clamp_count() const { return simulator_->clamp_count(); }

private:
    std::unique_ptr<ReturnSimulator> simulator_;
    PortfolioParams params_;
};

}  // namespace robustq
