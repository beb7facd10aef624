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

#include "robustq/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "robustq/errors.hpp"

namespace robustq {

using namespace portfolio;

double portfolio_reward(double a, double position, double y, double dt,
                        const PortfolioParams& p) {
    const double arg = 1.0 + a * (std::exp(y) - 1.0) +
                       (1.0 - a) * (std::exp(p.risk_free * dt) - 1.0) -
                       p.transaction_cost * std::abs(a - position);
    if (!(arg > 0.0))
        throw NumericalError("portfolio_reward: non-positive portfolio value (arg=" +
                             std::to_string(arg) + "); log-return bound assumption violated");
    return std::log(arg);
}

double portfolio_reward(const VecD& state, double a, double y, const PortfolioParams& p) {
    if (state.size() != kStateDim) throw InputError("portfolio_reward: bad state dimension");
    return portfolio_reward(a, state[kIdxPosition], y, state[kIdxDt], p);
}

VecD portfolio_build_next_state(const VecD& state, double a, double y, double dt_next,
                                const PortfolioParams& p) {
    if (state.size() != kStateDim)
        throw InputError("portfolio_build_next_state: bad state dimension");
    VecD next(kStateDim);
    for (std::size_t i = 0; i + 1 < kWindow; ++i) next[i] = state[i + 1];
    next[kIdxNewestReturn] = y;
    next[kIdxWealth] = state[kIdxWealth] + portfolio_reward(state, a, y, p);
    next[kIdxPosition] = a;
    next[kIdxDt] = dt_next;
    return next;
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

bool parse_iso_date(const std::string& s, long* day_number) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    const int y = std::stoi(s.substr(0, 4));
    const int m = std::stoi(s.substr(5, 2));
    const int d = std::stoi(s.substr(8, 2));
    if (m < 1 || m > 12 || d < 1 || d > 31) return false;
    *day_number = days_from_civil(y, m, d);
    return true;
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && s[i] == ' ') ++i;
    return s.substr(i);
}

}  // namespace

PriceSeries load_price_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("load_price_csv: cannot open " + path);
    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw IngestError("load_price_csv: " + path + " is empty");
    ++line_no;
    if (trim(line) != "date,close")
        throw IngestError("load_price_csv: " + path + ":1: expected header 'date,close', got '" +
                          trim(line) + "'");
    std::vector<long> days;
    VecD closes;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const std::size_t comma = row.find(',');
        if (comma == std::string::npos)
            throw IngestError("load_price_csv: " + path + ":" + std::to_string(line_no) +
                              ": missing comma");
        long day = 0;
        if (!parse_iso_date(row.substr(0, comma), &day))
            throw IngestError("load_price_csv: " + path + ":" + std::to_string(line_no) +
                              ": unparseable ISO date '" + row.substr(0, comma) + "'");
        double close = 0.0;
        try {
            std::size_t used = 0;
            close = std::stod(row.substr(comma + 1), &used);
            if (used != row.size() - comma - 1) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw IngestError("load_price_csv: " + path + ":" + std::to_string(line_no) +
                              ": unparseable close '" + row.substr(comma + 1) + "'");
        }
        if (!(close > 0.0))
            throw IngestError("load_price_csv: " + path + ":" + std::to_string(line_no) +
                              ": non-positive close");
        if (!days.empty() && day <= days.back())
            throw IngestError("load_price_csv: " + path + ":" + std::to_string(line_no) +
                              ": dates must be strictly ascending");
        days.push_back(day);
        closes.push_back(close);
    }
    if (closes.size() < 2)
        throw IngestError("load_price_csv: " + path + ": need at least two rows");
    PriceSeries out;
    for (std::size_t i = 1; i < closes.size(); ++i) {
        out.log_returns.push_back(std::log(closes[i] / closes[i - 1]));
        out.dts.push_back(static_cast<double>(days[i] - days[i - 1]) / 365.25);
    }
    return out;
}

SyntheticHeavyTailSimulator::SyntheticHeavyTailSimulator(Model model,
                                                         const PortfolioParams& params)
    : model_(model), bound_(params.log_return_bound), dt_(params.default_dt) {}

ReturnSimulator::Draw SyntheticHeavyTailSimulator::next(const VecD& window, Rng& rng) {
    // EWMA of squared window returns, newest weighted most.
    const double base_var = model_.annual_vol * model_.annual_vol * dt_;
    double ewma = base_var;
    if (!window.empty()) {
        ewma = 0.0;
        double wsum = 0.0;
        double w = 1.0;
        for (std::size_t i = window.size(); i-- > 0;) {
            ewma += w * window[i] * window[i];
            wsum += w;
            w *= model_.ewma_decay;
        }
        ewma /= wsum;
    }
    const double var = (1.0 - model_.cluster_weight) * base_var + model_.cluster_weight * ewma;
    // unit-variance Student-t innovation
    const double t_scale = std::sqrt((model_.t_dof - 2.0) / model_.t_dof);
    const double shock = rng.student_t(model_.t_dof) * t_scale;
    double y = model_.annual_drift * dt_ + std::sqrt(var) * shock;
    if (y > bound_ || y < -bound_) {
        ++clamps_;
        y = std::clamp(y, -bound_, bound_);
    }
    return {y, dt_};
}

std::unique_ptr<ReturnSimulator> SyntheticHeavyTailSimulator::clone() const {
    return std::make_unique<SyntheticHeavyTailSimulator>(*this);
}

HistoricalReplaySimulator::HistoricalReplaySimulator(PriceSeries series,
                                                     const PortfolioParams& params)
    : series_(std::move(series)), bound_(params.log_return_bound) {
    if (series_.log_returns.empty())
        throw InputError("HistoricalReplaySimulator: empty price series");
}

ReturnSimulator::Draw HistoricalReplaySimulator::next(const VecD&, Rng&) {
    double y = series_.log_returns[cursor_];
    const double dt = series_.dts[cursor_];
    cursor_ = (cursor_ + 1) % series_.log_returns.size();
    if (y > bound_ || y < -bound_) {
        ++clamps_;
        y = std::clamp(y, -bound_, bound_);
    }
    return {y, dt};
}

std::unique_ptr<ReturnSimulator> HistoricalReplaySimulator::clone() const {
    return std::make_unique<HistoricalReplaySimulator>(*this);
}

PortfolioEnv::PortfolioEnv(std::unique_ptr<ReturnSimulator> simulator, PortfolioParams params)
    : simulator_(std::move(simulator)), params_(params) {
    if (!simulator_) throw ConfigError("PortfolioEnv: simulator required");
    if (!(params_.log_return_bound > 0.0))
        throw ConfigError("PortfolioEnv: log-return bound must be positive");
    if (!(params_.transaction_cost >= 0.0))
        throw ConfigError("PortfolioEnv: transaction cost must be nonnegative");
}

PortfolioEnv::PortfolioEnv(const PortfolioEnv& other)
    : simulator_(other.simulator_->clone()), params_(other.params_) {}

double PortfolioEnv::action_value(std::size_t action) const {
    if (action >= num_actions()) throw InputError("PortfolioEnv: action index out of range");
    return -1.0 + 0.25 * static_cast<double>(action);
}

VecD PortfolioEnv::reset(Rng& rng) {
    VecD state(kStateDim, 0.0);
    state[kIdxDt] = params_.default_dt;
    // Warm the window with simulator draws; wealth starts at log 1 = 0 and
    // the position starts flat.
    VecD window;
    window.reserve(kWindow);
    double dt_next = params_.default_dt;
    for (std::size_t i = 0; i < kWindow; ++i) {
        const auto draw = simulator_->next(window, rng);
        window.push_back(draw.log_return);
        dt_next = draw.dt;
    }
    for (std::size_t i = 0; i < kWindow; ++i) state[i] = window[i];
    state[kIdxDt] = dt_next;
    return state;
}

Environment::Outcome PortfolioEnv::step(const VecD& state, std::size_t action, Rng& rng) {
    if (state.size() != kStateDim) throw InputError("PortfolioEnv::step: bad state dimension");
    const double a = action_value(action);
    VecD window(state.begin(), state.begin() + kWindow);
    const auto draw = simulator_->next(window, rng);
    const double r = portfolio_reward(state, a, draw.log_return, params_);
    VecD next = portfolio_build_next_state(state, a, draw.log_return, draw.dt, params_);
    return {std::move(next), r};
}

double PortfolioEnv::reward(const VecD& state, std::size_t action, const VecD& next_state) const {
    if (next_state.size() != kStateDim)
        throw InputError("PortfolioEnv::reward: bad next-state dimension");
    return portfolio_reward(state, action_value(action), next_state[kIdxNewestReturn], params_);
}

VecD PortfolioEnv::state_from_nu(const VecD& state, std::size_t action, double y) const {
    // Prior draws are log returns; clamp to the bound the environment promises.
    const double yc = std::clamp(y, -params_.log_return_bound, params_.log_return_bound);
    return portfolio_build_next_state(state, action_value(action), yc, state[kIdxDt], params_);
}

double PortfolioEnv::transport_cost(const VecD& x_next_ref, const VecD& candidate) const {
    return std::abs(x_next_ref.at(kIdxNewestReturn) - candidate.at(kIdxNewestReturn));
}

std::unique_ptr<Environment> PortfolioEnv::clone() const {
    return std::make_unique<PortfolioEnv>(*this);
}

}  // namespace robustq
