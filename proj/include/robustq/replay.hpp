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

#include <cstddef>
#include <vector>

#include "robustq/errors.hpp"
#include "robustq/linalg.hpp"
#include "robustq/rng.hpp"

namespace robustq {

/// One experience tuple (x, a, r, x').
struct Transition {
    VecD state;
    int action = 0;
    double reward = 0.0;
    VecD next_state;
};

/// Fixed-capacity ring buffer. Slots keep a stable id (their ring index) so
/// dual-multiplier caches can be keyed by slot and invalidated on overwrite.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw InputError("ReplayBuffer: capacity must be positive");
        storage_.reserve(capacity);
    }

    /// Stores a transition and returns the slot index it now occupies.
    std::size_t add(Transition t) {
        std::size_t slot = cursor_;
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[cursor_] = std::move(t);
        }
        cursor_ = (cursor_ + 1) % capacity_;
        return slot;
    }

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t slot) const { return storage_.at(slot); }

    /// Uniform sample of `n` filled slot indices (with replacement).
    std::vector<std::size_t> sample_slots(std::size_t n, Rng& rng) const {
        if (storage_.empty()) throw InputError("ReplayBuffer: cannot sample from empty buffer");
        std::vector<std::size_t> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = rng.below(storage_.size());
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> storage_;
};

}  // namespace robustq
