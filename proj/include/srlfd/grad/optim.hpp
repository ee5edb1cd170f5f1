#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>

#include "srlfd/grad/graph.hpp"
#include "srlfd/grad/parameters.hpp"

namespace srlfd::grad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates keyed by parameter name. Each parameter
// keeps its own step count, so parameters that are only occasionally on
// the loss path (per-task heads) get correctly bias-corrected updates.
class AdamState {
 public:
  struct Slot {
    Tensor m;
    Tensor v;
    std::uint64_t t = 0;
  };

  const Slot* find(const std::string& name) const;
  Slot& slot_for(const Parameter& p);
  // Number of adam_step calls applied through this state.
  std::uint64_t steps() const noexcept { return steps_; }
  void count_step() noexcept { ++steps_; }

 private:
  std::unordered_map<std::string, Slot> slots_;
  std::uint64_t steps_ = 0;
};

// Bias-corrected Adam over `params`. Parameters without an entry in
// `grads` are left untouched (their moments do not decay).
void adam_step(std::span<Parameter* const> params, const GradientTable& grads, AdamState& state,
               const AdamConfig& cfg);

// p <- p - lr * g for every parameter that has a gradient.
void sgd_step(std::span<Parameter* const> params, const GradientTable& grads, double lr);

}  // namespace srlfd::grad
