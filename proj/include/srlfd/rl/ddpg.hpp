#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "srlfd/grad/optim.hpp"
#include "srlfd/sim/arm.hpp"

namespace srlfd::rl {

inline constexpr std::size_t kTileTarget = 128;

// r = ceil(128 / d) verbatim copies of the representation.
std::size_t tile_repeats(std::size_t d);
std::vector<double> tile_input(std::span<const double> rep);

struct Transition {
  std::vector<double> state;  // tiled
  sim::Action action;
  double reward = 0.0;
  std::vector<double> next_state;  // tiled
  bool done = false;
};

// Fixed-capacity FIFO of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Oldest-first position k in [0, size).
  const Transition& at(std::size_t k) const;
  // Indices (oldest-first) drawn uniformly with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> items_;
};

struct DdpgConfig {
  double gamma = 0.98;
  double tau = 0.005;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;  // a zero rate freezes that network
  std::size_t actor_width = 24;
  std::size_t critic_width = 64;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_objective = 0.0;  // mean Q(s, mu(s)) before the actor step
};

// Actor: tiled -> dense(24) relu -> dense(24) relu -> dense(2) tanh.
// Critic: [tiled, action] -> dense(64) relu -> dense(64) relu -> dense(1).
// Target copies share parameter names with the live networks.
class ActorCritic {
 public:
  ActorCritic(std::size_t rep_dim, const DdpgConfig& cfg, std::uint64_t seed);

  std::size_t rep_dim() const { return rep_dim_; }
  std::size_t input_len() const { return input_len_; }
  const DdpgConfig& config() const { return cfg_; }

  grad::ParameterSet& actor() { return actor_; }
  grad::ParameterSet& critic() { return critic_; }
  grad::ParameterSet& actor_target() { return actor_target_; }
  grad::ParameterSet& critic_target() { return critic_target_; }

  // states: B x input_len. Returns B x 2.
  grad::NodeId actor_forward(grad::Graph& g, grad::ParameterSet& net, grad::NodeId states) const;
  // Returns B x 1.
  grad::NodeId critic_forward(grad::Graph& g, grad::ParameterSet& net, grad::NodeId states,
                              grad::NodeId actions) const;

  // Deterministic policy on one tiled state.
  sim::Action act(std::span<const double> tiled);
  double q_value(std::span<const double> tiled, sim::Action a);

  // r + gamma (1 - done) Q'(s', mu'(s')) per transition.
  std::vector<double> bellman_targets(std::span<const Transition* const> batch);
  // Critic regression to r + gamma (1 - done) Q'(s', mu'(s')), one actor
  // ascent step on Q(s, mu(s)), then soft target updates.
  UpdateStats update(std::span<const Transition* const> batch);
  // target <- (1 - tau) target + tau live
  void soft_update();

 private:
  std::size_t rep_dim_, input_len_;
  DdpgConfig cfg_;
  grad::ParameterSet actor_, critic_, actor_target_, critic_target_;
  grad::AdamState actor_opt_, critic_opt_;
};

}  // namespace srlfd::rl
