#include "srlfd/rl/ddpg.hpp"

#include <cmath>

#include "srlfd/errors.hpp"

namespace srlfd::rl {

std::size_t tile_repeats(std::size_t d) {
  if (d == 0) throw ConfigError("cannot tile an empty representation");
  return (kTileTarget + d - 1) / d;
}

std::vector<double> tile_input(std::span<const double> rep) {
  const std::size_t r = tile_repeats(rep.size());
  std::vector<double> out;
  out.reserve(r * rep.size());
  for (std::size_t k = 0; k < r; ++k) out.insert(out.end(), rep.begin(), rep.end());
  return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t k) const {
  if (k >= items_.size()) throw DomainError("replay index out of range");
  return items_[(head_ + k) % items_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw DomainError("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(rng);
  return out;
}

namespace {

void add_layer(grad::ParameterSet& set, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  set.add(name + ".w", grad::glorot_uniform({in, out}, in, out, rng));
  set.add(name + ".b", grad::Tensor({out}));
}

grad::NodeId layer(grad::Graph& g, grad::ParameterSet& set, const std::string& name, grad::NodeId x) {
  return g.dense(x, g.param(set.at(name + ".w")), g.param(set.at(name + ".b")));
}

grad::Tensor stack_rows(std::span<const Transition* const> batch, bool next, std::size_t len) {
  grad::Tensor t({batch.size(), len});
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& v = next ? batch[k]->next_state : batch[k]->state;
    if (v.size() != len) throw DimensionError("transition state has the wrong tiled length");
    std::copy(v.begin(), v.end(), t.raw() + k * len);
  }
  return t;
}

}  // namespace

ActorCritic::ActorCritic(std::size_t rep_dim, const DdpgConfig& cfg, std::uint64_t seed)
    : rep_dim_(rep_dim), input_len_(tile_repeats(rep_dim) * rep_dim), cfg_(cfg) {
  Rng rng = make_rng(seed, {0x6163});
  add_layer(actor_, "actor.l1", input_len_, cfg.actor_width, rng);
  add_layer(actor_, "actor.l2", cfg.actor_width, cfg.actor_width, rng);
  add_layer(actor_, "actor.l3", cfg.actor_width, 2, rng);
  add_layer(critic_, "critic.l1", input_len_ + 2, cfg.critic_width, rng);
  add_layer(critic_, "critic.l2", cfg.critic_width, cfg.critic_width, rng);
  add_layer(critic_, "critic.l3", cfg.critic_width, 1, rng);
  for (const auto& p : actor_) actor_target_.add(p.name, p.value);
  for (const auto& p : critic_) critic_target_.add(p.name, p.value);
}

grad::NodeId ActorCritic::actor_forward(grad::Graph& g, grad::ParameterSet& net, grad::NodeId states) const {
  grad::NodeId x = g.relu(layer(g, net, "actor.l1", states));
  x = g.relu(layer(g, net, "actor.l2", x));
  return g.tanh(layer(g, net, "actor.l3", x));
}

grad::NodeId ActorCritic::critic_forward(grad::Graph& g, grad::ParameterSet& net, grad::NodeId states,
                                         grad::NodeId actions) const {
  grad::NodeId x = g.relu(layer(g, net, "critic.l1", g.concat_cols(states, actions)));
  x = g.relu(layer(g, net, "critic.l2", x));
  return layer(g, net, "critic.l3", x);
}

sim::Action ActorCritic::act(std::span<const double> tiled) {
  if (tiled.size() != input_len_) throw DimensionError("actor input has the wrong tiled length");
  grad::Graph g;
  const grad::Tensor& a =
      g.value(actor_forward(g, actor_, g.input(grad::Tensor({1, input_len_}, {tiled.begin(), tiled.end()}))));
  return {a[0], a[1]};
}

double ActorCritic::q_value(std::span<const double> tiled, sim::Action a) {
  if (tiled.size() != input_len_) throw DimensionError("critic input has the wrong tiled length");
  grad::Graph g;
  const auto s = g.input(grad::Tensor({1, input_len_}, {tiled.begin(), tiled.end()}));
  const auto act = g.input(grad::Tensor({1, 2}, {a.tau1, a.tau2}));
  return g.value(critic_forward(g, critic_, s, act)).item();
}

std::vector<double> ActorCritic::bellman_targets(std::span<const Transition* const> batch) {
  const grad::Tensor next = stack_rows(batch, true, input_len_);
  grad::Graph g;
  const auto s2 = g.constant_ref(next);
  const grad::Tensor& q2 = g.value(critic_forward(g, critic_target_, s2, actor_forward(g, actor_target_, s2)));
  std::vector<double> y(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k)
    y[k] = batch[k]->reward + cfg_.gamma * (batch[k]->done ? 0.0 : 1.0) * q2[k];
  return y;
}

UpdateStats ActorCritic::update(std::span<const Transition* const> batch) {
  if (batch.empty()) throw DomainError("ddpg update needs a non-empty batch");
  const std::size_t b = batch.size();
  const grad::Tensor states = stack_rows(batch, false, input_len_);
  UpdateStats stats;
  const grad::Tensor y({b, 1}, bellman_targets(batch));

  {
    grad::Graph g;
    grad::Tensor actions({b, 2});
    for (std::size_t k = 0; k < b; ++k) {
      actions[2 * k] = batch[k]->action.tau1;
      actions[2 * k + 1] = batch[k]->action.tau2;
    }
    const auto q = critic_forward(g, critic_, g.constant_ref(states), g.input(std::move(actions)));
    const auto loss = g.mse(q, g.constant_ref(y));
    stats.critic_loss = g.value(loss).item();
    if (cfg_.critic_lr > 0.0)
      grad::adam_step(critic_.all(), g.backward(loss), critic_opt_, grad::AdamConfig{cfg_.critic_lr});
  }

  {
    grad::Graph g;
    const auto s = g.constant_ref(states);
    const auto objective = g.mean(critic_forward(g, critic_, s, actor_forward(g, actor_, s)));
    stats.actor_objective = g.value(objective).item();
    // Ascent on Q; only actor parameters are stepped.
    if (cfg_.actor_lr > 0.0)
      grad::adam_step(actor_.all(), g.backward(g.scale(objective, -1.0)), actor_opt_,
                      grad::AdamConfig{cfg_.actor_lr});
  }

  soft_update();
  return stats;
}

void ActorCritic::soft_update() {
  auto blend = [&](grad::ParameterSet& target, const grad::ParameterSet& live) {
    auto it = live.begin();
    for (auto& p : target) {
      const double* src = it->value.raw();
      double* dst = p.value.raw();
      for (std::size_t i = 0; i < p.value.size(); ++i) dst[i] = (1.0 - cfg_.tau) * dst[i] + cfg_.tau * src[i];
      ++it;
    }
  };
  blend(actor_target_, actor_);
  blend(critic_target_, critic_);
}

}  // namespace srlfd::rl
