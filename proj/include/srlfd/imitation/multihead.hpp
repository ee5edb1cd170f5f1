#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "srlfd/grad/optim.hpp"
#include "srlfd/rep/representation.hpp"

namespace srlfd::imitation {

inline constexpr std::size_t kHeadWidth = 24;
inline constexpr std::size_t kActionDim = 2;

// Shared phi encoder (latent d/2) with K action heads. Head i reads the
// d-dimensional (phi, delta phi) pair:
//   dense(24) -> scaled_tanh -> dense(24) -> scaled_tanh -> dense(2)
// Parameters are named phi.* and head<i>.l{1,2,3}.{w,b}.
class MultiHeadNet {
 public:
  MultiHeadNet(std::size_t dim, std::size_t heads, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::size_t heads() const { return heads_; }

  grad::ParameterSet& params() { return params_; }
  const grad::ParameterSet& params() const { return params_; }
  std::vector<grad::Parameter*> encoder_params();
  std::vector<grad::Parameter*> head_params(std::size_t i);
  // theta^i: encoder plus head i.
  std::vector<grad::Parameter*> theta(std::size_t i);

  // prev/curr: B x 64 x 64 x 1 normalized. Returns B x d = [phi_t, phi_t - phi_{t-1}].
  grad::NodeId represent(grad::Graph& g, grad::NodeId prev, grad::NodeId curr);
  // rep: B x d. Returns B x 2.
  grad::NodeId head_forward(grad::Graph& g, std::size_t i, grad::NodeId rep);

  std::vector<double> predict(std::size_t i, const rep::Representation& r);

 private:
  void check_head(std::size_t i) const;

  std::size_t dim_, heads_;
  grad::ParameterSet params_;
};

std::string head_prefix(std::size_t i);

// Mean over the batch of ||psi^i(phi_t, delta phi_t) - a_t||^2.
grad::NodeId imitation_loss(grad::Graph& g, MultiHeadNet& net, std::size_t i,
                            std::span<const demos::TripleRef> batch, const rep::NormStats& norm);

enum class OptimizerKind { kAdam, kSgd };

struct TrainConfig {
  std::size_t epochs = 40;           // M
  std::size_t steps_per_epoch = 200;  // N
  std::size_t batch = 64;             // b
  OptimizerKind optimizer = OptimizerKind::kAdam;
  grad::AdamConfig adam;
  double sgd_lr = 1e-3;
  std::uint64_t seed = 1;
};

struct LossRecord {
  std::size_t step;
  std::size_t task;
  double loss;
};

struct TrainResult {
  MultiHeadNet net;
  rep::NormStats norm;
  std::vector<LossRecord> log;
};

// Draws task indices uniformly and batches without replacement.
class TaskSampler {
 public:
  TaskSampler(const std::vector<demos::DemoSet>& demos, std::uint64_t seed);
  std::size_t next_task();
  std::vector<demos::TripleRef> next_batch(std::size_t task, std::size_t b);

 private:
  const std::vector<demos::DemoSet>& demos_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> perm_;
};

// Sequential multi-task imitation: every step picks a task uniformly, a
// batch from its demonstrations, and takes one optimizer step on theta^i.
// ConfigError when a task has fewer than b triples; NumericFault names
// (epoch, step, task) on divergence.
TrainResult srlfd_train(const std::vector<demos::DemoSet>& demos, std::size_t dim, const TrainConfig& cfg,
                        const std::function<void(const LossRecord&)>& on_step = {});

// Writes step,task_id,loss with round-trip precision.
void write_loss_csv(const std::vector<LossRecord>& log, const std::string& path);
// Trailing mean over `window` entries ending at `end` (exclusive).
double windowed_loss(const std::vector<LossRecord>& log, std::size_t end, std::size_t window);

rep::NetworkEncoder encoder_of(const MultiHeadNet& net, const rep::NormStats& norm);
// Encoder weights and normalization only; heads are not written.
void export_encoder(const MultiHeadNet& net, const rep::NormStats& norm, const std::string& path);

}  // namespace srlfd::imitation
