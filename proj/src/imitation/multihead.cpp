#include "srlfd/imitation/multihead.hpp"

#include <cmath>
#include <cstdio>

#include "srlfd/errors.hpp"

namespace srlfd::imitation {

std::string head_prefix(std::size_t i) { return "head" + std::to_string(i) + "."; }

MultiHeadNet::MultiHeadNet(std::size_t dim, std::size_t heads, std::uint64_t seed) : dim_(dim), heads_(heads) {
  if (dim < 2 || dim % 2 != 0) throw ConfigError("representation dimension must be even and >= 2");
  if (heads < 1) throw ConfigError("need at least one head");
  Rng rng = make_rng(seed, {0x6d68});
  rep::init_phi(params_, dim / 2, rng);
  for (std::size_t i = 0; i < heads; ++i) {
    const std::string p = head_prefix(i);
    params_.add(p + "l1.w", grad::glorot_uniform({dim, kHeadWidth}, dim, kHeadWidth, rng));
    params_.add(p + "l1.b", grad::Tensor({kHeadWidth}));
    params_.add(p + "l2.w", grad::glorot_uniform({kHeadWidth, kHeadWidth}, kHeadWidth, kHeadWidth, rng));
    params_.add(p + "l2.b", grad::Tensor({kHeadWidth}));
    params_.add(p + "l3.w", grad::glorot_uniform({kHeadWidth, kActionDim}, kHeadWidth, kActionDim, rng));
    params_.add(p + "l3.b", grad::Tensor({kActionDim}));
  }
}

void MultiHeadNet::check_head(std::size_t i) const {
  if (i >= heads_)
    throw DomainError("head index " + std::to_string(i) + " out of range (K = " + std::to_string(heads_) + ")");
}

std::vector<grad::Parameter*> MultiHeadNet::encoder_params() { return params_.with_prefix("phi."); }

std::vector<grad::Parameter*> MultiHeadNet::head_params(std::size_t i) {
  check_head(i);
  return params_.with_prefix(head_prefix(i));
}

std::vector<grad::Parameter*> MultiHeadNet::theta(std::size_t i) {
  auto t = encoder_params();
  for (auto* p : head_params(i)) t.push_back(p);
  return t;
}

grad::NodeId MultiHeadNet::represent(grad::Graph& g, grad::NodeId prev, grad::NodeId curr) {
  const grad::Tensor& a = g.value(prev);
  const grad::Tensor& b = g.value(curr);
  if (a.shape() != b.shape()) throw DimensionError("represent: frame batches differ in shape");
  const std::size_t n = a.dim(0);
  // One encoder pass over both frame sets.
  grad::Tensor both({2 * n, sim::kImageSide, sim::kImageSide, 1});
  std::copy(a.raw(), a.raw() + a.size(), both.raw());
  std::copy(b.raw(), b.raw() + b.size(), both.raw() + a.size());
  const grad::NodeId phi = rep::phi_forward(g, params_, g.input(std::move(both)));
  const grad::NodeId phi_prev = g.slice_rows(phi, 0, n);
  const grad::NodeId phi_curr = g.slice_rows(phi, n, 2 * n);
  return g.concat_cols(phi_curr, g.sub(phi_curr, phi_prev));
}

grad::NodeId MultiHeadNet::head_forward(grad::Graph& g, std::size_t i, grad::NodeId rep) {
  check_head(i);
  const std::string p = head_prefix(i);
  auto layer = [&](grad::NodeId x, const char* name) {
    return g.dense(x, g.param(params_.at(p + name + ".w")), g.param(params_.at(p + name + ".b")));
  };
  grad::NodeId x = g.scaled_tanh(layer(rep, "l1"));
  x = g.scaled_tanh(layer(x, "l2"));
  return layer(x, "l3");
}

std::vector<double> MultiHeadNet::predict(std::size_t i, const rep::Representation& r) {
  if (r.dim() != dim_) throw DimensionError("predict: representation has dimension " + std::to_string(r.dim()));
  const auto flat = r.flat();
  grad::Graph g;
  const grad::Tensor& out = g.value(head_forward(g, i, g.input(grad::Tensor({1, dim_}, flat))));
  return {out.raw(), out.raw() + out.size()};
}

grad::NodeId imitation_loss(grad::Graph& g, MultiHeadNet& net, std::size_t i,
                            std::span<const demos::TripleRef> batch, const rep::NormStats& norm) {
  if (batch.empty()) throw DomainError("imitation_loss: empty batch");
  std::vector<const std::uint8_t*> prev, curr;
  grad::Tensor actions({batch.size(), kActionDim});
  for (std::size_t k = 0; k < batch.size(); ++k) {
    prev.push_back(batch[k].prev);
    curr.push_back(batch[k].curr);
    actions[2 * k] = batch[k].action.tau1;
    actions[2 * k + 1] = batch[k].action.tau2;
  }
  const grad::NodeId r =
      net.represent(g, g.input(rep::normalize_frames(prev, norm)), g.input(rep::normalize_frames(curr, norm)));
  return g.mse(net.head_forward(g, i, r), g.input(std::move(actions)));
}

TaskSampler::TaskSampler(const std::vector<demos::DemoSet>& demos, std::uint64_t seed)
    : demos_(demos), rng_(make_rng(seed, {0x73616d70})) {
  for (const auto& d : demos) {
    std::vector<std::size_t> p(d.triple_count());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = k;
    perm_.push_back(std::move(p));
  }
}

std::size_t TaskSampler::next_task() {
  return std::uniform_int_distribution<std::size_t>(0, demos_.size() - 1)(rng_);
}

std::vector<demos::TripleRef> TaskSampler::next_batch(std::size_t task, std::size_t b) {
  auto& p = perm_.at(task);
  if (b > p.size()) throw ConfigError("batch size exceeds the triples of task " + std::to_string(task));
  // Partial Fisher-Yates on a persistent permutation: the first b entries
  // are a uniform draw without replacement.
  std::vector<demos::TripleRef> out;
  out.reserve(b);
  for (std::size_t k = 0; k < b; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, p.size() - 1);
    std::swap(p[k], p[pick(rng_)]);
    out.push_back(demos_[task].triple(p[k]));
  }
  return out;
}

TrainResult srlfd_train(const std::vector<demos::DemoSet>& demos, std::size_t dim, const TrainConfig& cfg,
                        const std::function<void(const LossRecord&)>& on_step) {
  if (demos.empty()) throw ConfigError("srlfd_train: no demonstrations");
  if (cfg.epochs < 1 || cfg.steps_per_epoch < 1 || cfg.batch < 1)
    throw ConfigError("epochs, steps per epoch and batch size must all be >= 1");
  for (std::size_t i = 0; i < demos.size(); ++i)
    if (demos[i].triple_count() < cfg.batch)
      throw ConfigError("task " + std::to_string(i) + " has " + std::to_string(demos[i].triple_count()) +
                        " triples, fewer than the batch size " + std::to_string(cfg.batch));

  TrainResult res{MultiHeadNet(dim, demos.size(), cfg.seed), demos::compute_norm_stats(demos), {}};
  TaskSampler sampler(demos, cfg.seed);
  grad::AdamState adam;
  res.log.reserve(cfg.epochs * cfg.steps_per_epoch);

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t n = 0; n < cfg.steps_per_epoch; ++n, ++step) {
      const std::size_t i = sampler.next_task();
      const auto batch = sampler.next_batch(i, cfg.batch);
      grad::Graph g;
      grad::GradientTable grads;
      double loss = 0.0;
      try {
        const grad::NodeId l = imitation_loss(g, res.net, i, batch, res.norm);
        grads = g.backward(l);
        loss = g.value(l).item();
      } catch (const NumericFault& e) {
        throw NumericFault("imitation diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(n) +
                               ", task " + std::to_string(i) + ": " + e.what(),
                           e.node());
      }
      const auto theta = res.net.theta(i);
      if (cfg.optimizer == OptimizerKind::kAdam)
        grad::adam_step(theta, grads, adam, cfg.adam);
      else
        grad::sgd_step(theta, grads, cfg.sgd_lr);
      res.log.push_back({step, i, loss});
      if (on_step) on_step(res.log.back());
    }
  }
  return res;
}

void write_loss_csv(const std::vector<LossRecord>& log, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  std::fprintf(f, "step,task_id,loss\n");
  for (const auto& r : log) std::fprintf(f, "%zu,%zu,%.17g\n", r.step, r.task, r.loss);
  if (std::fclose(f) != 0) throw IoError("error writing '" + path + "'");
}

double windowed_loss(const std::vector<LossRecord>& log, std::size_t end, std::size_t window) {
  if (window == 0 || end < window || end > log.size()) throw DomainError("windowed_loss: window out of range");
  double s = 0.0;
  for (std::size_t k = end - window; k < end; ++k) s += log[k].loss;
  return s / static_cast<double>(window);
}

rep::NetworkEncoder encoder_of(const MultiHeadNet& net, const rep::NormStats& norm) {
  grad::ParameterSet enc;
  for (const auto& p : net.params())
    if (p.name.rfind("phi.", 0) == 0) enc.add(p.name, p.value);
  return rep::NetworkEncoder(rep::RepKind::kSrlfd, std::move(enc), norm);
}

void export_encoder(const MultiHeadNet& net, const rep::NormStats& norm, const std::string& path) {
  rep::save_encoder(encoder_of(net, norm), path);
}

}  // namespace srlfd::imitation
