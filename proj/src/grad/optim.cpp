#include "srlfd/grad/optim.hpp"

#include <cmath>

#include "srlfd/errors.hpp"

namespace srlfd::grad {

namespace {
void check_grad(const Parameter& p, const Tensor& g) {
  if (g.shape() != p.value.shape())
    throw DimensionError("gradient shape " + to_string(g.shape()) + " does not match parameter '" +
                         p.name + "' " + to_string(p.value.shape()));
  if (!g.all_finite()) throw NumericFault("non-finite gradient for parameter '" + p.name + "'");
}
}  // namespace

const AdamState::Slot* AdamState::find(const std::string& name) const {
  auto it = slots_.find(name);
  return it == slots_.end() ? nullptr : &it->second;
}

AdamState::Slot& AdamState::slot_for(const Parameter& p) {
  auto it = slots_.find(p.name);
  if (it == slots_.end())
    it = slots_.emplace(p.name, Slot{Tensor(p.value.shape()), Tensor(p.value.shape()), 0}).first;
  return it->second;
}

void adam_step(std::span<Parameter* const> params, const GradientTable& grads, AdamState& state,
               const AdamConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigError("adam: learning rate must be positive");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
    throw ConfigError("adam: betas must lie in [0, 1)");
  for (Parameter* p : params) {
    const Tensor* g = grads.find(*p);
    if (!g) continue;
    check_grad(*p, *g);
    auto& s = state.slot_for(*p);
    ++s.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.t));
    double* w = p->value.raw();
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double gi = (*g)[i];
      s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * gi;
      s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * gi * gi;
      w[i] -= cfg.lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + cfg.eps);
    }
  }
  state.count_step();
}

void sgd_step(std::span<Parameter* const> params, const GradientTable& grads, double lr) {
  if (!(lr > 0.0)) throw ConfigError("sgd: learning rate must be positive");
  for (Parameter* p : params) {
    const Tensor* g = grads.find(*p);
    if (!g) continue;
    check_grad(*p, *g);
    double* w = p->value.raw();
    for (std::size_t i = 0; i < g->size(); ++i) w[i] -= lr * (*g)[i];
  }
}

}  // namespace srlfd::grad
