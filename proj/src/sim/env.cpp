#include "srlfd/sim/env.hpp"

#include <cmath>

#include "srlfd/errors.hpp"

namespace srlfd::sim {

const char* variant_name(Variant v) { return v == Variant::kClean ? "clean" : "noisy"; }

Variant parse_variant(const std::string& s) {
  if (s == "clean") return Variant::kClean;
  if (s == "noisy") return Variant::kNoisy;
  throw ConfigError("unknown environment variant '" + s + "' (expected clean or noisy)");
}

EnvConfig with_variant(EnvConfig cfg, Variant v) {
  if (v == Variant::kClean) {
    cfg.render.noise_sigma = 0.0;
    cfg.distractor_enabled = false;
  } else {
    if (cfg.render.noise_sigma <= 0.0) cfg.render.noise_sigma = 0.05;
    cfg.distractor_enabled = true;
  }
  return cfg;
}

ReacherEnv::ReacherEnv(EnvConfig cfg, TaskInstance task, Rng rng)
    : cfg_(cfg), task_(task), rng_(std::move(rng)) {}

Observation ReacherEnv::reset() { return reset_to(sim::reset(rng_)); }

Observation ReacherEnv::reset_to(const JointState& s) {
  state_ = s;
  distractor_.reset();
  if (cfg_.distractor_enabled) distractor_ = spawn_distractor(cfg_.distractor, rng_);
  return observe();
}

ReacherEnv::StepResult ReacherEnv::step(Action a) {
  state_ = sim::step(cfg_.arm, state_, a);
  if (distractor_) distractor_ = distractor_step(*distractor_, cfg_.distractor, rng_);
  StepResult out;
  out.reward = reward(cfg_.arm, state_, task_);
  out.obs = observe();
  return out;
}

Observation ReacherEnv::observe() {
  Observation o;
  o.state = state_;
  if (rendering_) o.image = render(cfg_.arm, cfg_.render, state_, task_, distractor_, rng_);
  return o;
}

Episode run_episode(ReacherEnv& env, const Policy& policy, int horizon, bool stop_on_success,
                    const std::optional<JointState>& start) {
  if (horizon < 1) throw ConfigError("episode horizon must be >= 1");
  Episode ep;
  ep.steps.reserve(static_cast<std::size_t>(horizon));
  Observation obs = start ? env.reset_to(*start) : env.reset();
  for (int t = 0; t < horizon; ++t) {
    const Action raw = policy(obs);
    if (!std::isfinite(raw.tau1) || !std::isfinite(raw.tau2))
      throw NumericFault("policy produced a non-finite action at step " + std::to_string(t));
    const Action a = clip_action(raw);
    auto res = env.step(a);
    ep.steps.push_back({obs.state, std::move(obs.image), a, res.reward});
    if (res.reward == 1) {
      ep.success = true;
      if (stop_on_success) break;
    }
    obs = std::move(res.obs);
  }
  return ep;
}

}  // namespace srlfd::sim
