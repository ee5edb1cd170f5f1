#pragma once

#include <functional>
#include <string>
#include <vector>

#include "srlfd/rep/representation.hpp"
#include "srlfd/rl/ddpg.hpp"
#include "srlfd/sim/env.hpp"

namespace srlfd::rl {

struct RlConfig {
  int epochs = 50;
  int rollouts_per_epoch = 200;
  int test_episodes = 100;
  int horizon = 50;
  DdpgConfig ddpg;
  std::size_t buffer_capacity = 100000;
  std::size_t batch = 64;
  // Gradient updates per environment step collected in a rollout.
  int updates_per_step = 1;
  // Leading training rollouts that use uniform random actions.
  int warmup_rollouts = 0;
  double sigma_start = 0.2;
  double sigma_end = 0.05;
  std::uint64_t seed = 1;
};

struct RolloutStats {
  int length = 0;
  bool success = false;
  double episode_return = 0.0;
};

// One episode on `env` from a start drawn from `rng` (until success or the
// horizon). Exploration noise N(0, sigma) is added to the
// actor output before clipping. When `buffer` is non-null every step is
// stored; a time-limit cut is not marked done. `first_delta` receives the
// delta slot of the first representation when non-null.
RolloutStats rollout(sim::ReacherEnv& env, ActorCritic& ac, const rep::RepresentationModel& model,
                     double sigma, int horizon, Rng& rng, ReplayBuffer* buffer,
                     bool random_actions = false, std::vector<double>* first_delta = nullptr);

struct EvalResult {
  double success_rate = 0.0;
  double mean_episode_length = 0.0;
};

// Noise-free policy over n episodes whose starts are drawn from `starts`
// (resampled while inside the goal disc).
EvalResult evaluate(sim::ReacherEnv& env, ActorCritic& ac, const rep::RepresentationModel& model, int n_episodes,
                    int horizon, Rng& starts);
// Same protocol for a policy on raw observations (expert, zero torque).
EvalResult evaluate_policy(sim::ReacherEnv& env, const sim::Policy& policy, int n_episodes, int horizon,
                           Rng& starts);

struct CurvePoint {
  int epoch = 0;
  long train_rollouts_cum = 0;
  double mean_success = 0.0;
  double mean_episode_length = 0.0;
};

// Goal for an RL run: area-uniform on the same annulus as the demo goals.
sim::TaskInstance rl_goal(std::uint64_t goal_seed, const sim::ArmParams& arm);

// Curve point 0 is the untrained policy; one point per epoch follows.
std::vector<CurvePoint> train_rl(const sim::EnvConfig& env_cfg, const sim::TaskInstance& goal,
                                 const rep::RepresentationModel& model, const RlConfig& cfg,
                                 const std::function<void(const CurvePoint&)>& on_epoch = {});

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path);
std::vector<CurvePoint> read_curve_csv(const std::string& path);

}  // namespace srlfd::rl
