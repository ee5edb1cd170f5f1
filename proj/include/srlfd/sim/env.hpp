#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "srlfd/sim/arm.hpp"
#include "srlfd/sim/render.hpp"

namespace srlfd::sim {

enum class Variant { kClean, kNoisy };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& s);

struct EnvConfig {
  ArmParams arm;
  RenderParams render;
  DistractorParams distractor;
  bool distractor_enabled = false;
  int horizon = 50;
  bool stop_on_success = true;
};

// Clean: no noise, no distractor. Noisy: pixel noise (0.05 unless already
// set) plus the distractor.
EnvConfig with_variant(EnvConfig cfg, Variant v);

struct Observation {
  Image image;
  JointState state;
};

// One reaching task. Owns its rng stream, which drives resets, the
// distractor walk and pixel noise, in call order.
class ReacherEnv {
 public:
  ReacherEnv(EnvConfig cfg, TaskInstance task, Rng rng);

  Observation reset();
  Observation reset_to(const JointState& s);

  struct StepResult {
    Observation obs;
    int reward = 0;
  };
  StepResult step(Action a);

  // Ground-truth consumers skip rasterization; observations then carry a
  // blank image.
  void set_rendering(bool on) { rendering_ = on; }

  const EnvConfig& config() const { return cfg_; }
  const TaskInstance& task() const { return task_; }
  const JointState& state() const { return state_; }
  const std::optional<DistractorState>& distractor() const { return distractor_; }

 private:
  Observation observe();

  EnvConfig cfg_;
  TaskInstance task_;
  Rng rng_;
  JointState state_;
  std::optional<DistractorState> distractor_;
  bool rendering_ = true;
};

using Policy = std::function<Action(const Observation&)>;

struct EpisodeStep {
  JointState state;  // before the action
  Image image;       // observed before the action
  Action action;     // as returned by the policy, clipped
  int reward = 0;    // after the action
};

struct Episode {
  std::vector<EpisodeStep> steps;
  bool success = false;
};

// reset (or reset_to `start`), then {observe, act, step, reward} until the
// horizon or, when stop_on_success, the first reward. NumericFault on a
// non-finite action.
Episode run_episode(ReacherEnv& env, const Policy& policy, int horizon, bool stop_on_success = true,
                    const std::optional<JointState>& start = std::nullopt);

}  // namespace srlfd::sim
