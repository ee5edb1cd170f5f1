#pragma once

#include "srlfd/sim/arm.hpp"

namespace srlfd::demos {

struct JointTarget {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

// Closed-form two-link solution on the elbow-down branch (alpha2 >= 0).
// DomainError when the goal is outside the reachable annulus.
JointTarget inverse_kinematics(const sim::ArmParams& arm, sim::Vec2 goal);

struct ExpertGains {
  double kp = 2.0;
  double kd = 0.5;
};

// PD law on the wrapped joint error to the IK target, clipped to [-1, 1].
sim::Action expert_action(const sim::JointState& s, const JointTarget& target, const ExpertGains& gains = {});

// Expert for one task with the IK target solved once.
class Expert {
 public:
  Expert(const sim::ArmParams& arm, const sim::TaskInstance& task, ExpertGains gains = {});
  sim::Action operator()(const sim::JointState& s) const { return expert_action(s, target_, gains_); }
  const JointTarget& target() const { return target_; }

 private:
  JointTarget target_;
  ExpertGains gains_;
};

}  // namespace srlfd::demos
