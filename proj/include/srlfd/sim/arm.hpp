#pragma once

#include "srlfd/rng.hpp"

namespace srlfd::sim {

inline constexpr double kPi = 3.14159265358979323846;

// Two independent damped joints driven by clipped torques.
struct ArmParams {
  double l1 = 0.6;
  double l2 = 0.4;
  double dt = 0.02;
  double torque_gain = 20.0;
  double damping = 0.5;
  double inertia1 = 1.0;
  double inertia2 = 1.0;
  double omega_max = 8.0;
  double eps_goal = 0.1;
};

struct JointState {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
};

struct Action {
  double tau1 = 0.0;
  double tau2 = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct TaskInstance {
  Vec2 goal;
  int id = 0;
};

// Maps any angle onto (-pi, pi].
double wrap_angle(double a);
Action clip_action(Action a);

Vec2 forward_kinematics(const ArmParams& arm, double alpha1, double alpha2);
Vec2 elbow_position(const ArmParams& arm, double alpha1);
inline Vec2 end_effector(const ArmParams& arm, const JointState& s) {
  return forward_kinematics(arm, s.alpha1, s.alpha2);
}

// Semi-implicit Euler. Throws NumericFault on a non-finite action; the
// action is clipped to [-1, 1] before use.
JointState step(const ArmParams& arm, const JointState& s, Action a);

double goal_distance(const ArmParams& arm, const JointState& s, const TaskInstance& task);
// 1 iff the end effector is within eps_goal of the goal (inclusive).
int reward(const ArmParams& arm, const JointState& s, const TaskInstance& task);

// Angles uniform on (-pi, pi], zero velocity.
JointState reset(Rng& rng);

}  // namespace srlfd::sim
