#include "srlfd/sim/arm.hpp"

#include <algorithm>
#include <cmath>

#include "srlfd/errors.hpp"

namespace srlfd::sim {

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

Action clip_action(Action a) {
  return {std::clamp(a.tau1, -1.0, 1.0), std::clamp(a.tau2, -1.0, 1.0)};
}

Vec2 forward_kinematics(const ArmParams& arm, double alpha1, double alpha2) {
  return {arm.l1 * std::cos(alpha1) + arm.l2 * std::cos(alpha1 + alpha2),
          arm.l1 * std::sin(alpha1) + arm.l2 * std::sin(alpha1 + alpha2)};
}

Vec2 elbow_position(const ArmParams& arm, double alpha1) {
  return {arm.l1 * std::cos(alpha1), arm.l1 * std::sin(alpha1)};
}

JointState step(const ArmParams& arm, const JointState& s, Action a) {
  if (!std::isfinite(a.tau1) || !std::isfinite(a.tau2))
    throw NumericFault("non-finite action passed to the arm");
  a = clip_action(a);
  auto joint = [&](double alpha, double omega, double tau, double inertia, double& alpha_out,
                   double& omega_out) {
    omega_out = omega + arm.dt * (arm.torque_gain * tau - arm.damping * omega) / inertia;
    omega_out = std::clamp(omega_out, -arm.omega_max, arm.omega_max);
    alpha_out = wrap_angle(alpha + arm.dt * omega_out);
  };
  JointState n;
  joint(s.alpha1, s.omega1, a.tau1, arm.inertia1, n.alpha1, n.omega1);
  joint(s.alpha2, s.omega2, a.tau2, arm.inertia2, n.alpha2, n.omega2);
  return n;
}

double goal_distance(const ArmParams& arm, const JointState& s, const TaskInstance& task) {
  const Vec2 p = end_effector(arm, s);
  return std::hypot(p.x - task.goal.x, p.y - task.goal.y);
}

int reward(const ArmParams& arm, const JointState& s, const TaskInstance& task) {
  return goal_distance(arm, s, task) <= arm.eps_goal ? 1 : 0;
}

JointState reset(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  JointState s;
  // pi - 2*pi*[0,1) covers (-pi, pi].
  s.alpha1 = kPi - 2.0 * kPi * u(rng);
  s.alpha2 = kPi - 2.0 * kPi * u(rng);
  return s;
}

}  // namespace srlfd::sim
