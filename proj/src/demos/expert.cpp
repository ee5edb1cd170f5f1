#include "srlfd/demos/expert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "srlfd/errors.hpp"

namespace srlfd::demos {

JointTarget inverse_kinematics(const sim::ArmParams& arm, sim::Vec2 goal) {
  const double r2 = goal.x * goal.x + goal.y * goal.y;
  double c2 = (r2 - arm.l1 * arm.l1 - arm.l2 * arm.l2) / (2.0 * arm.l1 * arm.l2);
  constexpr double kSlack = 1e-12;
  if (!std::isfinite(c2) || c2 > 1.0 + kSlack || c2 < -1.0 - kSlack)
    throw DomainError("goal (" + std::to_string(goal.x) + ", " + std::to_string(goal.y) +
                      ") is outside the reachable annulus");
  c2 = std::clamp(c2, -1.0, 1.0);
  const double a2 = std::acos(c2);
  const double a1 = std::atan2(goal.y, goal.x) - std::atan2(arm.l2 * std::sin(a2), arm.l1 + arm.l2 * c2);
  return {sim::wrap_angle(a1), a2};
}

sim::Action expert_action(const sim::JointState& s, const JointTarget& target, const ExpertGains& gains) {
  auto pd = [&](double goal, double alpha, double omega) {
    return std::clamp(gains.kp * sim::wrap_angle(goal - alpha) - gains.kd * omega, -1.0, 1.0);
  };
  return {pd(target.alpha1, s.alpha1, s.omega1), pd(target.alpha2, s.alpha2, s.omega2)};
}

Expert::Expert(const sim::ArmParams& arm, const sim::TaskInstance& task, ExpertGains gains)
    : target_(inverse_kinematics(arm, task.goal)), gains_(gains) {}

}  // namespace srlfd::demos
