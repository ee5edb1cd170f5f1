#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "srlfd/demos/dataset.hpp"
#include "srlfd/errors.hpp"

using namespace srlfd;
using namespace srlfd::demos;

namespace {

const sim::ArmParams kArm{};

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("srlfd_demos_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

DemoConfig small_config(int k = 3, int n = 2, int horizon = 12) {
  DemoConfig cfg;
  cfg.instances = k;
  cfg.trajectories = n;
  cfg.horizon = horizon;
  cfg.seed = 17;
  cfg.env = sim::with_variant(cfg.env, sim::Variant::kClean);
  return cfg;
}

}  // namespace

TEST_CASE("inverse kinematics: examples, round trip, unreachable goals") {
  const JointTarget a = inverse_kinematics(kArm, {1.0, 0.0});
  CHECK(std::abs(a.alpha1) < 1e-7);
  CHECK(std::abs(a.alpha2) < 1e-7);
  const JointTarget b = inverse_kinematics(kArm, {0.6, 0.4});
  CHECK(b.alpha1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b.alpha2 == doctest::Approx(sim::kPi / 2).epsilon(1e-12));

  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double r = 0.2 + 0.8 * u(rng), th = 2 * sim::kPi * u(rng);
    const sim::Vec2 g{r * std::cos(th), r * std::sin(th)};
    const JointTarget q = inverse_kinematics(kArm, g);
    REQUIRE(q.alpha2 >= 0.0);
    const sim::Vec2 p = sim::forward_kinematics(kArm, q.alpha1, q.alpha2);
    worst = std::max(worst, std::hypot(p.x - g.x, p.y - g.y));
  }
  CHECK(worst < 1e-9);
  CHECK_THROWS_AS(inverse_kinematics(kArm, {1.2, 0.0}), DomainError);
  CHECK_THROWS_AS(inverse_kinematics(kArm, {0.1, 0.0}), DomainError);
}

TEST_CASE("expert: fixed point and saturation") {
  const JointTarget target{0.4, 1.1};
  const sim::Action rest = expert_action({0.4, 1.1, 0.0, 0.0}, target);
  CHECK(rest.tau1 == 0.0);
  CHECK(rest.tau2 == 0.0);
  const sim::Action sat = expert_action({0.4 - sim::kPi / 2, 1.1, 0.0, 0.0}, target);
  CHECK(sat.tau1 == 1.0);
  CHECK(sat.tau2 == 0.0);
  const sim::Action damp = expert_action({0.4, 1.1, 0.8, -0.4}, target);
  CHECK(damp.tau1 == doctest::Approx(-0.4));
  CHECK(damp.tau2 == doctest::Approx(0.2));
}

TEST_CASE("expert: reaches the goal within 50 steps in at least 95% of 200 episodes") {
  DemoConfig cfg = small_config(8);
  const auto goals = sample_goals(cfg);
  int wins = 0;
  for (int e = 0; e < 200; ++e) {
    const sim::TaskInstance& task = goals[static_cast<std::size_t>(e) % goals.size()];
    const Expert expert(kArm, task);
    sim::ReacherEnv env(cfg.env, task, make_rng(5, {static_cast<std::uint64_t>(e)}));
    env.set_rendering(false);
    const auto ep = sim::run_episode(env, [&](const sim::Observation& o) { return expert(o.state); }, 50);
    wins += ep.success;
  }
  CHECK(wins >= 190);
}

TEST_CASE("goal sampling: annulus, separation, determinism, failure") {
  DemoConfig cfg = small_config(16);
  const auto goals = sample_goals(cfg);
  REQUIRE(goals.size() == 16);
  for (std::size_t i = 0; i < goals.size(); ++i) {
    const double r = std::hypot(goals[i].goal.x, goals[i].goal.y);
    CHECK(r >= 0.2 + cfg.goal_margin);
    CHECK(r <= 1.0 - cfg.goal_margin);
    CHECK(goals[i].id == static_cast<int>(i));
    for (std::size_t j = 0; j < i; ++j)
      CHECK(std::hypot(goals[i].goal.x - goals[j].goal.x, goals[i].goal.y - goals[j].goal.y) >= 0.15);
  }
  CHECK(sample_goals(cfg)[7].goal.x == goals[7].goal.x);
  cfg.instances = 400;
  CHECK_THROWS_AS(sample_goals(cfg), DomainError);
}

TEST_CASE("generate: fencepost, boundaries and triple layout") {
  DemoConfig cfg = small_config(1, 1, 50);
  const auto demos = generate_demos(cfg);
  REQUIRE(demos.size() == 1);
  CHECK(demos[0].triple_count() <= 49);
  CHECK(demos[0].triple_count() == 49);  // full-horizon demonstrations

  cfg = small_config(2, 3, 6);
  const auto d2 = generate_demos(cfg);
  const DemoSet& s = d2[1];
  CHECK(s.boundaries() == std::vector<std::size_t>{0, 5, 10, 15});
  const TripleRef t = s.triple(7);  // trajectory 1, frames 2 -> 3
  const Trajectory& tr = s.trajectories()[1];
  CHECK(t.prev == tr.frame(2));
  CHECK(t.curr == tr.frame(3));
  CHECK(t.action.tau1 == tr.actions[3].tau1);
  CHECK_THROWS_AS(s.triple(15), DomainError);

  cfg.stop_on_success = true;
  for (const auto& set : generate_demos(cfg))
    for (const auto& traj : set.trajectories()) CHECK(traj.length() >= 2);

  DemoSet bad;
  Trajectory one;
  one.frames.resize(sim::kImagePixels);
  one.actions.resize(1);
  CHECK_THROWS_AS(bad.add_trajectory(one), DomainError);
}

TEST_CASE("replaying stored actions from the derived start reproduces the frames") {
  const DemoConfig cfg = small_config(2, 3, 20);
  const auto demos = generate_demos(cfg);
  Rng unused(0);
  for (const auto& set : demos) {
    for (int j = 0; j < cfg.trajectories; ++j) {
      Rng rng = trajectory_rng(cfg.seed, set.task().id, j);
      sim::JointState s = sample_start(rng, cfg.env.arm, set.task());
      const Trajectory& tr = set.trajectories()[static_cast<std::size_t>(j)];
      for (std::size_t t = 0; t < tr.length(); ++t) {
        std::vector<std::uint8_t> bytes(sim::kImagePixels);
        sim::quantize(sim::render(cfg.env.arm, cfg.env.render, s, set.task(), std::nullopt, unused), bytes.data());
        REQUIRE(std::equal(bytes.begin(), bytes.end(), tr.frame(t)));
        s = sim::step(cfg.env.arm, s, tr.actions[t]);
      }
    }
  }
}

TEST_CASE("generate: same seed gives identical bytes, other seed differs") {
  DemoConfig cfg = small_config(2, 2, 8);
  cfg.env = sim::with_variant(cfg.env, sim::Variant::kNoisy);
  const auto p1 = tmp_path("det1.bin"), p2 = tmp_path("det2.bin"), p3 = tmp_path("det3.bin");
  save_demos(generate_demos(cfg), p1);
  save_demos(generate_demos(cfg), p2);
  cfg.seed += 1;
  save_demos(generate_demos(cfg), p3);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(slurp(p1) != slurp(p3));
  for (const auto& p : {p1, p2, p3}) std::filesystem::remove(p);
}

TEST_CASE("norm stats: constant data, normalized moments, two-pass oracle") {
  const std::vector<double> half(1000, 0.5);
  const NormStats c = compute_norm_stats(half);
  CHECK(c.mu == 0.5);
  CHECK(c.sigma == kSigmaFloor);
  CHECK_THROWS_AS(compute_norm_stats(std::span<const double>{}), DomainError);
  CHECK_THROWS_AS(compute_norm_stats(std::vector<DemoSet>{}), DomainError);

  DemoConfig cfg = small_config(2, 2, 5);
  cfg.env = sim::with_variant(cfg.env, sim::Variant::kNoisy);
  const auto demos = generate_demos(cfg);
  const NormStats ns = compute_norm_stats(demos);

  std::vector<double> px;
  for (const auto& s : demos)
    for (const auto& t : s.trajectories())
      for (auto v : t.frames) px.push_back(v / 255.0);
  double mean = 0.0;
  for (double v : px) mean += v;
  mean /= px.size();
  double var = 0.0;
  for (double v : px) var += (v - mean) * (v - mean);
  var /= px.size();
  CHECK(ns.mu == doctest::Approx(mean).epsilon(1e-12));
  CHECK(ns.sigma == doctest::Approx(std::sqrt(var)).epsilon(1e-12));

  double m2 = 0.0, v2 = 0.0;
  for (double v : px) m2 += (v - ns.mu) / ns.sigma;
  m2 /= px.size();
  for (double v : px) v2 += std::pow((v - ns.mu) / ns.sigma - m2, 2);
  v2 /= px.size();
  CHECK(std::abs(m2) < 1e-9);
  CHECK(std::abs(v2 - 1.0) < 1e-9);
}

TEST_CASE("demo file: round trip, size, distinct failure modes") {
  const auto demos = generate_demos(small_config(3, 2, 7));
  const auto path = tmp_path("rt.bin");
  save_demos(demos, path);
  const auto back = load_demos(path);
  CHECK(back == demos);
  CHECK(back[2].task().id == 2);

  // Frames are stored once per trajectory, so each triple costs about one
  // frame and one action beyond the first frame of its trajectory.
  std::uint64_t frames = 0, trajs = 0;
  for (const auto& s : demos) {
    frames += s.frame_count();
    trajs += s.trajectories().size();
  }
  const std::uint64_t expected = 5 + 2 + 4 + demos.size() * 20 + trajs * 4 + frames * (4096 + 16);
  CHECK(std::filesystem::file_size(path) == expected);
  CHECK(demo_file_size(demos) == expected);

  std::string bytes = slurp(path);
  auto write = [&](const std::string& p, const std::string& b) { std::ofstream(p, std::ios::binary) << b; };
  const auto bad = tmp_path("bad.bin");
  std::string m = bytes;
  m[0] = 'X';
  write(bad, m);
  CHECK_THROWS_AS(load_demos(bad), FormatError);
  std::string v = bytes;
  v[5] = 9;
  write(bad, v);
  CHECK_THROWS_AS(load_demos(bad), FormatError);
  write(bad, bytes.substr(0, bytes.size() - 100));
  CHECK_THROWS_AS(load_demos(bad), TruncatedError);
  CHECK_THROWS_AS(load_demos(tmp_path("missing.bin")), IoError);
  CHECK_THROWS_AS(save_demos(demos, "/nonexistent/dir/x.bin"), IoError);
  std::filesystem::remove(bad);
  std::filesystem::remove(path);
}
