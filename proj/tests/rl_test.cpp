#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "srlfd/demos/expert.hpp"
#include "srlfd/errors.hpp"
#include "srlfd/rl/train.hpp"

using namespace srlfd;
using namespace srlfd::rl;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<Transition> random_transitions(std::size_t n, std::size_t len, Rng& rng) {
  std::vector<Transition> out;
  std::bernoulli_distribution coin(0.3);
  for (std::size_t i = 0; i < n; ++i) {
    auto a = random_vec(2, rng);
    out.push_back({random_vec(len, rng), {a[0], a[1]}, coin(rng) ? 1.0 : 0.0, random_vec(len, rng), coin(rng)});
  }
  return out;
}

std::vector<const Transition*> pointers(const std::vector<Transition>& v) {
  std::vector<const Transition*> p;
  for (const auto& t : v) p.push_back(&t);
  return p;
}

std::size_t actor_param_count(std::size_t in) { return in * 24 + 24 + 24 * 24 + 24 + 24 * 2 + 2; }

sim::EnvConfig clean_env() { return sim::with_variant({}, sim::Variant::kClean); }

}  // namespace

TEST_CASE("tiling repeats the representation ceil(128/d) times") {
  CHECK(tile_repeats(16) == 8);
  CHECK(tile_repeats(48) == 3);
  CHECK(tile_repeats(8) == 16);
  CHECK(tile_repeats(1) == 128);
  CHECK(tile_repeats(128) == 1);
  CHECK(tile_repeats(129) == 1);
  CHECK_THROWS_AS(tile_repeats(0), ConfigError);

  Rng rng = make_rng(1);
  for (std::size_t d = 1; d <= 200; d += 7) {
    const auto rep = random_vec(d, rng);
    const auto t = tile_input(rep);
    CHECK(t.size() >= 128);
    CHECK(t.size() < 128 + d);
    for (std::size_t i = 0; i < t.size(); ++i) REQUIRE(t[i] == rep[i % d]);
  }
}

TEST_CASE("actor size is nearly constant across representation sizes") {
  const DdpgConfig cfg;
  std::vector<std::size_t> counts;
  for (std::size_t d : {8, 16, 48}) {
    ActorCritic ac(d, cfg, 1);
    CHECK(ac.actor().scalar_count() == actor_param_count(tile_repeats(d) * d));
    counts.push_back(ac.actor().scalar_count());
  }
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(static_cast<double>(*hi) / static_cast<double>(*lo) < 1.15);
}

TEST_CASE("actor outputs lie in [-1, 1] and vanish with a zero final layer") {
  ActorCritic ac(16, {}, 2);
  Rng rng = make_rng(3);
  for (int k = 0; k < 50; ++k) {
    auto s = random_vec(ac.input_len(), rng);
    for (auto& x : s) x *= 50.0;
    const auto a = ac.act(s);
    CHECK(std::abs(a.tau1) <= 1.0);
    CHECK(std::abs(a.tau2) <= 1.0);
  }
  ac.actor().at("actor.l3.w").value.fill(0.0);
  ac.actor().at("actor.l3.b").value.fill(0.0);
  for (int k = 0; k < 10; ++k) {
    const auto a = ac.act(random_vec(ac.input_len(), rng));
    CHECK(a.tau1 == 0.0);
    CHECK(a.tau2 == 0.0);
  }
}

TEST_CASE("target networks start as copies of the live networks") {
  ActorCritic ac(8, {}, 4);
  CHECK(ac.actor().content_hash() == ac.actor_target().content_hash());
  CHECK(ac.critic().content_hash() == ac.critic_target().content_hash());
}

TEST_CASE("critic action gradient matches central differences") {
  ActorCritic ac(16, {}, 5);
  Rng rng = make_rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_vec(ac.input_len(), rng);
    const auto av = random_vec(2, rng);
    grad::Graph g;
    const auto sn = g.input(grad::Tensor({1, ac.input_len()}, s));
    const auto an = g.input(grad::Tensor({1, 2}, av), true);
    const auto q = ac.critic_forward(g, ac.critic(), sn, an);
    const grad::Tensor dq = g.gradient_wrt(q, an);
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
      sim::Action plus{av[0], av[1]}, minus{av[0], av[1]};
      (j == 0 ? plus.tau1 : plus.tau2) += h;
      (j == 0 ? minus.tau1 : minus.tau2) -= h;
      const double fd = (ac.q_value(s, plus) - ac.q_value(s, minus)) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(dq[j]), 1e-6});
      CHECK(std::abs(fd - dq[j]) / denom < 1e-4);
      CHECK(dq[j] != 0.0);
    }
  }
}

TEST_CASE("bellman targets") {
  Rng rng = make_rng(7);
  SUBCASE("gamma 0 with a terminal reward gives exactly the reward") {
    DdpgConfig cfg;
    cfg.gamma = 0.0;
    ActorCritic ac(8, cfg, 8);
    auto batch = random_transitions(5, ac.input_len(), rng);
    for (auto& t : batch) {
      t.reward = 1.0;
      t.done = true;
    }
    for (double y : ac.bellman_targets(pointers(batch))) CHECK(y == 1.0);
  }
  SUBCASE("bootstraps from the target networks unless done") {
    ActorCritic ac(8, {}, 9);
    const auto batch = random_transitions(12, ac.input_len(), rng);
    const auto y = ac.bellman_targets(pointers(batch));
    // Evaluate Q'(s', mu'(s')) one row at a time through a copy whose live
    // networks hold the target weights.
    ActorCritic probe(8, {}, 123);
    probe.actor().assign_values(ac.actor_target());
    probe.critic().assign_values(ac.critic_target());
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const double q2 = probe.q_value(batch[k].next_state, probe.act(batch[k].next_state));
      const double expect = batch[k].reward + (batch[k].done ? 0.0 : 0.98 * q2);
      CHECK(y[k] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("soft update algebra") {
  Rng rng = make_rng(10);
  SUBCASE("general tau") {
    DdpgConfig cfg;
    cfg.tau = 0.3;
    ActorCritic ac(16, cfg, 11);
    // Move the live networks away from the targets first.
    const auto warm = random_transitions(32, ac.input_len(), rng);
    ac.update(pointers(warm));
    grad::ParameterSet old_actor, old_critic;
    for (const auto& p : ac.actor_target()) old_actor.add(p.name, p.value);
    for (const auto& p : ac.critic_target()) old_critic.add(p.name, p.value);
    ac.update(pointers(random_transitions(32, ac.input_len(), rng)));
    auto check = [&](const grad::ParameterSet& old, const grad::ParameterSet& live,
                     const grad::ParameterSet& target) {
      for (const auto& p : target) {
        const auto& o = old.at(p.name).value;
        const auto& l = live.at(p.name).value;
        for (std::size_t i = 0; i < p.value.size(); ++i)
          REQUIRE(std::abs(p.value[i] - (0.7 * o[i] + 0.3 * l[i])) < 1e-12);
      }
    };
    check(old_actor, ac.actor(), ac.actor_target());
    check(old_critic, ac.critic(), ac.critic_target());
  }
  SUBCASE("tau 1 copies the live networks") {
    DdpgConfig cfg;
    cfg.tau = 1.0;
    ActorCritic ac(8, cfg, 12);
    ac.update(pointers(random_transitions(16, ac.input_len(), rng)));
    CHECK(ac.actor().content_hash() == ac.actor_target().content_hash());
    CHECK(ac.critic().content_hash() == ac.critic_target().content_hash());
  }
  SUBCASE("tau 0 freezes the targets") {
    DdpgConfig cfg;
    cfg.tau = 0.0;
    ActorCritic ac(8, cfg, 13);
    const auto ha = ac.actor_target().content_hash();
    const auto hc = ac.critic_target().content_hash();
    const auto live = ac.actor().content_hash();
    for (int k = 0; k < 3; ++k) ac.update(pointers(random_transitions(16, ac.input_len(), rng)));
    CHECK(ac.actor().content_hash() != live);
    CHECK(ac.actor_target().content_hash() == ha);
    CHECK(ac.critic_target().content_hash() == hc);
  }
}

TEST_CASE("critic regression reduces the TD error on a fixed batch") {
  DdpgConfig cfg;
  cfg.tau = 0.0;
  cfg.actor_lr = 0.0;
  ActorCritic ac(8, cfg, 14);
  Rng rng = make_rng(15);
  const auto batch = random_transitions(32, ac.input_len(), rng);
  const double first = ac.update(pointers(batch)).critic_loss;
  double last = first;
  for (int k = 0; k < 200; ++k) last = ac.update(pointers(batch)).critic_loss;
  CHECK(last < 0.1 * first);
}

TEST_CASE("line world: actor ascends a hand-set critic toward the goal") {
  // d = 1, so the tiled state is 128 copies of s. The critic is wired to
  // Q(s, a) = -|s + a1 - g| = -relu(x) - relu(-x) with x = s + a1 - g.
  const double g = 0.1;
  DdpgConfig cfg;
  cfg.critic_lr = 0.0;
  cfg.tau = 0.0;
  cfg.actor_lr = 1e-2;
  ActorCritic ac(1, cfg, 16);
  const std::size_t n = ac.input_len();
  auto& c = ac.critic();
  for (auto& p : c) p.value.fill(0.0);
  auto& w1 = c.at("critic.l1.w").value;  // (n + 2) x 64
  for (std::size_t i = 0; i < n; ++i) {
    w1[i * 64 + 0] = 1.0 / static_cast<double>(n);
    w1[i * 64 + 1] = -1.0 / static_cast<double>(n);
  }
  w1[n * 64 + 0] = 1.0;
  w1[n * 64 + 1] = -1.0;
  c.at("critic.l1.b").value[0] = -g;
  c.at("critic.l1.b").value[1] = g;
  c.at("critic.l2.w").value[0 * 64 + 0] = 1.0;
  c.at("critic.l2.w").value[1 * 64 + 1] = 1.0;
  c.at("critic.l3.w").value[0] = -1.0;
  c.at("critic.l3.w").value[1] = -1.0;

  Rng rng = make_rng(17);
  for (int k = 0; k < 20; ++k) {
    const double s = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    const double a = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    CHECK(ac.q_value(tile_input(std::vector<double>{s}), {a, 0.3}) == doctest::Approx(-std::abs(s + a - g)));
  }

  // Two states on either side of the goal.
  std::vector<Transition> batch;
  for (double s : {-0.4, 0.6}) {
    const auto t = tile_input(std::vector<double>{s});
    batch.push_back({t, {0.0, 0.0}, 0.0, t, false});
  }
  const auto ptrs = pointers(batch);
  const double before = ac.update(ptrs).actor_objective;
  double after = before;
  for (int k = 0; k < 400; ++k) after = ac.update(ptrs).actor_objective;
  CHECK(after > before);
  CHECK(after > -0.05);
  const auto left = ac.act(batch[0].state);
  const auto right = ac.act(batch[1].state);
  CHECK(left.tau1 == doctest::Approx(g + 0.4).epsilon(0.1));
  CHECK(right.tau1 == doctest::Approx(g - 0.6).epsilon(0.1));
}

TEST_CASE("replay buffer evicts oldest first") {
  ReplayBuffer buf(3);
  for (int k = 0; k < 5; ++k) buf.push({{double(k)}, {}, 0.0, {}, false});
  CHECK(buf.size() == 3);
  CHECK(buf.at(0).state[0] == 2.0);
  CHECK(buf.at(1).state[0] == 3.0);
  CHECK(buf.at(2).state[0] == 4.0);
  CHECK_THROWS_AS(buf.at(3), DomainError);
  CHECK_THROWS_AS(ReplayBuffer(0), ConfigError);
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(ReplayBuffer(4).sample_indices(1, rng), DomainError);
}

TEST_CASE("replay sampling is uniform over a full buffer") {
  const std::size_t cap = 100;
  ReplayBuffer buf(cap);
  for (std::size_t k = 0; k < cap + 37; ++k) buf.push({{double(k)}, {}, 0.0, {}, false});
  Rng rng = make_rng(18);
  std::vector<double> counts(cap, 0.0);
  const std::size_t draws = 100000;
  for (std::size_t i : buf.sample_indices(draws, rng)) counts[i] += 1.0;
  const double expected = static_cast<double>(draws) / cap;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 148.23);  // 99 dof at 0.001
}

TEST_CASE("rollouts") {
  rep::GroundTruth gt;
  const auto env_cfg = clean_env();
  const auto goal = rl_goal(3, env_cfg.arm);
  ActorCritic ac(gt.dim(), {}, 19);

  SUBCASE("first-step delta is exactly zero and the length is bounded") {
    sim::ReacherEnv env(env_cfg, goal, make_rng(1));
    Rng rng = make_rng(2);
    ReplayBuffer buf(1000);
    std::vector<double> delta;
    const auto s = rollout(env, ac, gt, 0.2, 30, rng, &buf, false, &delta);
    REQUIRE(delta.size() == 4);
    for (double x : delta) CHECK(x == 0.0);
    CHECK(s.length <= 30);
    CHECK(buf.size() == static_cast<std::size_t>(s.length));
  }
  SUBCASE("image representations also start with zero delta") {
    const auto enc = rep::make_random_encoder(3, 4, {0.9, 0.2});
    sim::ReacherEnv env(sim::with_variant({}, sim::Variant::kNoisy), goal, make_rng(1));
    ActorCritic small(enc.dim(), {}, 20);
    Rng rng = make_rng(5);
    std::vector<double> delta;
    rollout(env, small, enc, 0.2, 3, rng, nullptr, false, &delta);
    REQUIRE(delta.size() == 3);
    for (double x : delta) CHECK(x == 0.0);
  }
  SUBCASE("sigma 0 is deterministic given the seeds") {
    auto run = [&] {
      sim::ReacherEnv env(env_cfg, goal, make_rng(1));
      Rng rng = make_rng(7);
      ReplayBuffer buf(1000);
      rollout(env, ac, gt, 0.0, 20, rng, &buf);
      std::vector<double> flat;
      for (std::size_t k = 0; k < buf.size(); ++k) {
        const auto& t = buf.at(k);
        flat.insert(flat.end(), t.state.begin(), t.state.end());
        flat.push_back(t.action.tau1);
        flat.push_back(t.action.tau2);
      }
      return flat;
    };
    CHECK(run() == run());
  }
  SUBCASE("every executed action is feasible") {
    sim::ReacherEnv env(env_cfg, goal, make_rng(1));
    Rng rng = make_rng(8);
    ReplayBuffer buf(10000);
    for (int e = 0; e < 10; ++e) rollout(env, ac, gt, 3.0, 50, rng, &buf);
    for (int e = 0; e < 5; ++e) rollout(env, ac, gt, 0.0, 50, rng, &buf, true);
    for (std::size_t k = 0; k < buf.size(); ++k) {
      REQUIRE(std::abs(buf.at(k).action.tau1) <= 1.0);
      REQUIRE(std::abs(buf.at(k).action.tau2) <= 1.0);
    }
  }
  SUBCASE("only successful transitions are terminal") {
    sim::ReacherEnv env(env_cfg, goal, make_rng(1));
    Rng rng = make_rng(9);
    ReplayBuffer buf(10000);
    for (int e = 0; e < 20; ++e) rollout(env, ac, gt, 0.5, 50, rng, &buf);
    for (std::size_t k = 0; k < buf.size(); ++k) CHECK(buf.at(k).done == (buf.at(k).reward == 1.0));
  }
}

TEST_CASE("evaluation protocol brackets expert and idle policies") {
  const auto env_cfg = clean_env();
  const auto goal = rl_goal(4, env_cfg.arm);
  sim::ReacherEnv env(env_cfg, goal, make_rng(1));
  env.set_rendering(false);
  const demos::Expert expert(env_cfg.arm, goal, {});
  Rng starts = make_rng(21);
  const auto e = evaluate_policy(env, [&](const sim::Observation& o) { return expert(o.state); }, 100, 50, starts);
  CHECK(e.success_rate >= 0.95);
  const auto z = evaluate_policy(env, [](const sim::Observation&) { return sim::Action{0.0, 0.0}; }, 100, 50, starts);
  CHECK(z.success_rate <= 0.1);
  CHECK(z.mean_episode_length > 45.0);
}

TEST_CASE("training keeps the representation frozen and is reproducible") {
  const auto enc = rep::make_random_encoder(2, 6, {0.9, 0.2});
  const auto before = enc.content_hash();
  RlConfig cfg;
  cfg.epochs = 2;
  cfg.rollouts_per_epoch = 2;
  cfg.test_episodes = 2;
  cfg.horizon = 6;
  cfg.batch = 4;
  cfg.seed = 3;
  const auto env_cfg = sim::with_variant({}, sim::Variant::kNoisy);
  const auto goal = rl_goal(5, env_cfg.arm);
  const auto a = train_rl(env_cfg, goal, enc, cfg);
  CHECK(enc.content_hash() == before);
  REQUIRE(a.size() == 3);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].epoch == static_cast<int>(k));
    CHECK(a[k].train_rollouts_cum == static_cast<long>(2 * k));
    CHECK(a[k].mean_success >= 0.0);
    CHECK(a[k].mean_success <= 1.0);
  }

  const auto path = (std::filesystem::temp_directory_path() / "srlfd_rl_curve.csv").string();
  write_curve_csv(a, path);
  const auto back = read_curve_csv(path);
  REQUIRE(back.size() == a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(back[k].mean_success == a[k].mean_success);
    CHECK(back[k].mean_episode_length == a[k].mean_episode_length);
  }
  std::filesystem::remove(path);
}

TEST_CASE("ground-truth DDPG learns a reach quickly") {
  rep::GroundTruth gt;
  RlConfig cfg;
  cfg.epochs = 4;
  cfg.seed = 1;
  const auto env_cfg = clean_env();
  const auto curve = train_rl(env_cfg, rl_goal(1, env_cfg.arm), gt, cfg);
  CHECK(curve.back().mean_success > curve.front().mean_success);
}

TEST_CASE("invalid rl configuration") {
  rep::GroundTruth gt;
  const auto env_cfg = clean_env();
  const auto goal = rl_goal(1, env_cfg.arm);
  RlConfig cfg;
  cfg.rollouts_per_epoch = 0;
  CHECK_THROWS_AS(train_rl(env_cfg, goal, gt, cfg), ConfigError);
  cfg = {};
  cfg.ddpg.tau = 1.5;
  CHECK_THROWS_AS(train_rl(env_cfg, goal, gt, cfg), ConfigError);
  cfg = {};
  cfg.batch = 0;
  CHECK_THROWS_AS(train_rl(env_cfg, goal, gt, cfg), ConfigError);
  ActorCritic ac(8, {}, 1);
  CHECK_THROWS_AS(ac.act(std::vector<double>(5, 0.0)), DimensionError);
  CHECK_THROWS_AS(ac.update({}), DomainError);
}
