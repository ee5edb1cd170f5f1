#include "srlfd/rl/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "srlfd/demos/dataset.hpp"
#include "srlfd/errors.hpp"

namespace srlfd::rl {

namespace {

constexpr std::uint64_t kTrainStream = 0x7472;
constexpr std::uint64_t kEvalStream = 0x6576;
constexpr std::uint64_t kStartStream = 0x7374;
constexpr std::uint64_t kNoiseStream = 0x6e6f;
constexpr std::uint64_t kReplayStream = 0x7270;

sim::Action clip_noisy(sim::Action a, double sigma, Rng& rng) {
  if (sigma > 0.0) {
    std::normal_distribution<double> n(0.0, sigma);
    a.tau1 += n(rng);
    a.tau2 += n(rng);
  }
  return sim::clip_action(a);
}

}  // namespace

RolloutStats rollout(sim::ReacherEnv& env, ActorCritic& ac, const rep::RepresentationModel& model,
                     double sigma, int horizon, Rng& rng, ReplayBuffer* buffer, bool random_actions,
                     std::vector<double>* first_delta) {
  if (horizon < 1) throw ConfigError("episode horizon must be >= 1");
  env.set_rendering(model.uses_images());
  sim::Observation obs = env.reset_to(demos::sample_start(rng, env.config().arm, env.task()));
  std::vector<double> phi = model.encode(obs);
  // Duplicated first frame: delta is zero at t = 0.
  rep::Representation r = model.combine(phi, phi, obs);
  if (first_delta) *first_delta = r.delta;
  std::vector<double> state = tile_input(r.flat());

  RolloutStats stats;
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int t = 0; t < horizon; ++t) {
    sim::Action a;
    if (random_actions) {
      a = {uni(rng), uni(rng)};
    } else {
      const sim::Action mu = ac.act(state);
      if (!std::isfinite(mu.tau1) || !std::isfinite(mu.tau2))
        throw NumericFault("actor produced a non-finite action at step " + std::to_string(t));
      a = clip_noisy(mu, sigma, rng);
    }
    auto res = env.step(a);
    ++stats.length;
    stats.episode_return += res.reward;
    std::vector<double> phi_next = model.encode(res.obs);
    std::vector<double> next = tile_input(model.combine(phi, phi_next, res.obs).flat());
    const bool done = res.reward == 1;
    if (buffer) buffer->push({state, a, static_cast<double>(res.reward), next, done});
    if (done) {
      stats.success = true;
      break;
    }
    phi = std::move(phi_next);
    state = std::move(next);
  }
  return stats;
}

EvalResult evaluate(sim::ReacherEnv& env, ActorCritic& ac, const rep::RepresentationModel& model, int n_episodes,
                    int horizon, Rng& starts) {
  if (n_episodes < 1) throw ConfigError("evaluation needs at least one episode");
  EvalResult out;
  for (int e = 0; e < n_episodes; ++e) {
    const RolloutStats s = rollout(env, ac, model, 0.0, horizon, starts, nullptr);
    out.success_rate += s.success ? 1.0 : 0.0;
    out.mean_episode_length += s.length;
  }
  out.success_rate /= n_episodes;
  out.mean_episode_length /= n_episodes;
  return out;
}

EvalResult evaluate_policy(sim::ReacherEnv& env, const sim::Policy& policy, int n_episodes, int horizon,
                           Rng& starts) {
  if (n_episodes < 1) throw ConfigError("evaluation needs at least one episode");
  EvalResult out;
  for (int e = 0; e < n_episodes; ++e) {
    const sim::JointState s0 = demos::sample_start(starts, env.config().arm, env.task());
    const sim::Episode ep = sim::run_episode(env, policy, horizon, true, s0);
    out.success_rate += ep.success ? 1.0 : 0.0;
    out.mean_episode_length += static_cast<double>(ep.steps.size());
  }
  out.success_rate /= n_episodes;
  out.mean_episode_length /= n_episodes;
  return out;
}

sim::TaskInstance rl_goal(std::uint64_t goal_seed, const sim::ArmParams& arm) {
  demos::DemoConfig dc;
  dc.instances = 1;
  dc.seed = derive_seed(goal_seed, {0x726c});
  dc.env.arm = arm;
  return demos::sample_goals(dc).front();
}

std::vector<CurvePoint> train_rl(const sim::EnvConfig& env_cfg, const sim::TaskInstance& goal,
                                 const rep::RepresentationModel& model, const RlConfig& cfg,
                                 const std::function<void(const CurvePoint&)>& on_epoch) {
  if (cfg.epochs < 0 || cfg.rollouts_per_epoch < 1 || cfg.test_episodes < 1 || cfg.horizon < 1)
    throw ConfigError("rl budget values must be positive");
  if (cfg.batch < 1) throw ConfigError("rl batch size must be >= 1");
  if (cfg.updates_per_step < 0 || cfg.warmup_rollouts < 0) throw ConfigError("rl schedule values must be >= 0");
  if (cfg.ddpg.tau < 0.0 || cfg.ddpg.tau > 1.0) throw ConfigError("tau must lie in [0, 1]");

  ActorCritic ac(model.dim(), cfg.ddpg, cfg.seed);
  ReplayBuffer buffer(cfg.buffer_capacity);
  sim::ReacherEnv train_env(env_cfg, goal, make_rng(cfg.seed, {kTrainStream}));
  Rng rng = make_rng(cfg.seed, {kNoiseStream});
  Rng replay_rng = make_rng(cfg.seed, {kReplayStream});

  std::vector<CurvePoint> curve;
  auto eval_point = [&](int epoch, long cum) {
    // Same evaluation starts and env stream every epoch.
    sim::ReacherEnv eval_env(env_cfg, goal, make_rng(cfg.seed, {kEvalStream, 0}));
    Rng starts = make_rng(cfg.seed, {kEvalStream, kStartStream});
    const EvalResult r = evaluate(eval_env, ac, model, cfg.test_episodes, cfg.horizon, starts);
    CurvePoint p{epoch, cum, r.success_rate, r.mean_episode_length};
    curve.push_back(p);
    if (on_epoch) on_epoch(p);
  };

  eval_point(0, 0);
  const long total = static_cast<long>(cfg.epochs) * cfg.rollouts_per_epoch;
  long done_rollouts = 0;
  std::vector<const Transition*> batch(cfg.batch);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (int k = 0; k < cfg.rollouts_per_epoch; ++k) {
      const double frac = total > 1 ? static_cast<double>(done_rollouts) / static_cast<double>(total - 1) : 0.0;
      const double sigma = cfg.sigma_start + (cfg.sigma_end - cfg.sigma_start) * frac;
      const bool warm = done_rollouts < cfg.warmup_rollouts;
      const RolloutStats s = rollout(train_env, ac, model, sigma, cfg.horizon, rng, &buffer, warm);
      ++done_rollouts;
      if (buffer.size() < cfg.batch) continue;
      const int updates = s.length * cfg.updates_per_step;
      for (int u = 0; u < updates; ++u) {
        const auto idx = buffer.sample_indices(cfg.batch, replay_rng);
        for (std::size_t i = 0; i < idx.size(); ++i) batch[i] = &buffer.at(idx[i]);
        const UpdateStats st = ac.update(batch);
        if (!std::isfinite(st.critic_loss) || !std::isfinite(st.actor_objective))
          throw NumericFault("ddpg diverged at epoch " + std::to_string(epoch) + ", rollout " + std::to_string(k));
      }
    }
    eval_point(epoch, done_rollouts);
  }
  return curve;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "epoch,train_rollouts_cum,mean_success,mean_episode_length\n";
  char line[160];
  for (const auto& p : curve) {
    std::snprintf(line, sizeof line, "%d,%ld,%.17g,%.17g\n", p.epoch, p.train_rollouts_cum, p.mean_success,
                  p.mean_episode_length);
    f << line;
  }
  if (!f) throw IoError("write failed for " + path);
}

std::vector<CurvePoint> read_curve_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line != "epoch,train_rollouts_cum,mean_success,mean_episode_length")
    throw FormatError(path + ": unexpected curve header");
  std::vector<CurvePoint> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    CurvePoint p;
    if (std::sscanf(line.c_str(), "%d,%ld,%lf,%lf", &p.epoch, &p.train_rollouts_cum, &p.mean_success,
                    &p.mean_episode_length) != 4)
      throw FormatError(path + ": malformed curve row '" + line + "'");
    out.push_back(p);
  }
  return out;
}

}  // namespace srlfd::rl
