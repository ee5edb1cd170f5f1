#include "srlfd/demos/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "srlfd/binary_io.hpp"
#include "srlfd/errors.hpp"

namespace srlfd::demos {

bool Trajectory::operator==(const Trajectory& o) const {
  if (frames != o.frames || actions.size() != o.actions.size()) return false;
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (actions[i].tau1 != o.actions[i].tau1 || actions[i].tau2 != o.actions[i].tau2) return false;
  return true;
}

void DemoSet::add_trajectory(Trajectory t) {
  if (t.length() < 2) throw DomainError("a demonstration trajectory needs at least two frames");
  if (t.frames.size() != t.length() * sim::kImagePixels)
    throw DimensionError("trajectory frame buffer does not match its action count");
  offsets_.push_back(offsets_.back() + t.length() - 1);
  trajectories_.push_back(std::move(t));
}

TripleRef DemoSet::triple(std::size_t k) const {
  if (k >= triple_count()) throw DomainError("triple index out of range");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), k);
  const std::size_t j = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  const std::size_t t = k - offsets_[j] + 1;
  const Trajectory& tr = trajectories_[j];
  return {tr.frame(t - 1), tr.frame(t), tr.actions[t]};
}

std::size_t DemoSet::frame_count() const {
  std::size_t n = 0;
  for (const auto& t : trajectories_) n += t.length();
  return n;
}

bool DemoSet::operator==(const DemoSet& o) const {
  return task_.goal.x == o.task_.goal.x && task_.goal.y == o.task_.goal.y && task_.id == o.task_.id &&
         trajectories_ == o.trajectories_;
}

std::vector<sim::TaskInstance> sample_goals(const DemoConfig& cfg) {
  if (cfg.instances < 1) throw ConfigError("instance count must be >= 1");
  const sim::ArmParams& arm = cfg.env.arm;
  const double r_lo = std::abs(arm.l1 - arm.l2) + cfg.goal_margin;
  const double r_hi = arm.l1 + arm.l2 - cfg.goal_margin;
  if (r_lo >= r_hi) throw ConfigError("goal margin leaves no reachable annulus");

  Rng rng = make_rng(cfg.seed, {0x676f616c73});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<sim::TaskInstance> goals;
  constexpr int kMaxDraws = 100000;
  int draws = 0;
  while (static_cast<int>(goals.size()) < cfg.instances) {
    if (++draws > kMaxDraws)
      throw DomainError("could not place " + std::to_string(cfg.instances) + " goals with separation " +
                        std::to_string(cfg.goal_separation));
    const double r = std::sqrt(r_lo * r_lo + u(rng) * (r_hi * r_hi - r_lo * r_lo));
    const double th = 2.0 * sim::kPi * u(rng);
    const sim::Vec2 g{r * std::cos(th), r * std::sin(th)};
    const bool clear = std::all_of(goals.begin(), goals.end(), [&](const sim::TaskInstance& o) {
      return std::hypot(o.goal.x - g.x, o.goal.y - g.y) >= cfg.goal_separation;
    });
    if (clear) goals.push_back({g, static_cast<int>(goals.size())});
  }
  return goals;
}

Rng trajectory_rng(std::uint64_t seed, int instance, int trajectory) {
  return make_rng(seed, {static_cast<std::uint64_t>(instance), static_cast<std::uint64_t>(trajectory)});
}

sim::JointState sample_start(Rng& rng, const sim::ArmParams& arm, const sim::TaskInstance& task) {
  for (;;) {
    const sim::JointState s = sim::reset(rng);
    if (!sim::reward(arm, s, task)) return s;
  }
}

std::vector<DemoSet> generate_demos(const DemoConfig& cfg) {
  if (cfg.trajectories < 1) throw ConfigError("trajectories per instance must be >= 1");
  if (cfg.horizon < 2) throw ConfigError("demonstration horizon must be >= 2");
  std::vector<DemoSet> out;
  for (const auto& task : sample_goals(cfg)) {
    const Expert expert(cfg.env.arm, task, cfg.gains);
    const sim::Policy policy = [&](const sim::Observation& o) { return expert(o.state); };
    DemoSet set(task);
    for (int j = 0; j < cfg.trajectories; ++j) {
      Rng rng = trajectory_rng(cfg.seed, task.id, j);
      sim::ReacherEnv env(cfg.env, task, rng);
      sim::Episode ep;
      // Early stopping can end an episode after one frame; those yield no
      // triple and are redrawn from the same stream.
      do {
        const sim::JointState start = sample_start(rng, cfg.env.arm, task);
        ep = sim::run_episode(env, policy, cfg.horizon, cfg.stop_on_success, start);
      } while (ep.steps.size() < 2);
      Trajectory tr;
      tr.frames.resize(ep.steps.size() * sim::kImagePixels);
      for (std::size_t t = 0; t < ep.steps.size(); ++t) {
        sim::quantize(ep.steps[t].image, tr.frames.data() + t * sim::kImagePixels);
        tr.actions.push_back(ep.steps[t].action);
      }
      set.add_trajectory(std::move(tr));
    }
    out.push_back(std::move(set));
  }
  return out;
}

NormStats compute_norm_stats(const std::vector<DemoSet>& demos) {
  // Exact moments from a 256-bin histogram of the stored bytes.
  std::array<std::uint64_t, 256> hist{};
  std::uint64_t n = 0;
  for (const auto& set : demos)
    for (const auto& t : set.trajectories()) {
      for (std::uint8_t v : t.frames) ++hist[v];
      n += t.frames.size();
    }
  if (n == 0) throw DomainError("cannot compute normalization statistics of an empty dataset");
  double mu = 0.0;
  for (int v = 0; v < 256; ++v) mu += static_cast<double>(hist[static_cast<std::size_t>(v)]) * (v / 255.0);
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (int v = 0; v < 256; ++v) {
    const double d = v / 255.0 - mu;
    var += static_cast<double>(hist[static_cast<std::size_t>(v)]) * d * d;
  }
  var /= static_cast<double>(n);
  return {mu, std::max(std::sqrt(var), kSigmaFloor)};
}

NormStats compute_norm_stats(std::span<const double> pixels) {
  if (pixels.empty()) throw DomainError("cannot compute normalization statistics of an empty dataset");
  double mu = 0.0;
  for (double v : pixels) mu += v;
  mu /= static_cast<double>(pixels.size());
  double var = 0.0;
  for (double v : pixels) var += (v - mu) * (v - mu);
  var /= static_cast<double>(pixels.size());
  return {mu, std::max(std::sqrt(var), kSigmaFloor)};
}

void save_demos(const std::vector<DemoSet>& demos, const std::string& path) {
  BinaryWriter w(path);
  w.magic(kDemoMagic);
  w.put(kDemoVersion);
  w.put(static_cast<std::uint32_t>(demos.size()));
  for (const auto& set : demos) {
    w.put(set.task().goal.x);
    w.put(set.task().goal.y);
    w.put(static_cast<std::uint32_t>(set.trajectories().size()));
    for (const auto& t : set.trajectories()) {
      w.put(static_cast<std::uint32_t>(t.length()));
      w.bytes(t.frames.data(), t.frames.size());
      for (const auto& a : t.actions) {
        w.put(a.tau1);
        w.put(a.tau2);
      }
    }
  }
  w.close();
}

std::vector<DemoSet> load_demos(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic(kDemoMagic);
  const auto version = r.get<std::uint16_t>();
  if (version != kDemoVersion)
    throw FormatError("'" + path + "' has demo format version " + std::to_string(version) + ", expected " +
                      std::to_string(kDemoVersion));
  const auto k = r.get<std::uint32_t>();
  std::vector<DemoSet> out;
  for (std::uint32_t i = 0; i < k; ++i) {
    sim::TaskInstance task;
    task.goal.x = r.get<double>();
    task.goal.y = r.get<double>();
    task.id = static_cast<int>(i);
    DemoSet set(task);
    const auto n_traj = r.get<std::uint32_t>();
    for (std::uint32_t j = 0; j < n_traj; ++j) {
      const auto len = r.get<std::uint32_t>();
      const std::uint64_t need = std::uint64_t{len} * (sim::kImagePixels + 2 * sizeof(double));
      if (need > r.remaining()) throw TruncatedError("'" + path + "' is truncated");
      Trajectory t;
      t.frames.resize(std::size_t{len} * sim::kImagePixels);
      r.bytes(t.frames.data(), t.frames.size());
      t.actions.resize(len);
      for (auto& a : t.actions) {
        a.tau1 = r.get<double>();
        a.tau2 = r.get<double>();
      }
      set.add_trajectory(std::move(t));
    }
    out.push_back(std::move(set));
  }
  if (!r.at_end()) throw FormatError("'" + path + "' has trailing bytes");
  return out;
}

std::uint64_t demo_file_size(const std::vector<DemoSet>& demos) {
  std::uint64_t n = 5 + 2 + 4;
  for (const auto& set : demos) {
    n += 2 * 8 + 4;
    for (const auto& t : set.trajectories()) n += 4 + t.length() * (sim::kImagePixels + 16);
  }
  return n;
}

}  // namespace srlfd::demos
