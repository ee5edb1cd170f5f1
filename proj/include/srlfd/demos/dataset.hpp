#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srlfd/demos/expert.hpp"
#include "srlfd/sim/env.hpp"

namespace srlfd::demos {

// One expert rollout: frame t is the observation before action t.
struct Trajectory {
  std::vector<std::uint8_t> frames;  // length() x 4096, 8-bit
  std::vector<sim::Action> actions;

  std::size_t length() const { return actions.size(); }
  const std::uint8_t* frame(std::size_t t) const { return frames.data() + t * sim::kImagePixels; }
  bool operator==(const Trajectory&) const;
};

// (I_{t-1}, I_t, a_t) viewed in place.
struct TripleRef {
  const std::uint8_t* prev;
  const std::uint8_t* curr;
  sim::Action action;
};

// Demonstrations of one task instance. A trajectory of length L yields
// L - 1 triples, none crossing a trajectory boundary.
class DemoSet {
 public:
  DemoSet() = default;
  explicit DemoSet(sim::TaskInstance task) : task_(task) {}

  // DomainError for trajectories shorter than two frames.
  void add_trajectory(Trajectory t);

  const sim::TaskInstance& task() const { return task_; }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  std::size_t triple_count() const { return offsets_.back(); }
  // First triple index of every trajectory, plus the total at the end.
  const std::vector<std::size_t>& boundaries() const { return offsets_; }
  TripleRef triple(std::size_t k) const;
  std::size_t frame_count() const;

  bool operator==(const DemoSet& o) const;

 private:
  sim::TaskInstance task_;
  std::vector<Trajectory> trajectories_;
  std::vector<std::size_t> offsets_{0};
};

struct DemoConfig {
  int instances = 16;
  int trajectories = 32;
  int horizon = 50;
  std::uint64_t seed = 1;
  // Demonstrations run the whole horizon; the expert holds at the goal.
  bool stop_on_success = false;
  double goal_separation = 0.15;
  double goal_margin = 0.05;
  ExpertGains gains;
  sim::EnvConfig env;
};

// K goals, area-uniform on the annulus shrunk by goal_margin, pairwise
// at least goal_separation apart. DomainError after bounded retries.
std::vector<sim::TaskInstance> sample_goals(const DemoConfig& cfg);

// Stream of trajectory j of instance i; the start state is its first draw.
Rng trajectory_rng(std::uint64_t seed, int instance, int trajectory);
// Draws starts until one lies outside the goal radius.
sim::JointState sample_start(Rng& rng, const sim::ArmParams& arm, const sim::TaskInstance& task);

std::vector<DemoSet> generate_demos(const DemoConfig& cfg);

struct NormStats {
  double mu = 0.0;
  double sigma = 1.0;
};

inline constexpr double kSigmaFloor = 1e-6;

NormStats compute_norm_stats(const std::vector<DemoSet>& demos);
NormStats compute_norm_stats(std::span<const double> pixels);

// Container layout:
//   "SRLD1", version u16, K u32
//   per instance: goal x, y f64; trajectory count u32
//     per trajectory: length u32; length x 4096 u8 frames; length x 2 f64 actions
inline constexpr const char* kDemoMagic = "SRLD1";
inline constexpr std::uint16_t kDemoVersion = 1;

void save_demos(const std::vector<DemoSet>& demos, const std::string& path);
std::vector<DemoSet> load_demos(const std::string& path);
std::uint64_t demo_file_size(const std::vector<DemoSet>& demos);

}  // namespace srlfd::demos
