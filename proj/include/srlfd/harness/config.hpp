#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srlfd/demos/dataset.hpp"
#include "srlfd/imitation/multihead.hpp"
#include "srlfd/rep/autoencoder.hpp"
#include "srlfd/rep/representation.hpp"
#include "srlfd/rl/train.hpp"

namespace srlfd::harness {

// Every tunable of the pipeline. Defaults are the desk-scale budgets.
struct PlanConfig {
  std::uint64_t master_seed = 1;
  std::vector<rep::RepKind> kinds = {rep::RepKind::kSrlfd, rep::RepKind::kPca, rep::RepKind::kAutoencoder,
                                     rep::RepKind::kRandom, rep::RepKind::kGroundTruth};
  std::vector<std::size_t> dims = {16, 48};  // total representation size d
  std::vector<sim::Variant> variants = {sim::Variant::kClean, sim::Variant::kNoisy};
  int rep_seeds = 2;
  int rl_seeds = 2;

  demos::DemoConfig demos;  // demos.env also configures the RL environment
  imitation::TrainConfig srlfd;
  rep::AutoencoderConfig autoencoder;
  std::size_t pca_max_samples = 5000;
  rl::RlConfig rl;
};

// INI-style text: [section] headers, key = value lines, ';' or '#'
// comments. Unknown sections or keys raise ConfigError.
PlanConfig parse_plan_config(const std::string& text);
PlanConfig load_plan_config(const std::string& path);
// Applies overrides on top of `base` (same syntax).
void apply_config(PlanConfig& base, const std::string& text);

// Canonical rendering of every value; parse_plan_config(render) == cfg.
std::string render_config(const PlanConfig& cfg);

}  // namespace srlfd::harness
