#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srlfd/harness/config.hpp"

namespace srlfd::harness {

// Ground truth is always 4 angles' cos/sin plus their rates.
inline constexpr std::size_t kGroundTruthDim = 8;

struct Cell {
  sim::Variant variant = sim::Variant::kClean;
  rep::RepKind kind = rep::RepKind::kSrlfd;
  std::size_t dim = 16;  // total d = 2 * latent
  // Mixed into this cell's RL seeds only.
  std::uint64_t rl_seed_salt = 0;

  std::string id() const;  // e.g. "noisy-srlfd-16"
  std::size_t latent() const { return dim / 2; }
};

struct Replica {
  int rep_index = 0;
  int rl_index = 0;
  std::string name() const;  // e.g. "r0-s1"
};

// Cells of the kinds x dims x variants grid. Ground truth ignores the dims
// grid and contributes one d = 8 cell per variant.
struct ExperimentPlan {
  PlanConfig config;
  std::vector<Cell> cells;

  std::vector<Replica> replicas() const;
  const Cell* find(const std::string& cell_id) const;
};

ExperimentPlan make_plan(const PlanConfig& cfg);

// Pure seed derivation from the master seed and identifiers.
std::uint64_t demo_seed(const PlanConfig& cfg);
std::uint64_t rep_seed(const PlanConfig& cfg, sim::Variant v, rep::RepKind k, std::size_t dim, int rep_index);
std::uint64_t rl_seed(const PlanConfig& cfg, const Cell& cell, const Replica& r);
// Shared by every kind so that cells are compared on the same goals.
std::uint64_t goal_seed(const PlanConfig& cfg, sim::Variant v, const Replica& r);

// Stable 64-bit id of a string (FNV-1a).
std::uint64_t string_id(const std::string& s);

}  // namespace srlfd::harness
