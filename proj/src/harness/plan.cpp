#include "srlfd/harness/plan.hpp"

#include <algorithm>

namespace srlfd::harness {

std::string Cell::id() const {
  return std::string(sim::variant_name(variant)) + "-" + rep::kind_name(kind) + "-" + std::to_string(dim);
}

std::string Replica::name() const { return "r" + std::to_string(rep_index) + "-s" + std::to_string(rl_index); }

std::vector<Replica> ExperimentPlan::replicas() const {
  std::vector<Replica> out;
  for (int r = 0; r < config.rep_seeds; ++r)
    for (int s = 0; s < config.rl_seeds; ++s) out.push_back({r, s});
  return out;
}

const Cell* ExperimentPlan::find(const std::string& cell_id) const {
  auto it = std::find_if(cells.begin(), cells.end(), [&](const Cell& c) { return c.id() == cell_id; });
  return it == cells.end() ? nullptr : &*it;
}

ExperimentPlan make_plan(const PlanConfig& cfg) {
  ExperimentPlan plan{cfg, {}};
  for (sim::Variant v : cfg.variants) {
    bool gt_added = false;
    for (rep::RepKind k : cfg.kinds) {
      if (k == rep::RepKind::kGroundTruth) {
        if (!gt_added) plan.cells.push_back({v, k, kGroundTruthDim});
        gt_added = true;
        continue;
      }
      for (std::size_t d : cfg.dims) plan.cells.push_back({v, k, d});
    }
  }
  return plan;
}

std::uint64_t string_id(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t demo_seed(const PlanConfig& cfg) {
  return derive_seed(cfg.master_seed, {string_id("demos"), cfg.demos.seed});
}

std::uint64_t rep_seed(const PlanConfig& cfg, sim::Variant v, rep::RepKind k, std::size_t dim, int rep_index) {
  return derive_seed(cfg.master_seed, {string_id("rep"), string_id(sim::variant_name(v)),
                                       string_id(rep::kind_name(k)), dim, static_cast<std::uint64_t>(rep_index)});
}

std::uint64_t rl_seed(const PlanConfig& cfg, const Cell& cell, const Replica& r) {
  return derive_seed(cfg.master_seed, {string_id("rl"), string_id(cell.id()), static_cast<std::uint64_t>(r.rep_index),
                                       static_cast<std::uint64_t>(r.rl_index), cell.rl_seed_salt});
}

std::uint64_t goal_seed(const PlanConfig& cfg, sim::Variant v, const Replica& r) {
  return derive_seed(cfg.master_seed, {string_id("goal"), string_id(sim::variant_name(v)),
                                       static_cast<std::uint64_t>(r.rep_index), static_cast<std::uint64_t>(r.rl_index)});
}

}  // namespace srlfd::harness
