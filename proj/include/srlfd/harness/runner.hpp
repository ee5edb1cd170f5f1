#pragma once

#include <functional>
#include <string>
#include <vector>

#include "srlfd/harness/manifest.hpp"
#include "srlfd/harness/plan.hpp"

namespace srlfd::harness {

// Work directory layout, relative to the workdir.
std::string demos_rel(sim::Variant v);                       // demos/<variant>.srld
std::string rep_dir_rel(const Cell& c, int rep_index);       // reps/<variant>/<kind>-<dim>-<seed>
std::string rep_model_rel(const Cell& c, int rep_index);     // .../encoder.ckpt or .../pca.srlp
std::string curve_rel(const Cell& c, const Replica& r);      // rl/<cell>/<replica>.csv

struct RunOptions {
  std::function<void(const std::string&)> log;
  bool write_report = true;
};

struct CellOutcome {
  std::string cell;
  bool ok = false;
  std::string error;
};

struct RunSummary {
  int stages_run = 0;
  int stages_skipped = 0;
  std::vector<CellOutcome> cells;
};

// Serial execution of demos -> representations -> RL for every cell.
// Artifacts whose manifest fingerprint and hash are current are reused.
// A failing cell is recorded in the manifest and the plan moves on.
RunSummary run_plan(const ExperimentPlan& plan, const std::string& workdir, const RunOptions& opts = {});

}  // namespace srlfd::harness
