#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "srlfd/errors.hpp"
#include "srlfd/rl/train.hpp"

namespace srlfd::harness {

// Replica curves evaluated at different x positions.
class AlignmentError : public DimensionError {
 public:
  using DimensionError::DimensionError;
};

struct LearningCurve {
  std::string cell;
  std::vector<double> x;  // cumulative training rollouts
  std::vector<double> mean;
  std::vector<double> stderr_;  // sample sd / sqrt(n); 0 for one replica
  std::size_t replicas = 0;
};

LearningCurve aggregate(const std::string& cell, const std::vector<std::vector<rl::CurvePoint>>& replicas);
// Trapezoidal area under the mean curve.
double auc(const LearningCurve& c);

struct SummaryRow {
  std::string cell, variant, kind;
  std::size_t dim = 0;
  std::size_t replicas = 0;
  double final_success = 0.0;
  double final_stderr = 0.0;
  double auc = 0.0;
};

// lhs `relation` rhs on aggregated AUC within one (variant, dim) panel.
struct OrderingCheck {
  std::string variant;
  std::size_t dim = 0;
  std::string lhs, rhs, relation;  // relation is ">" or ">="
  double lhs_auc = 0.0, rhs_auc = 0.0;
  bool holds = false;
};

struct Report {
  std::vector<SummaryRow> rows;
  std::vector<OrderingCheck> ordering;
  std::vector<LearningCurve> curves;
  std::vector<std::string> failed_cells;
};

// Reads completed cells from the manifest and their replica curves.
Report build_report(const std::string& workdir);
// build_report plus report/ files: summary.csv, ordering.csv, summary.txt,
// and per-panel CSV and PNG. An empty store yields the "no cells" marker.
Report write_report(const std::string& workdir);

inline constexpr const char* kNoCellsMarker = "no cells";

struct PlotSeries {
  std::array<std::uint8_t, 3> rgb{};
  std::vector<double> x, y, err;
};

// Line chart with the y axis fixed to [0, 1] and optional +-err bands.
void write_line_plot(const std::string& path, const std::vector<PlotSeries>& series, int width = 640,
                     int height = 400);

}  // namespace srlfd::harness
