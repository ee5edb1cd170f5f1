#include "srlfd/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "srlfd/harness/manifest.hpp"

namespace srlfd::harness {

namespace fs = std::filesystem;

LearningCurve aggregate(const std::string& cell, const std::vector<std::vector<rl::CurvePoint>>& replicas) {
  if (replicas.empty()) throw DomainError("cell " + cell + " has no replica curves");
  const auto& ref = replicas.front();
  for (const auto& r : replicas) {
    if (r.size() != ref.size()) throw AlignmentError("cell " + cell + ": replica curves differ in length");
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i].train_rollouts_cum != ref[i].train_rollouts_cum)
        throw AlignmentError("cell " + cell + ": replica curves sampled at different x");
  }
  LearningCurve c;
  c.cell = cell;
  c.replicas = replicas.size();
  const double n = static_cast<double>(replicas.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double sum = 0.0;
    for (const auto& r : replicas) sum += r[i].mean_success;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : replicas) ss += (r[i].mean_success - mean) * (r[i].mean_success - mean);
    c.x.push_back(static_cast<double>(ref[i].train_rollouts_cum));
    c.mean.push_back(mean);
    c.stderr_.push_back(replicas.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0);
  }
  return c;
}

double auc(const LearningCurve& c) {
  double a = 0.0;
  for (std::size_t i = 1; i < c.x.size(); ++i) a += 0.5 * (c.mean[i] + c.mean[i - 1]) * (c.x[i] - c.x[i - 1]);
  return a;
}

namespace {

struct CellKey {
  std::string variant, kind;
  std::size_t dim = 0;
};

// "<variant>-<kind>-<dim>"; kinds never contain '-'.
bool parse_cell_id(const std::string& id, CellKey& out) {
  const auto a = id.find('-');
  const auto b = id.rfind('-');
  if (a == std::string::npos || a == b) return false;
  out.variant = id.substr(0, a);
  out.kind = id.substr(a + 1, b - a - 1);
  try {
    out.dim = std::stoul(id.substr(b + 1));
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

std::array<std::uint8_t, 3> kind_color(const std::string& kind) {
  if (kind == "srlfd") return {214, 39, 40};
  if (kind == "pca") return {31, 119, 180};
  if (kind == "autoencoder") return {44, 160, 44};
  if (kind == "random") return {150, 150, 150};
  return {0, 0, 0};
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

}  // namespace

Report build_report(const std::string& workdir) {
  const Manifest m = Manifest::load(workdir);
  Report rep;
  for (const auto& [id, rec] : m.cells()) {
    if (rec.status != "done") {
      rep.failed_cells.push_back(id);
      continue;
    }
    CellKey key;
    if (!parse_cell_id(id, key)) continue;
    std::vector<std::vector<rl::CurvePoint>> curves;
    const fs::path dir = fs::path(workdir) / "rl" / id;
    std::vector<fs::path> files;
    if (fs::exists(dir))
      for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) curves.push_back(rl::read_curve_csv(f.string()));
    if (curves.empty()) continue;
    LearningCurve c = aggregate(id, curves);
    rep.rows.push_back({id, key.variant, key.kind, key.dim, c.replicas, c.mean.back(), c.stderr_.back(), auc(c)});
    rep.curves.push_back(std::move(c));
  }

  // Ordering checks within each (variant, dim) panel that has an srlfd cell.
  for (const auto& s : rep.rows) {
    if (s.kind != "srlfd") continue;
    for (const auto& [rhs, relation] : {std::pair<const char*, const char*>{"random", ">"}, {"pca", ">="}}) {
      auto it = std::find_if(rep.rows.begin(), rep.rows.end(), [&](const SummaryRow& o) {
        return o.variant == s.variant && o.dim == s.dim && o.kind == rhs;
      });
      if (it == rep.rows.end()) continue;
      const bool holds = std::string(relation) == ">" ? s.auc > it->auc : s.auc >= it->auc;
      rep.ordering.push_back({s.variant, s.dim, "srlfd", rhs, relation, s.auc, it->auc, holds});
    }
  }
  return rep;
}

Report write_report(const std::string& workdir) {
  Report rep = build_report(workdir);
  const fs::path out = fs::path(workdir) / "report";
  fs::create_directories(out);

  {
    auto f = open_out(out / "summary.csv");
    f << "cell,variant,kind,dim,replicas,final_success,final_stderr,auc\n";
    if (rep.rows.empty()) f << "# " << kNoCellsMarker << "\n";
    for (const auto& r : rep.rows)
      f << r.cell << ',' << r.variant << ',' << r.kind << ',' << r.dim << ',' << r.replicas << ','
        << fmt(r.final_success) << ',' << fmt(r.final_stderr) << ',' << fmt(r.auc) << "\n";
  }
  {
    auto f = open_out(out / "ordering.csv");
    f << "variant,dim,lhs,relation,rhs,lhs_auc,rhs_auc,holds\n";
    for (const auto& o : rep.ordering)
      f << o.variant << ',' << o.dim << ',' << o.lhs << ',' << o.relation << ',' << o.rhs << ',' << fmt(o.lhs_auc)
        << ',' << fmt(o.rhs_auc) << ',' << (o.holds ? "true" : "false") << "\n";
  }
  {
    auto f = open_out(out / "summary.txt");
    if (rep.rows.empty()) f << kNoCellsMarker << "\n";
    char line[200];
    if (!rep.rows.empty()) {
      std::snprintf(line, sizeof line, "%-26s %8s %14s %12s\n", "cell", "replicas", "final success", "auc");
      f << line;
    }
    for (const auto& r : rep.rows) {
      std::snprintf(line, sizeof line, "%-26s %8zu %7.3f+-%.3f %12.1f\n", r.cell.c_str(), r.replicas,
                    r.final_success, r.final_stderr, r.auc);
      f << line;
    }
    if (!rep.ordering.empty()) f << "\nordering (aggregated AUC)\n";
    for (const auto& o : rep.ordering) {
      std::snprintf(line, sizeof line, "%s d=%zu: srlfd %.1f %s %s %.1f  %s\n", o.variant.c_str(), o.dim,
                    o.lhs_auc, o.relation.c_str(), o.rhs.c_str(), o.rhs_auc, o.holds ? "holds" : "VIOLATED");
      f << line;
    }
    for (const auto& c : rep.failed_cells) f << "failed: " << c << "\n";
  }

  // One panel per (variant, dim); ground truth joins every panel of its variant.
  std::set<std::pair<std::string, std::size_t>> panels;
  for (const auto& r : rep.rows)
    if (r.kind != "ground_truth") panels.insert({r.variant, r.dim});
  for (const auto& r : rep.rows)
    if (r.kind == "ground_truth" && std::none_of(panels.begin(), panels.end(), [&](const auto& p) {
          return p.first == r.variant;
        }))
      panels.insert({r.variant, r.dim});
  for (const auto& [variant, dim] : panels) {
    const std::string stem = "panel-" + variant + "-d" + std::to_string(dim);
    auto f = open_out(out / (stem + ".csv"));
    f << "cell,kind,x,mean,stderr\n";
    std::vector<PlotSeries> series;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& r = rep.rows[i];
      if (r.variant != variant || (r.dim != dim && r.kind != "ground_truth")) continue;
      const auto& c = rep.curves[i];
      for (std::size_t k = 0; k < c.x.size(); ++k)
        f << r.cell << ',' << r.kind << ',' << fmt(c.x[k]) << ',' << fmt(c.mean[k]) << ',' << fmt(c.stderr_[k]) << "\n";
      series.push_back({kind_color(r.kind), c.x, c.mean, c.stderr_});
    }
    write_line_plot((out / (stem + ".png")).string(), series);
  }
  return rep;
}

}  // namespace srlfd::harness
