#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "srlfd/harness/report.hpp"
#include "srlfd/harness/runner.hpp"

using namespace srlfd;
using namespace srlfd::harness;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("srlfd_harness_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kTinyConfig = R"(
[plan]
master_seed = 5
kinds = random
dims = 4
variants = clean
rep_seeds = 1
rl_seeds = 1

[demos]
instances = 2
trajectories = 2
horizon = 5

[srlfd]
epochs = 1
steps_per_epoch = 2
batch = 4

[autoencoder]
steps = 2
batch = 4

[pca]
max_samples = 20

[rl]
epochs = 2
rollouts_per_epoch = 2
test_episodes = 2
horizon = 4
batch = 4
)";

std::vector<rl::CurvePoint> constant_curve(double y, int points = 4, long step = 10) {
  std::vector<rl::CurvePoint> c;
  for (int i = 0; i < points; ++i) c.push_back({i, i * step, y, 10.0});
  return c;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const PlanConfig d = parse_plan_config("");
  CHECK(d.kinds.size() == 5);
  CHECK(d.dims == std::vector<std::size_t>{16, 48});
  CHECK(d.rep_seeds == 2);
  CHECK(d.rl.epochs == 50);
  CHECK(d.rl.ddpg.gamma == 0.98);

  const PlanConfig c = parse_plan_config(
      "# comment\n[plan]\nkinds = srlfd, pca\ndims = 16\n; other comment\n[rl]\ngamma = 0.5\nepochs = 3\n"
      "[env]\nnoise_sigma = 0.1\n[srlfd]\noptimizer = sgd\n");
  CHECK(c.kinds == std::vector<rep::RepKind>{rep::RepKind::kSrlfd, rep::RepKind::kPca});
  CHECK(c.dims == std::vector<std::size_t>{16});
  CHECK(c.rl.ddpg.gamma == 0.5);
  CHECK(c.rl.epochs == 3);
  CHECK(c.demos.env.render.noise_sigma == 0.1);
  CHECK(c.srlfd.optimizer == imitation::OptimizerKind::kSgd);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_plan_config("[rl]\nepochz = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_config("[nope]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_config("[rl]\nepochs = three\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_config("[rl]\ngamma = 0.5x\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_config("[plan]\ndims = 15\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_config("[plan]\nkinds = pixels\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_config("[plan]\nkinds =\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_config("[plan\n"), ConfigError);
  CHECK_THROWS_AS(load_plan_config("/nonexistent/plan.ini"), IoError);
}

TEST_CASE("rendered config parses back to itself") {
  PlanConfig c = parse_plan_config(kTinyConfig);
  c.rl.sigma_start = 0.123456789012345678;
  const std::string text = render_config(c);
  CHECK(render_config(parse_plan_config(text)) == text);
}

TEST_CASE("plan grid and replicas") {
  const auto plan = make_plan(PlanConfig{});
  // 4 image kinds x 2 dims x 2 variants, plus one ground-truth cell per variant.
  CHECK(plan.cells.size() == 18);
  CHECK(plan.replicas().size() == 4);
  std::set<std::string> ids;
  for (const auto& c : plan.cells) ids.insert(c.id());
  CHECK(ids.size() == plan.cells.size());
  CHECK(ids.count("noisy-srlfd-16") == 1);
  CHECK(ids.count("clean-ground_truth-8") == 1);
  CHECK(plan.find("noisy-pca-48") != nullptr);
  CHECK(plan.find("noisy-pca-47") == nullptr);
}

TEST_CASE("seed derivation is pure and isolated") {
  const PlanConfig cfg;
  const Cell a{sim::Variant::kNoisy, rep::RepKind::kSrlfd, 16};
  const Cell b{sim::Variant::kNoisy, rep::RepKind::kPca, 16};
  const Replica r0{0, 0}, r1{0, 1};
  CHECK(rl_seed(cfg, a, r0) == rl_seed(cfg, a, r0));
  CHECK(rl_seed(cfg, a, r0) != rl_seed(cfg, b, r0));
  CHECK(rl_seed(cfg, a, r0) != rl_seed(cfg, a, r1));
  Cell salted = a;
  salted.rl_seed_salt = 1;
  CHECK(rl_seed(cfg, salted, r0) != rl_seed(cfg, a, r0));
  CHECK(goal_seed(cfg, a.variant, r0) == goal_seed(cfg, b.variant, r0));
  CHECK(rep_seed(cfg, a.variant, a.kind, 16, 0) != rep_seed(cfg, a.variant, a.kind, 16, 1));
  PlanConfig other = cfg;
  other.master_seed = 2;
  CHECK(rl_seed(other, a, r0) != rl_seed(cfg, a, r0));
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("aggregation") {
  SUBCASE("single replica keeps the curve with zero stderr") {
    const auto c = aggregate("x", {constant_curve(0.3)});
    CHECK(c.replicas == 1);
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      CHECK(c.mean[i] == 0.3);
      CHECK(c.stderr_[i] == 0.0);
    }
  }
  SUBCASE("two constant curves average") {
    const auto c = aggregate("x", {constant_curve(0.2), constant_curve(0.4)});
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      CHECK(c.mean[i] == doctest::Approx(0.3));
      // sd of {0.2, 0.4} is 0.1 * sqrt(2); divided by sqrt(2).
      CHECK(c.stderr_[i] == doctest::Approx(0.1));
    }
  }
  SUBCASE("identical replicas reproduce the curve") {
    auto curve = constant_curve(0.0);
    for (std::size_t i = 0; i < curve.size(); ++i) curve[i].mean_success = 0.1 * static_cast<double>(i);
    const auto c = aggregate("x", {curve, curve, curve});
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      CHECK(c.mean[i] == doctest::Approx(curve[i].mean_success));
      CHECK(c.stderr_[i] == doctest::Approx(0.0));
    }
  }
  SUBCASE("misaligned grids") {
    CHECK_THROWS_AS(aggregate("x", {constant_curve(0.1), constant_curve(0.1, 4, 20)}), AlignmentError);
    CHECK_THROWS_AS(aggregate("x", {constant_curve(0.1), constant_curve(0.1, 3)}), AlignmentError);
    CHECK_THROWS_AS(aggregate("x", {}), DomainError);
  }
}

TEST_CASE("auc of a constant-1 curve equals the x range") {
  const auto c = aggregate("x", {constant_curve(1.0, 6, 200)});
  CHECK(auc(c) == doctest::Approx(1000.0));
  CHECK(auc(aggregate("x", {constant_curve(0.0)})) == 0.0);
}

TEST_CASE("empty store reports no cells") {
  TempDir dir("empty");
  const Report r = write_report(dir.str());
  CHECK(r.rows.empty());
  CHECK(read_file(dir.path / "report" / "summary.txt").find(kNoCellsMarker) != std::string::npos);
  CHECK(read_file(dir.path / "report" / "summary.csv").find(kNoCellsMarker) != std::string::npos);
}

TEST_CASE("ordering table on a synthetic store") {
  TempDir dir("ordering");
  Manifest m;
  auto put = [&](const std::string& cell, double y) {
    fs::create_directories(dir.path / "rl" / cell);
    rl::write_curve_csv(constant_curve(y), (dir.path / "rl" / cell / "r0-s0.csv").string());
    rl::write_curve_csv(constant_curve(y), (dir.path / "rl" / cell / "r0-s1.csv").string());
    m.set_cell(cell, {"done", {}});
  };
  put("noisy-srlfd-16", 0.5);
  put("noisy-pca-16", 0.5);
  put("noisy-random-16", 0.6);
  put("noisy-ground_truth-8", 0.9);
  m.set_cell("noisy-autoencoder-16", {"failed", "boom"});
  m.save(dir.str());
  const Report r = write_report(dir.str());
  CHECK(r.rows.size() == 4);
  CHECK(r.failed_cells == std::vector<std::string>{"noisy-autoencoder-16"});
  REQUIRE(r.ordering.size() == 2);
  for (const auto& o : r.ordering) {
    if (o.rhs == "pca") CHECK(o.holds);  // ties satisfy >=
    if (o.rhs == "random") CHECK_FALSE(o.holds);
  }
  CHECK(fs::exists(dir.path / "report" / "panel-noisy-d16.png"));
  const std::string panel = read_file(dir.path / "report" / "panel-noisy-d16.csv");
  CHECK(panel.find("noisy-ground_truth-8") != std::string::npos);
  CHECK(read_file(dir.path / "report" / "ordering.csv").find("srlfd,>,random") != std::string::npos);
}

TEST_CASE("run_plan end to end on a tiny plan") {
  TempDir dir("run");
  const auto plan = make_plan(parse_plan_config(kTinyConfig));
  REQUIRE(plan.cells.size() == 1);
  const auto first = run_plan(plan, dir.str());
  REQUIRE(first.cells.size() == 1);
  CHECK(first.cells[0].ok);
  CHECK(first.stages_run == 3);  // demos, encoder, one curve

  std::size_t curves = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir.path / "rl")) curves += e.path().extension() == ".csv";
  CHECK(curves == 1);
  CHECK(fs::exists(dir.path / "demos" / "clean.srld"));
  CHECK(fs::exists(dir.path / "reps" / "clean" / "random-4-0" / "encoder.ckpt"));

  // Manifest integrity.
  const Manifest m = Manifest::load(dir.str());
  CHECK(m.artifacts().size() == 3);
  for (const auto& [rel, rec] : m.artifacts()) {
    REQUIRE(fs::exists(dir.path / rel));
    CHECK(sha256_file((dir.path / rel).string()) == rec.sha256);
  }

  SUBCASE("a second run is a manifest hit") {
    const auto again = run_plan(plan, dir.str());
    CHECK(again.stages_run == 0);
    CHECK(again.stages_skipped == 3);
  }
  SUBCASE("a tampered artifact is rebuilt") {
    const auto csv = dir.path / curve_rel(plan.cells[0], {0, 0});
    const std::string before = read_file(csv);
    std::ofstream(csv, std::ios::app) << "junk\n";
    const auto again = run_plan(plan, dir.str());
    CHECK(again.stages_run == 1);
    CHECK(read_file(csv) == before);
  }
  SUBCASE("an RL-only config change reuses upstream artifacts") {
    PlanConfig cfg = plan.config;
    cfg.rl.epochs = 1;
    const auto again = run_plan(make_plan(cfg), dir.str());
    CHECK(again.stages_run == 1);
    CHECK(again.stages_skipped == 2);
  }
}

TEST_CASE("serial runs are byte-identical and cells are seed-isolated") {
  PlanConfig cfg = parse_plan_config(kTinyConfig);
  // Enough ground-truth RL for the curves to depend on the seed.
  cfg.kinds = {rep::RepKind::kPca, rep::RepKind::kGroundTruth};
  cfg.rl.rollouts_per_epoch = 60;
  cfg.rl.horizon = 50;
  cfg.rl.test_episodes = 20;
  cfg.rl.batch = 32;
  TempDir a("det_a"), b("det_b"), c("det_c");
  auto plan = make_plan(cfg);
  run_plan(plan, a.str(), {{}, false});
  run_plan(plan, b.str(), {{}, false});
  REQUIRE(plan.cells.size() == 2);
  for (const auto& cell : plan.cells) {
    const auto rel = curve_rel(cell, {0, 0});
    CHECK(read_file(a.path / rel) == read_file(b.path / rel));
  }

  auto salted = plan;
  salted.cells[1].rl_seed_salt = 99;
  run_plan(salted, c.str(), {{}, false});
  const auto rel0 = curve_rel(plan.cells[0], {0, 0});
  const auto rel1 = curve_rel(plan.cells[1], {0, 0});
  CHECK(sha256_file((a.path / rel0).string()) == sha256_file((c.path / rel0).string()));
  CHECK(sha256_file((a.path / rel1).string()) != sha256_file((c.path / rel1).string()));
}

TEST_CASE("a failing cell is recorded and the plan continues") {
  PlanConfig cfg = parse_plan_config(kTinyConfig);
  cfg.kinds = {rep::RepKind::kPca, rep::RepKind::kRandom};
  cfg.pca_max_samples = 1;  // fewer samples than components
  TempDir dir("fail");
  const auto s = run_plan(make_plan(cfg), dir.str());
  REQUIRE(s.cells.size() == 2);
  CHECK_FALSE(s.cells[0].ok);
  CHECK(s.cells[1].ok);
  const Manifest m = Manifest::load(dir.str());
  CHECK(m.cells().at("clean-pca-4").status == "failed");
  CHECK_FALSE(m.cells().at("clean-pca-4").error.empty());
  CHECK(m.cells().at("clean-random-4").status == "done");
  const Report r = build_report(dir.str());
  CHECK(r.rows.size() == 1);
  CHECK(r.failed_cells.size() == 1);
}
