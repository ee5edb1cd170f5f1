#include "srlfd/harness/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "srlfd/errors.hpp"
#include "srlfd/harness/report.hpp"

namespace srlfd::harness {

namespace fs = std::filesystem;

std::string demos_rel(sim::Variant v) { return std::string("demos/") + sim::variant_name(v) + ".srld"; }

std::string rep_dir_rel(const Cell& c, int rep_index) {
  return std::string("reps/") + sim::variant_name(c.variant) + "/" + rep::kind_name(c.kind) + "-" +
         std::to_string(c.dim) + "-" + std::to_string(rep_index);
}

std::string rep_model_rel(const Cell& c, int rep_index) {
  return rep_dir_rel(c, rep_index) + (c.kind == rep::RepKind::kPca ? "/pca.srlp" : "/encoder.ckpt");
}

std::string curve_rel(const Cell& c, const Replica& r) { return "rl/" + c.id() + "/" + r.name() + ".csv"; }

namespace {

// The rendered config lines of the named sections.
std::string sections(const PlanConfig& cfg, std::initializer_list<const char*> names) {
  std::stringstream in(render_config(cfg));
  std::string line, out;
  bool keep = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '[') {
      keep = false;
      for (const char* n : names) keep |= line == std::string("[") + n + "]";
    }
    if (keep) out += line + "\n";
  }
  return out;
}

class Runner {
 public:
  Runner(const ExperimentPlan& plan, const std::string& workdir, const RunOptions& opts)
      : plan_(plan), cfg_(plan.config), dir_(workdir), opts_(opts), manifest_(Manifest::load(workdir)) {}

  RunSummary run() {
    for (const Cell& cell : plan_.cells) {
      CellOutcome out{cell.id(), false, {}};
      try {
        for (const Replica& r : plan_.replicas()) run_replica(cell, r);
        out.ok = true;
        manifest_.set_cell(cell.id(), {"done", {}});
      } catch (const std::exception& e) {
        out.error = e.what();
        log("cell " + cell.id() + " failed: " + out.error);
        manifest_.set_cell(cell.id(), {"failed", out.error});
      }
      manifest_.save(dir_);
      summary_.cells.push_back(out);
    }
    return summary_;
  }

 private:
  void log(const std::string& msg) const {
    if (opts_.log) opts_.log(msg);
  }

  std::string path(const std::string& rel) const { return (fs::path(dir_) / rel).string(); }

  // Runs `produce` unless `rel` is current; records it afterwards.
  template <class F>
  void stage(const std::string& rel, const std::string& description, F&& produce) {
    const std::string fp = sha256_hex(description);
    if (manifest_.fresh(dir_, rel, fp)) {
      ++summary_.stages_skipped;
      return;
    }
    log("running " + rel);
    fs::create_directories(fs::path(path(rel)).parent_path());
    produce(path(rel));
    manifest_.record(dir_, rel, fp);
    manifest_.save(dir_);
    ++summary_.stages_run;
  }

  const std::vector<demos::DemoSet>& demos_for(sim::Variant v) {
    const std::string rel = demos_rel(v);
    const std::string desc = "demos\n" + std::string(sim::variant_name(v)) + "\n" + sections(cfg_, {"env", "demos"}) +
                             std::to_string(demo_seed(cfg_));
    stage(rel, desc, [&](const std::string& p) {
      demos::DemoConfig dc = cfg_.demos;
      dc.seed = demo_seed(cfg_);
      dc.env = sim::with_variant(dc.env, v);
      demos::save_demos(demos::generate_demos(dc), p);
      demos_cache_.erase(v);
    });
    auto it = demos_cache_.find(v);
    if (it == demos_cache_.end()) it = demos_cache_.emplace(v, demos::load_demos(path(rel))).first;
    return it->second;
  }

  // Returns the relative model path ("" for ground truth) and its digest.
  std::pair<std::string, std::string> representation(const Cell& cell, int rep_index) {
    if (cell.kind == rep::RepKind::kGroundTruth) return {"", "ground_truth"};
    const auto& demos = demos_for(cell.variant);
    const std::string rel = rep_model_rel(cell, rep_index);
    const std::uint64_t seed = rep_seed(cfg_, cell.variant, cell.kind, cell.dim, rep_index);
    const char* section = cell.kind == rep::RepKind::kSrlfd         ? "srlfd"
                          : cell.kind == rep::RepKind::kAutoencoder ? "autoencoder"
                          : cell.kind == rep::RepKind::kPca         ? "pca"
                                                                    : "random";
    const std::string desc = "rep\n" + cell.id() + "\n" + manifest_.artifacts().at(demos_rel(cell.variant)).sha256 +
                             "\n" + sections(cfg_, {section}) + std::to_string(seed);
    stage(rel, desc, [&](const std::string& p) {
      const std::string dir = fs::path(p).parent_path().string();
      switch (cell.kind) {
        case rep::RepKind::kSrlfd: {
          imitation::TrainConfig tc = cfg_.srlfd;
          tc.seed = seed;
          const auto res = imitation::srlfd_train(demos, cell.dim, tc);
          imitation::write_loss_csv(res.log, dir + "/loss.csv");
          imitation::export_encoder(res.net, res.norm, p);
          break;
        }
        case rep::RepKind::kAutoencoder: {
          rep::AutoencoderConfig ac = cfg_.autoencoder;
          ac.latent = cell.latent();
          ac.seed = seed;
          const auto res = rep::train_autoencoder(demos, demos::compute_norm_stats(demos), ac);
          write_series_csv(res.loss_log, dir + "/loss.csv");
          rep::save_encoder(res.encoder, p);
          break;
        }
        case rep::RepKind::kPca:
          rep::save_pca(rep::fit_pca(demos, cell.latent(), cfg_.pca_max_samples, seed), p);
          break;
        case rep::RepKind::kRandom:
          rep::save_encoder(rep::make_random_encoder(cell.latent(), seed, demos::compute_norm_stats(demos)), p);
          break;
        case rep::RepKind::kGroundTruth: break;
      }
    });
    return {rel, manifest_.artifacts().at(rel).sha256};
  }

  void run_replica(const Cell& cell, const Replica& r) {
    const auto [model_rel, model_digest] = representation(cell, r.rep_index);
    const std::string rel = curve_rel(cell, r);
    const std::uint64_t seed = rl_seed(cfg_, cell, r);
    const std::uint64_t gseed = goal_seed(cfg_, cell.variant, r);
    const std::string desc = "rl\n" + cell.id() + "\n" + model_digest + "\n" + sections(cfg_, {"env", "rl"}) +
                             std::to_string(seed) + "\n" + std::to_string(gseed);
    stage(rel, desc, [&](const std::string& p) {
      const auto model = rep::load_representation(cell.kind, model_rel.empty() ? "" : path(model_rel), cell.latent());
      const sim::EnvConfig env = sim::with_variant(cfg_.demos.env, cell.variant);
      rl::RlConfig rc = cfg_.rl;
      rc.seed = seed;
      const auto curve = rl::train_rl(env, rl::rl_goal(gseed, env.arm), *model, rc, [&](const rl::CurvePoint& pt) {
        char buf[120];
        std::snprintf(buf, sizeof buf, "  %s %s epoch %d success %.2f", cell.id().c_str(), r.name().c_str(),
                      pt.epoch, pt.mean_success);
        log(buf);
      });
      rl::write_curve_csv(curve, p);
    });
  }

  static void write_series_csv(const std::vector<double>& v, const std::string& p) {
    std::ofstream f(p);
    if (!f) throw IoError("cannot open " + p + " for writing");
    f << "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, v[i]);
      f << buf;
    }
  }

  const ExperimentPlan& plan_;
  const PlanConfig& cfg_;
  std::string dir_;
  RunOptions opts_;
  Manifest manifest_;
  RunSummary summary_;
  std::map<sim::Variant, std::vector<demos::DemoSet>> demos_cache_;
};

}  // namespace

RunSummary run_plan(const ExperimentPlan& plan, const std::string& workdir, const RunOptions& opts) {
  fs::create_directories(workdir);
  RunSummary s = Runner(plan, workdir, opts).run();
  if (opts.write_report) write_report(workdir);
  return s;
}

}  // namespace srlfd::harness
