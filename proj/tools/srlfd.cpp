// Command-line front end. Exit codes: 0 ok, 1 unexpected, 2 configuration
// or input error, 3 numeric fault, 4 I/O error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "srlfd/demos/expert.hpp"
#include "srlfd/errors.hpp"
#include "srlfd/harness/report.hpp"
#include "srlfd/harness/runner.hpp"

using namespace srlfd;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  harness::PlanConfig load() const {
    return config.empty() ? harness::PlanConfig{} : harness::load_plan_config(config);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

template <class T>
void override_if(const CLI::Option* opt, T& target, const T& value) {
  if (opt->count() > 0) target = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"State representation learning from demonstrations: data, training, RL evaluation, experiments"};
  app.require_subcommand(1);

  // gen-demos
  Common gd_common;
  std::string gd_out, gd_variant = "clean";
  int gd_instances = 0, gd_trajectories = 0, gd_horizon = 0;
  std::uint64_t gd_seed = 0;
  auto* gd = app.add_subcommand("gen-demos", "Generate expert demonstrations for K task instances");
  gd->add_option("--config", gd_common.config, "Plan config file ([env] and [demos] sections)");
  gd->add_option("--out", gd_out, "Output demo file")->required();
  gd->add_option("--variant", gd_variant, "clean or noisy")->check(CLI::IsMember({"clean", "noisy"}));
  auto* gd_k = gd->add_option("--instances", gd_instances, "Task instances K");
  auto* gd_n = gd->add_option("--trajectories", gd_trajectories, "Trajectories per instance");
  auto* gd_h = gd->add_option("--horizon", gd_horizon, "Steps per trajectory");
  auto* gd_s = gd->add_option("--seed", gd_seed, "Generation seed");

  // train-srlfd
  Common ts_common;
  std::string ts_demos, ts_out, ts_loss;
  std::size_t ts_dim = 16, ts_epochs = 0, ts_steps = 0, ts_batch = 0;
  std::uint64_t ts_seed = 1;
  double ts_lr = 0.0;
  auto* ts = app.add_subcommand("train-srlfd", "Train the multi-head imitation network and export its encoder");
  ts->add_option("--config", ts_common.config, "Plan config file ([srlfd] section)");
  ts->add_option("--demos", ts_demos, "Demo file")->required();
  ts->add_option("--dim", ts_dim, "Total representation size d (phi has d/2 entries)")->required();
  auto* ts_m = ts->add_option("--epochs", ts_epochs, "Epochs M");
  auto* ts_n = ts->add_option("--steps", ts_steps, "Steps per epoch N");
  auto* ts_b = ts->add_option("--batch", ts_batch, "Batch size b");
  auto* ts_l = ts->add_option("--lr", ts_lr, "Adam learning rate");
  ts->add_option("--seed", ts_seed, "Seed");
  ts->add_option("--out", ts_out, "Encoder checkpoint")->required();
  ts->add_option("--loss-csv", ts_loss, "Loss log (default: <out>.loss.csv)");

  // fit-baseline
  Common fb_common;
  std::string fb_kind, fb_demos, fb_out;
  std::size_t fb_dim = 8, fb_max_samples = 0, fb_steps = 0;
  std::uint64_t fb_seed = 1;
  auto* fb = app.add_subcommand("fit-baseline", "Fit a PCA, autoencoder or random-network representation");
  fb->add_option("--config", fb_common.config, "Plan config file ([pca] and [autoencoder] sections)");
  fb->add_option("--kind", fb_kind, "pca, autoencoder or random")
      ->required()
      ->check(CLI::IsMember({"pca", "autoencoder", "random"}));
  fb->add_option("--dim", fb_dim, "Latent size d/2")->required();
  fb->add_option("--demos", fb_demos, "Demo file")->required();
  fb->add_option("--out", fb_out, "Model file")->required();
  fb->add_option("--seed", fb_seed, "Seed");
  auto* fb_ms = fb->add_option("--max-samples", fb_max_samples, "PCA frame subsample size");
  auto* fb_st = fb->add_option("--steps", fb_steps, "Autoencoder training steps");

  // train-rl
  Common tr_common;
  std::string tr_rep, tr_path, tr_out, tr_variant = "clean";
  std::size_t tr_dim = 8;
  std::uint64_t tr_goal_seed = 1, tr_seed = 1;
  int tr_epochs = 0, tr_rollouts = 0, tr_tests = 0;
  bool tr_verbose = false;
  auto* tr = app.add_subcommand("train-rl", "Run DDPG on a frozen representation and write the learning curve");
  tr->add_option("--config", tr_common.config, "Plan config file ([env] and [rl] sections)");
  tr->add_option("--rep", tr_rep, "Representation kind")
      ->required()
      ->check(CLI::IsMember({"srlfd", "pca", "autoencoder", "random", "ground_truth"}));
  tr->add_option("--rep-path", tr_path, "Representation model file (unused for ground_truth)");
  tr->add_option("--dim", tr_dim, "Total representation size d")->required();
  tr->add_option("--goal-seed", tr_goal_seed, "Seed of the fixed random goal");
  auto* tr_e = tr->add_option("--epochs", tr_epochs, "Epochs");
  auto* tr_r = tr->add_option("--rollouts", tr_rollouts, "Training rollouts per epoch");
  auto* tr_t = tr->add_option("--test-episodes", tr_tests, "Test rollouts per evaluation");
  tr->add_option("--seed", tr_seed, "RL seed");
  tr->add_option("--variant", tr_variant, "clean or noisy")->check(CLI::IsMember({"clean", "noisy"}));
  tr->add_option("--out", tr_out, "Curve CSV")->required();
  tr->add_flag("-v,--verbose", tr_verbose, "Print each curve point");

  // evaluate
  Common ev_common;
  std::string ev_policy, ev_variant = "clean";
  std::uint64_t ev_goal_seed = 1, ev_seed = 1;
  int ev_episodes = 100, ev_horizon = 50;
  auto* ev = app.add_subcommand("evaluate", "Success rate of a reference policy under the test protocol");
  ev->add_option("--config", ev_common.config, "Plan config file ([env] section)");
  ev->add_option("--policy", ev_policy, "expert or zero")->required()->check(CLI::IsMember({"expert", "zero"}));
  ev->add_option("--goal-seed", ev_goal_seed, "Seed of the fixed random goal");
  ev->add_option("--episodes", ev_episodes, "Test episodes");
  ev->add_option("--horizon", ev_horizon, "Steps per episode");
  ev->add_option("--seed", ev_seed, "Seed of the start states");
  ev->add_option("--variant", ev_variant, "clean or noisy")->check(CLI::IsMember({"clean", "noisy"}));

  // run-plan
  Common rp_common;
  std::string rp_workdir;
  bool rp_full = false, rp_quiet = false;
  auto* rp = app.add_subcommand("run-plan", "Run the experiment grid into a work directory (idempotent)");
  rp->add_option("--config", rp_common.config, "Plan config file");
  rp->add_option("--workdir", rp_workdir, "Work directory")->required();
  rp->add_flag("--full-replicas", rp_full, "4 representation seeds x 2 RL seeds");
  rp->add_flag("-q,--quiet", rp_quiet, "Only print the summary");

  // report
  std::string rep_workdir;
  auto* rpt = app.add_subcommand("report", "Aggregate completed cells into report/");
  rpt->add_option("--workdir", rep_workdir, "Work directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();

    if (*gd) {
      harness::PlanConfig cfg = gd_common.load();
      demos::DemoConfig dc = cfg.demos;
      override_if(gd_k, dc.instances, gd_instances);
      override_if(gd_n, dc.trajectories, gd_trajectories);
      override_if(gd_h, dc.horizon, gd_horizon);
      override_if(gd_s, dc.seed, gd_seed);
      dc.env = sim::with_variant(dc.env, sim::parse_variant(gd_variant));
      const auto sets = demos::generate_demos(dc);
      ensure_parent(gd_out);
      demos::save_demos(sets, gd_out);
      std::size_t triples = 0;
      for (const auto& s : sets) triples += s.triple_count();
      std::printf("wrote %zu instances x %d trajectories (%zu triples, %llu bytes) to %s in %.1fs\n", sets.size(),
                  dc.trajectories, triples, static_cast<unsigned long long>(fs::file_size(gd_out)), gd_out.c_str(),
                  seconds_since(t0));
    } else if (*ts) {
      harness::PlanConfig cfg = ts_common.load();
      imitation::TrainConfig tc = cfg.srlfd;
      override_if(ts_m, tc.epochs, ts_epochs);
      override_if(ts_n, tc.steps_per_epoch, ts_steps);
      override_if(ts_b, tc.batch, ts_batch);
      override_if(ts_l, tc.adam.lr, ts_lr);
      tc.seed = ts_seed;
      const auto demos = demos::load_demos(ts_demos);
      const std::size_t total = tc.epochs * tc.steps_per_epoch;
      const auto res = imitation::srlfd_train(demos, ts_dim, tc, [&](const imitation::LossRecord& r) {
        if ((r.step + 1) % tc.steps_per_epoch == 0)
          std::printf("step %zu/%zu loss %.4f\n", r.step + 1, total, r.loss), std::fflush(stdout);
      });
      ensure_parent(ts_out);
      imitation::export_encoder(res.net, res.norm, ts_out);
      const std::string loss = ts_loss.empty() ? ts_out + ".loss.csv" : ts_loss;
      imitation::write_loss_csv(res.log, loss);
      std::printf("encoder -> %s, loss log -> %s (%.1fs)\n", ts_out.c_str(), loss.c_str(), seconds_since(t0));
    } else if (*fb) {
      harness::PlanConfig cfg = fb_common.load();
      const auto demos = demos::load_demos(fb_demos);
      ensure_parent(fb_out);
      const rep::RepKind kind = rep::parse_kind(fb_kind);
      if (kind == rep::RepKind::kPca) {
        override_if(fb_ms, cfg.pca_max_samples, fb_max_samples);
        const auto m = rep::fit_pca(demos, fb_dim, cfg.pca_max_samples, fb_seed);
        rep::save_pca(m, fb_out);
        std::printf("pca k=%zu rank=%zu leading variance %.4g\n", m.k, m.rank, m.variances.empty() ? 0.0 : m.variances[0]);
      } else if (kind == rep::RepKind::kAutoencoder) {
        rep::AutoencoderConfig ac = cfg.autoencoder;
        override_if(fb_st, ac.steps, fb_steps);
        ac.latent = fb_dim;
        ac.seed = fb_seed;
        const auto res = rep::train_autoencoder(demos, demos::compute_norm_stats(demos), ac);
        rep::save_encoder(res.encoder, fb_out);
        std::printf("autoencoder final batch loss %.5f\n", res.loss_log.empty() ? 0.0 : res.loss_log.back());
      } else {
        rep::save_encoder(rep::make_random_encoder(fb_dim, fb_seed, demos::compute_norm_stats(demos)), fb_out);
      }
      std::printf("%s -> %s (%.1fs)\n", fb_kind.c_str(), fb_out.c_str(), seconds_since(t0));
    } else if (*tr) {
      harness::PlanConfig cfg = tr_common.load();
      rl::RlConfig rc = cfg.rl;
      override_if(tr_e, rc.epochs, tr_epochs);
      override_if(tr_r, rc.rollouts_per_epoch, tr_rollouts);
      override_if(tr_t, rc.test_episodes, tr_tests);
      rc.seed = tr_seed;
      const rep::RepKind kind = rep::parse_kind(tr_rep);
      if (tr_dim % 2 != 0) throw ConfigError("--dim must be even (d = 2 * latent)");
      if (kind != rep::RepKind::kGroundTruth && tr_path.empty()) throw ConfigError("--rep-path is required for " + tr_rep);
      if (kind == rep::RepKind::kGroundTruth && tr_dim != 8) throw ConfigError("ground_truth has d = 8");
      const auto model = rep::load_representation(kind, tr_path, tr_dim / 2);
      const sim::EnvConfig env = sim::with_variant(cfg.demos.env, sim::parse_variant(tr_variant));
      const auto goal = rl::rl_goal(tr_goal_seed, env.arm);
      const auto curve = rl::train_rl(env, goal, *model, rc, [&](const rl::CurvePoint& p) {
        if (tr_verbose)
          std::printf("epoch %d rollouts %ld success %.2f length %.1f\n", p.epoch, p.train_rollouts_cum,
                      p.mean_success, p.mean_episode_length),
              std::fflush(stdout);
      });
      ensure_parent(tr_out);
      rl::write_curve_csv(curve, tr_out);
      std::printf("final success %.2f -> %s (%.1fs)\n", curve.back().mean_success, tr_out.c_str(), seconds_since(t0));
    } else if (*ev) {
      harness::PlanConfig cfg = ev_common.load();
      const sim::EnvConfig env_cfg = sim::with_variant(cfg.demos.env, sim::parse_variant(ev_variant));
      const auto goal = rl::rl_goal(ev_goal_seed, env_cfg.arm);
      sim::ReacherEnv env(env_cfg, goal, make_rng(ev_seed, {1}));
      env.set_rendering(false);
      const demos::Expert expert(env_cfg.arm, goal, cfg.demos.gains);
      sim::Policy policy = [](const sim::Observation&) { return sim::Action{0.0, 0.0}; };
      if (ev_policy == "expert") policy = [&](const sim::Observation& o) { return expert(o.state); };
      Rng starts = make_rng(ev_seed, {2});
      const auto r = rl::evaluate_policy(env, policy, ev_episodes, ev_horizon, starts);
      std::printf("%s: success %.3f mean length %.1f over %d episodes (goal %.3f, %.3f)\n", ev_policy.c_str(),
                  r.success_rate, r.mean_episode_length, ev_episodes, goal.goal.x, goal.goal.y);
    } else if (*rp) {
      harness::PlanConfig cfg = rp_common.load();
      if (rp_full) {
        cfg.rep_seeds = 4;
        cfg.rl_seeds = 2;
      }
      harness::RunOptions opts;
      if (!rp_quiet) opts.log = [&](const std::string& m) {
        std::printf("[%7.0fs] %s\n", seconds_since(t0), m.c_str());
        std::fflush(stdout);
      };
      const auto s = harness::run_plan(harness::make_plan(cfg), rp_workdir, opts);
      int failed = 0;
      for (const auto& c : s.cells) {
        std::printf("%-26s %s%s\n", c.cell.c_str(), c.ok ? "done" : "FAILED: ", c.error.c_str());
        failed += !c.ok;
      }
      std::printf("%d stages run, %d reused; report in %s/report (%.1fs)\n", s.stages_run, s.stages_skipped,
                  rp_workdir.c_str(), seconds_since(t0));
      if (failed > 0) return 1;
    } else if (*rpt) {
      const auto r = harness::write_report(rep_workdir);
      std::ifstream f(fs::path(rep_workdir) / "report" / "summary.txt");
      std::cout << f.rdbuf();
      (void)r;
    }
    return 0;
  } catch (const NumericFault& e) {
    std::fprintf(stderr, "numeric fault: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
