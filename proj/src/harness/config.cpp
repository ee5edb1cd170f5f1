#include "srlfd/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "srlfd/errors.hpp"

namespace srlfd::harness {

namespace {

struct Binding {
  std::string section, key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc{} || r.ptr != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt_double(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

class Table {
 public:
  void section(std::string s) { section_ = std::move(s); }

  template <class T>
  void integer(const std::string& key, T& ref) {
    const std::string full = section_ + "." + key;
    rows_.push_back({section_, key, [&ref, full](const std::string& v) { ref = parse_integer<T>(full, v); },
                     [&ref] { return std::to_string(ref); }});
  }
  void real(const std::string& key, double& ref) {
    const std::string full = section_ + "." + key;
    rows_.push_back({section_, key, [&ref, full](const std::string& v) { ref = parse_double(full, v); },
                     [&ref] { return fmt_double(ref); }});
  }
  void flag(const std::string& key, bool& ref) {
    const std::string full = section_ + "." + key;
    rows_.push_back({section_, key, [&ref, full](const std::string& v) { ref = parse_bool(full, v); },
                     [&ref] { return std::string(ref ? "true" : "false"); }});
  }
  void custom(const std::string& key, std::function<void(const std::string&)> set,
              std::function<std::string()> get) {
    rows_.push_back({section_, key, std::move(set), std::move(get)});
  }

  const std::vector<Binding>& rows() const { return rows_; }

 private:
  std::string section_;
  std::vector<Binding> rows_;
};

template <class T, class Parse, class Name>
void list(Table& t, const std::string& key, std::vector<T>& ref, Parse parse, Name name) {
  t.custom(
      key,
      [&ref, parse, key](const std::string& v) {
        std::vector<T> out;
        for (const auto& item : split_list(v)) out.push_back(parse(item));
        if (out.empty()) throw ConfigError(key + ": list must not be empty");
        ref = std::move(out);
      },
      [&ref, name] {
        std::string s;
        for (std::size_t i = 0; i < ref.size(); ++i) s += (i ? "," : "") + name(ref[i]);
        return s;
      });
}

Table bindings(PlanConfig& c) {
  Table t;
  t.section("plan");
  t.integer("master_seed", c.master_seed);
  list(t, "kinds", c.kinds, rep::parse_kind, [](rep::RepKind k) { return std::string(rep::kind_name(k)); });
  list(
      t, "dims", c.dims, [](const std::string& s) { return parse_integer<std::size_t>("plan.dims", s); },
      [](std::size_t d) { return std::to_string(d); });
  list(t, "variants", c.variants, sim::parse_variant,
       [](sim::Variant v) { return std::string(sim::variant_name(v)); });
  t.integer("rep_seeds", c.rep_seeds);
  t.integer("rl_seeds", c.rl_seeds);

  auto& arm = c.demos.env.arm;
  t.section("env");
  t.real("l1", arm.l1);
  t.real("l2", arm.l2);
  t.real("dt", arm.dt);
  t.real("torque_gain", arm.torque_gain);
  t.real("damping", arm.damping);
  t.real("inertia1", arm.inertia1);
  t.real("inertia2", arm.inertia2);
  t.real("omega_max", arm.omega_max);
  t.real("eps_goal", arm.eps_goal);
  auto& ren = c.demos.env.render;
  t.real("noise_sigma", ren.noise_sigma);
  t.flag("render_goal", ren.render_goal);
  t.real("workspace", ren.workspace);
  t.real("arm_width_px", ren.arm_width_px);
  t.real("goal_radius_px", ren.goal_radius_px);
  t.real("arm_intensity", ren.arm_intensity);
  t.real("goal_intensity", ren.goal_intensity);
  t.real("distractor_intensity", ren.distractor_intensity);
  t.real("distractor_step_sigma", c.demos.env.distractor.step_sigma);
  t.real("distractor_max_speed", c.demos.env.distractor.max_speed);
  t.real("distractor_radius", c.demos.env.distractor.radius);

  t.section("demos");
  t.integer("instances", c.demos.instances);
  t.integer("trajectories", c.demos.trajectories);
  t.integer("horizon", c.demos.horizon);
  t.integer("seed", c.demos.seed);
  t.flag("stop_on_success", c.demos.stop_on_success);
  t.real("goal_separation", c.demos.goal_separation);
  t.real("goal_margin", c.demos.goal_margin);
  t.real("kp", c.demos.gains.kp);
  t.real("kd", c.demos.gains.kd);

  t.section("srlfd");
  t.integer("epochs", c.srlfd.epochs);
  t.integer("steps_per_epoch", c.srlfd.steps_per_epoch);
  t.integer("batch", c.srlfd.batch);
  t.custom(
      "optimizer",
      [&c](const std::string& v) {
        if (v == "adam") c.srlfd.optimizer = imitation::OptimizerKind::kAdam;
        else if (v == "sgd") c.srlfd.optimizer = imitation::OptimizerKind::kSgd;
        else throw ConfigError("srlfd.optimizer: expected adam or sgd, got '" + v + "'");
      },
      [&c] { return std::string(c.srlfd.optimizer == imitation::OptimizerKind::kAdam ? "adam" : "sgd"); });
  t.real("lr", c.srlfd.adam.lr);
  t.real("beta1", c.srlfd.adam.beta1);
  t.real("beta2", c.srlfd.adam.beta2);
  t.real("sgd_lr", c.srlfd.sgd_lr);

  t.section("autoencoder");
  t.integer("steps", c.autoencoder.steps);
  t.integer("batch", c.autoencoder.batch);
  t.real("lr", c.autoencoder.adam.lr);

  t.section("pca");
  t.integer("max_samples", c.pca_max_samples);

  auto& rl = c.rl;
  t.section("rl");
  t.integer("epochs", rl.epochs);
  t.integer("rollouts_per_epoch", rl.rollouts_per_epoch);
  t.integer("test_episodes", rl.test_episodes);
  t.integer("horizon", rl.horizon);
  t.real("gamma", rl.ddpg.gamma);
  t.real("tau", rl.ddpg.tau);
  t.real("actor_lr", rl.ddpg.actor_lr);
  t.real("critic_lr", rl.ddpg.critic_lr);
  t.integer("actor_width", rl.ddpg.actor_width);
  t.integer("critic_width", rl.ddpg.critic_width);
  t.integer("buffer_capacity", rl.buffer_capacity);
  t.integer("batch", rl.batch);
  t.integer("updates_per_step", rl.updates_per_step);
  t.integer("warmup_rollouts", rl.warmup_rollouts);
  t.real("sigma_start", rl.sigma_start);
  t.real("sigma_end", rl.sigma_end);
  return t;
}

void validate(const PlanConfig& c) {
  if (c.rep_seeds < 1 || c.rl_seeds < 1) throw ConfigError("plan.rep_seeds and plan.rl_seeds must be >= 1");
  for (std::size_t d : c.dims)
    if (d < 2 || d % 2 != 0) throw ConfigError("plan.dims: total dimension must be even and >= 2");
  if (c.demos.instances < 1 || c.demos.trajectories < 1 || c.demos.horizon < 2)
    throw ConfigError("demos: instances, trajectories must be >= 1 and horizon >= 2");
  if (c.srlfd.epochs < 1 || c.srlfd.steps_per_epoch < 1 || c.srlfd.batch < 1)
    throw ConfigError("srlfd: epochs, steps_per_epoch and batch must be >= 1");
  if (c.autoencoder.steps < 1 || c.autoencoder.batch < 1)
    throw ConfigError("autoencoder: steps and batch must be >= 1");
  if (c.rl.epochs < 1 || c.rl.rollouts_per_epoch < 1 || c.rl.test_episodes < 1 || c.rl.horizon < 1)
    throw ConfigError("rl: budgets must be >= 1");
}

}  // namespace

void apply_config(PlanConfig& cfg, const std::string& text) {
  // '#' comments are accepted in addition to the parser's ';'.
  std::stringstream cleaned;
  {
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      cleaned << (t.empty() || t[0] == '#' ? std::string() : t) << '\n';
    }
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(cleaned, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  Table table = bindings(cfg);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' appears outside any section");
    for (const auto& [key, value] : body) {
      const auto& rows = table.rows();
      auto it = std::find_if(rows.begin(), rows.end(),
                             [&](const Binding& b) { return b.section == section && b.key == key; });
      if (it == rows.end()) throw ConfigError("unknown config key '" + section + "." + key + "'");
      it->set(trim(value.data()));
    }
  }
  validate(cfg);
}

PlanConfig parse_plan_config(const std::string& text) {
  PlanConfig cfg;
  apply_config(cfg, text);
  return cfg;
}

PlanConfig load_plan_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_plan_config(ss.str());
}

std::string render_config(const PlanConfig& cfg) {
  PlanConfig copy = cfg;
  Table table = bindings(copy);
  std::string out, section;
  for (const auto& b : table.rows()) {
    if (b.section != section) {
      out += (section.empty() ? "[" : "\n[") + b.section + "]\n";
      section = b.section;
    }
    out += b.key + " = " + b.get() + "\n";
  }
  return out;
}

}  // namespace srlfd::harness
