// Copyright 2026 The cimpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cimpc/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace cimpc {

namespace {

namespace pt = boost::property_tree;

using Setter = std::function<std::optional<std::string>(const std::string&,
                                                         TaskConfig&)>;

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
  return out;
}

template <typename T>
std::optional<T> parse_number(const std::string& text) {
  try {
    return boost::lexical_cast<T>(boost::trim_copy(text));
  } catch (const boost::bad_lexical_cast&) {
    return std::nullopt;
  }
}

std::optional<bool> parse_bool(const std::string& text) {
  const std::string v = boost::to_lower_copy(boost::trim_copy(text));
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  return std::nullopt;
}

std::optional<std::vector<double>> parse_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<double> out;
  for (const auto& p : parts) {
    const auto v = parse_number<double>(p);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

Setter number(double TaskConfig::*field) {
  return [field](const std::string& v, TaskConfig& c) -> std::optional<std::string> {
    const auto x = parse_number<double>(v);
    if (!x || !std::isfinite(*x)) return "expected a number, got '" + v + "'";
    c.*field = *x;
    return std::nullopt;
  };
}

Setter integer(int TaskConfig::*field) {
  return [field](const std::string& v, TaskConfig& c) -> std::optional<std::string> {
    const auto x = parse_number<int>(v);
    if (!x) return "expected an integer, got '" + v + "'";
    c.*field = *x;
    return std::nullopt;
  };
}

Setter flag(bool TaskConfig::*field) {
  return [field](const std::string& v, TaskConfig& c) -> std::optional<std::string> {
    const auto x = parse_bool(v);
    if (!x) return "expected true or false, got '" + v + "'";
    c.*field = *x;
    return std::nullopt;
  };
}

Setter list(std::vector<double> TaskConfig::*field) {
  return [field](const std::string& v, TaskConfig& c) -> std::optional<std::string> {
    const auto x = parse_list(v);
    if (!x) return "expected a comma-separated list of numbers, got '" + v + "'";
    c.*field = *x;
    return std::nullopt;
  };
}

Setter model_number(double QuadrupedParams::*field) {
  return [field](const std::string& v, TaskConfig& c) -> std::optional<std::string> {
    const auto x = parse_number<double>(v);
    if (!x || !std::isfinite(*x)) return "expected a number, got '" + v + "'";
    c.model.*field = *x;
    return std::nullopt;
  };
}

Setter link_number(LinkParams QuadrupedParams::*link, double LinkParams::*field) {
  return [link, field](const std::string& v, TaskConfig& c) -> std::optional<std::string> {
    const auto x = parse_number<double>(v);
    if (!x || !std::isfinite(*x)) return "expected a number, got '" + v + "'";
    (c.model.*link).*field = *x;
    return std::nullopt;
  };
}

struct Kind {
  ExperimentKind experiment;
  TaskKind task;
  double value;
};

// Task kinds and the task each one runs when [task] gives no base/value.
const std::map<std::string, Kind>& kinds() {
  static const std::map<std::string, Kind> k{
      {"stand", {ExperimentKind::Single, TaskKind::Stand, 0.0}},
      {"jump_up", {ExperimentKind::Single, TaskKind::JumpUp, 0.3}},
      {"move_forward", {ExperimentKind::Single, TaskKind::MoveForward, 1.0}},
      {"pitch_target", {ExperimentKind::Single, TaskKind::PitchTarget, 0.6}},
      {"relaxation_sweep", {ExperimentKind::RelaxationSweep, TaskKind::JumpUp, 0.6}},
      {"shooting_compare", {ExperimentKind::ShootingCompare, TaskKind::MoveForward, 1.0}},
      {"slip_recovery", {ExperimentKind::SlipRecovery, TaskKind::PitchTarget, 0.6}},
  };
  return k;
}

std::optional<TaskKind> base_kind(const std::string& name) {
  const auto it = kinds().find(boost::trim_copy(name));
  if (it == kinds().end() || it->second.experiment != ExperimentKind::Single) {
    return std::nullopt;
  }
  return it->second.task;
}

// Scalar keys by "section.key". kind, base, value, shooting and output_dir are
// handled separately because they interact.
const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s{
      {"task.duration", number(&TaskConfig::duration)},
      {"task.rho", number(&TaskConfig::rho)},
      {"task.rho_list", list(&TaskConfig::rho_list)},
      {"task.seed",
       [](const std::string& v, TaskConfig& c) -> std::optional<std::string> {
         const auto x = parse_number<std::uint64_t>(v);
         if (!x || boost::trim_copy(v).front() == '-') {
           return "expected a non-negative integer, got '" + v + "'";
         }
         c.seed = *x;
         return std::nullopt;
       }},
      {"solver.horizon", integer(&TaskConfig::horizon)},
      {"solver.dt", number(&TaskConfig::dt)},
      {"solver.max_iterations", integer(&TaskConfig::max_iterations)},
      {"solver.drift_compensation", flag(&TaskConfig::drift_compensation)},
      {"solver.cost_tolerance", number(&TaskConfig::cost_tolerance)},
      {"solver.gap_tolerance", number(&TaskConfig::gap_tolerance)},
      {"solver.regularization_min", number(&TaskConfig::regularization_min)},
      {"solver.regularization_max", number(&TaskConfig::regularization_max)},
      {"plant.dt", number(&TaskConfig::plant_dt)},
      {"plant.kp", list(&TaskConfig::kp)},
      {"plant.kd", list(&TaskConfig::kd)},
      {"plant.base_height_offset", number(&TaskConfig::base_height_offset)},
      {"plant.initial_noise", number(&TaskConfig::initial_noise)},
      {"plant.friction_low", number(&TaskConfig::friction_low)},
      {"plant.friction_drop_start", number(&TaskConfig::friction_drop_start)},
      {"plant.friction_drop_end", number(&TaskConfig::friction_drop_end)},
      {"model.base_mass", model_number(&QuadrupedParams::base_mass)},
      {"model.base_length", model_number(&QuadrupedParams::base_length)},
      {"model.base_height", model_number(&QuadrupedParams::base_height)},
      {"model.base_inertia", model_number(&QuadrupedParams::base_inertia)},
      {"model.hip_offset", model_number(&QuadrupedParams::hip_offset)},
      {"model.upper_length", link_number(&QuadrupedParams::upper, &LinkParams::length)},
      {"model.upper_mass", link_number(&QuadrupedParams::upper, &LinkParams::mass)},
      {"model.upper_inertia", link_number(&QuadrupedParams::upper, &LinkParams::inertia)},
      {"model.lower_length", link_number(&QuadrupedParams::lower, &LinkParams::length)},
      {"model.lower_mass", link_number(&QuadrupedParams::lower, &LinkParams::mass)},
      {"model.lower_inertia", link_number(&QuadrupedParams::lower, &LinkParams::inertia)},
      {"model.hip_stance", model_number(&QuadrupedParams::hip_stance)},
      {"model.knee_stance", model_number(&QuadrupedParams::knee_stance)},
      {"model.gravity", model_number(&QuadrupedParams::gravity)},
      {"model.friction", model_number(&QuadrupedParams::friction)},
      {"model.torque_limit", model_number(&QuadrupedParams::torque_limit)},
      {"cost.w_position", number(&TaskConfig::w_position)},
      {"cost.w_height", number(&TaskConfig::w_height)},
      {"cost.w_pitch", number(&TaskConfig::w_pitch)},
      {"cost.w_joint", number(&TaskConfig::w_joint)},
      {"cost.w_velocity", number(&TaskConfig::w_velocity)},
      {"cost.w_control", number(&TaskConfig::w_control)},
      {"cost.terminal_scale", number(&TaskConfig::terminal_scale)},
      {"cost.foot_cost", flag(&TaskConfig::foot_cost)},
      {"cost.foot_weight", number(&TaskConfig::foot_weight)},
      {"cost.foot_sharpness", number(&TaskConfig::foot_sharpness)},
      {"cost.airtime_cost", flag(&TaskConfig::airtime_cost)},
      {"cost.airtime_weight", number(&TaskConfig::airtime_weight)},
      {"cost.airtime_threshold", integer(&TaskConfig::airtime_threshold)},
      {"cost.symmetric_cost", flag(&TaskConfig::symmetric_cost)},
      {"cost.symmetric_weight", number(&TaskConfig::symmetric_weight)},
  };
  return s;
}

// Line number of every "section.key" in the text, for diagnostics. The
// parser itself is Boost's; this only remembers where keys were written.
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line, section;
  for (int n = 1; std::getline(in, line); ++n) {
    const std::string t = boost::trim_copy(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = boost::trim_copy(t.substr(1, t.size() - 2));
    } else if (const auto eq = t.find('='); eq != std::string::npos) {
      lines.emplace(section + "." + boost::trim_copy(t.substr(0, eq)), n);
    }
  }
  return lines;
}

class Problems {
 public:
  explicit Problems(std::map<std::string, int> lines) : lines_(std::move(lines)) {}

  void add(const std::string& key, const std::string& message) {
    const auto it = lines_.find(key);
    const std::string where =
        it == lines_.end() ? key : "line " + std::to_string(it->second) + ": " + key;
    items_.push_back(where + ": " + message);
  }
  void check(bool ok, const std::string& key, const std::string& message) {
    if (!ok) add(key, message);
  }
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::map<std::string, int> lines_;
  std::vector<std::string> items_;
};

void validate(const TaskConfig& c, Problems& p) {
  p.check(c.duration >= 0.0, "task.duration", "must be >= 0");
  p.check(c.rho >= 0.0, "task.rho", "must be >= 0");
  p.check(!c.rho_list.empty(), "task.rho_list", "must not be empty");
  for (double r : c.rho_list) {
    if (!(r >= 0.0)) {
      p.add("task.rho_list", "every entry must be >= 0");
      break;
    }
  }
  p.check(c.horizon >= 1, "solver.horizon", "must be >= 1");
  p.check(c.dt > 0.0, "solver.dt", "must be positive");
  p.check(c.max_iterations >= 1, "solver.max_iterations", "must be >= 1");
  p.check(c.cost_tolerance > 0.0, "solver.cost_tolerance", "must be positive");
  p.check(c.gap_tolerance > 0.0, "solver.gap_tolerance", "must be positive");
  p.check(c.regularization_min > 0.0, "solver.regularization_min",
          "must be positive");
  p.check(c.regularization_max >= c.regularization_min,
          "solver.regularization_max", "must be >= solver.regularization_min");
  p.check(c.plant_dt > 0.0, "plant.dt", "must be positive");
  if (c.dt > 0.0 && c.plant_dt > 0.0) {
    const double ratio = c.dt / c.plant_dt;
    p.check(ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) <= 1e-9,
            "plant.dt", "solver.dt must be an integer multiple of plant.dt");
  }
  const std::size_t nj = 4;
  for (const auto& [key, gains] : {std::pair{"plant.kp", &c.kp}, std::pair{"plant.kd", &c.kd}}) {
    p.check(gains->size() == 1 || gains->size() == nj, key,
            "expected 1 or " + std::to_string(nj) + " values, got " +
                std::to_string(gains->size()));
    for (double g : *gains) {
      if (!(g > 0.0)) {
        p.add(key, "gains must be positive");
        break;
      }
    }
  }
  p.check(c.initial_noise >= 0.0, "plant.initial_noise", "must be >= 0");
  p.check(c.friction_low >= 0.0, "plant.friction_low", "must be >= 0");
  if (c.friction_drop_start >= 0.0) {
    p.check(c.friction_drop_end > c.friction_drop_start, "plant.friction_drop_end",
            "must come after plant.friction_drop_start");
  }

  const QuadrupedParams& m = c.model;
  p.check(m.base_mass > 0.0, "model.base_mass", "must be positive");
  p.check(m.base_inertia > 0.0, "model.base_inertia", "must be positive");
  p.check(m.base_length > 0.0, "model.base_length", "must be positive");
  p.check(m.base_height > 0.0, "model.base_height", "must be positive");
  p.check(m.hip_offset >= 0.0, "model.hip_offset", "must be >= 0");
  for (const auto& [name, link] : {std::pair{"upper", &m.upper}, std::pair{"lower", &m.lower}}) {
    const std::string k = std::string("model.") + name;
    p.check(link->length > 0.0, k + "_length", "must be positive");
    p.check(link->mass > 0.0, k + "_mass", "must be positive");
    p.check(link->inertia > 0.0, k + "_inertia", "must be positive");
  }
  p.check(m.gravity >= 0.0, "model.gravity", "must be >= 0");
  p.check(m.friction >= 0.0, "model.friction", "must be >= 0");
  p.check(m.torque_limit > 0.0, "model.torque_limit", "must be positive");

  for (const auto& [key, w] :
       {std::pair{"cost.w_position", c.w_position}, std::pair{"cost.w_height", c.w_height},
        std::pair{"cost.w_pitch", c.w_pitch}, std::pair{"cost.w_joint", c.w_joint},
        std::pair{"cost.w_velocity", c.w_velocity}, std::pair{"cost.w_control", c.w_control},
        std::pair{"cost.terminal_scale", c.terminal_scale},
        std::pair{"cost.foot_weight", c.foot_weight},
        std::pair{"cost.airtime_weight", c.airtime_weight},
        std::pair{"cost.symmetric_weight", c.symmetric_weight}}) {
    p.check(w >= 0.0, key, "must be >= 0");
  }
  p.check(c.airtime_threshold >= 1 && c.airtime_threshold < c.horizon,
          "cost.airtime_threshold", "must lie in [1, solver.horizon)");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid config:\n" + join(problems)),
      problems_(std::move(problems)) {}

int TaskConfig::scheduled_runs() const {
  switch (experiment) {
    case ExperimentKind::RelaxationSweep:
      return static_cast<int>(rho_list.size());
    case ExperimentKind::ShootingCompare:
      return 2;
    default:
      return 1;
  }
}

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Single:
      return "single";
    case ExperimentKind::RelaxationSweep:
      return "relaxation_sweep";
    case ExperimentKind::ShootingCompare:
      return "shooting_compare";
    case ExperimentKind::SlipRecovery:
      return "slip_recovery";
  }
  return "unknown";
}

TaskConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({"line " + std::to_string(e.line()) + ": " + e.message()});
  }

  TaskConfig c;
  Problems problems(key_lines(text));
  std::optional<std::string> kind_name, base_name, value_text, shooting;
  bool height_offset_given = false, drop_given = false;

  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      problems.add(section, "keys must live inside a [section]");
      continue;
    }
    for (const auto& [key, node] : entries) {
      const std::string full = section + "." + key;
      const std::string value = node.data();
      if (full == "task.kind") {
        kind_name = boost::trim_copy(value);
      } else if (full == "task.base") {
        base_name = value;
      } else if (full == "task.value") {
        value_text = value;
      } else if (full == "task.shooting") {
        shooting = boost::trim_copy(value);
      } else if (full == "task.output_dir") {
        c.output_dir = boost::trim_copy(value);
      } else if (const auto it = setters().find(full); it != setters().end()) {
        if (const auto err = it->second(value, c)) problems.add(full, *err);
        height_offset_given |= full == "plant.base_height_offset";
        drop_given |= full == "plant.friction_drop_start";
      } else {
        problems.add(full, "unknown key");
      }
    }
  }

  Kind kind = kinds().at("stand");
  if (kind_name) {
    const auto it = kinds().find(*kind_name);
    if (it == kinds().end()) {
      problems.add("task.kind", "unknown task kind '" + *kind_name + "'");
    } else {
      kind = it->second;
    }
  }
  c.experiment = kind.experiment;
  c.task = {kind.task, kind.value};
  if (base_name) {
    if (const auto b = base_kind(*base_name)) {
      c.task.kind = *b;
      c.task.value = kinds().at(boost::trim_copy(*base_name)).value;
    } else {
      problems.add("task.base", "expected stand, jump_up, move_forward or pitch_target");
    }
  }
  if (value_text) {
    const auto v = parse_number<double>(*value_text);
    if (!v || !std::isfinite(*v)) {
      problems.add("task.value", "expected a number, got '" + *value_text + "'");
    } else {
      c.task.value = *v;
    }
  }
  if (shooting) {
    if (*shooting == "multiple") {
      c.multiple_shooting = true;
    } else if (*shooting == "single") {
      c.multiple_shooting = false;
    } else {
      problems.add("task.shooting", "expected multiple or single");
    }
  }
  // Scenario defaults that only apply when the file leaves them open.
  if (c.experiment == ExperimentKind::ShootingCompare && !height_offset_given) {
    c.base_height_offset = 0.002;
  }
  if (c.experiment == ExperimentKind::SlipRecovery && !drop_given) {
    c.friction_drop_start = 2.5;
    c.friction_drop_end = 3.0;
  }

  validate(c, problems);
  if (!problems.items().empty()) throw ConfigError(problems.items());
  return c;
}

TaskConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

RobotModel build_model(const TaskConfig& config) {
  return RobotModel::planar_quadruped(config.model);
}

CostWeights build_weights(const TaskConfig& config, const RobotModel& model) {
  CostWeights w = CostWeights::defaults(model);
  const int nv = model.nv();
  const int nj = model.n_joints();
  w.wx.head(3) << config.w_position, config.w_height, config.w_pitch;
  w.wx.segment(3, nj).setConstant(config.w_joint);
  w.wx.tail(nv).setConstant(config.w_velocity);
  w.wu.setConstant(config.w_control);
  w.terminal_scale = config.terminal_scale;
  w.foot_enabled = config.foot_cost;
  w.foot_weight = config.foot_weight;
  w.foot_sharpness = config.foot_sharpness;
  w.airtime_enabled = config.airtime_cost;
  w.airtime_weight = config.airtime_weight;
  w.airtime_threshold = config.airtime_threshold;
  w.symmetric_enabled = config.symmetric_cost;
  w.symmetric_weight = config.symmetric_weight;
  return w;
}

ClosedLoopConfig build_closed_loop(const TaskConfig& config) {
  ClosedLoopConfig c;
  c.plant_dt = config.plant_dt;
  c.duration = config.duration;
  c.mpc.horizon = config.horizon;
  c.mpc.dt = config.dt;
  c.mpc.rho = config.rho;
  c.mpc.max_iterations = config.max_iterations;
  c.mpc.multiple_shooting = config.multiple_shooting;
  c.mpc.drift_compensation = config.drift_compensation;
  c.mpc.cost_tolerance = config.cost_tolerance;
  c.mpc.gap_tolerance = config.gap_tolerance;
  c.mpc.regularization_min = config.regularization_min;
  c.mpc.regularization_max = config.regularization_max;
  const auto expand = [](const std::vector<double>& g) {
    return g.size() == 1 ? Vec::Constant(4, g.front())
                         : Vec(Eigen::Map<const Vec>(g.data(), g.size()));
  };
  c.gains = {expand(config.kp), expand(config.kd)};
  c.perturbation.base_height_offset = config.base_height_offset;
  c.perturbation.joint_noise = config.initial_noise;
  c.perturbation.seed = config.seed;
  c.perturbation.friction_low = config.friction_low;
  c.perturbation.friction_drop_start = config.friction_drop_start;
  c.perturbation.friction_drop_end = config.friction_drop_end;
  return c;
}

}  // namespace cimpc
