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

// Experiment driver and log formats. A run writes three files into its own
// directory:
//   trajectory.csv  one row per plant step (see csv_header)
//   summary.json    ExperimentSummary, derived from trajectory.csv alone
//   events.json     falls, overflows and solver failures
// Sweeps add sweep.csv and sweep.json (rank correlation of stance time vs rho)
// to the output root.

#pragma once

#include <string>
#include <vector>

#include "cimpc/config.hpp"

namespace cimpc {

/// What the summary needs beyond the CSV: the clock of the run.
struct SummaryClock {
  double plant_dt = 1e-3;
  double mpc_dt = 0.025;
  double duration = 5.0;
};

struct ExperimentSummary {
  int rows = 0;
  int cycles = 0;
  bool completed = false;  // the log covers the configured duration
  bool success = false;    // completed without a fall or overflow
  double average_cost = 0.0;         // mean per-step cost over the run
  double average_stance_time = 0.0;  // s, stance intervals after t = 1 s
  int flight_phases = 0;             // no-contact intervals >= 10 ms
  double stance_fraction = 0.0;      // rows with at least one foot in contact
  double max_cycle_cost = 0.0;
  double median_cycle_cost = 0.0;
  std::vector<int> cycle_iterations;
  std::vector<double> cycle_solve_ms;  // wall time; not reproducible
  int max_iterations = 0;
  double max_gap_norm = 0.0;
  double mean_gap_norm = 0.0;
  double slip_distance = 0.0;       // m, foot travel while phi < 5 mm
  double peak_swing_height = 0.0;   // m, highest foot clearance
  double max_clamping_phi = 0.0;    // m, largest |phi| of a clamping foot
  double max_height_deviation = 0.0;  // m, base height vs. the first row
};

ExperimentSummary summarize(const std::vector<LogRow>& rows,
                            const RobotModel& model, const SummaryClock& clock);

std::string csv_header(int n_joints, int n_contacts);
void write_csv(const std::string& path, const std::vector<LogRow>& rows,
               const RobotModel& model);
std::vector<LogRow> read_csv(const std::string& path, const RobotModel& model);

std::string summary_json(const ExperimentSummary& s);
std::string events_json(const std::vector<Event>& events);
ExperimentSummary parse_summary_json(const std::string& text);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct RunResult {
  std::string label;  // directory name under the output root
  double rho = 0.0;
  bool multiple_shooting = true;
  ExecutionLog log;
  ExperimentSummary summary;
};

/// Runs every experiment the config schedules (in parallel for sweeps) and,
/// unless `out_dir` is empty, writes the artifacts below it.
std::vector<RunResult> run_experiment(const TaskConfig& config,
                                      const std::string& out_dir);

}  // namespace cimpc
