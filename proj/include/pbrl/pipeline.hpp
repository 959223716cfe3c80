#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pbrl/control.hpp"
#include "pbrl/ddpg.hpp"
#include "pbrl/plant.hpp"

namespace pbrl::pipeline {

/// Weather, initial condition and calendar position of one simulated period.
struct Scenario {
  plant::SeasonProfile season;
  plant::PlantState initial;
  int start_day = 0;
};

/// Late-season weather: lower peak irradiance, shorter and cooler days, and
/// a later, smaller harvest than the default profile.
inline Scenario late_season() {
  Scenario s;
  s.season.base.i_max = 650.0;
  s.season.base.sunrise = 8.0 * 3600.0;
  s.season.base.sunset = 18.0 * 3600.0;
  s.season.base.t_amb_mean = 13.0;
  s.season.base.t_amb_amp = 4.0;
  s.season.harvest_start = 11.0 * 3600.0;
  s.season.harvest_flow = 1.5;
  s.initial.temp = 13.0;
  return s;
}

struct ExperimentConfig {
  plant::PlantParams plant;
  Scenario train;
  Scenario test = late_season();
  control::PidConfig pid;
  control::ObservationConfig observation;
  ddpg::AgentConfig agent;
  int train_days = 2;
  int test_days = 3;
  /// Fraction of clamped plant steps above which a collection run is
  /// declared unstable.
  double max_clamp_fraction = 0.10;

  void validate() const;
};

struct TraceRow {
  double t = 0.0;
  double ph = 0.0;
  double setpoint = 0.0;
  double u = 0.0;
  double irradiance = 0.0;
  double do_conc = 0.0;
  double temp = 0.0;
  double q_air = 0.0;
  double q_dil = 0.0;
  double e = 0.0;
  double integral_e = 0.0;
  double reward = 0.0;
  bool gate_active = false;

  bool operator==(const TraceRow&) const = default;
};

struct EpisodeTrace {
  std::string controller;
  std::uint64_t seed = 0;
  std::string config_hash;
  double ts = 10.0;
  std::vector<TraceRow> rows;
  std::int64_t clamp_events = 0;
  std::int64_t observation_clamps = 0;
  int fine_tune_events = 0;
};

struct MetricsRow {
  std::string controller;
  double iae = 0.0;  // pH s
  double cce = 0.0;  // L/min s
};

/// IAE = sum over active steps of |e| ts. CCE = sum of |u_t - u_{t-1}| ts over
/// pairs of adjacent steps that are both active.
MetricsRow compute_metrics(const EpisodeTrace& trace);

enum class ControllerKind { kPid, kAgent };

struct RunOptions {
  ControllerKind controller = ControllerKind::kPid;
  std::string controller_id = "PID";
  int days = 1;
  bool fine_tune = false;
  std::uint64_t seed = 0;
  /// Selects the weather and noise streams (0 = training period, 1 = test).
  std::uint64_t stream_index = 0;
  std::string config_hash;
};

struct RunResult {
  EpisodeTrace trace;
  /// Every transition with both endpoints gate-active, in time order.
  std::vector<ddpg::Transition> transitions;
  std::vector<std::vector<ddpg::EpochStats>> fine_tune_history;
};

/// Closed-loop simulation of one controller over `days` days of `scenario`.
/// With an agent controller, `agent` is required; with `fine_tune`, `buffer`
/// receives the new transitions and the agent is retrained at each day
/// boundary.
RunResult simulate(const ExperimentConfig& cfg, const Scenario& scenario, const RunOptions& opts,
                   ddpg::Agent* agent = nullptr, ddpg::ReplayBuffer* buffer = nullptr);

struct Dataset {
  std::vector<ddpg::Transition> transitions;
  EpisodeTrace trace;
};

/// Step 1: closed PID loop over the training scenario. Throws
/// std::runtime_error when the plant clamps on more than
/// `max_clamp_fraction` of steps.
Dataset collect_pid_dataset(const ExperimentConfig& cfg, int days, std::uint64_t seed,
                            const std::string& config_hash = {});

struct TrainedAgent {
  ddpg::Agent agent;
  std::vector<ddpg::EpochStats> history;
};

/// Step 2: DDPG on the fixed dataset. A non-finite loss raises
/// ddpg::TrainingDiverged naming the epoch.
TrainedAgent offline_train(const std::vector<ddpg::Transition>& dataset, const ddpg::AgentConfig& agent_cfg,
                           std::uint64_t seed, int epochs);

/// Continues training an existing agent (optimizer state included).
std::vector<ddpg::EpochStats> continue_training(ddpg::Agent& agent,
                                                const std::vector<ddpg::Transition>& dataset,
                                                std::uint64_t seed, int epochs);

std::size_t buffer_capacity(const ddpg::AgentConfig& cfg, std::size_t dataset_size);

struct Deployment {
  EpisodeTrace trace;
  ddpg::Agent agent;
  std::vector<std::vector<ddpg::EpochStats>> fine_tune_history;
};

/// Step 3: run the agent on the test scenario; with `fine_tune`, the rolling
/// buffer starts from `dataset` and the agent retrains at every day boundary.
Deployment deploy(const ddpg::Agent& agent, const ExperimentConfig& cfg,
                  const std::vector<ddpg::Transition>& dataset, int days, bool fine_tune,
                  std::uint64_t seed, const std::string& config_hash = {});

EpisodeTrace run_pid(const ExperimentConfig& cfg, const Scenario& scenario, int days, std::uint64_t seed,
                     std::uint64_t stream_index, const std::string& config_hash = {});

struct Comparison {
  std::vector<MetricsRow> table;      // PID, RL, RL-FT
  std::vector<EpisodeTrace> traces;   // same order
  Dataset dataset;
  TrainedAgent offline;
  ddpg::Agent fine_tuned;
};

/// Full study: collect, train offline, then PID / RL / RL-FT on identical
/// test days. The three arms run concurrently when OpenMP threads are
/// available.
Comparison compare_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                              const std::string& config_hash = {});

}  // namespace pbrl::pipeline
