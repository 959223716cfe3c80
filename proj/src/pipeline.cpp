#include "pbrl/pipeline.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>

#include "pbrl/seed.hpp"

namespace pbrl::pipeline {

void ExperimentConfig::validate() const {
  plant.validate();
  train.season.base.validate();
  test.season.base.validate();
  pid.validate();
  observation.validate();
  agent.validate();
  if (train_days < 1 || test_days < 1) throw std::invalid_argument("experiment: day counts must be >= 1");
  if (train.start_day < 0 || test.start_day < 0) throw std::invalid_argument("experiment: negative start_day");
}

MetricsRow compute_metrics(const EpisodeTrace& trace) {
  MetricsRow m;
  m.controller = trace.controller;
  const double ts = trace.ts;
  const TraceRow* prev = nullptr;
  for (const auto& row : trace.rows) {
    if (row.gate_active) {
      m.iae += std::abs(row.e) * ts;
      if (prev != nullptr && prev->gate_active) m.cce += std::abs(row.u - prev->u) * ts;
    }
    prev = &row;
  }
  return m;
}

RunResult simulate(const ExperimentConfig& cfg, const Scenario& scenario, const RunOptions& opts,
                   ddpg::Agent* agent, ddpg::ReplayBuffer* buffer) {
  if (opts.days < 1) throw std::invalid_argument("simulate: days must be >= 1");
  if (opts.controller == ControllerKind::kAgent) {
    if (agent == nullptr) throw std::invalid_argument("simulate: agent controller without an agent");
    if (agent->observation_dim() != control::kObservationDim) {
      throw std::invalid_argument("simulate: agent observation dimension does not match");
    }
    if (opts.fine_tune && buffer == nullptr) throw std::invalid_argument("simulate: fine-tuning needs a buffer");
  }

  const double ts = cfg.pid.ts;
  const double sp = cfg.observation.setpoint;
  const double eps = cfg.observation.reward_eps;
  const auto weather_seed = derive_seed(opts.seed, SeedStream::kWeather, opts.stream_index);
  plant::Reactor reactor(cfg.plant, scenario.initial, ts,
                         derive_seed(opts.seed, SeedStream::kPlantNoise, opts.stream_index));
  std::mt19937_64 tune_rng(derive_seed(opts.seed, SeedStream::kSampling, 1 + opts.stream_index));

  RunResult result;
  auto& trace = result.trace;
  trace.controller = opts.controller_id;
  trace.seed = opts.seed;
  trace.config_hash = opts.config_hash;
  trace.ts = ts;
  trace.rows.reserve(static_cast<std::size_t>(opts.days * std::llround(plant::kSecondsPerDay / ts)));

  bool active = false;
  control::PidState pid;
  double integral = 0.0;
  double u_prev = 0.0;
  std::optional<std::pair<control::Observation, double>> pending;

  for (int d = 0; d < opts.days; ++d) {
    const auto day = plant::build_day_inputs(scenario.start_day + d, scenario.season, ts, weather_seed);
    for (std::size_t k = 0; k < day.steps.size(); ++k) {
      plant::ExogenousInputs x = day.steps[k];
      x.q_air = reactor.update_aeration(day.schedule);
      const plant::PlantState s = reactor.state();
      const double ph = reactor.measure_ph();
      const double e = sp - ph;
      const double tod = std::fmod(s.t, plant::kSecondsPerDay);

      const bool now_active = control::activation_gate(x.irradiance, ph, sp, active);
      if (now_active && !active) {
        pid = {};
        integral = 0.0;
      }
      double u = 0.0;
      double reward = 0.0;
      if (now_active) {
        double pid_u = 0.0;
        if (opts.controller == ControllerKind::kPid) {
          const auto out = control::pid_step(e, pid, cfg.pid, cfg.observation.int_clip);
          pid = out.state;
          pid_u = out.u;
          integral = pid.integral_e;
        } else {
          integral = control::integrate_error(integral, e, ts, cfg.observation.int_clip);
        }
        const control::Measurements meas{s.temp, x.irradiance, s.do_conc, x.q_dil, x.q_air, u_prev};
        const auto built = control::build_observation(meas, e, integral, tod, cfg.observation);
        if (built.clamped) ++trace.observation_clamps;
        u = opts.controller == ControllerKind::kPid ? pid_u : ddpg::act(*agent, built.obs);
        reward = control::reward_log(e, eps);
        if (pending) {
          ddpg::Transition tr{pending->first, pending->second, reward, built.obs, true};
          if (opts.fine_tune && buffer != nullptr) buffer->push(tr);
          result.transitions.push_back(tr);
        }
        pending.emplace(built.obs, u);
      } else {
        pending.reset();
      }

      trace.rows.push_back({s.t, ph, sp, u, x.irradiance, s.do_conc, s.temp, x.q_air, x.q_dil, e,
                            integral, reward, now_active});
      const auto& next = reactor.step(u, x);
      if (pending) pending->second = reactor.delivered_co2();
      if (!std::isfinite(next.ph) || !std::isfinite(next.do_conc) || !std::isfinite(next.temp)) {
        throw std::runtime_error("simulate: non-finite plant state");
      }
      active = now_active;
      u_prev = u;
    }
    if (opts.controller == ControllerKind::kAgent && opts.fine_tune) {
      const auto iters = ddpg::updates_per_epoch(agent->config, buffer->size());
      result.fine_tune_history.push_back(
          ddpg::train_epochs(*agent, *buffer, agent->config.finetune_epochs, iters, tune_rng));
      ++trace.fine_tune_events;
    }
  }
  trace.clamp_events = reactor.clamp_events();
  return result;
}

Dataset collect_pid_dataset(const ExperimentConfig& cfg, int days, std::uint64_t seed,
                            const std::string& config_hash) {
  if (days < 1) throw std::invalid_argument("collect: days must be >= 1");
  RunOptions opts;
  opts.controller = ControllerKind::kPid;
  opts.controller_id = "PID";
  opts.days = days;
  opts.seed = seed;
  opts.stream_index = 0;
  opts.config_hash = config_hash;
  auto run = simulate(cfg, cfg.train, opts);
  const double steps = static_cast<double>(run.trace.rows.size());
  if (static_cast<double>(run.trace.clamp_events) > cfg.max_clamp_fraction * steps) {
    throw std::runtime_error("collect: unstable run, plant clamped on " +
                             std::to_string(run.trace.clamp_events) + " of " +
                             std::to_string(run.trace.rows.size()) + " steps");
  }
  return {std::move(run.transitions), std::move(run.trace)};
}

std::size_t buffer_capacity(const ddpg::AgentConfig& cfg, std::size_t dataset_size) {
  if (cfg.buffer_capacity > 0) return static_cast<std::size_t>(cfg.buffer_capacity);
  return std::max<std::size_t>(dataset_size, 1);
}

std::vector<ddpg::EpochStats> continue_training(ddpg::Agent& agent,
                                                const std::vector<ddpg::Transition>& dataset,
                                                std::uint64_t seed, int epochs) {
  if (dataset.empty()) throw std::invalid_argument("offline_train: empty dataset");
  ddpg::ReplayBuffer buffer(buffer_capacity(agent.config, dataset.size()));
  for (const auto& t : dataset) buffer.push(t);
  std::mt19937_64 rng(derive_seed(seed, SeedStream::kSampling, 0) ^
                      static_cast<std::uint64_t>(agent.critic_opt.trunk.step_count));
  const auto iters = ddpg::updates_per_epoch(agent.config, buffer.size());
  std::vector<ddpg::EpochStats> history;
  history.reserve(static_cast<std::size_t>(epochs));
  for (int e = 0; e < epochs; ++e) {
    try {
      auto one = ddpg::train_epochs(agent, buffer, 1, iters, rng);
      history.push_back(one.front());
    } catch (const ddpg::TrainingDiverged& err) {
      throw ddpg::TrainingDiverged("offline training diverged at epoch " + std::to_string(e) + ": " +
                                   err.what());
    }
  }
  return history;
}

TrainedAgent offline_train(const std::vector<ddpg::Transition>& dataset, const ddpg::AgentConfig& agent_cfg,
                           std::uint64_t seed, int epochs) {
  if (dataset.empty()) throw std::invalid_argument("offline_train: empty dataset");
  TrainedAgent out{ddpg::Agent::create(agent_cfg, control::kObservationDim,
                                       derive_seed(seed, SeedStream::kInit)),
                   {}};
  out.history = continue_training(out.agent, dataset, seed, epochs);
  return out;
}

Deployment deploy(const ddpg::Agent& agent, const ExperimentConfig& cfg,
                  const std::vector<ddpg::Transition>& dataset, int days, bool fine_tune,
                  std::uint64_t seed, const std::string& config_hash) {
  if (agent.observation_dim() != control::kObservationDim) {
    throw std::invalid_argument("deploy: agent observation dimension does not match");
  }
  Deployment out{{}, agent, {}};
  ddpg::ReplayBuffer buffer(buffer_capacity(agent.config, dataset.size()));
  for (const auto& t : dataset) buffer.push(t);
  if (fine_tune && buffer.empty()) throw std::invalid_argument("deploy: fine-tuning needs a non-empty dataset");
  RunOptions opts;
  opts.controller = ControllerKind::kAgent;
  opts.controller_id = fine_tune ? "RL-FT" : "RL";
  opts.days = days;
  opts.fine_tune = fine_tune;
  opts.seed = seed;
  opts.stream_index = 1;
  opts.config_hash = config_hash;
  auto run = simulate(cfg, cfg.test, opts, &out.agent, &buffer);
  out.trace = std::move(run.trace);
  out.fine_tune_history = std::move(run.fine_tune_history);
  return out;
}

EpisodeTrace run_pid(const ExperimentConfig& cfg, const Scenario& scenario, int days, std::uint64_t seed,
                     std::uint64_t stream_index, const std::string& config_hash) {
  RunOptions opts;
  opts.days = days;
  opts.seed = seed;
  opts.stream_index = stream_index;
  opts.config_hash = config_hash;
  return simulate(cfg, scenario, opts).trace;
}

Comparison compare_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                              const std::string& config_hash) {
  cfg.validate();
  Comparison c;
  c.dataset = collect_pid_dataset(cfg, cfg.train_days, seed, config_hash);
  c.offline = offline_train(c.dataset.transitions, cfg.agent, seed, cfg.agent.offline_epochs);

  EpisodeTrace pid_trace;
  Deployment rl, rl_ft;
  std::exception_ptr errors[3];
  auto guarded = [&errors](int slot, auto&& body) {
    try {
      body();
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  };
#pragma omp parallel sections
  {
#pragma omp section
    guarded(0, [&] { pid_trace = run_pid(cfg, cfg.test, cfg.test_days, seed, 1, config_hash); });
#pragma omp section
    guarded(1, [&] {
      rl = deploy(c.offline.agent, cfg, c.dataset.transitions, cfg.test_days, false, seed, config_hash);
    });
#pragma omp section
    guarded(2, [&] {
      rl_ft = deploy(c.offline.agent, cfg, c.dataset.transitions, cfg.test_days, true, seed, config_hash);
    });
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  c.traces = {std::move(pid_trace), std::move(rl.trace), std::move(rl_ft.trace)};
  for (const auto& t : c.traces) c.table.push_back(compute_metrics(t));
  c.fine_tuned = std::move(rl_ft.agent);
  return c;
}

}  // namespace pbrl::pipeline
