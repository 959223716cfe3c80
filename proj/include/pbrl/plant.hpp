#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pbrl::plant {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kPhMin = 5.0;
inline constexpr double kPhMax = 11.0;
inline constexpr double kTempMin = 0.0;
inline constexpr double kTempMax = 45.0;

/// Physical condition of the raceway plus the simulation clock.
struct PlantState {
  double ph = 8.0;       // [-]
  double do_conc = 9.0;  // mg/L
  double temp = 18.0;    // degC
  double t = 0.0;        // s since start of run
};

/// Inputs the controller does not set. `t_amb` drives the thermal balance.
struct ExogenousInputs {
  double irradiance = 0.0;  // W/m2
  double q_air = 0.0;       // L/min
  double q_dil = 0.0;       // L/min
  double t_amb = 20.0;      // degC
};

struct PlantParams {
  double k_p = 2.4e-6;      // pH m2/(W s)
  double k_c = 7.8e-4;      // pH/(L/min s)
  double k_a = 3.9e-5;      // pH/(L/min s)
  double k_d = 1.0e-3;      // 1/(L/min s)
  double ph_in = 7.6;       // [-]
  double k_i = 200.0;       // W/m2
  double q10 = 2.0;         // [-]
  double k_o = 3.3e-6;      // mg/(L s) per W/m2
  double k_la = 4.0e-5;     // 1/(L/min s)
  double do_sat = 7.5;      // mg/L
  double r_resp = 2.0e-4;   // mg/(L s)
  double tau_t = 10800.0;   // s
  double k_heat = 0.008;    // degC m2/W
  double noise_std = 0.0005; // pH per step
  /// Relative std of the delivered CO2 flow around the valve command.
  double valve_noise = 0.5;
  /// pH probe noise, added to each reading but not to the state.
  double sensor_noise = 0.015;

  void validate() const;
};

struct CloudEvent {
  double start = 0.0;        // s of day
  double duration = 0.0;     // s
  double attenuation = 0.0;  // [0, 1]
};

struct DilutionPulse {
  double start = 0.0;     // s of day
  double duration = 0.0;  // s
  double flow = 0.0;      // L/min
};

/// One realized day of weather and operations.
struct DisturbanceSchedule {
  double i_max = 1000.0;
  double sunrise = 7.0 * 3600.0;
  double sunset = 20.5 * 3600.0;
  std::vector<CloudEvent> cloud_events;
  std::vector<DilutionPulse> dilution_pulses;
  double do_hi = 20.0;
  double do_lo = 15.0;
  double q_air_on = 20.0;
  double t_amb_mean = 20.0;
  double t_amb_amp = 5.0;

  void validate() const;
};

/// Generator for per-day schedules of one season. Realized events are drawn
/// from the day's own random stream so any day can be rebuilt in isolation.
struct SeasonProfile {
  /// Fixed events in `base` recur every day; generated events that would
  /// overlap a fixed dilution pulse are dropped.
  DisturbanceSchedule base;
  int clouds_max = 3;
  double cloud_duration_min = 600.0;
  double cloud_duration_max = 3600.0;
  double cloud_attenuation_max = 0.7;
  double harvest_start = 10.0 * 3600.0;
  double harvest_jitter = 1800.0;
  double harvest_duration = 3600.0;
  double harvest_flow = 2.0;
  int topups = 2;
  double topup_duration = 600.0;
  double topup_flow = 0.5;
  /// Day index of the run's first day within the week (0 = Monday).
  int first_weekday = 0;
};

/// Exogenous series of one day, sampled every `ts` seconds. `q_air` is left
/// at zero: it is produced online by the DO on/off controller.
struct DayInputs {
  DisturbanceSchedule schedule;
  std::vector<ExogenousInputs> steps;
  bool weekend = false;
};

double diurnal_irradiance(double t_of_day, const DisturbanceSchedule& sched);

double ambient_temperature(double t_of_day, const DisturbanceSchedule& sched);

/// DO hysteresis for the plant's own aeration loop.
double air_controller(double do_conc, bool currently_on, const DisturbanceSchedule& sched);

/// Dilution flow scheduled at `t_of_day`.
double dilution_flow(double t_of_day, const DisturbanceSchedule& sched);

struct StepReport {
  PlantState state;
  bool clamped = false;
};

/// One explicit Euler step. Throws std::invalid_argument on non-finite or
/// out-of-range inputs.
StepReport plant_step(const PlantState& state, double u_co2, const ExogenousInputs& x,
                      const PlantParams& p, double ts, std::mt19937_64& rng);

bool is_weekend(int day_index, int first_weekday);

DayInputs build_day_inputs(int day_index, const SeasonProfile& season, double ts,
                           std::uint64_t weather_seed);

/// Stateful wrapper: owns the state, the aeration flag, and the noise stream.
class Reactor {
 public:
  Reactor(PlantParams params, PlantState initial, double ts, std::uint64_t noise_seed);

  /// Aeration flow for the coming step, given the current DO. Call once per
  /// sample before `step` and pass the result in `x.q_air`.
  double update_aeration(const DisturbanceSchedule& sched);

  /// Applies the valve command `u_co2`; the delivered flow carries
  /// multiplicative valve noise and stays within [0, 10] L/min.
  const PlantState& step(double u_co2, const ExogenousInputs& x);

  /// Flow actually delivered on the last step, L/min.
  double delivered_co2() const { return delivered_co2_; }

  /// Probe reading of the current pH. Draws from the sensor stream, so call
  /// it exactly once per sample.
  double measure_ph();

  const PlantState& state() const { return state_; }
  bool aeration_on() const { return air_on_; }
  std::int64_t steps() const { return steps_; }
  std::int64_t clamp_events() const { return clamp_events_; }
  double ts() const { return ts_; }

 private:
  PlantParams params_;
  PlantState state_;
  double ts_;
  std::mt19937_64 rng_;
  std::mt19937_64 valve_rng_;
  std::mt19937_64 sensor_rng_;
  double delivered_co2_ = 0.0;
  bool air_on_ = false;
  std::int64_t steps_ = 0;
  std::int64_t clamp_events_ = 0;
};

}  // namespace pbrl::plant
