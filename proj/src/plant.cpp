#include "pbrl/plant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pbrl/seed.hpp"

namespace pbrl::plant {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool inside(double t, double start, double duration) {
  return t >= start && t < start + duration;
}

}  // namespace

void PlantParams::validate() const {
  for (double g : {k_p, k_c, k_a, k_d, k_o, k_la, do_sat, r_resp, k_heat, noise_std, q10, valve_noise, sensor_noise}) {
    require(std::isfinite(g) && g >= 0.0, "plant params: gains must be finite and nonnegative");
  }
  require(std::isfinite(ph_in), "plant params: ph_in must be finite");
  require(k_i > 0.0, "plant params: k_i must be positive");
  require(tau_t > 0.0, "plant params: tau_t must be positive");
}

void DisturbanceSchedule::validate() const {
  require(sunrise < sunset, "schedule: sunrise must precede sunset");
  require(do_lo < do_hi, "schedule: do_lo must be below do_hi");
  require(i_max >= 0.0 && q_air_on >= 0.0, "schedule: i_max and q_air_on must be nonnegative");
  for (const auto& c : cloud_events) {
    require(c.attenuation >= 0.0 && c.attenuation <= 1.0, "schedule: attenuation outside [0, 1]");
    require(c.duration >= 0.0, "schedule: negative cloud duration");
  }
  auto pulses = dilution_pulses;
  std::sort(pulses.begin(), pulses.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    require(pulses[i].flow >= 0.0 && pulses[i].duration >= 0.0, "schedule: negative pulse");
    if (i > 0) {
      require(pulses[i - 1].start + pulses[i - 1].duration <= pulses[i].start,
              "schedule: dilution pulses overlap");
    }
  }
}

double diurnal_irradiance(double t_of_day, const DisturbanceSchedule& sched) {
  if (t_of_day <= sched.sunrise || t_of_day >= sched.sunset) return 0.0;
  const double phase = std::numbers::pi * (t_of_day - sched.sunrise) / (sched.sunset - sched.sunrise);
  double irradiance = std::max(0.0, sched.i_max * std::sin(phase));
  for (const auto& c : sched.cloud_events) {
    if (inside(t_of_day, c.start, c.duration)) irradiance *= 1.0 - c.attenuation;
  }
  return irradiance;
}

double ambient_temperature(double t_of_day, const DisturbanceSchedule& sched) {
  // Daily maximum at 15:00.
  const double phase = 2.0 * std::numbers::pi * (t_of_day - 9.0 * 3600.0) / kSecondsPerDay;
  return sched.t_amb_mean + sched.t_amb_amp * std::sin(phase);
}

double air_controller(double do_conc, bool currently_on, const DisturbanceSchedule& sched) {
  bool on = currently_on;
  if (do_conc >= sched.do_hi) {
    on = true;
  } else if (do_conc <= sched.do_lo) {
    on = false;
  }
  return on ? sched.q_air_on : 0.0;
}

double dilution_flow(double t_of_day, const DisturbanceSchedule& sched) {
  for (const auto& p : sched.dilution_pulses) {
    if (inside(t_of_day, p.start, p.duration)) return p.flow;
  }
  return 0.0;
}

StepReport plant_step(const PlantState& s, double u_co2, const ExogenousInputs& x,
                      const PlantParams& p, double ts, std::mt19937_64& rng) {
  require(std::isfinite(u_co2) && std::isfinite(x.irradiance) && std::isfinite(x.q_air) &&
              std::isfinite(x.q_dil) && std::isfinite(x.t_amb),
          "plant_step: non-finite input");
  require(std::isfinite(s.ph) && std::isfinite(s.do_conc) && std::isfinite(s.temp),
          "plant_step: non-finite state");
  require(u_co2 >= 0.0 && u_co2 <= 10.0, "plant_step: CO2 flow outside [0, 10] L/min");
  require(ts > 0.0, "plant_step: ts must be positive");
  require(x.irradiance >= 0.0 && x.q_air >= 0.0 && x.q_dil >= 0.0,
          "plant_step: exogenous flows must be nonnegative");

  const double light = x.irradiance / (x.irradiance + p.k_i);
  const double photo = std::pow(p.q10, (s.temp - 20.0) / 10.0) * light;

  // Always draw so the noise stream stays aligned with the step index.
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double xi = p.noise_std * gauss(rng);

  StepReport out;
  const double dph = p.k_p * x.irradiance * photo - p.k_c * u_co2 + p.k_a * x.q_air -
                     p.k_d * x.q_dil * (s.ph - p.ph_in);
  double ph = s.ph + ts * dph + xi;
  double do_conc = s.do_conc + ts * (p.k_o * photo * x.irradiance -
                                     p.k_la * x.q_air * (s.do_conc - p.do_sat) - p.r_resp);
  double temp = s.temp + ts * ((x.t_amb + p.k_heat * x.irradiance - s.temp) / p.tau_t);

  if (ph < kPhMin || ph > kPhMax || do_conc < 0.0 || temp < kTempMin || temp > kTempMax) {
    out.clamped = true;
  }
  out.state.ph = std::clamp(ph, kPhMin, kPhMax);
  out.state.do_conc = std::max(do_conc, 0.0);
  out.state.temp = std::clamp(temp, kTempMin, kTempMax);
  out.state.t = s.t + ts;
  return out;
}

bool is_weekend(int day_index, int first_weekday) {
  const int weekday = (day_index + first_weekday) % 7;
  return weekday >= 5;
}

DayInputs build_day_inputs(int day_index, const SeasonProfile& season, double ts,
                           std::uint64_t weather_seed) {
  require(day_index >= 0, "build_day_inputs: day_index must be nonnegative");
  require(ts > 0.0, "build_day_inputs: ts must be positive");
  std::mt19937_64 rng(splitmix64(weather_seed ^ splitmix64(static_cast<std::uint64_t>(day_index))));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  DayInputs day;
  day.schedule = season.base;
  day.weekend = is_weekend(day_index, season.first_weekday);
  auto& pulses = day.schedule.dilution_pulses;
  auto fits = [&pulses](const DilutionPulse& p) {
    return std::none_of(pulses.begin(), pulses.end(), [&p](const DilutionPulse& q) {
      return p.start < q.start + q.duration && q.start < p.start + p.duration;
    });
  };

  const double rise = season.base.sunrise;
  const double set = season.base.sunset;

  const int clouds = std::uniform_int_distribution<int>(0, std::max(season.clouds_max, 0))(rng);
  for (int i = 0; i < clouds; ++i) {
    CloudEvent c;
    c.start = uniform(rise, set);
    c.duration = uniform(season.cloud_duration_min, season.cloud_duration_max);
    c.attenuation = uniform(0.1, season.cloud_attenuation_max);
    day.schedule.cloud_events.push_back(c);
  }

  // The harvest time is drawn on weekends too so later draws do not depend
  // on the weekday.
  const DilutionPulse harvest{
      season.harvest_start + uniform(-season.harvest_jitter, season.harvest_jitter),
      season.harvest_duration, season.harvest_flow};
  if (!day.weekend && harvest.flow > 0.0 && harvest.duration > 0.0 && fits(harvest)) {
    pulses.push_back(harvest);
  }

  if (season.topups > 0) {
    const double slot = (set - rise) / season.topups;
    for (int i = 0; i < season.topups; ++i) {
      const double lo = rise + i * slot;
      const DilutionPulse topup{uniform(lo, lo + std::max(slot - season.topup_duration, 0.0)),
                                season.topup_duration, season.topup_flow};
      if (topup.flow > 0.0 && fits(topup)) pulses.push_back(topup);
    }
  }
  std::sort(day.schedule.dilution_pulses.begin(), day.schedule.dilution_pulses.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  day.schedule.validate();

  const auto n = static_cast<std::size_t>(std::llround(kSecondsPerDay / ts));
  day.steps.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double tod = static_cast<double>(k) * ts;
    auto& x = day.steps[k];
    x.irradiance = diurnal_irradiance(tod, day.schedule);
    x.q_dil = dilution_flow(tod, day.schedule);
    x.t_amb = ambient_temperature(tod, day.schedule);
  }
  return day;
}

Reactor::Reactor(PlantParams params, PlantState initial, double ts, std::uint64_t noise_seed)
    : params_(params), state_(initial), ts_(ts), rng_(noise_seed),
      valve_rng_(splitmix64(noise_seed ^ 0x56414c5645ULL)),
      sensor_rng_(splitmix64(noise_seed ^ 0x50524f4245ULL)) {
  params_.validate();
  require(ts > 0.0, "reactor: ts must be positive");
}

double Reactor::update_aeration(const DisturbanceSchedule& sched) {
  const double q = air_controller(state_.do_conc, air_on_, sched);
  air_on_ = q > 0.0;
  return q;
}

double Reactor::measure_ph() {
  std::normal_distribution<double> gauss(0.0, 1.0);
  return state_.ph + params_.sensor_noise * gauss(sensor_rng_);
}

const PlantState& Reactor::step(double u_co2, const ExogenousInputs& x) {
  require(std::isfinite(u_co2) && u_co2 >= 0.0 && u_co2 <= 10.0, "reactor: CO2 command outside [0, 10] L/min");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double xi = gauss(valve_rng_);
  delivered_co2_ = std::clamp(u_co2 * (1.0 + params_.valve_noise * xi), 0.0, 10.0);
  const auto report = plant_step(state_, delivered_co2_, x, params_, ts_, rng_);
  state_ = report.state;
  ++steps_;
  if (report.clamped) ++clamp_events_;
  return state_;
}

}  // namespace pbrl::plant
