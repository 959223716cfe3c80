#include "pbrl/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pbrl::control {

void PidConfig::validate() const {
  if (!(ti > 0.0)) throw std::invalid_argument("pid: ti must be positive");
  if (!(u_min < u_max)) throw std::invalid_argument("pid: u_min must be below u_max");
  if (!(ts > 0.0)) throw std::invalid_argument("pid: ts must be positive");
}

void ObservationConfig::validate() const {
  for (const Range& r : {temp, irradiance, do_conc, q_dil, q_air, co2}) {
    if (!(r.min < r.max)) throw std::invalid_argument("observation: range min must be below max");
  }
  if (!(int_clip > 0.0)) throw std::invalid_argument("observation: int_clip must be positive");
  if (!(reward_eps > 0.0)) throw std::invalid_argument("observation: reward_eps must be positive");
  if (!(error_gain > 0.0) || !std::isfinite(error_gain)) throw std::invalid_argument("observation: error_gain must be positive");
}

double integrate_error(double integral_e, double e, double ts, double int_clip) {
  return std::clamp(integral_e + e * ts, -int_clip, int_clip);
}

PidOutput pid_step(double e, const PidState& pid, const PidConfig& cfg, double int_clip) {
  PidOutput out;
  out.state.integral_e = integrate_error(pid.integral_e, e, cfg.ts, int_clip);
  const double u_raw = cfg.kp * (e + out.state.integral_e / cfg.ti);
  out.u = std::clamp(u_raw, cfg.u_min, cfg.u_max);
  out.state.last_u = out.u;
  return out;
}

namespace {

double normalize(double v, const Range& r, bool& clamped) {
  const double z = (v - r.min) / (r.max - r.min);
  if (z < 0.0 || z > 1.0) clamped = true;
  return std::clamp(z, 0.0, 1.0);
}

}  // namespace

BuiltObservation build_observation(const Measurements& meas, double e, double integral_e,
                                   double t_of_day_seconds, const ObservationConfig& cfg) {
  BuiltObservation out;
  auto& o = out.obs;
  o[kTemp] = normalize(meas.temp, cfg.temp, out.clamped);
  o[kIrradiance] = normalize(meas.irradiance, cfg.irradiance, out.clamped);
  o[kDo] = normalize(meas.do_conc, cfg.do_conc, out.clamped);
  o[kQDil] = normalize(meas.q_dil, cfg.q_dil, out.clamped);
  o[kQAir] = normalize(meas.q_air, cfg.q_air, out.clamped);
  o[kCo2Prev] = normalize(meas.co2_prev, cfg.co2, out.clamped);
  const double angle = 2.0 * std::numbers::pi * t_of_day_seconds / 86400.0;
  o[kDaySin] = std::sin(angle);
  o[kDayCos] = std::cos(angle);
  o[kError] = cfg.error_gain * e;
  double integral = integral_e / cfg.int_clip;
  if (integral < -1.0 || integral > 1.0) out.clamped = true;
  o[kIntegral] = std::clamp(integral, -1.0, 1.0);
  return out;
}

double reward_log(double e, double eps) { return -std::log(e * e + eps); }

double reward_quadratic(double e) { return -(e * e); }

bool activation_gate(double irradiance, double ph, double setpoint, bool currently_active) {
  if (currently_active) return !(irradiance < kGateIrradiance);
  return irradiance > kGateIrradiance && ph > setpoint;
}

}  // namespace pbrl::control
