#pragma once

#include <array>
#include <cstddef>

namespace pbrl::control {

/// Ideal-form PI (no derivative term). `kp` is negative: CO2 lowers pH.
struct PidConfig {
  double kp = -32.0;   // L/min per pH unit
  double ti = 1200.0;  // s
  double u_min = 0.0;  // L/min
  double u_max = 10.0; // L/min
  double ts = 10.0;    // s

  void validate() const;
};

struct PidState {
  double integral_e = 0.0;  // pH s, clipped
  double last_u = 0.0;      // L/min
};

struct Range {
  double min = 0.0;
  double max = 1.0;
};

struct ObservationConfig {
  Range temp{0.0, 45.0};        // degC
  Range irradiance{0.0, 1200.0};// W/m2
  Range do_conc{0.0, 30.0};     // mg/L
  Range q_dil{0.0, 5.0};        // L/min
  Range q_air{0.0, 50.0};       // L/min
  Range co2{0.0, 10.0};         // L/min
  double int_clip = 240.0;      // pH s
  double setpoint = 8.0;
  double reward_eps = 1e-6;
  /// Gain on the error channel; 1 feeds e raw. Closed-loop errors are a few
  /// hundredths of a pH unit, too small next to the [0, 1] channels.
  double error_gain = 10.0;

  void validate() const;
};

inline constexpr std::size_t kObservationDim = 10;

/// Channel order: T, I, DO, Qd, Qair, CO2_prev, sin(day), cos(day), e, integral.
using Observation = std::array<double, kObservationDim>;

enum Channel : std::size_t {
  kTemp = 0,
  kIrradiance,
  kDo,
  kQDil,
  kQAir,
  kCo2Prev,
  kDaySin,
  kDayCos,
  kError,
  kIntegral,
};

struct Measurements {
  double temp = 0.0;
  double irradiance = 0.0;
  double do_conc = 0.0;
  double q_dil = 0.0;
  double q_air = 0.0;
  double co2_prev = 0.0;
};

/// Accumulates the error integral with clipping. Shared by the PID and the
/// observation builder so both see the same anti-windup state.
double integrate_error(double integral_e, double e, double ts, double int_clip);

struct PidOutput {
  double u = 0.0;
  PidState state;
};

PidOutput pid_step(double e, const PidState& pid, const PidConfig& cfg, double int_clip);

struct BuiltObservation {
  Observation obs{};
  bool clamped = false;  // some channel fell outside its configured range
};

BuiltObservation build_observation(const Measurements& meas, double e, double integral_e,
                                   double t_of_day_seconds, const ObservationConfig& cfg);

/// -ln(e^2 + eps).
double reward_log(double e, double eps);

/// -e^2.
double reward_quadratic(double e);

inline constexpr double kGateIrradiance = 100.0;  // W/m2

/// On when irradiance exceeds the threshold and pH is above setpoint; once on,
/// off only when irradiance drops below the threshold.
bool activation_gate(double irradiance, double ph, double setpoint, bool currently_active);

}  // namespace pbrl::control
