#include "pbrl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "pbrl/neural/binary_io.hpp"

namespace pbrl::io {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Strict JSON reading

struct Field {
  const char* name;
  std::function<void(const json&, const std::string&)> read;
};

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error("config_invalid", path + ": " + what);
}

void read_object(const json& j, const std::string& path, const std::vector<Field>& fields) {
  if (!j.is_object()) invalid(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return key == f.name; });
    if (it == fields.end()) invalid(join(path, key), "unknown key");
    it->read(value, join(path, key));
  }
}

Field number(const char* name, double& slot) {
  return {name, [&slot](const json& j, const std::string& p) {
            if (!j.is_number()) invalid(p, "expected a number");
            slot = j.get<double>();
          }};
}

Field integer(const char* name, int& slot) {
  return {name, [&slot](const json& j, const std::string& p) {
            if (!j.is_number_integer()) invalid(p, "expected an integer");
            slot = j.get<int>();
          }};
}

Field range(const char* name, control::Range& slot) {
  return {name, [&slot](const json& j, const std::string& p) {
            if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
              invalid(p, "expected [min, max]");
            }
            slot = {j[0].get<double>(), j[1].get<double>()};
          }};
}

void read_plant(const json& j, const std::string& p, plant::PlantParams& v) {
  read_object(j, p,
              {number("k_p", v.k_p), number("k_c", v.k_c), number("k_a", v.k_a), number("k_d", v.k_d),
               number("ph_in", v.ph_in), number("k_i", v.k_i), number("q10", v.q10), number("k_o", v.k_o),
               number("k_la", v.k_la), number("do_sat", v.do_sat), number("r_resp", v.r_resp),
               number("tau_t", v.tau_t), number("k_heat", v.k_heat), number("noise_std", v.noise_std),
               number("valve_noise", v.valve_noise), number("sensor_noise", v.sensor_noise)});
}

void read_state(const json& j, const std::string& p, plant::PlantState& v) {
  read_object(j, p, {number("ph", v.ph), number("do", v.do_conc), number("temp", v.temp)});
}

void read_schedule(const json& j, const std::string& p, plant::DisturbanceSchedule& v) {
  read_object(
      j, p,
      {number("i_max", v.i_max), number("sunrise", v.sunrise), number("sunset", v.sunset),
       number("do_hi", v.do_hi), number("do_lo", v.do_lo), number("q_air_on", v.q_air_on),
       number("t_amb_mean", v.t_amb_mean), number("t_amb_amp", v.t_amb_amp),
       {"cloud_events",
        [&v](const json& arr, const std::string& path) {
          if (!arr.is_array()) invalid(path, "expected an array");
          v.cloud_events.clear();
          for (std::size_t i = 0; i < arr.size(); ++i) {
            plant::CloudEvent c;
            read_object(arr[i], path + "[" + std::to_string(i) + "]",
                        {number("start", c.start), number("duration", c.duration),
                         number("attenuation", c.attenuation)});
            v.cloud_events.push_back(c);
          }
        }},
       {"dilution_pulses", [&v](const json& arr, const std::string& path) {
          if (!arr.is_array()) invalid(path, "expected an array");
          v.dilution_pulses.clear();
          for (std::size_t i = 0; i < arr.size(); ++i) {
            plant::DilutionPulse d;
            read_object(arr[i], path + "[" + std::to_string(i) + "]",
                        {number("start", d.start), number("duration", d.duration), number("flow", d.flow)});
            v.dilution_pulses.push_back(d);
          }
        }}});
}

void read_generator(const json& j, const std::string& p, plant::SeasonProfile& v) {
  read_object(j, p,
              {integer("clouds_max", v.clouds_max), number("cloud_duration_min", v.cloud_duration_min),
               number("cloud_duration_max", v.cloud_duration_max),
               number("cloud_attenuation_max", v.cloud_attenuation_max),
               number("harvest_start", v.harvest_start), number("harvest_jitter", v.harvest_jitter),
               number("harvest_duration", v.harvest_duration), number("harvest_flow", v.harvest_flow),
               integer("topups", v.topups), number("topup_duration", v.topup_duration),
               number("topup_flow", v.topup_flow)});
}

void read_scenario(const json& j, const std::string& p, pipeline::Scenario& v) {
  read_object(j, p,
              {integer("start_day", v.start_day), integer("first_weekday", v.season.first_weekday),
               {"initial", [&v](const json& x, const std::string& q) { read_state(x, q, v.initial); }},
               {"schedule", [&v](const json& x, const std::string& q) { read_schedule(x, q, v.season.base); }},
               {"generator", [&v](const json& x, const std::string& q) { read_generator(x, q, v.season); }}});
}

void read_pid(const json& j, const std::string& p, control::PidConfig& v) {
  read_object(j, p,
              {number("kp", v.kp), number("ti", v.ti), number("u_min", v.u_min), number("u_max", v.u_max),
               number("ts", v.ts)});
}

void read_observation(const json& j, const std::string& p, control::ObservationConfig& v) {
  read_object(j, p,
              {range("temp", v.temp), range("irradiance", v.irradiance), range("do", v.do_conc),
               range("q_dil", v.q_dil), range("q_air", v.q_air), range("co2", v.co2),
               number("int_clip", v.int_clip), number("setpoint", v.setpoint),
               number("reward_eps", v.reward_eps), number("error_gain", v.error_gain)});
}

void read_agent(const json& j, const std::string& p, ddpg::AgentConfig& v) {
  read_object(j, p,
              {number("gamma", v.gamma), number("tau", v.tau), integer("batch_size", v.batch_size),
               number("lr_critic", v.lr_critic), number("lr_actor", v.lr_actor),
               number("action_low", v.action_low), number("action_high", v.action_high),
               integer("hidden_width", v.hidden_width), integer("offline_epochs", v.offline_epochs),
               integer("finetune_epochs", v.finetune_epochs),
               integer("updates_per_epoch", v.updates_per_epoch),
               integer("buffer_capacity", v.buffer_capacity)});
}

// ---------------------------------------------------------------------------
// JSON writing

json to_json(const plant::PlantParams& v) {
  return {{"k_p", v.k_p},       {"k_c", v.k_c},   {"k_a", v.k_a},       {"k_d", v.k_d},
          {"ph_in", v.ph_in},   {"k_i", v.k_i},   {"q10", v.q10},       {"k_o", v.k_o},
          {"k_la", v.k_la},     {"do_sat", v.do_sat}, {"r_resp", v.r_resp}, {"tau_t", v.tau_t},
          {"k_heat", v.k_heat}, {"noise_std", v.noise_std}, {"valve_noise", v.valve_noise},
          {"sensor_noise", v.sensor_noise}};
}

json to_json(const plant::DisturbanceSchedule& v) {
  json clouds = json::array();
  for (const auto& c : v.cloud_events) {
    clouds.push_back({{"start", c.start}, {"duration", c.duration}, {"attenuation", c.attenuation}});
  }
  json pulses = json::array();
  for (const auto& d : v.dilution_pulses) {
    pulses.push_back({{"start", d.start}, {"duration", d.duration}, {"flow", d.flow}});
  }
  return {{"i_max", v.i_max},       {"sunrise", v.sunrise},       {"sunset", v.sunset},
          {"do_hi", v.do_hi},       {"do_lo", v.do_lo},           {"q_air_on", v.q_air_on},
          {"t_amb_mean", v.t_amb_mean}, {"t_amb_amp", v.t_amb_amp}, {"cloud_events", clouds},
          {"dilution_pulses", pulses}};
}

json to_json(const pipeline::Scenario& v) {
  const auto& s = v.season;
  return {{"start_day", v.start_day},
          {"first_weekday", s.first_weekday},
          {"initial", {{"ph", v.initial.ph}, {"do", v.initial.do_conc}, {"temp", v.initial.temp}}},
          {"schedule", to_json(s.base)},
          {"generator",
           {{"clouds_max", s.clouds_max},
            {"cloud_duration_min", s.cloud_duration_min},
            {"cloud_duration_max", s.cloud_duration_max},
            {"cloud_attenuation_max", s.cloud_attenuation_max},
            {"harvest_start", s.harvest_start},
            {"harvest_jitter", s.harvest_jitter},
            {"harvest_duration", s.harvest_duration},
            {"harvest_flow", s.harvest_flow},
            {"topups", s.topups},
            {"topup_duration", s.topup_duration},
            {"topup_flow", s.topup_flow}}}};
}

json to_json(const control::Range& r) { return json::array({r.min, r.max}); }

json to_json(const control::ObservationConfig& v) {
  return {{"temp", to_json(v.temp)},   {"irradiance", to_json(v.irradiance)},
          {"do", to_json(v.do_conc)},  {"q_dil", to_json(v.q_dil)},
          {"q_air", to_json(v.q_air)}, {"co2", to_json(v.co2)},
          {"int_clip", v.int_clip},    {"setpoint", v.setpoint},
          {"reward_eps", v.reward_eps}, {"error_gain", v.error_gain}};
}

json to_json(const ddpg::AgentConfig& v) {
  return {{"gamma", v.gamma},
          {"tau", v.tau},
          {"batch_size", v.batch_size},
          {"lr_critic", v.lr_critic},
          {"lr_actor", v.lr_actor},
          {"action_low", v.action_low},
          {"action_high", v.action_high},
          {"hidden_width", v.hidden_width},
          {"offline_epochs", v.offline_epochs},
          {"finetune_epochs", v.finetune_epochs},
          {"updates_per_epoch", v.updates_per_epoch},
          {"buffer_capacity", v.buffer_capacity}};
}

json to_json(const RunConfig& cfg) {
  const auto& e = cfg.experiment;
  return {{"seed", cfg.seed},
          {"output_dir", cfg.output_dir},
          {"plant", to_json(e.plant)},
          {"pid", {{"kp", e.pid.kp}, {"ti", e.pid.ti}, {"u_min", e.pid.u_min}, {"u_max", e.pid.u_max}, {"ts", e.pid.ts}}},
          {"observation", to_json(e.observation)},
          {"agent", to_json(e.agent)},
          {"experiment",
           {{"train_days", e.train_days}, {"test_days", e.test_days}, {"max_clamp_fraction", e.max_clamp_fraction}}},
          {"seasons", {{"train", to_json(e.train)}, {"test", to_json(e.test)}}}};
}

// ---------------------------------------------------------------------------
// CSV helpers

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("io_error", "cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path, const char* kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(kind, "cannot open " + path.string());
  return is;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, const char* kind, std::size_t line_no) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw Error(kind, "line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  }
  return v;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string dataset_header() {
  std::string h;
  for (std::size_t i = 0; i < control::kObservationDim; ++i) h += "obs_" + std::to_string(i) + ",";
  h += "action,reward";
  for (std::size_t i = 0; i < control::kObservationDim; ++i) h += ",next_obs_" + std::to_string(i);
  return h;
}

constexpr const char* kTraceHeader =
    "t,ph,setpoint,u,irradiance,do,temp,q_air,q_dil,e,integral_e,reward,gate_active";

constexpr char kCheckpointMagic[8] = {'P', 'B', 'R', 'L', 'A', 'G', 'T', '\0'};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("config_invalid", std::string("malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  auto& e = cfg.experiment;
  read_object(j, "",
              {{"seed",
                [&cfg](const json& v, const std::string& p) {
                  if (!v.is_number_unsigned()) invalid(p, "expected a nonnegative integer");
                  cfg.seed = v.get<std::uint64_t>();
                }},
               {"output_dir",
                [&cfg](const json& v, const std::string& p) {
                  if (!v.is_string()) invalid(p, "expected a string");
                  cfg.output_dir = v.get<std::string>();
                }},
               {"plant", [&e](const json& v, const std::string& p) { read_plant(v, p, e.plant); }},
               {"pid", [&e](const json& v, const std::string& p) { read_pid(v, p, e.pid); }},
               {"observation", [&e](const json& v, const std::string& p) { read_observation(v, p, e.observation); }},
               {"agent", [&e](const json& v, const std::string& p) { read_agent(v, p, e.agent); }},
               {"experiment",
                [&e](const json& v, const std::string& p) {
                  read_object(v, p,
                              {integer("train_days", e.train_days), integer("test_days", e.test_days),
                               number("max_clamp_fraction", e.max_clamp_fraction)});
                }},
               {"seasons", [&e](const json& v, const std::string& p) {
                  read_object(v, p,
                              {{"train", [&e](const json& x, const std::string& q) { read_scenario(x, q, e.train); }},
                               {"test", [&e](const json& x, const std::string& q) { read_scenario(x, q, e.test); }}});
                }}});
  try {
    e.validate();
  } catch (const std::invalid_argument& err) {
    throw Error("config_invalid", err.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("config_not_found", "config not found: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string config_hash(const RunConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_dataset(const std::filesystem::path& path, const std::vector<ddpg::Transition>& data) {
  auto os = open_out(path);
  os << dataset_header() << "\n";
  for (const auto& t : data) {
    std::string line;
    for (double v : t.obs) line += format_double(v) + ",";
    line += format_double(t.action) + "," + format_double(t.reward);
    for (double v : t.next_obs) line += "," + format_double(v);
    os << line << "\n";
  }
  if (!os) throw Error("io_error", "write failed: " + path.string());
}

std::vector<ddpg::Transition> read_dataset(const std::filesystem::path& path) {
  auto is = open_in(path, "dataset_not_found");
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw Error("dataset_corrupt", "line 1: missing header");
  strip_cr(line);
  if (line != dataset_header()) throw Error("dataset_corrupt", "line 1: unexpected header");
  constexpr std::size_t kCols = 2 * control::kObservationDim + 2;
  std::vector<ddpg::Transition> out;
  while (std::getline(is, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != kCols) {
      throw Error("dataset_corrupt", "line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(kCols) + " columns, found " +
                                         std::to_string(cells.size()));
    }
    ddpg::Transition t;
    std::size_t c = 0;
    for (auto& v : t.obs) v = parse_double(cells[c++], "dataset_corrupt", line_no);
    t.action = parse_double(cells[c++], "dataset_corrupt", line_no);
    t.reward = parse_double(cells[c++], "dataset_corrupt", line_no);
    for (auto& v : t.next_obs) v = parse_double(cells[c++], "dataset_corrupt", line_no);
    out.push_back(t);
  }
  return out;
}

void write_trace(const std::filesystem::path& path, const pipeline::EpisodeTrace& trace) {
  auto os = open_out(path);
  os << "# controller=" << trace.controller << "\n";
  os << "# seed=" << trace.seed << "\n";
  os << "# config_hash=" << trace.config_hash << "\n";
  os << "# ts=" << format_double(trace.ts) << "\n";
  os << "# fine_tune_events=" << trace.fine_tune_events << "\n";
  os << "# clamp_events=" << trace.clamp_events << "\n";
  os << kTraceHeader << "\n";
  for (const auto& r : trace.rows) {
    os << format_double(r.t) << ',' << format_double(r.ph) << ',' << format_double(r.setpoint) << ','
       << format_double(r.u) << ',' << format_double(r.irradiance) << ',' << format_double(r.do_conc) << ','
       << format_double(r.temp) << ',' << format_double(r.q_air) << ',' << format_double(r.q_dil) << ','
       << format_double(r.e) << ',' << format_double(r.integral_e) << ',' << format_double(r.reward) << ','
       << (r.gate_active ? 1 : 0) << "\n";
  }
  if (!os) throw Error("io_error", "write failed: " + path.string());
}

pipeline::EpisodeTrace read_trace(const std::filesystem::path& path) {
  auto is = open_in(path, "trace_not_found");
  pipeline::EpisodeTrace trace;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "controller") trace.controller = value;
      else if (key == "seed") trace.seed = std::stoull(value);
      else if (key == "config_hash") trace.config_hash = value;
      else if (key == "ts") trace.ts = parse_double(value, "trace_corrupt", line_no);
      else if (key == "fine_tune_events") trace.fine_tune_events = std::stoi(value);
      else if (key == "clamp_events") trace.clamp_events = std::stoll(value);
      continue;
    }
    if (!header) {
      if (line != kTraceHeader) throw Error("trace_corrupt", "line " + std::to_string(line_no) + ": unexpected header");
      header = true;
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != 13) throw Error("trace_corrupt", "line " + std::to_string(line_no) + ": expected 13 columns");
    pipeline::TraceRow r;
    double* slots[] = {&r.t, &r.ph, &r.setpoint, &r.u, &r.irradiance, &r.do_conc, &r.temp,
                       &r.q_air, &r.q_dil, &r.e, &r.integral_e, &r.reward};
    for (std::size_t i = 0; i < 12; ++i) *slots[i] = parse_double(cells[i], "trace_corrupt", line_no);
    if (cells[12] != "0" && cells[12] != "1") {
      throw Error("trace_corrupt", "line " + std::to_string(line_no) + ": gate_active must be 0 or 1");
    }
    r.gate_active = cells[12] == "1";
    trace.rows.push_back(r);
  }
  if (!header) throw Error("trace_corrupt", "missing header");
  return trace;
}

void write_metrics(const std::filesystem::path& path, const std::vector<pipeline::MetricsRow>& rows) {
  auto os = open_out(path);
  os << "controller,iae,cce\n";
  for (const auto& r : rows) os << r.controller << ',' << format_double(r.iae) << ',' << format_double(r.cce) << "\n";
  if (!os) throw Error("io_error", "write failed: " + path.string());
}

std::vector<pipeline::MetricsRow> read_metrics(const std::filesystem::path& path) {
  auto is = open_in(path, "metrics_not_found");
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw Error("metrics_corrupt", "missing header");
  strip_cr(line);
  if (line != "controller,iae,cce") throw Error("metrics_corrupt", "line 1: unexpected header");
  std::vector<pipeline::MetricsRow> rows;
  while (std::getline(is, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 3) throw Error("metrics_corrupt", "line " + std::to_string(line_no) + ": expected 3 columns");
    rows.push_back({cells[0], parse_double(cells[1], "metrics_corrupt", line_no),
                    parse_double(cells[2], "metrics_corrupt", line_no)});
  }
  return rows;
}

void write_loss_curve(const std::filesystem::path& path, const std::vector<ddpg::EpochStats>& history,
                      int first_epoch) {
  auto os = open_out(path);
  os << "epoch,critic_loss,actor_objective\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    os << (first_epoch + static_cast<int>(i)) << ',' << format_double(history[i].critic_loss) << ','
       << format_double(history[i].actor_objective) << "\n";
  }
  if (!os) throw Error("io_error", "write failed: " + path.string());
}

void save_checkpoint(const std::filesystem::path& path, const ddpg::Agent& agent,
                     const control::ObservationConfig& normalization) {
  auto os = open_out(path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  neural::io::write_u32(os, kCheckpointVersion);
  const json meta = {{"agent", to_json(agent.config)},
                     {"normalization", to_json(normalization)},
                     {"observation_dim", agent.observation_dim()}};
  neural::io::write_string(os, meta.dump());
  neural::write_mlp(os, agent.actor);
  neural::write_mlp(os, agent.actor_target);
  for (const auto* c : {&agent.critic, &agent.critic_target}) {
    neural::write_mlp(os, c->obs_branch);
    neural::write_mlp(os, c->action_branch);
    neural::write_mlp(os, c->trunk);
  }
  neural::write_adam(os, agent.actor_opt);
  neural::write_adam(os, agent.critic_opt.obs_branch);
  neural::write_adam(os, agent.critic_opt.action_branch);
  neural::write_adam(os, agent.critic_opt.trunk);
  if (!os) throw Error("io_error", "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto is = open_in(path, "checkpoint_not_found");
  try {
    neural::io::expect_magic(is, kCheckpointMagic, "checkpoint");
    if (neural::io::read_u32(is) != kCheckpointVersion) {
      throw Error("checkpoint_corrupt", "unsupported checkpoint version");
    }
    const json meta = json::parse(neural::io::read_string(is));
    Checkpoint ck;
    read_agent(meta.at("agent"), "agent", ck.agent.config);
    read_observation(meta.at("normalization"), "normalization", ck.normalization);
    ck.agent.actor = neural::read_mlp(is);
    ck.agent.actor_target = neural::read_mlp(is);
    for (auto* c : {&ck.agent.critic, &ck.agent.critic_target}) {
      c->obs_branch = neural::read_mlp(is);
      c->action_branch = neural::read_mlp(is);
      c->trunk = neural::read_mlp(is);
    }
    ck.agent.actor_opt = neural::read_adam(is);
    ck.agent.critic_opt.obs_branch = neural::read_adam(is);
    ck.agent.critic_opt.action_branch = neural::read_adam(is);
    ck.agent.critic_opt.trunk = neural::read_adam(is);
    if (meta.at("observation_dim").get<std::size_t>() != ck.agent.observation_dim()) {
      throw Error("checkpoint_corrupt", "observation_dim does not match actor input");
    }
    return ck;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("checkpoint_corrupt", path.string() + ": " + e.what());
  }
}

}  // namespace pbrl::io
