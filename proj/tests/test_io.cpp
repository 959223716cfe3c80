#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "doctest.h"
#include "pbrl/io.hpp"

using namespace pbrl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pbrl_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

std::string error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const io::Error& e) {
    return e.kind();
  }
  return "none";
}

}  // namespace

TEST_CASE("config: dump and parse round-trip") {
  io::RunConfig cfg;
  cfg.seed = 123;
  cfg.experiment.agent.hidden_width = 48;
  cfg.experiment.plant.sensor_noise = 0.02;
  cfg.experiment.test.season.base.i_max = 555.0;
  cfg.experiment.observation.error_gain = 4.0;
  const auto text = io::dump_config(cfg);
  const auto back = io::parse_config(text);
  CHECK(io::dump_config(back) == text);
  CHECK(back.seed == 123);
  CHECK(back.experiment.agent.hidden_width == 48);
  CHECK(io::config_hash(back) == io::config_hash(cfg));
  cfg.seed = 124;
  CHECK(io::config_hash(back) != io::config_hash(cfg));
}

TEST_CASE("config: missing keys keep defaults") {
  const auto cfg = io::parse_config(R"({"seed": 9, "agent": {"gamma": 0.5}})");
  CHECK(cfg.seed == 9);
  CHECK(cfg.experiment.agent.gamma == 0.5);
  CHECK(cfg.experiment.agent.tau == 0.01);
  CHECK(cfg.experiment.pid.kp == -32.0);
}

TEST_CASE("config: strictness") {
  CHECK(error_kind([] { io::parse_config(R"({"agent": {"gama": 0.5}})"); }) == "config_invalid");
  CHECK(error_kind([] { io::parse_config(R"({"agent": {"gamma": "high"}})"); }) == "config_invalid");
  CHECK(error_kind([] { io::parse_config("{not json"); }) == "config_invalid");
  CHECK(error_kind([] { io::parse_config(R"({"agent": {"gamma": 3.0}})"); }) == "config_invalid");
  CHECK(error_kind([] { io::load_config("/nonexistent/cfg.json"); }) == "config_not_found");
  try {
    io::parse_config(R"({"agent": {"gama": 0.5}})");
  } catch (const io::Error& e) {
    CHECK(std::string(e.what()).find("gama") != std::string::npos);
  }
}

TEST_CASE("dataset CSV round-trip") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<ddpg::Transition> data(50);
  for (auto& t : data) {
    for (auto& v : t.obs) v = g(rng);
    for (auto& v : t.next_obs) v = g(rng) * 1e-7;
    t.action = std::abs(g(rng)) * 3.0;
    t.reward = g(rng) * 10.0;
  }
  data[3].obs[0] = 0.1 + 0.2;  // not representable in short decimal
  const auto p = scratch("data.csv");
  io::write_dataset(p, data);
  CHECK(io::read_dataset(p) == data);
  const auto bytes = slurp(p);
  io::write_dataset(p, io::read_dataset(p));
  CHECK(slurp(p) == bytes);
}

TEST_CASE("dataset CSV corruption is reported") {
  const auto p = scratch("bad.csv");
  spit(p, "a,b\n1,2\n");
  CHECK(error_kind([&] { io::read_dataset(p); }) == "dataset_corrupt");
  io::write_dataset(p, std::vector<ddpg::Transition>(2));
  auto text = slurp(p);
  text += "1,2,3\n";
  spit(p, text);
  CHECK(error_kind([&] { io::read_dataset(p); }) == "dataset_corrupt");
}

TEST_CASE("trace and metrics round-trip") {
  pipeline::EpisodeTrace t;
  t.controller = "RL-FT";
  t.seed = 42;
  t.config_hash = "0123456789abcdef";
  for (int i = 0; i < 20; ++i) {
    pipeline::TraceRow r;
    r.t = 10.0 * i;
    r.ph = 8.0 + 0.001 * i;
    r.setpoint = 8.0;
    r.u = 0.3 * i;
    r.e = -0.001 * i;
    r.gate_active = i % 3 != 0;
    t.rows.push_back(r);
  }
  const auto p = scratch("trace.csv");
  io::write_trace(p, t);
  const auto back = io::read_trace(p);
  CHECK(back.rows == t.rows);
  CHECK(back.controller == t.controller);
  CHECK(back.seed == t.seed);

  std::vector<pipeline::MetricsRow> m{{"PID", 2339.1, 302.43}, {"RL", 2276.9, 149.53}};
  const auto pm = scratch("metrics.csv");
  io::write_metrics(pm, m);
  const auto mb = io::read_metrics(pm);
  REQUIRE(mb.size() == 2);
  CHECK(mb[1].controller == "RL");
  CHECK(mb[1].iae == 2276.9);
  CHECK(mb[0].cce == 302.43);
  spit(pm, "controller,iae\n");
  CHECK(error_kind([&] { io::read_metrics(pm); }) == "metrics_corrupt");
}

TEST_CASE("checkpoint round-trips bitwise") {
  ddpg::AgentConfig cfg;
  cfg.hidden_width = 12;
  auto agent = ddpg::Agent::create(cfg, control::kObservationDim, 5);
  // Take a few steps so the optimizer moments are non-trivial.
  std::vector<ddpg::Transition> data(16);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& t : data) {
    for (auto& v : t.obs) v = u(rng);
    t.next_obs = t.obs;
    t.action = 10.0 * u(rng);
    t.reward = 8.0;
  }
  ddpg::ReplayBuffer buf(16);
  for (const auto& t : data) buf.push(t);
  ddpg::train_epochs(agent, buf, 2, 3, rng);

  control::ObservationConfig norm;
  norm.int_clip = 300.0;
  const auto p = scratch("agent.bin");
  io::save_checkpoint(p, agent, norm);
  const auto ck = io::load_checkpoint(p);
  CHECK(ck.agent.same_parameters(agent));
  CHECK(ck.agent.actor_opt == agent.actor_opt);
  CHECK(ck.agent.critic_opt == agent.critic_opt);
  CHECK(ck.agent.config == agent.config);
  CHECK(ck.normalization.int_clip == 300.0);

  const auto bytes = slurp(p);
  const auto p2 = scratch("agent2.bin");
  io::save_checkpoint(p2, ck.agent, ck.normalization);
  CHECK(slurp(p2) == bytes);

  spit(p2, bytes.substr(0, bytes.size() / 2));
  CHECK(error_kind([&] { io::load_checkpoint(p2); }) == "checkpoint_corrupt");
  spit(p2, "garbage");
  CHECK(error_kind([&] { io::load_checkpoint(p2); }) == "checkpoint_corrupt");
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(8.0) == "8");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(io::format_double(x)) == x);
}
