#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "doctest.h"
#include "pbrl/io.hpp"
#include "pbrl/seed.hpp"

using namespace pbrl;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = PBRL_SCRATCH;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

struct Result {
  int code;
  std::string err;
};

Result run(const std::string& args) {
  fs::create_directories(kRoot);
  const auto err_file = kRoot / "stderr.txt";
  const std::string cmd = std::string(PBRL_EXE) + " " + args + " > " + (kRoot / "stdout.txt").string() +
                          " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(err_file)};
}

fs::path small_config() {
  fs::create_directories(kRoot);
  io::RunConfig cfg;
  cfg.experiment.agent.hidden_width = 8;
  cfg.experiment.agent.updates_per_epoch = 3;
  cfg.experiment.agent.offline_epochs = 2;
  cfg.experiment.agent.finetune_epochs = 1;
  cfg.experiment.train_days = 1;
  cfg.experiment.test_days = 1;
  cfg.output_dir = (kRoot / "default_out").string();
  const auto p = kRoot / "small.json";
  std::ofstream(p) << io::dump_config(cfg);
  return p;
}

std::string cfg_arg() { return "--config " + small_config().string(); }

}  // namespace

TEST_CASE("missing config is a classified error") {
  const auto r = run("collect --config /nonexistent/x.json --out " + (kRoot / "none").string());
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: config_not_found:", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("invalid config is a classified error") {
  fs::create_directories(kRoot);
  const auto p = kRoot / "bad.json";
  std::ofstream(p) << R"({"agent": {"batch": 3}})";
  const auto r = run("collect --config " + p.string());
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: config_invalid:", 0) == 0);
}

TEST_CASE("collect is byte-identical across reruns") {
  const auto a = kRoot / "collect_a", b = kRoot / "collect_b";
  REQUIRE(run("collect " + cfg_arg() + " --days 2 --seed 7 --out " + a.string()).code == 0);
  REQUIRE(run("collect " + cfg_arg() + " --days 2 --seed 7 --out " + b.string()).code == 0);
  CHECK(slurp(a / "dataset.csv") == slurp(b / "dataset.csv"));
  CHECK(slurp(a / "trace_PID.csv") == slurp(b / "trace_PID.csv"));
  CHECK_FALSE(slurp(a / "dataset.csv").empty());
  const auto c = kRoot / "collect_c";
  REQUIRE(run("collect " + cfg_arg() + " --days 2 --seed 8 --out " + c.string()).code == 0);
  CHECK(slurp(a / "dataset.csv") != slurp(c / "dataset.csv"));
}

TEST_CASE("train, resume, deploy") {
  const auto data = kRoot / "tr_data";
  REQUIRE(run("collect " + cfg_arg() + " --seed 3 --out " + data.string()).code == 0);
  const auto dataset = (data / "dataset.csv").string();

  SUBCASE("zero epochs stores the random init") {
    const auto out = kRoot / "tr_zero";
    REQUIRE(run("train " + cfg_arg() + " --seed 3 --epochs 0 --dataset " + dataset + " --out " + out.string()).code == 0);
    const auto ck = io::load_checkpoint(out / "checkpoint.bin");
    const auto cfg = io::load_config(small_config());
    const auto fresh = ddpg::Agent::create(cfg.experiment.agent, control::kObservationDim,
                                           derive_seed(3, SeedStream::kInit));
    CHECK(ck.agent.same_parameters(fresh));
  }

  SUBCASE("resume continues the optimizer state") {
    const auto first = kRoot / "tr_first", second = kRoot / "tr_second";
    REQUIRE(run("train " + cfg_arg() + " --epochs 2 --dataset " + dataset + " --out " + first.string()).code == 0);
    REQUIRE(run("train " + cfg_arg() + " --epochs 1 --dataset " + dataset + " --resume " +
                (first / "checkpoint.bin").string() + " --out " + second.string())
                .code == 0);
    const auto a = io::load_checkpoint(first / "checkpoint.bin");
    const auto b = io::load_checkpoint(second / "checkpoint.bin");
    CHECK(a.agent.critic_opt.trunk.step_count == 6);
    CHECK(b.agent.critic_opt.trunk.step_count == 9);
    CHECK(b.agent.actor_opt.step_count == 9);
    const auto loss = slurp(second / "loss.csv");
    CHECK(loss.find("\n2,") != std::string::npos);
  }

  SUBCASE("deploy without fine-tuning leaves the checkpoint untouched") {
    const auto tr = kRoot / "tr_dep", dep = kRoot / "dep";
    REQUIRE(run("train " + cfg_arg() + " --dataset " + dataset + " --out " + tr.string()).code == 0);
    REQUIRE(run("deploy " + cfg_arg() + " --checkpoint " + (tr / "checkpoint.bin").string() + " --out " + dep.string()).code == 0);
    CHECK(slurp(tr / "checkpoint.bin") == slurp(dep / "checkpoint.bin"));
    CHECK(fs::exists(dep / "trace_RL.csv"));

    const auto ft = kRoot / "dep_ft";
    REQUIRE(run("deploy " + cfg_arg() + " --fine-tune --dataset " + dataset + " --checkpoint " +
                (tr / "checkpoint.bin").string() + " --out " + ft.string())
                .code == 0);
    CHECK(slurp(tr / "checkpoint.bin") != slurp(ft / "checkpoint.bin"));
    CHECK(io::read_trace(ft / "trace_RL-FT.csv").rows.size() == 8640);

    const auto r = run("deploy " + cfg_arg() + " --fine-tune --checkpoint " + (tr / "checkpoint.bin").string() +
                       " --out " + ft.string());
    CHECK(r.code != 0);
    CHECK(r.err.rfind("error: usage:", 0) == 0);
  }

  SUBCASE("corrupt inputs") {
    const auto bad = kRoot / "bad.csv";
    std::ofstream(bad) << "nope\n";
    auto r = run("train " + cfg_arg() + " --dataset " + bad.string() + " --out " + (kRoot / "x").string());
    CHECK(r.code != 0);
    CHECK(r.err.rfind("error: dataset_corrupt:", 0) == 0);
    r = run("deploy " + cfg_arg() + " --checkpoint " + bad.string() + " --out " + (kRoot / "x").string());
    CHECK(r.err.rfind("error: checkpoint_corrupt:", 0) == 0);
  }
}

TEST_CASE("compare is byte-identical across reruns") {
  const auto a = kRoot / "cmp_a", b = kRoot / "cmp_b";
  REQUIRE(run("compare " + cfg_arg() + " --seed 4 --out " + a.string()).code == 0);
  REQUIRE(run("compare " + cfg_arg() + " --seed 4 --out " + b.string()).code == 0);
  for (const char* f : {"metrics.csv", "trace_PID.csv", "trace_RL.csv", "trace_RL-FT.csv", "dataset.csv", "loss.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto m = io::read_metrics(a / "metrics.csv");
  REQUIRE(m.size() == 3);
  CHECK(m[0].controller == "PID");
}

TEST_CASE("config subcommand emits a loadable default") {
  const auto p = kRoot / "dumped.json";
  REQUIRE(run("config --out " + p.string()).code == 0);
  CHECK(io::dump_config(io::load_config(p)) == io::dump_config(io::RunConfig{}));
}
