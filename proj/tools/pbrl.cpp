// pbrl: collect / train / deploy / compare front end.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pbrl/io.hpp"
#include "pbrl/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pbrl;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

io::RunConfig load(const Common& c) {
  auto cfg = io::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

fs::path out_dir(const Common& c, const io::RunConfig& cfg) {
  fs::path dir = c.out.empty() ? fs::path(cfg.output_dir) : fs::path(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io::Error("io_error", "cannot create output directory " + dir.string());
  return dir;
}

void print_metrics(const pipeline::MetricsRow& m) {
  std::cout << "controller=" << m.controller << " iae=" << io::format_double(m.iae)
            << " cce=" << io::format_double(m.cce) << "\n";
}

int cmd_collect(const Common& c, int days) {
  const auto cfg = load(c);
  const auto dir = out_dir(c, cfg);
  const auto hash = io::config_hash(cfg);
  const auto data = pipeline::collect_pid_dataset(cfg.experiment, days > 0 ? days : cfg.experiment.train_days,
                                                  cfg.seed, hash);
  io::write_dataset(dir / "dataset.csv", data.transitions);
  io::write_trace(dir / "trace_PID.csv", data.trace);
  std::cout << "transitions=" << data.transitions.size() << "\n";
  print_metrics(pipeline::compute_metrics(data.trace));
  return 0;
}

int cmd_train(const Common& c, const std::string& dataset_path, int epochs, const std::string& resume) {
  const auto cfg = load(c);
  const auto dir = out_dir(c, cfg);
  const auto dataset = io::read_dataset(dataset_path);
  if (dataset.empty()) throw io::Error("dataset_corrupt", dataset_path + ": no transitions");
  const int n_epochs = epochs >= 0 ? epochs : cfg.experiment.agent.offline_epochs;

  std::vector<ddpg::EpochStats> history;
  int first_epoch = 0;
  control::ObservationConfig norm = cfg.experiment.observation;
  ddpg::Agent agent;
  if (!resume.empty()) {
    auto ck = io::load_checkpoint(resume);
    if (ck.agent.observation_dim() != control::kObservationDim) {
      throw io::Error("dimension_mismatch", "checkpoint observation dimension does not match");
    }
    agent = std::move(ck.agent);
    norm = ck.normalization;
    const auto iters = ddpg::updates_per_epoch(agent.config, dataset.size());
    first_epoch = static_cast<int>(agent.critic_opt.trunk.step_count / static_cast<std::int64_t>(iters));
    history = pipeline::continue_training(agent, dataset, cfg.seed, n_epochs);
  } else {
    auto trained = pipeline::offline_train(dataset, cfg.experiment.agent, cfg.seed, n_epochs);
    agent = std::move(trained.agent);
    history = std::move(trained.history);
  }
  io::save_checkpoint(dir / "checkpoint.bin", agent, norm);
  io::write_loss_curve(dir / "loss.csv", history, first_epoch);
  if (!history.empty()) {
    std::cout << "epochs=" << history.size() << " critic_loss=" << io::format_double(history.back().critic_loss)
              << "\n";
  }
  return 0;
}

int cmd_deploy(const Common& c, const std::string& checkpoint, const std::string& dataset_path, int days,
               bool fine_tune) {
  auto cfg = load(c);
  const auto dir = out_dir(c, cfg);
  auto ck = io::load_checkpoint(checkpoint);
  if (ck.agent.observation_dim() != control::kObservationDim) {
    throw io::Error("dimension_mismatch", "checkpoint observation dimension does not match");
  }
  // The checkpoint's normalization wins so that training and deployment see
  // identical observations.
  cfg.experiment.observation = ck.normalization;
  ck.agent.config.finetune_epochs = cfg.experiment.agent.finetune_epochs;
  std::vector<ddpg::Transition> dataset;
  if (!dataset_path.empty()) dataset = io::read_dataset(dataset_path);
  if (fine_tune && dataset.empty()) {
    throw io::Error("usage", "--fine-tune needs --dataset to seed the replay buffer");
  }
  const auto dep = pipeline::deploy(ck.agent, cfg.experiment, dataset,
                                    days > 0 ? days : cfg.experiment.test_days, fine_tune, cfg.seed,
                                    io::config_hash(cfg));
  io::write_trace(dir / ("trace_" + dep.trace.controller + ".csv"), dep.trace);
  io::save_checkpoint(dir / "checkpoint.bin", dep.agent, ck.normalization);
  print_metrics(pipeline::compute_metrics(dep.trace));
  return 0;
}

int cmd_compare(const Common& c) {
  const auto cfg = load(c);
  const auto dir = out_dir(c, cfg);
  const auto cmp = pipeline::compare_experiment(cfg.experiment, cfg.seed, io::config_hash(cfg));
  io::write_metrics(dir / "metrics.csv", cmp.table);
  for (const auto& t : cmp.traces) io::write_trace(dir / ("trace_" + t.controller + ".csv"), t);
  io::write_dataset(dir / "dataset.csv", cmp.dataset.transitions);
  io::write_loss_curve(dir / "loss.csv", cmp.offline.history);
  for (const auto& m : cmp.table) print_metrics(m);
  return 0;
}

int cmd_config(const std::string& out) {
  const auto text = io::dump_config(io::RunConfig{});
  if (out.empty()) {
    std::cout << text;
    return 0;
  }
  std::FILE* f = std::fopen(out.c_str(), "wb");
  if (f == nullptr) throw io::Error("io_error", "cannot write " + out);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
  return 0;
}

void add_common(CLI::App* sub, Common& c, bool need_config = true) {
  auto* opt = sub->add_option("--config", c.config, "run configuration (JSON)");
  if (need_config) opt->required();
  sub->add_option("--out", c.out, "output directory (default: config output_dir)");
  sub->add_option("--seed", c.seed, "global seed (default: config seed)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pH control of a photobioreactor: PID expert, offline DDPG, daily fine-tuning"};
  app.require_subcommand(1);

  Common collect_opts, train_opts, deploy_opts, compare_opts;
  int collect_days = 0, deploy_days = 0, epochs = -1;
  bool fine_tune = false;
  std::string dataset, resume, checkpoint, config_out;

  auto* collect = app.add_subcommand("collect", "run the PID expert and write dataset.csv + trace_PID.csv");
  add_common(collect, collect_opts);
  collect->add_option("--days", collect_days, "days to simulate (default: experiment.train_days)");

  auto* train = app.add_subcommand("train", "offline DDPG on a dataset; writes checkpoint.bin + loss.csv");
  add_common(train, train_opts);
  train->add_option("--dataset", dataset, "dataset CSV")->required();
  train->add_option("--epochs", epochs, "epochs (default: agent.offline_epochs)");
  train->add_option("--resume", resume, "continue from this checkpoint");

  auto* deploy = app.add_subcommand("deploy", "run a trained agent on the test season");
  add_common(deploy, deploy_opts);
  deploy->add_option("--checkpoint", checkpoint, "agent checkpoint")->required();
  deploy->add_option("--dataset", dataset, "offline dataset that seeds the replay buffer");
  deploy->add_option("--days", deploy_days, "days to simulate (default: experiment.test_days)");
  deploy->add_flag("--fine-tune", fine_tune, "retrain for finetune_epochs at every day boundary");

  auto* compare = app.add_subcommand("compare", "full PID / RL / RL-FT study; writes metrics.csv + traces");
  add_common(compare, compare_opts);

  auto* config = app.add_subcommand("config", "print the default configuration");
  config->add_option("--out", config_out, "write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (collect->parsed()) return cmd_collect(collect_opts, collect_days);
    if (train->parsed()) return cmd_train(train_opts, dataset, epochs, resume);
    if (deploy->parsed()) return cmd_deploy(deploy_opts, checkpoint, dataset, deploy_days, fine_tune);
    if (compare->parsed()) return cmd_compare(compare_opts);
    if (config->parsed()) return cmd_config(config_out);
  } catch (const io::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 2;
  } catch (const ddpg::TrainingDiverged& e) {
    std::cerr << "error: training_diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid_argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
