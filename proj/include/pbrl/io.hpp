#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbrl/ddpg.hpp"
#include "pbrl/pipeline.hpp"

namespace pbrl::io {

/// Failures carry a short machine-readable class ("config_not_found",
/// "config_invalid", "dataset_corrupt", ...) alongside the message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

struct RunConfig {
  pipeline::ExperimentConfig experiment;
  std::uint64_t seed = 7;
  std::string output_dir = "out";
};

/// Strict parse: unknown keys and wrong types fail with the offending key
/// path. Missing keys keep their defaults.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of every field, defaults included.
std::string dump_config(const RunConfig& cfg);

/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Column order: obs_0..obs_9, action, reward, next_obs_0..next_obs_9.
void write_dataset(const std::filesystem::path& path, const std::vector<ddpg::Transition>& data);
std::vector<ddpg::Transition> read_dataset(const std::filesystem::path& path);

/// Column order: t, ph, setpoint, u, irradiance, do, temp, q_air, q_dil, e,
/// integral_e, reward, gate_active. Run metadata sits in leading '#' lines.
void write_trace(const std::filesystem::path& path, const pipeline::EpisodeTrace& trace);
pipeline::EpisodeTrace read_trace(const std::filesystem::path& path);

/// Columns: controller, iae, cce.
void write_metrics(const std::filesystem::path& path, const std::vector<pipeline::MetricsRow>& rows);
std::vector<pipeline::MetricsRow> read_metrics(const std::filesystem::path& path);

/// Columns: epoch, critic_loss, actor_objective.
void write_loss_curve(const std::filesystem::path& path, const std::vector<ddpg::EpochStats>& history,
                      int first_epoch = 0);

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "PBRLAGT\0", u32 version, metadata JSON (agent and observation config),
/// then actor, actor target, critic and critic target (three nets each), then
/// every Adam state.
void save_checkpoint(const std::filesystem::path& path, const ddpg::Agent& agent,
                     const control::ObservationConfig& normalization);

struct Checkpoint {
  ddpg::Agent agent;
  control::ObservationConfig normalization;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Shortest round-trip decimal for a double.
std::string format_double(double v);

}  // namespace pbrl::io
