#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "pbrl/control.hpp"
#include "pbrl/neural/mlp.hpp"

namespace pbrl::ddpg {

using control::Observation;
using neural::Matrix;
using neural::Mlp;
using neural::Vector;

struct Transition {
  Observation obs{};
  double action = 0.0;  // L/min
  double reward = 0.0;
  Observation next_obs{};
  bool active = true;  // gate on at both endpoints

  bool operator==(const Transition&) const = default;
};

/// Bounded FIFO; pushing into a full buffer evicts the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const Transition& operator[](std::size_t i) const { return entries_[i]; }

  /// Uniform with replacement.
  std::vector<std::size_t> sample_indices(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> entries_;
};

struct AgentConfig {
  double gamma = 0.9;
  double tau = 0.01;
  int batch_size = 64;
  double lr_critic = 1e-4;
  double lr_actor = 1e-5;
  double action_low = 0.0;
  double action_high = 10.0;
  int hidden_width = 256;
  int offline_epochs = 4000;
  int finetune_epochs = 50;
  /// Mini-batch iterations per epoch; 0 means ceil(N / batch_size).
  int updates_per_epoch = 0;
  /// Rolling-buffer capacity; 0 means the offline dataset size.
  int buffer_capacity = 0;

  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

/// Dual-input critic: separate dense branches for observation and action,
/// concatenated into a relu trunk that ends in a scalar.
struct Critic {
  Mlp obs_branch;
  Mlp action_branch;
  Mlp trunk;

  bool operator==(const Critic& o) const {
    return obs_branch == o.obs_branch && action_branch == o.action_branch && trunk == o.trunk;
  }
};

struct CriticCache {
  neural::ForwardCache obs, action, trunk;
  Matrix joined;
};

struct CriticGrads {
  neural::MlpGrads obs_branch, action_branch, trunk;
};

/// q: 1 x batch, returned by reference into the cache. `actions` are in the
/// actor's tanh space, [-1, 1]; see normalize_actions.
const Matrix& critic_forward(const Critic& critic, const Matrix& obs, const Matrix& actions,
                             CriticCache& cache);

void critic_backward(const Critic& critic, const CriticCache& cache, const Matrix& dq,
                     CriticGrads& grads, Matrix* d_obs, Matrix* d_actions);

struct CriticOptimizer {
  neural::AdamState obs_branch, action_branch, trunk;
  bool operator==(const CriticOptimizer& o) const {
    return obs_branch == o.obs_branch && action_branch == o.action_branch && trunk == o.trunk;
  }
};

/// Raised when a loss or gradient turns non-finite; the offending update is
/// not applied.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Agent {
  AgentConfig config;
  Mlp actor;
  Mlp actor_target;
  Critic critic;
  Critic critic_target;
  neural::AdamState actor_opt;
  CriticOptimizer critic_opt;

  /// Fresh agent: random mains, targets copied from mains.
  static Agent create(const AgentConfig& config, std::size_t obs_dim, std::uint64_t init_seed);

  std::size_t observation_dim() const { return static_cast<std::size_t>(actor.input_dim()); }

  bool same_parameters(const Agent& other) const;
};

/// Maps a tanh output in [-1, 1] onto [action_low, action_high].
double scale_action(double tanh_out, const AgentConfig& cfg);

/// d action / d tanh_out.
double action_scale_slope(const AgentConfig& cfg);

/// Inverse of scale_action, elementwise: L/min -> [-1, 1].
Matrix normalize_actions(const Matrix& actions, const AgentConfig& cfg);

/// Deterministic policy, no exploration noise.
double act(const Agent& agent, const Observation& obs);

/// obs: obs_dim x batch -> 1 x batch actions (L/min).
Matrix act_batch(const Agent& agent, const Matrix& obs);

struct Batch {
  Matrix obs;       // obs_dim x M
  Matrix actions;   // 1 x M
  Vector rewards;   // M
  Matrix next_obs;  // obs_dim x M
};

Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& indices);
Batch make_batch(const std::vector<Transition>& transitions);

/// y_i = r_i + gamma * Q_T(o_{i+1}, pi_T(o_{i+1})).
Vector critic_target_values(const Agent& agent, const Batch& batch);

/// One Adam step on the critic against frozen targets `y`; returns the
/// pre-step mean squared error.
double update_critic(Agent& agent, const Batch& batch, const Vector& y);

/// Computes targets with the target networks, then updates the critic.
double update_critic(Agent& agent, const Batch& batch);

/// Supplies Q(o, u) and dQ/du (both 1 x batch) for the actor update.
using ActionValueFn =
    std::function<void(const Matrix& obs, const Matrix& actions, Matrix& q, Matrix& dq_du)>;

/// Q and dQ/du with u in L/min, for a critic reading normalized actions.
ActionValueFn critic_action_value(const Critic& critic, const AgentConfig& cfg);

/// Gradient ascent on mean Q(o, pi(o)). Returns the mean Q before the step.
double update_actor(Agent& agent, const Batch& batch, const ActionValueFn& value);
double update_actor(Agent& agent, const Batch& batch);

/// Blends both target networks toward the mains with the configured tau.
void soft_update(Agent& agent);

struct EpochStats {
  double critic_loss = 0.0;      // mean over the epoch's iterations
  double actor_objective = 0.0;  // mean Q(o, pi(o))
};

std::size_t updates_per_epoch(const AgentConfig& cfg, std::size_t buffer_size);

/// Per iteration: sample, update critic, update actor, soft update.
std::vector<EpochStats> train_epochs(Agent& agent, const ReplayBuffer& buffer, int epochs,
                                     std::size_t updates_per_epoch, std::mt19937_64& rng);

}  // namespace pbrl::ddpg
