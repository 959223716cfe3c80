#include "pbrl/ddpg.hpp"

#include <cmath>
#include <string>

namespace pbrl::ddpg {

using neural::Activation;
using neural::LayerSpec;

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer: capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back(t);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, std::mt19937_64& rng) const {
  if (entries_.empty()) throw std::logic_error("replay buffer: sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, entries_.size() - 1);
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("agent: gamma outside [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("agent: tau outside (0, 1]");
  if (batch_size < 1) throw std::invalid_argument("agent: batch_size must be >= 1");
  if (!(action_low < action_high)) throw std::invalid_argument("agent: action_low must be below action_high");
  if (hidden_width < 1) throw std::invalid_argument("agent: hidden_width must be >= 1");
  if (!(lr_critic > 0.0) || !(lr_actor > 0.0)) throw std::invalid_argument("agent: learning rates must be positive");
  if (offline_epochs < 0 || finetune_epochs < 0 || updates_per_epoch < 0 || buffer_capacity < 0) {
    throw std::invalid_argument("agent: epoch and capacity counts must be nonnegative");
  }
}

namespace {

constexpr double kOutputInitBound = 3e-3;

// Near-zero output layer: the policy starts mid-range on the linear part of
// tanh, and the critic starts near Q = 0.
void shrink_output_layer(Mlp& net, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-kOutputInitBound, kOutputInitBound);
  auto& last = net.mutable_layers().back();
  for (Eigen::Index r = 0; r < last.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < last.weights.cols(); ++c) last.weights(r, c) = dist(rng);
  }
  for (Eigen::Index r = 0; r < last.biases.size(); ++r) last.biases(r) = dist(rng);
}

}  // namespace

Agent Agent::create(const AgentConfig& config, std::size_t obs_dim, std::uint64_t init_seed) {
  config.validate();
  const Eigen::Index h = config.hidden_width;
  const auto obs = static_cast<Eigen::Index>(obs_dim);
  std::mt19937_64 rng(init_seed);

  const LayerSpec actor_layers[] = {{h, Activation::kRelu}, {h, Activation::kRelu}, {1, Activation::kTanh}};
  const LayerSpec branch[] = {{h, Activation::kRelu}};
  const LayerSpec trunk[] = {{h, Activation::kRelu}, {1, Activation::kLinear}};

  Agent a;
  a.config = config;
  a.actor = Mlp::create(obs, actor_layers, rng);
  a.critic.obs_branch = Mlp::create(obs, branch, rng);
  a.critic.action_branch = Mlp::create(1, branch, rng);
  a.critic.trunk = Mlp::create(2 * h, trunk, rng);
  shrink_output_layer(a.actor, rng);
  shrink_output_layer(a.critic.trunk, rng);
  a.actor_target = a.actor;
  a.critic_target = a.critic;

  const neural::AdamConfig actor_adam{config.lr_actor};
  const neural::AdamConfig critic_adam{config.lr_critic};
  a.actor_opt = neural::AdamState::for_net(a.actor, actor_adam);
  a.critic_opt.obs_branch = neural::AdamState::for_net(a.critic.obs_branch, critic_adam);
  a.critic_opt.action_branch = neural::AdamState::for_net(a.critic.action_branch, critic_adam);
  a.critic_opt.trunk = neural::AdamState::for_net(a.critic.trunk, critic_adam);
  return a;
}

bool Agent::same_parameters(const Agent& o) const {
  return actor == o.actor && actor_target == o.actor_target && critic == o.critic &&
         critic_target == o.critic_target;
}

const Matrix& critic_forward(const Critic& critic, const Matrix& obs, const Matrix& actions,
                             CriticCache& cache) {
  neural::forward(critic.obs_branch, obs, cache.obs);
  neural::forward(critic.action_branch, actions, cache.action);
  const Eigen::Index h_obs = cache.obs.output.rows();
  const Eigen::Index h_act = cache.action.output.rows();
  cache.joined.resize(h_obs + h_act, obs.cols());
  cache.joined.topRows(h_obs) = cache.obs.output;
  cache.joined.bottomRows(h_act) = cache.action.output;
  neural::forward(critic.trunk, cache.joined, cache.trunk);
  return cache.trunk.output;
}

void critic_backward(const Critic& critic, const CriticCache& cache, const Matrix& dq,
                     CriticGrads& grads, Matrix* d_obs, Matrix* d_actions) {
  Matrix d_joined;
  neural::backward(critic.trunk, cache.trunk, dq, grads.trunk, &d_joined);
  const Eigen::Index h_obs = cache.obs.output.rows();
  const Eigen::Index h_act = cache.action.output.rows();
  const Matrix d_obs_feat = d_joined.topRows(h_obs);
  const Matrix d_act_feat = d_joined.bottomRows(h_act);
  neural::backward(critic.obs_branch, cache.obs, d_obs_feat, grads.obs_branch, d_obs);
  neural::backward(critic.action_branch, cache.action, d_act_feat, grads.action_branch, d_actions);
}

double scale_action(double tanh_out, const AgentConfig& cfg) {
  return cfg.action_low + 0.5 * (tanh_out + 1.0) * (cfg.action_high - cfg.action_low);
}

double action_scale_slope(const AgentConfig& cfg) { return 0.5 * (cfg.action_high - cfg.action_low); }

Matrix normalize_actions(const Matrix& actions, const AgentConfig& cfg) {
  const double mid = 0.5 * (cfg.action_high + cfg.action_low);
  return (actions.array() - mid) / action_scale_slope(cfg);
}

namespace {

Matrix scale_actions(const Matrix& tanh_out, const AgentConfig& cfg) {
  Matrix u(tanh_out.rows(), tanh_out.cols());
  for (Eigen::Index i = 0; i < tanh_out.size(); ++i) u.data()[i] = scale_action(tanh_out.data()[i], cfg);
  return u;
}

Matrix policy(const Mlp& actor, const Matrix& obs, const AgentConfig& cfg) {
  neural::ForwardCache cache;
  neural::forward(actor, obs, cache);
  return scale_actions(cache.output, cfg);
}

Matrix policy_tanh(const Mlp& actor, const Matrix& obs) {
  neural::ForwardCache cache;
  neural::forward(actor, obs, cache);
  return cache.output;
}

Matrix column(const Observation& obs) {
  Matrix m(static_cast<Eigen::Index>(obs.size()), 1);
  for (std::size_t i = 0; i < obs.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = obs[i];
  return m;
}

void apply(neural::Mlp& net, const neural::MlpGrads& g, neural::AdamState& opt, const char* what) {
  if (!neural::adam_step(net, g, opt)) {
    throw TrainingDiverged(std::string(what) + ": non-finite gradient");
  }
}

}  // namespace

double act(const Agent& agent, const Observation& obs) {
  for (double v : obs) {
    if (!std::isfinite(v)) throw std::invalid_argument("act: non-finite observation");
  }
  if (obs.size() != agent.observation_dim()) throw std::invalid_argument("act: observation dimension mismatch");
  return policy(agent.actor, column(obs), agent.config)(0, 0);
}

Matrix act_batch(const Agent& agent, const Matrix& obs) { return policy(agent.actor, obs, agent.config); }

Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& indices) {
  const auto m = static_cast<Eigen::Index>(indices.size());
  const auto d = static_cast<Eigen::Index>(buffer[0].obs.size());
  Batch b{Matrix(d, m), Matrix(1, m), Vector(m), Matrix(d, m)};
  for (Eigen::Index s = 0; s < m; ++s) {
    const auto& t = buffer[indices[static_cast<std::size_t>(s)]];
    for (Eigen::Index k = 0; k < d; ++k) {
      b.obs(k, s) = t.obs[static_cast<std::size_t>(k)];
      b.next_obs(k, s) = t.next_obs[static_cast<std::size_t>(k)];
    }
    b.actions(0, s) = t.action;
    b.rewards(s) = t.reward;
  }
  return b;
}

Batch make_batch(const std::vector<Transition>& transitions) {
  ReplayBuffer tmp(std::max<std::size_t>(transitions.size(), 1));
  for (const auto& t : transitions) tmp.push(t);
  std::vector<std::size_t> idx(transitions.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return make_batch(tmp, idx);
}

Vector critic_target_values(const Agent& agent, const Batch& batch) {
  const Matrix next_u = policy_tanh(agent.actor_target, batch.next_obs);
  CriticCache cache;
  const Matrix& q_next = critic_forward(agent.critic_target, batch.next_obs, next_u, cache);
  return batch.rewards + agent.config.gamma * q_next.row(0).transpose();
}

double update_critic(Agent& agent, const Batch& batch, const Vector& y) {
  CriticCache cache;
  const Matrix& q = critic_forward(agent.critic, batch.obs, normalize_actions(batch.actions, agent.config), cache);
  const auto m = static_cast<double>(batch.obs.cols());
  const Matrix residual = y.transpose() - q;
  const double loss = residual.squaredNorm() / m;
  if (!std::isfinite(loss)) throw TrainingDiverged("critic: non-finite loss");
  const Matrix dq = (-2.0 / m) * residual;
  CriticGrads grads;
  critic_backward(agent.critic, cache, dq, grads, nullptr, nullptr);
  if (!grads.obs_branch.all_finite() || !grads.action_branch.all_finite() || !grads.trunk.all_finite()) {
    throw TrainingDiverged("critic: non-finite gradient");
  }
  apply(agent.critic.obs_branch, grads.obs_branch, agent.critic_opt.obs_branch, "critic");
  apply(agent.critic.action_branch, grads.action_branch, agent.critic_opt.action_branch, "critic");
  apply(agent.critic.trunk, grads.trunk, agent.critic_opt.trunk, "critic");
  return loss;
}

double update_critic(Agent& agent, const Batch& batch) {
  return update_critic(agent, batch, critic_target_values(agent, batch));
}

ActionValueFn critic_action_value(const Critic& critic, const AgentConfig& cfg) {
  return [&critic, cfg](const Matrix& obs, const Matrix& actions, Matrix& q, Matrix& dq_du) {
    CriticCache cache;
    q = critic_forward(critic, obs, normalize_actions(actions, cfg), cache);
    CriticGrads grads;
    critic_backward(critic, cache, Matrix::Ones(1, obs.cols()), grads, nullptr, &dq_du);
    dq_du /= action_scale_slope(cfg);
  };
}

double update_actor(Agent& agent, const Batch& batch, const ActionValueFn& value) {
  neural::ForwardCache cache;
  neural::forward(agent.actor, batch.obs, cache);
  const Matrix u = scale_actions(cache.output, agent.config);
  Matrix q, dq_du;
  value(batch.obs, u, q, dq_du);
  const auto m = static_cast<double>(batch.obs.cols());
  const double objective = q.sum() / m;
  if (!std::isfinite(objective) || !dq_du.allFinite()) throw TrainingDiverged("actor: non-finite Q");
  // Minimize -mean(Q): dL/dtanh = -(1/M) dQ/du * du/dtanh.
  const Matrix dy = (-action_scale_slope(agent.config) / m) * dq_du;
  neural::MlpGrads grads;
  neural::backward(agent.actor, cache, dy, grads, nullptr);
  apply(agent.actor, grads, agent.actor_opt, "actor");
  return objective;
}

double update_actor(Agent& agent, const Batch& batch) {
  return update_actor(agent, batch, critic_action_value(agent.critic, agent.config));
}

void soft_update(Agent& agent) {
  const double tau = agent.config.tau;
  neural::soft_update(agent.actor_target, agent.actor, tau);
  neural::soft_update(agent.critic_target.obs_branch, agent.critic.obs_branch, tau);
  neural::soft_update(agent.critic_target.action_branch, agent.critic.action_branch, tau);
  neural::soft_update(agent.critic_target.trunk, agent.critic.trunk, tau);
}

std::size_t updates_per_epoch(const AgentConfig& cfg, std::size_t buffer_size) {
  if (cfg.updates_per_epoch > 0) return static_cast<std::size_t>(cfg.updates_per_epoch);
  const auto m = static_cast<std::size_t>(cfg.batch_size);
  return (buffer_size + m - 1) / m;
}

std::vector<EpochStats> train_epochs(Agent& agent, const ReplayBuffer& buffer, int epochs,
                                     std::size_t iterations, std::mt19937_64& rng) {
  if (buffer.empty()) throw std::invalid_argument("train_epochs: empty buffer");
  std::vector<EpochStats> history;
  history.reserve(static_cast<std::size_t>(std::max(epochs, 0)));
  const auto m = static_cast<std::size_t>(agent.config.batch_size);
  for (int e = 0; e < epochs; ++e) {
    EpochStats stats;
    for (std::size_t it = 0; it < iterations; ++it) {
      const Batch batch = make_batch(buffer, buffer.sample_indices(m, rng));
      stats.critic_loss += update_critic(agent, batch);
      stats.actor_objective += update_actor(agent, batch);
      soft_update(agent);
    }
    if (iterations > 0) {
      stats.critic_loss /= static_cast<double>(iterations);
      stats.actor_objective /= static_cast<double>(iterations);
    }
    history.push_back(stats);
  }
  return history;
}

}  // namespace pbrl::ddpg
