#include <cmath>
#include <random>

#include "doctest.h"
#include "pbrl/ddpg.hpp"

using namespace pbrl;
using namespace pbrl::ddpg;

namespace {

AgentConfig small_config() {
  AgentConfig c;
  c.hidden_width = 16;
  c.batch_size = 8;
  return c;
}

Agent small_agent(std::uint64_t seed = 1) { return Agent::create(small_config(), control::kObservationDim, seed); }

// Output layer of the trunk set to a constant: Q(o, u) = value everywhere.
void make_constant(Critic& c, double value) {
  auto& last = c.trunk.mutable_layers().back();
  last.weights.setZero();
  last.biases.setConstant(value);
}

Observation random_obs(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Observation o;
  for (auto& v : o) v = u(rng);
  return o;
}

std::vector<Transition> random_transitions(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> act(0.0, 10.0), rew(5.0, 12.0);
  std::vector<Transition> out(n);
  for (auto& t : out) {
    t.obs = random_obs(rng);
    t.next_obs = random_obs(rng);
    t.action = act(rng);
    t.reward = rew(rng);
  }
  return out;
}

double max_target_gap(const Agent& a) {
  double d = neural::max_abs_difference(a.actor_target, a.actor);
  d = std::max(d, neural::max_abs_difference(a.critic_target.obs_branch, a.critic.obs_branch));
  d = std::max(d, neural::max_abs_difference(a.critic_target.action_branch, a.critic.action_branch));
  return std::max(d, neural::max_abs_difference(a.critic_target.trunk, a.critic.trunk));
}

}  // namespace

TEST_CASE("action scaling") {
  const AgentConfig c;
  CHECK(scale_action(-1.0, c) == 0.0);
  CHECK(scale_action(std::tanh(-1e6), c) == 0.0);
  CHECK(scale_action(0.0, c) == 5.0);
  CHECK(scale_action(1.0, c) == 10.0);
  CHECK(action_scale_slope(c) == 5.0);
  Matrix u(1, 3);
  u << 0.0, 5.0, 10.0;
  const Matrix n = normalize_actions(u, c);
  CHECK(n(0, 0) == -1.0);
  CHECK(n(0, 1) == 0.0);
  CHECK(n(0, 2) == 1.0);
}

TEST_CASE("property: actions stay within bounds for any parameters") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 30.0);
  for (int trial = 0; trial < 20; ++trial) {
    Agent a = small_agent(static_cast<std::uint64_t>(trial));
    for (auto& l : a.actor.mutable_layers()) {
      for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = g(rng);
    }
    for (int k = 0; k < 50; ++k) {
      Observation o;
      for (auto& v : o) v = g(rng);
      const double u = act(a, o);
      CHECK(u >= 0.0);
      CHECK(u <= 10.0);
    }
  }
}

TEST_CASE("policy is deterministic") {
  const Agent a = small_agent();
  std::mt19937_64 rng(1);
  const auto o = random_obs(rng);
  CHECK(act(a, o) == act(a, o));
  Observation bad = o;
  bad[2] = INFINITY;
  CHECK_THROWS_AS(act(a, bad), std::invalid_argument);
}

TEST_CASE("fresh agent: targets equal mains") {
  const Agent a = small_agent();
  CHECK(a.actor_target == a.actor);
  CHECK(a.critic_target == a.critic);
  CHECK(max_target_gap(a) == 0.0);
}

TEST_CASE("critic targets") {
  Agent a = small_agent();
  auto data = random_transitions(6, 2);
  for (auto& t : data) t.reward = 5.0;
  const Batch b = make_batch(data);

  make_constant(a.critic_target, 10.0);
  a.config.gamma = 0.9;
  Vector y = critic_target_values(a, b);
  for (Eigen::Index i = 0; i < y.size(); ++i) CHECK(y(i) == doctest::Approx(14.0).epsilon(1e-12));

  a.config.gamma = 0.0;
  y = critic_target_values(a, b);
  for (Eigen::Index i = 0; i < y.size(); ++i) CHECK(y(i) == 5.0);

  a.config.gamma = 0.9;
  make_constant(a.critic_target, 0.0);
  y = critic_target_values(a, b);
  for (Eigen::Index i = 0; i < y.size(); ++i) CHECK(y(i) == 5.0);
}

TEST_CASE("critic update: single sample loss and zero residual") {
  Agent a = small_agent();
  const auto data = random_transitions(1, 4);
  const Batch b = make_batch(data);
  CriticCache cache;
  const double q = critic_forward(a.critic, b.obs, normalize_actions(b.actions, a.config), cache)(0, 0);
  Vector y(1);
  y << 7.5;
  CHECK(update_critic(a, b, y) == doctest::Approx((7.5 - q) * (7.5 - q)).epsilon(1e-12));

  // Q already equals y: zero gradient, Adam leaves parameters alone.
  Agent z = small_agent();
  make_constant(z.critic, 3.0);
  const Critic before = z.critic;
  Vector y3 = Vector::Constant(1, 3.0);
  CHECK(update_critic(z, b, y3) == 0.0);
  CHECK(z.critic == before);
  CHECK(z.critic_opt.trunk.step_count == 1);
}

TEST_CASE("critic regression to frozen targets") {
  Agent a = small_agent(5);
  a.config.lr_critic = 1e-3;
  a.critic_opt.obs_branch.config.lr = 1e-3;
  a.critic_opt.action_branch.config.lr = 1e-3;
  a.critic_opt.trunk.config.lr = 1e-3;
  const auto data = random_transitions(64, 6);
  const Batch b = make_batch(data);
  const Vector y = critic_target_values(a, b);
  std::vector<double> losses;
  for (int i = 0; i < 200; ++i) losses.push_back(update_critic(a, b, y));
  CHECK(losses.back() <= 0.1 * losses.front());

  // Monotone in trend: 10-update moving average never rises.
  double prev = INFINITY;
  for (std::size_t i = 10; i <= losses.size(); i += 10) {
    double avg = 0.0;
    for (std::size_t k = i - 10; k < i; ++k) avg += losses[k];
    avg /= 10.0;
    CHECK(avg <= prev);
    prev = avg;
  }
}

TEST_CASE("actor climbs a synthetic critic to its optimum") {
  Agent a = small_agent(8);
  a.actor_opt.config.lr = 1e-3;
  const auto data = random_transitions(16, 9);
  const Batch b = make_batch(data);
  const ActionValueFn bowl = [](const Matrix&, const Matrix& u, Matrix& q, Matrix& dq) {
    q = -(u.array() - 3.0).square().matrix();
    dq = (-2.0 * (u.array() - 3.0)).matrix();
  };
  for (int i = 0; i < 3000; ++i) update_actor(a, b, bowl);
  const Matrix u = act_batch(a, b.obs);
  CHECK((u.array() - 3.0).abs().maxCoeff() < 0.05);
}

TEST_CASE("actor ignores a critic that is flat in the action") {
  Agent a = small_agent();
  make_constant(a.critic, 4.0);
  const Mlp before = a.actor;
  const Batch b = make_batch(random_transitions(8, 1));
  CHECK(update_actor(a, b) == doctest::Approx(4.0));
  CHECK(a.actor == before);
}

TEST_CASE("critic action gradient matches finite differences") {
  const Agent a = small_agent(12);
  const Batch b = make_batch(random_transitions(5, 3));
  const auto value = critic_action_value(a.critic, a.config);
  Matrix q, dq;
  value(b.obs, b.actions, q, dq);
  const double h = 1e-5;
  Matrix up, down, scratch;
  value(b.obs, (b.actions.array() + h).matrix(), up, scratch);
  value(b.obs, (b.actions.array() - h).matrix(), down, scratch);
  for (Eigen::Index i = 0; i < q.cols(); ++i) {
    const double fd = (up(0, i) - down(0, i)) / (2 * h);
    CHECK(dq(0, i) == doctest::Approx(fd).epsilon(1e-5).scale(1e-6));
  }
}

TEST_CASE("learning rates: first-step magnitudes") {
  Agent a = small_agent();
  CHECK(a.actor_opt.config.lr == 1e-5);
  CHECK(a.critic_opt.trunk.config.lr == 1e-4);

  auto g = neural::MlpGrads::zeros_like(a.actor);
  for (auto& w : g.weights) w.setOnes();
  for (auto& v : g.biases) v.setOnes();
  Mlp before = a.actor;
  neural::adam_step(a.actor, g, a.actor_opt);
  CHECK(neural::max_abs_difference(before, a.actor) == doctest::Approx(1e-5).epsilon(1e-6));

  auto gc = neural::MlpGrads::zeros_like(a.critic.trunk);
  for (auto& w : gc.weights) w.setOnes();
  before = a.critic.trunk;
  neural::adam_step(a.critic.trunk, gc, a.critic_opt.trunk);
  CHECK(neural::max_abs_difference(before, a.critic.trunk) == doctest::Approx(1e-4).epsilon(1e-6));
}

TEST_CASE("soft update: single step and hard copy") {
  Agent a = small_agent();
  a.actor.mutable_layers()[0].weights(0, 0) = 1.0;
  a.actor_target.mutable_layers()[0].weights(0, 0) = 0.0;
  soft_update(a);
  CHECK(a.actor_target.layers()[0].weights(0, 0) == doctest::Approx(0.01).epsilon(1e-14));

  Agent h = small_agent(2);
  h.config.tau = 1.0;
  h.actor.mutable_layers()[1].biases.setConstant(2.0);
  soft_update(h);
  CHECK(h.actor_target == h.actor);
}

TEST_CASE("property: target gap decays geometrically with frozen mains") {
  Agent a = small_agent(3);
  a.actor_target = small_agent(4).actor;
  a.critic_target = small_agent(5).critic;
  const double g0 = max_target_gap(a);
  REQUIRE(g0 > 0.0);
  for (int n = 1; n <= 500; ++n) {
    soft_update(a);
    if (n % 50 == 0) CHECK(std::abs(max_target_gap(a) - std::pow(0.99, n) * g0) < 1e-9);
  }
}

TEST_CASE("replay buffer FIFO") {
  ReplayBuffer buf(5);
  for (int i = 0; i < 8; ++i) {
    Transition t;
    t.action = i;
    buf.push(t);
  }
  REQUIRE(buf.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(buf[i].action == 3.0 + static_cast<double>(i));
  std::mt19937_64 rng(1);
  for (auto i : buf.sample_indices(100, rng)) CHECK(i < 5);
  ReplayBuffer empty(3);
  CHECK_THROWS(empty.sample_indices(1, rng));
  CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
}

TEST_CASE("train_epochs: zero epochs, determinism, empty buffer") {
  const auto data = random_transitions(40, 7);
  ReplayBuffer buf(40);
  for (const auto& t : data) buf.push(t);

  Agent a = small_agent();
  const Agent before = a;
  std::mt19937_64 rng(1);
  CHECK(train_epochs(a, buf, 0, 5, rng).empty());
  CHECK(a.same_parameters(before));

  Agent b = small_agent(), c = small_agent();
  std::mt19937_64 r1(9), r2(9);
  const auto h1 = train_epochs(b, buf, 3, updates_per_epoch(b.config, buf.size()), r1);
  const auto h2 = train_epochs(c, buf, 3, updates_per_epoch(c.config, buf.size()), r2);
  REQUIRE(h1.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(h1[i].critic_loss == h2[i].critic_loss);
    CHECK(h1[i].actor_objective == h2[i].actor_objective);
  }
  CHECK(b.same_parameters(c));
  CHECK(b.critic_opt.trunk.step_count == 15);

  ReplayBuffer empty(3);
  CHECK_THROWS_AS(train_epochs(b, empty, 1, 1, r1), std::invalid_argument);
}

TEST_CASE("epoch length") {
  AgentConfig c;
  CHECK(updates_per_epoch(c, 64) == 1);
  CHECK(updates_per_epoch(c, 65) == 2);
  CHECK(updates_per_epoch(c, 9100) == 143);
  c.updates_per_epoch = 7;
  CHECK(updates_per_epoch(c, 9100) == 7);
}

TEST_CASE("agent config validation") {
  AgentConfig c;
  c.gamma = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.tau = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.action_high = c.action_low;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
