#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pbrl/neural/kernels.hpp"

namespace pbrl::neural {

struct DenseLayer {
  Matrix weights;  // out x in
  Vector biases;   // out
  Activation activation = Activation::kLinear;

  Eigen::Index in() const { return weights.cols(); }
  Eigen::Index out() const { return weights.rows(); }
};

struct LayerSpec {
  Eigen::Index width;
  Activation activation;
};

class Mlp {
 public:
  Mlp() = default;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization for weights and
  /// biases.
  static Mlp create(Eigen::Index input_dim, std::span<const LayerSpec> layers, std::mt19937_64& rng);

  /// Adopts explicit layers; throws std::invalid_argument on a broken chain.
  explicit Mlp(std::vector<DenseLayer> layers);

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Mutable access bumps the revision so caches taken earlier are rejected.
  std::vector<DenseLayer>& mutable_layers() {
    ++revision_;
    return layers_;
  }
  std::uint64_t revision() const { return revision_; }

  bool operator==(const Mlp& other) const;

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
  std::uint64_t revision_ = 0;
};

/// Per-layer inputs and pre-activations retained for the backward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;  // inputs[l] feeds layer l
  std::vector<Matrix> pre;     // z of layer l
  Matrix output;               // activation of the last layer
  const Mlp* net = nullptr;
  std::uint64_t revision = 0;
};

struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static MlpGrads zeros_like(const Mlp& net);
  void set_zero();
  MlpGrads& operator+=(const MlpGrads& other);
  double max_abs() const;
  bool all_finite() const;
};

/// x: input_dim x batch. Throws std::invalid_argument on dimension mismatch or
/// non-finite input.
void forward(const Mlp& net, const Matrix& x, ForwardCache& cache,
             Backend backend = Backend::kParallel);

Vector forward(const Mlp& net, const Vector& x, Backend backend = Backend::kParallel);

/// Reverse pass from dL/dy. Fills parameter gradients and, if `dx` is
/// non-null, dL/dx. Throws std::logic_error when `cache` was not produced by a
/// forward call on this exact network revision.
void backward(const Mlp& net, const ForwardCache& cache, const Matrix& dy, MlpGrads& grads,
              Matrix* dx, Backend backend = Backend::kParallel);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m_weights, v_weights;
  std::vector<Vector> m_biases, v_biases;
  std::int64_t step_count = 0;
  std::int64_t rejected_steps = 0;

  static AdamState for_net(const Mlp& net, AdamConfig config);
  bool operator==(const AdamState& other) const;
};

/// Bias-corrected Adam on one parameter block. `step` is the 1-based index of
/// the step being taken.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamConfig& cfg, std::int64_t step);

/// Returns false and leaves everything untouched (except `rejected_steps`) if
/// any gradient is non-finite.
bool adam_step(Mlp& net, const MlpGrads& grads, AdamState& opt);

/// target <- tau * source + (1 - tau) * target.
void soft_update(Mlp& target, const Mlp& source, double tau);

/// Largest absolute parameter difference.
double max_abs_difference(const Mlp& a, const Mlp& b);

struct GradientReport {
  double max_rel_error = 0.0;
  std::vector<double> weight_error;  // per layer
  std::vector<double> bias_error;    // per layer
  double input_error = 0.0;
  bool passed = false;
};

struct GradientCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  /// Test hook applied to the analytic gradients before comparison.
  std::function<void(MlpGrads&, Matrix&)> tamper;
};

/// Compares backward() with central differences of L = sum(c .* y) for a
/// fixed random projection c, over every parameter and every input entry.
GradientReport check_gradients(const Mlp& net, const Matrix& x, const GradientCheckOptions& opts = {});

inline constexpr std::uint32_t kMlpFormatVersion = 1;

/// Binary layout: "PBRLMLP\0", u32 version, u32 layer count, then per layer
/// u32 in, u32 out, u8 activation, row-major f64 weights, f64 biases. All
/// integers and doubles little-endian.
void write_mlp(std::ostream& os, const Mlp& net);
Mlp read_mlp(std::istream& is);

void write_adam(std::ostream& os, const AdamState& opt);
AdamState read_adam(std::istream& is);

const char* activation_name(Activation act);

}  // namespace pbrl::neural
