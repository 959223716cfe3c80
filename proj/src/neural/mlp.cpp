#include "pbrl/neural/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "pbrl/neural/binary_io.hpp"

namespace pbrl::neural {

static_assert(std::endian::native == std::endian::little, "serialization assumes little-endian");

Mlp Mlp::create(Eigen::Index input_dim, std::span<const LayerSpec> specs, std::mt19937_64& rng) {
  if (input_dim <= 0 || specs.empty()) throw std::invalid_argument("mlp: empty architecture");
  std::vector<DenseLayer> layers;
  Eigen::Index fan_in = input_dim;
  for (const auto& spec : specs) {
    if (spec.width <= 0) throw std::invalid_argument("mlp: layer width must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer;
    layer.weights.resize(spec.width, fan_in);
    layer.biases.resize(spec.width);
    layer.activation = spec.activation;
    // Row-major fill so the draw order matches the serialized order.
    for (Eigen::Index i = 0; i < spec.width; ++i) {
      for (Eigen::Index k = 0; k < fan_in; ++k) layer.weights(i, k) = dist(rng);
    }
    for (Eigen::Index i = 0; i < spec.width; ++i) layer.biases(i) = dist(rng);
    layers.push_back(std::move(layer));
    fan_in = spec.width;
  }
  return Mlp(std::move(layers));
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { validate(); }

void Mlp::validate() const {
  if (layers_.empty()) throw std::invalid_argument("mlp: no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weights.rows() != layer.biases.size() || layer.weights.size() == 0) {
      throw std::invalid_argument("mlp: bias length does not match layer width");
    }
    if (l > 0 && layer.in() != layers_[l - 1].out()) {
      throw std::invalid_argument("mlp: layer chain is not dimension-consistent");
    }
    if (!layer.weights.allFinite() || !layer.biases.allFinite()) {
      throw std::invalid_argument("mlp: non-finite parameter");
    }
  }
}

Eigen::Index Mlp::input_dim() const { return layers_.empty() ? 0 : layers_.front().in(); }

Eigen::Index Mlp::output_dim() const { return layers_.empty() ? 0 : layers_.back().out(); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  return n;
}

bool Mlp::operator==(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.activation != b.activation || a.weights.rows() != b.weights.rows() ||
        a.weights.cols() != b.weights.cols()) {
      return false;
    }
    if (std::memcmp(a.weights.data(), b.weights.data(), sizeof(double) * a.weights.size()) != 0 ||
        std::memcmp(a.biases.data(), b.biases.data(), sizeof(double) * a.biases.size()) != 0) {
      return false;
    }
  }
  return true;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
  MlpGrads g;
  for (const auto& l : net.layers()) {
    g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    g.biases.push_back(Vector::Zero(l.biases.size()));
  }
  return g;
}

void MlpGrads::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

MlpGrads& MlpGrads::operator+=(const MlpGrads& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

double MlpGrads::max_abs() const {
  double m = 0.0;
  for (const auto& w : weights) m = std::max(m, w.size() ? w.cwiseAbs().maxCoeff() : 0.0);
  for (const auto& b : biases) m = std::max(m, b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
  return m;
}

bool MlpGrads::all_finite() const {
  return std::all_of(weights.begin(), weights.end(), [](const Matrix& w) { return w.allFinite(); }) &&
         std::all_of(biases.begin(), biases.end(), [](const Vector& b) { return b.allFinite(); });
}

void forward(const Mlp& net, const Matrix& x, ForwardCache& cache, Backend backend) {
  if (x.rows() != net.input_dim()) throw std::invalid_argument("mlp forward: input dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("mlp forward: non-finite input");
  const auto& layers = net.layers();
  const std::size_t n = layers.size();
  cache.inputs.resize(n);
  cache.pre.resize(n);
  cache.inputs[0] = x;
  for (std::size_t l = 0; l < n; ++l) {
    Matrix& out = (l + 1 < n) ? cache.inputs[l + 1] : cache.output;
    kernels::dense_forward(backend, layers[l].weights, layers[l].biases, layers[l].activation,
                           cache.inputs[l], cache.pre[l], out);
  }
  cache.net = &net;
  cache.revision = net.revision();
}

Vector forward(const Mlp& net, const Vector& x, Backend backend) {
  ForwardCache cache;
  forward(net, Matrix(x), cache, backend);
  return cache.output.col(0);
}

void backward(const Mlp& net, const ForwardCache& cache, const Matrix& dy, MlpGrads& grads,
              Matrix* dx, Backend backend) {
  const auto& layers = net.layers();
  const std::size_t n = layers.size();
  if (cache.net != &net || cache.revision != net.revision() || cache.pre.size() != n) {
    throw std::logic_error("mlp backward: cache is stale or from another network");
  }
  if (dy.rows() != cache.output.rows() || dy.cols() != cache.output.cols()) {
    throw std::invalid_argument("mlp backward: upstream gradient shape mismatch");
  }
  grads.weights.resize(n);
  grads.biases.resize(n);
  Matrix upstream = dy;
  Matrix downstream;
  for (std::size_t l = n; l-- > 0;) {
    const Matrix& a = (l + 1 < n) ? cache.inputs[l + 1] : cache.output;
    const bool need_dx = l > 0 || dx != nullptr;
    kernels::dense_backward(backend, layers[l].weights, layers[l].activation, cache.inputs[l],
                            cache.pre[l], a, upstream, grads.weights[l], grads.biases[l],
                            need_dx ? &downstream : nullptr);
    if (need_dx) std::swap(upstream, downstream);
  }
  if (dx != nullptr) *dx = std::move(upstream);
}

AdamState AdamState::for_net(const Mlp& net, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto& l : net.layers()) {
    s.m_weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    s.v_weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    s.m_biases.push_back(Vector::Zero(l.biases.size()));
    s.v_biases.push_back(Vector::Zero(l.biases.size()));
  }
  return s;
}

namespace {

template <typename M>
bool same_bits(const std::vector<M>& a, const std::vector<M>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) return false;
    if (std::memcmp(a[i].data(), b[i].data(), sizeof(double) * a[i].size()) != 0) return false;
  }
  return true;
}

template <typename M>
std::span<double> flat(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename M>
std::span<const double> flat(const M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

bool AdamState::operator==(const AdamState& o) const {
  return config.lr == o.config.lr && config.beta1 == o.config.beta1 &&
         config.beta2 == o.config.beta2 && config.eps == o.config.eps &&
         step_count == o.step_count && rejected_steps == o.rejected_steps &&
         same_bits(m_weights, o.m_weights) && same_bits(v_weights, o.v_weights) &&
         same_bits(m_biases, o.m_biases) && same_bits(v_biases, o.v_biases);
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamConfig& cfg, std::int64_t step) {
  if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size()) {
    throw std::invalid_argument("adam: shape mismatch");
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const double step_size = cfg.lr / c1;
  const double c2_root = std::sqrt(c2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    params[i] -= step_size * m[i] / (std::sqrt(v[i]) / c2_root + cfg.eps);
  }
}

bool adam_step(Mlp& net, const MlpGrads& grads, AdamState& opt) {
  const std::size_t n = net.layers().size();
  if (grads.weights.size() != n || opt.m_weights.size() != n) {
    throw std::invalid_argument("adam: gradient/optimizer shape does not match network");
  }
  if (!grads.all_finite()) {
    ++opt.rejected_steps;
    return false;
  }
  const std::int64_t step = opt.step_count + 1;
  auto& layers = net.mutable_layers();
  for (std::size_t l = 0; l < n; ++l) {
    adam_update(flat(layers[l].weights), flat(grads.weights[l]), flat(opt.m_weights[l]),
                flat(opt.v_weights[l]), opt.config, step);
    adam_update(flat(layers[l].biases), flat(grads.biases[l]), flat(opt.m_biases[l]),
                flat(opt.v_biases[l]), opt.config, step);
  }
  opt.step_count = step;
  return true;
}

void soft_update(Mlp& target, const Mlp& source, double tau) {
  if (target.layers().size() != source.layers().size()) {
    throw std::invalid_argument("soft_update: architecture mismatch");
  }
  auto& dst = target.mutable_layers();
  const auto& src = source.layers();
  for (std::size_t l = 0; l < dst.size(); ++l) {
    if (dst[l].weights.rows() != src[l].weights.rows() || dst[l].weights.cols() != src[l].weights.cols()) {
      throw std::invalid_argument("soft_update: architecture mismatch");
    }
    dst[l].weights = tau * src[l].weights + (1.0 - tau) * dst[l].weights;
    dst[l].biases = tau * src[l].biases + (1.0 - tau) * dst[l].biases;
  }
}

double max_abs_difference(const Mlp& a, const Mlp& b) {
  double m = 0.0;
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    m = std::max(m, (a.layers()[l].weights - b.layers()[l].weights).cwiseAbs().maxCoeff());
    m = std::max(m, (a.layers()[l].biases - b.layers()[l].biases).cwiseAbs().maxCoeff());
  }
  return m;
}

namespace {

double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

double projected_loss(const Mlp& net, const Matrix& x, const Matrix& c) {
  ForwardCache cache;
  forward(net, x, cache, Backend::kReference);
  return (cache.output.array() * c.array()).sum();
}

}  // namespace

GradientReport check_gradients(const Mlp& net, const Matrix& x, const GradientCheckOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix c(net.output_dim(), x.cols());
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = dist(rng);

  ForwardCache cache;
  forward(net, x, cache, Backend::kReference);
  MlpGrads grads;
  Matrix dx;
  backward(net, cache, c, grads, &dx, Backend::kReference);
  if (opts.tamper) opts.tamper(grads, dx);

  const double h = opts.step;
  GradientReport report;
  Mlp probe = net;
  const std::size_t n = net.layers().size();
  report.weight_error.assign(n, 0.0);
  report.bias_error.assign(n, 0.0);

  auto numeric = [&](double& slot) {
    const double saved = slot;
    slot = saved + h;
    const double up = projected_loss(probe, x, c);
    slot = saved - h;
    const double down = projected_loss(probe, x, c);
    slot = saved;
    return (up - down) / (2.0 * h);
  };

  for (std::size_t l = 0; l < n; ++l) {
    auto& layer = probe.mutable_layers()[l];
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      const double g = numeric(layer.weights.data()[i]);
      report.weight_error[l] = std::max(report.weight_error[l], rel_error(grads.weights[l].data()[i], g));
    }
    for (Eigen::Index i = 0; i < layer.biases.size(); ++i) {
      const double g = numeric(layer.biases.data()[i]);
      report.bias_error[l] = std::max(report.bias_error[l], rel_error(grads.biases[l].data()[i], g));
    }
  }

  Matrix xp = x;
  for (Eigen::Index i = 0; i < xp.size(); ++i) {
    const double saved = xp.data()[i];
    xp.data()[i] = saved + h;
    const double up = projected_loss(net, xp, c);
    xp.data()[i] = saved - h;
    const double down = projected_loss(net, xp, c);
    xp.data()[i] = saved;
    report.input_error = std::max(report.input_error, rel_error(dx.data()[i], (up - down) / (2.0 * h)));
  }

  report.max_rel_error = report.input_error;
  for (std::size_t l = 0; l < n; ++l) {
    report.max_rel_error = std::max({report.max_rel_error, report.weight_error[l], report.bias_error[l]});
  }
  report.passed = report.max_rel_error < opts.tolerance;
  return report;
}

namespace {

constexpr char kMlpMagic[8] = {'P', 'B', 'R', 'L', 'M', 'L', 'P', '\0'};
constexpr char kAdamMagic[8] = {'P', 'B', 'R', 'L', 'A', 'D', 'M', '\0'};

std::uint8_t activation_code(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return 0;
    case Activation::kTanh:
      return 1;
    case Activation::kLinear:
      return 2;
  }
  return 2;
}

Activation activation_from(std::uint8_t code) {
  switch (code) {
    case 0:
      return Activation::kRelu;
    case 1:
      return Activation::kTanh;
    case 2:
      return Activation::kLinear;
    default:
      throw std::runtime_error("mlp read: unknown activation code");
  }
}

void write_row_major(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) io::write_f64(os, m(i, k));
  }
}

void read_row_major(std::istream& is, Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = io::read_f64(is);
  }
}

void write_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) io::write_f64(os, v(i));
}

void read_vector(std::istream& is, Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = io::read_f64(is);
}

}  // namespace

void write_mlp(std::ostream& os, const Mlp& net) {
  os.write(kMlpMagic, sizeof(kMlpMagic));
  io::write_u32(os, kMlpFormatVersion);
  io::write_u32(os, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    io::write_u32(os, static_cast<std::uint32_t>(l.in()));
    io::write_u32(os, static_cast<std::uint32_t>(l.out()));
    io::write_u8(os, activation_code(l.activation));
    write_row_major(os, l.weights);
    write_vector(os, l.biases);
  }
  if (!os) throw std::runtime_error("mlp write: stream failure");
}

Mlp read_mlp(std::istream& is) {
  io::expect_magic(is, kMlpMagic, "mlp");
  const auto version = io::read_u32(is);
  if (version != kMlpFormatVersion) throw std::runtime_error("mlp read: unsupported version");
  const auto count = io::read_u32(is);
  if (count == 0 || count > 1024) throw std::runtime_error("mlp read: implausible layer count");
  std::vector<DenseLayer> layers(count);
  for (auto& l : layers) {
    const auto in = io::read_u32(is);
    const auto out = io::read_u32(is);
    if (in == 0 || out == 0 || in > (1u << 20) || out > (1u << 20)) {
      throw std::runtime_error("mlp read: implausible layer shape");
    }
    l.activation = activation_from(io::read_u8(is));
    l.weights.resize(out, in);
    l.biases.resize(out);
    read_row_major(is, l.weights);
    read_vector(is, l.biases);
  }
  return Mlp(std::move(layers));
}

void write_adam(std::ostream& os, const AdamState& opt) {
  os.write(kAdamMagic, sizeof(kAdamMagic));
  io::write_u32(os, kMlpFormatVersion);
  io::write_f64(os, opt.config.lr);
  io::write_f64(os, opt.config.beta1);
  io::write_f64(os, opt.config.beta2);
  io::write_f64(os, opt.config.eps);
  io::write_i64(os, opt.step_count);
  io::write_i64(os, opt.rejected_steps);
  io::write_u32(os, static_cast<std::uint32_t>(opt.m_weights.size()));
  for (std::size_t l = 0; l < opt.m_weights.size(); ++l) {
    io::write_u32(os, static_cast<std::uint32_t>(opt.m_weights[l].cols()));
    io::write_u32(os, static_cast<std::uint32_t>(opt.m_weights[l].rows()));
    write_row_major(os, opt.m_weights[l]);
    write_row_major(os, opt.v_weights[l]);
    write_vector(os, opt.m_biases[l]);
    write_vector(os, opt.v_biases[l]);
  }
  if (!os) throw std::runtime_error("adam write: stream failure");
}

AdamState read_adam(std::istream& is) {
  io::expect_magic(is, kAdamMagic, "adam");
  if (io::read_u32(is) != kMlpFormatVersion) throw std::runtime_error("adam read: unsupported version");
  AdamState s;
  s.config.lr = io::read_f64(is);
  s.config.beta1 = io::read_f64(is);
  s.config.beta2 = io::read_f64(is);
  s.config.eps = io::read_f64(is);
  s.step_count = io::read_i64(is);
  s.rejected_steps = io::read_i64(is);
  const auto count = io::read_u32(is);
  if (count > 1024) throw std::runtime_error("adam read: implausible layer count");
  for (std::uint32_t l = 0; l < count; ++l) {
    const auto in = io::read_u32(is);
    const auto out = io::read_u32(is);
    if (in > (1u << 20) || out > (1u << 20)) throw std::runtime_error("adam read: implausible shape");
    Matrix m(out, in), v(out, in);
    Vector mb(out), vb(out);
    read_row_major(is, m);
    read_row_major(is, v);
    read_vector(is, mb);
    read_vector(is, vb);
    s.m_weights.push_back(std::move(m));
    s.v_weights.push_back(std::move(v));
    s.m_biases.push_back(std::move(mb));
    s.v_biases.push_back(std::move(vb));
  }
  return s;
}

const char* activation_name(Activation act) {
  switch (act) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kLinear:
      return "linear";
  }
  return "linear";
}

}  // namespace pbrl::neural
