#include "pbrl/neural/kernels.hpp"

#include <cmath>

namespace pbrl::neural::kernels {

namespace {

inline double apply(Activation act, double z) {
  switch (act) {
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kLinear:
      break;
  }
  return z;
}

// Derivative expressed through z (relu) or a (tanh).
inline double slope(Activation act, double z, double a) {
  switch (act) {
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh:
      return 1.0 - a * a;
    case Activation::kLinear:
      break;
  }
  return 1.0;
}

// Below this many elements the OpenMP fork costs more than the loop.
constexpr Eigen::Index kParallelThreshold = 1 << 15;

}  // namespace

namespace reference {

void dense_forward(const Matrix& w, const Vector& b, Activation act, const Matrix& x, Matrix& z,
                   Matrix& a) {
  const Eigen::Index out = w.rows();
  const Eigen::Index in = w.cols();
  const Eigen::Index batch = x.cols();
  z.resize(out, batch);
  a.resize(out, batch);
  for (Eigen::Index s = 0; s < batch; ++s) {
    for (Eigen::Index i = 0; i < out; ++i) {
      double acc = b(i);
      for (Eigen::Index k = 0; k < in; ++k) acc += w(i, k) * x(k, s);
      z(i, s) = acc;
      a(i, s) = apply(act, acc);
    }
  }
}

void dense_backward(const Matrix& w, Activation act, const Matrix& x, const Matrix& z,
                    const Matrix& a, const Matrix& da, Matrix& dw, Vector& db, Matrix* dx) {
  const Eigen::Index out = w.rows();
  const Eigen::Index in = w.cols();
  const Eigen::Index batch = x.cols();
  Matrix dz(out, batch);
  for (Eigen::Index s = 0; s < batch; ++s) {
    for (Eigen::Index i = 0; i < out; ++i) dz(i, s) = da(i, s) * slope(act, z(i, s), a(i, s));
  }
  dw.setZero(out, in);
  db.setZero(out);
  for (Eigen::Index i = 0; i < out; ++i) {
    for (Eigen::Index s = 0; s < batch; ++s) {
      db(i) += dz(i, s);
      for (Eigen::Index k = 0; k < in; ++k) dw(i, k) += dz(i, s) * x(k, s);
    }
  }
  if (dx != nullptr) {
    dx->setZero(in, batch);
    for (Eigen::Index s = 0; s < batch; ++s) {
      for (Eigen::Index k = 0; k < in; ++k) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < out; ++i) acc += w(i, k) * dz(i, s);
        (*dx)(k, s) = acc;
      }
    }
  }
}

}  // namespace reference

namespace parallel {

void dense_forward(const Matrix& w, const Vector& b, Activation act, const Matrix& x, Matrix& z,
                   Matrix& a) {
  z.resize(w.rows(), x.cols());
  z.noalias() = w * x;
  a.resize(z.rows(), z.cols());
  const Eigen::Index batch = z.cols();
  const Eigen::Index rows = z.rows();
#pragma omp parallel for schedule(static) if (z.size() >= kParallelThreshold)
  for (Eigen::Index s = 0; s < batch; ++s) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double v = z(i, s) + b(i);
      z(i, s) = v;
      a(i, s) = apply(act, v);
    }
  }
}

void dense_backward(const Matrix& w, Activation act, const Matrix& x, const Matrix& z,
                    const Matrix& a, const Matrix& da, Matrix& dw, Vector& db, Matrix* dx) {
  Matrix dz(z.rows(), z.cols());
  const Eigen::Index batch = z.cols();
  const Eigen::Index rows = z.rows();
  if (act == Activation::kLinear) {
    dz = da;
  } else {
#pragma omp parallel for schedule(static) if (z.size() >= kParallelThreshold)
    for (Eigen::Index s = 0; s < batch; ++s) {
      for (Eigen::Index i = 0; i < rows; ++i) dz(i, s) = da(i, s) * slope(act, z(i, s), a(i, s));
    }
  }
  dw.resize(w.rows(), w.cols());
  dw.noalias() = dz * x.transpose();
  db = dz.rowwise().sum();
  if (dx != nullptr) {
    dx->resize(w.cols(), batch);
    dx->noalias() = w.transpose() * dz;
  }
}

}  // namespace parallel

}  // namespace pbrl::neural::kernels
