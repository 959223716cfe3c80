#pragma once

#include <Eigen/Dense>

namespace pbrl::neural {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kTanh, kLinear };

/// Batched dense-layer kernels. Activations are stored feature-major: one
/// column per sample.
///
/// Two implementations share the contract. `reference` is plain serial loops
/// and serves as the oracle in tests; `parallel` routes the products through
/// Eigen and splits elementwise passes across OpenMP threads.
enum class Backend { kReference, kParallel };

namespace kernels {

namespace reference {

/// z = w x + b 1^T, a = act(z).
void dense_forward(const Matrix& w, const Vector& b, Activation act, const Matrix& x, Matrix& z,
                   Matrix& a);

/// Given dL/da, produces dL/dw, dL/db, and (if `dx` is non-null) dL/dx.
/// Requires the forward's z and a.
void dense_backward(const Matrix& w, Activation act, const Matrix& x, const Matrix& z,
                    const Matrix& a, const Matrix& da, Matrix& dw, Vector& db, Matrix* dx);

}  // namespace reference

namespace parallel {

void dense_forward(const Matrix& w, const Vector& b, Activation act, const Matrix& x, Matrix& z,
                   Matrix& a);

void dense_backward(const Matrix& w, Activation act, const Matrix& x, const Matrix& z,
                    const Matrix& a, const Matrix& da, Matrix& dw, Vector& db, Matrix* dx);

}  // namespace parallel

inline void dense_forward(Backend backend, const Matrix& w, const Vector& b, Activation act,
                          const Matrix& x, Matrix& z, Matrix& a) {
  if (backend == Backend::kReference) {
    reference::dense_forward(w, b, act, x, z, a);
  } else {
    parallel::dense_forward(w, b, act, x, z, a);
  }
}

inline void dense_backward(Backend backend, const Matrix& w, Activation act, const Matrix& x,
                           const Matrix& z, const Matrix& a, const Matrix& da, Matrix& dw,
                           Vector& db, Matrix* dx) {
  if (backend == Backend::kReference) {
    reference::dense_backward(w, act, x, z, a, da, dw, db, dx);
  } else {
    parallel::dense_backward(w, act, x, z, a, da, dw, db, dx);
  }
}

}  // namespace kernels
}  // namespace pbrl::neural
