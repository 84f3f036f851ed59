#include "specgrad/newton_schulz.hpp"

#include <cmath>
#include <sstream>

#include "specgrad/errors.hpp"

namespace specgrad {

namespace {

constexpr double kDivergenceGuard = 1e6;

}  // namespace

NewtonSchulzResult ns_forward(const SymPsdMatrix& p, int iterations) {
  if (iterations < 1) throw InvalidInputError("Newton-Schulz needs at least one iteration");
  const double tr = p.trace();
  if (!(tr > 0.0)) {
    std::ostringstream msg;
    msg << "Newton-Schulz needs tr(P) > 0, got " << tr;
    throw DomainError(msg.str());
  }

  const Eigen::Index d = p.dim();
  const Matrix identity = Matrix::Identity(d, d);

  NewtonSchulzTrace trace;
  trace.iterations = iterations;
  trace.trace_p = tr;
  trace.p = p.data();
  trace.y_seq.reserve(static_cast<std::size_t>(iterations) + 1);
  trace.z_seq.reserve(static_cast<std::size_t>(iterations) + 1);
  trace.y_seq.push_back(p.data() / tr);
  trace.z_seq.push_back(identity);

  for (int k = 1; k <= iterations; ++k) {
    const Matrix& y = trace.y_seq.back();
    const Matrix& z = trace.z_seq.back();
    const Matrix t = 3.0 * identity - z * y;
    Matrix y_next = 0.5 * y * t;
    Matrix z_next = 0.5 * t * z;
    const double size = y_next.cwiseAbs().maxCoeff();
    if (!(size <= kDivergenceGuard)) {
      std::ostringstream msg;
      msg << "Newton-Schulz diverged at iteration " << k << " (max|Y| = " << size << ")";
      throw NumericalFailureError(msg.str(), size);
    }
    trace.y_seq.push_back(std::move(y_next));
    trace.z_seq.push_back(std::move(z_next));
  }

  Matrix q = std::sqrt(tr) * trace.y_seq.back();
  return {SymPsdMatrix(q), std::move(trace)};
}

Matrix ns_backward(const NewtonSchulzTrace& trace, const Matrix& grad_q) {
  const Eigen::Index d = trace.dim();
  if (grad_q.rows() != d || grad_q.cols() != d)
    throw InvalidInputError("ns_backward: grad_q has the wrong shape");

  const double tr = trace.trace_p;
  const double sqrt_tr = std::sqrt(tr);
  const Matrix identity = Matrix::Identity(d, d);

  // Reverse sweep over Y_k = 1/2 Y_{k-1} T_k, Z_k = 1/2 T_k Z_{k-1},
  // T_k = 3I - Z_{k-1} Y_{k-1}.
  Matrix grad_y = sqrt_tr * grad_q;
  Matrix grad_z = Matrix::Zero(d, d);
  for (int k = trace.iterations; k >= 1; --k) {
    const Matrix& y = trace.y_seq[static_cast<std::size_t>(k - 1)];
    const Matrix& z = trace.z_seq[static_cast<std::size_t>(k - 1)];
    const Matrix t = 3.0 * identity - z * y;
    const Matrix grad_t = 0.5 * (y.transpose() * grad_y + grad_z * z.transpose());
    Matrix grad_y_prev = 0.5 * grad_y * t.transpose() - z.transpose() * grad_t;
    Matrix grad_z_prev = 0.5 * t.transpose() * grad_z - grad_t * y.transpose();
    grad_y = std::move(grad_y_prev);
    grad_z = std::move(grad_z_prev);
  }
  // Z_0 = I is constant, so grad_y now holds dl/dA.
  const Matrix& grad_a = grad_y;
  const Matrix& y_last = trace.y_seq.back();

  Matrix grad_p = grad_a / tr;
  grad_p.diagonal().array() -= (grad_a.cwiseProduct(trace.p)).sum() / (tr * tr);
  grad_p.diagonal().array() += grad_q.cwiseProduct(y_last).sum() / (2.0 * sqrt_tr);
  return grad_p;
}

Matrix ns_gradient_of_x(const Matrix& grad_p, const FeatureMatrix& x) {
  const Eigen::Index d = x.dim();
  if (grad_p.rows() != d || grad_p.cols() != d)
    throw InvalidInputError("gradient w.r.t. covariance does not match feature dimension");
  return (grad_p + grad_p.transpose()) * centered_scaled(x.data());
}

}  // namespace specgrad
