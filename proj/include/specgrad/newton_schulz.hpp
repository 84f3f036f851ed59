#pragma once

#include <vector>

#include "specgrad/core_matrix.hpp"

namespace specgrad {

inline constexpr int kDefaultNewtonSchulzIterations = 5;

/// Everything the reverse pass needs from a coupled Newton-Schulz run.
struct NewtonSchulzTrace {
  int iterations = 0;
  std::vector<Matrix> y_seq;  // Y_0 = A ... Y_N
  std::vector<Matrix> z_seq;  // Z_0 = I ... Z_N
  double trace_p = 0.0;
  Matrix p;  // the input covariance

  Eigen::Index dim() const { return p.rows(); }
};

struct NewtonSchulzResult {
  SymPsdMatrix q;
  NewtonSchulzTrace trace;
};

/// Approximate P^{1/2}: pre-normalize A = P / tr(P), run the coupled
/// iteration, post-compensate Q = sqrt(tr(P)) Y_N.
/// Throws DomainError if tr(P) <= 0, InvalidInputError if iterations < 1 and
/// NumericalFailureError if max|Y_k| exceeds 1e6.
NewtonSchulzResult ns_forward(const SymPsdMatrix& p, int iterations);

/// dl/dP by reverse-mode differentiation through every iteration plus the
/// pre-normalization and post-compensation terms.
Matrix ns_backward(const NewtonSchulzTrace& trace, const Matrix& grad_q);

/// dl/dX = (G + G^T) X Ibar for the covariance input X.
Matrix ns_gradient_of_x(const Matrix& grad_p, const FeatureMatrix& x);

}  // namespace specgrad
