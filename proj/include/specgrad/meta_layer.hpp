#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "specgrad/core_matrix.hpp"
#include "specgrad/newton_schulz.hpp"
#include "specgrad/svd_grad.hpp"

namespace specgrad {

namespace forward {

/// Exact square root through the eigendecomposition, eigenvalues clamped at eps.
struct EigSqrt {};
/// Coupled Newton-Schulz approximation.
struct NewtonSchulz {
  int iterations = kDefaultNewtonSchulzIterations;
};

}  // namespace forward

using ForwardMethod = std::variant<forward::EigSqrt, forward::NewtonSchulz>;

struct GcpLayerConfig {
  ForwardMethod forward = forward::EigSqrt{};
  BackwardScheme backward;
  Precision precision;

  static GcpLayerConfig eig(BackwardScheme backward, Precision prec = {});
  /// Newton-Schulz forward with its own reverse pass, both over `iterations` steps.
  static GcpLayerConfig newton_schulz(int iterations = kDefaultNewtonSchulzIterations,
                                      Precision prec = {});

  bool uses_newton_schulz_forward() const;
  /// e.g. "eig+taylor(K=100)" or "ns(5)+newton(iters=5)".
  std::string describe() const;
  /// Throws InvalidInputError for an illegal pairing or bad scheme parameters.
  /// A Newton-Schulz forward pairs only with NewtonSchulzBackward of the same
  /// iteration count.
  void validate(Eigen::Index d) const;
};

struct EigCache {
  Matrix x;
  EigenDecomposition eig;  // after clamping
  std::size_t clamped = 0;
};

struct NsCache {
  Matrix x;
  NewtonSchulzTrace trace;
};

using GcpCache = std::variant<EigCache, NsCache>;

struct GcpOutput {
  SymPsdMatrix q;
  GcpCache cache;
  Vector upper;  // row-major upper triangle of q, diagonal included

  /// Eigenvalues raised to eps (0 for the Newton-Schulz forward).
  std::size_t clamped() const;
};

/// Row-major upper triangle (i <= j), length d(d+1)/2.
Vector upper_triangle(const Matrix& m);
/// Scatters a gradient on upper_triangle(Q) back into a d x d matrix.
Matrix upper_triangle_adjoint(const Vector& grad_upper, Eigen::Index d);

GcpOutput gcp_forward(const FeatureMatrix& x, const GcpLayerConfig& cfg);

/// dl/dX for the cached forward. Throws NumericalFailureError naming the
/// scheme (and the offending K entries, if any) when the gradient is not finite.
Matrix gcp_backward(const GcpCache& cache, const Matrix& grad_q, const GcpLayerConfig& cfg);

enum class LossKind { Sum, Trace, RandomLinear };

std::string to_string(LossKind kind);
/// Accepts "sum", "trace", "random-linear".
LossKind parse_loss_kind(const std::string& name);

struct GradCheckOptions {
  LossKind loss = LossKind::RandomLinear;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  double step_scale = 1e-6;  // h = step_scale * (1 + |x_ij|)
};

struct GradCheckReport {
  std::string scheme;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  std::size_t n_nonfinite = 0;  // non-finite analytic gradient entries
  std::vector<std::pair<Eigen::Index, Eigen::Index>> nonfinite_k;
  Eigen::Index worst_i = 0;
  Eigen::Index worst_j = 0;
  std::size_t clamped = 0;
  /// TopN dropped a nonzero eigenvalue, Trunc clipped a K entry, or the
  /// Newton-Schulz backward runs on an iteration that has not converged.
  bool bias_active = false;
  double tolerance = 0.0;
  bool passed = false;
  std::string error;  // set when the forward or backward threw
};

/// Compares gcp_backward with central differences of the scalar loss over
/// every input entry. Errors are relative to the largest finite-difference
/// entry. Throws InvalidInputError if d * N > 10^4; every other failure is
/// reported in the result.
GradCheckReport grad_check(const GcpLayerConfig& cfg, const FeatureMatrix& x,
                           const GradCheckOptions& options = {});

}  // namespace specgrad
