#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "specgrad/core_matrix.hpp"

namespace specgrad {

namespace scheme {

/// K_ij = 1 / (lambda_i - lambda_j).
struct Ordinary {};
/// Eigenvalues beyond the first `n` are treated as zero when forming K.
struct TopN {
  int n = 0;
};
/// Ordinary K clipped to [-threshold, threshold].
struct Trunc {
  double threshold = 1e10;
};
/// Eigenvector gradients back-propagated through `iterations` power-iteration
/// steps on the deflated covariance.
struct PowerIteration {
  int iterations = 100;
};
/// Upper-triangle K from the degree-K truncated geometric series.
struct Taylor {
  int degree = 100;
};
/// Upper-triangle K from the diagonal approximant matched to degree K.
struct Pade {
  int degree = 100;
};
/// Exact eigendecomposition forward, Newton-Schulz reverse pass.
struct NewtonSchulzBackward {
  int iterations = 10;
};

}  // namespace scheme

using SchemeKind = std::variant<scheme::Ordinary, scheme::TopN, scheme::Trunc,
                                scheme::PowerIteration, scheme::Taylor, scheme::Pade,
                                scheme::NewtonSchulzBackward>;

struct BackwardScheme {
  SchemeKind kind = scheme::Ordinary{};
  Precision precision;

  static BackwardScheme ordinary() { return {scheme::Ordinary{}, {}}; }
  static BackwardScheme top_n(int n) { return {scheme::TopN{n}, {}}; }
  static BackwardScheme trunc(double t = 1e10) { return {scheme::Trunc{t}, {}}; }
  static BackwardScheme power_iteration(int iters = 100) {
    return {scheme::PowerIteration{iters}, {}};
  }
  static BackwardScheme taylor(int degree = 100) { return {scheme::Taylor{degree}, {}}; }
  static BackwardScheme pade(int degree = 100) { return {scheme::Pade{degree}, {}}; }
  static BackwardScheme newton_schulz(int iters = 10) {
    return {scheme::NewtonSchulzBackward{iters}, {}};
  }

  /// Short identifier: ordinary, topn, trunc, pi, taylor, pade, newton.
  std::string name() const;
  /// Name plus parameter, e.g. "taylor(K=100)".
  std::string describe() const;
  /// Throws InvalidInputError when the parameters violate the scheme
  /// invariants for a d x d problem.
  void validate(Eigen::Index d) const;
  /// True for the schemes whose backward pass is a K matrix.
  bool has_k_matrix() const;
};

/// Kept eigenvalue count when TopN is requested without an explicit n:
/// the fraction 200/256 of d, at least 1.
int default_top_n(Eigen::Index d);

/// Antisymmetric matrix with a zero diagonal.
class KMatrix {
 public:
  explicit KMatrix(Matrix data) : data_(std::move(data)) {}
  const Matrix& data() const { return data_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }
  bool all_finite() const { return data_.allFinite(); }
  /// (i, j) positions of non-finite entries.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> nonfinite_entries() const;

 private:
  Matrix data_;
};

struct EigenGradients {
  Matrix grad_u;       // dl/dU = (G + G^T) U F
  Vector grad_lambda;  // dl/dlambda_i = 1/2 lambda_i^{-1/2} (U^T G U)_ii
};

/// Throws DomainError if any eigenvalue is <= 0 (clamp first).
EigenGradients grad_eigvec_eigval(const Matrix& grad_q, const EigenDecomposition& e);

/// Throws InvalidInputError for schemes without a K matrix and
/// NumericalFailureError if a Pade denominator vanishes.
KMatrix k_matrix(const EigenDecomposition& e, const BackwardScheme& scheme);

/// dl/dP = U (K^T o (U^T dl/dU) + diag(dl/dlambda)) U^T, or the scheme's
/// iterative equivalent for PowerIteration and NewtonSchulzBackward.
Matrix grad_covariance(const Matrix& grad_q, const EigenDecomposition& e,
                       const BackwardScheme& scheme);

/// u^(0) = v0 / |v0| followed by u^(k) = P u^(k-1) / |P u^(k-1)|.
struct PowerIterationTrace {
  Matrix p;
  std::vector<Vector> steps;  // u^(0) ... u^(K)
  std::vector<double> norms;  // |P u^(k)| for k = 0 ... K-1

  int iterations() const { return static_cast<int>(norms.size()); }
  const Vector& estimate() const { return steps.back(); }
};

/// Throws InvalidInputError for a zero start vector or k_iters < 1 and
/// DegenerateInputError when P u vanishes.
PowerIterationTrace power_iteration(const SymPsdMatrix& p, int k_iters, const Vector& v0);

/// dl/dP for a loss on the final iterate u^(K), by reverse accumulation
/// through every step.
Matrix pi_gradient(const PowerIterationTrace& trace, const Vector& grad_u);

/// Worst-case |K_ij| a scheme can produce at the given precision.
struct GradBound {
  std::string scheme;
  std::string analytic_form;
  double max_value = 0.0;
  bool has_analytic_bound = true;
  std::string trigger;

  /// Finite and below the single-precision maximum 3.40e38.
  bool single_safe() const;
};

GradBound gradient_upper_bound(const BackwardScheme& scheme, Precision prec);

/// End-to-end gradient of a layer w.r.t. its input.
using GradientFn = std::function<Matrix(const Matrix&)>;

struct BetaSmoothnessOptions {
  int samples = 64;
  double perturb_scale = 1e-3;
  std::uint64_t seed = 0;
};

/// max over sampled perturbations delta of |g(x) - g(x + delta)|_F / |delta|_F,
/// with Gaussian delta rescaled to perturb_scale * |x|_F.
/// Throws InvalidInputError for samples < 2 and NumericalFailureError
/// (naming `scheme_name`) if a gradient is non-finite.
double beta_smoothness(const GradientFn& layer_grad, const Matrix& x,
                       const BetaSmoothnessOptions& options, const std::string& scheme_name);

}  // namespace specgrad
