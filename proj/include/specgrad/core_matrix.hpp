#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace specgrad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Working float width for eps clamping and precision-sensitivity runs.
class Precision {
 public:
  enum class Mode { Single, Double };

  constexpr Precision() = default;
  constexpr explicit Precision(Mode mode) : mode_(mode) {}

  static constexpr Precision single() { return Precision(Mode::Single); }
  static constexpr Precision double_() { return Precision(Mode::Double); }

  constexpr Mode mode() const { return mode_; }

  /// Machine epsilon of the working width.
  constexpr double eps() const {
    return mode_ == Mode::Double ? 2.220446049250313e-16 : 1.1920928955078125e-07;
  }

  const char* name() const { return mode_ == Mode::Double ? "double" : "single"; }

  friend constexpr bool operator==(Precision, Precision) = default;

 private:
  Mode mode_ = Mode::Double;
};

/// d x N block of raw features; columns are samples.
class FeatureMatrix {
 public:
  /// Throws InvalidInputError unless d >= 1, N >= 2 and every entry is finite.
  explicit FeatureMatrix(Matrix data);

  const Matrix& data() const { return data_; }
  Eigen::Index dim() const { return data_.rows(); }
  Eigen::Index samples() const { return data_.cols(); }

 private:
  Matrix data_;
};

/// Symmetric d x d matrix. The constructor symmetrizes its argument, so the
/// stored matrix is exactly symmetric.
class SymPsdMatrix {
 public:
  explicit SymPsdMatrix(const Matrix& data);

  const Matrix& data() const { return data_; }
  Eigen::Index dim() const { return data_.rows(); }
  double trace() const { return data_.trace(); }

 private:
  Matrix data_;
};

/// Eigenvalues in non-increasing order with matching eigenvector columns.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  Eigen::Index dim() const { return eigenvalues.size(); }
  /// U diag(lambda) U^T
  Matrix reconstruct() const;
};

struct ConditionNumber {
  double value = 1.0;
  bool ill_conditioned = false;
};

/// Matrices with lambda_max / lambda_min strictly above this are ill-conditioned.
inline constexpr double kIllConditionThreshold = 1e14;

/// P = X Ibar X^T with Ibar = (1/N)(I - (1/N) 1 1^T).
SymPsdMatrix covariance(const FeatureMatrix& x);

/// X Ibar, i.e. row-centered features divided by N.
Matrix centered_scaled(const Matrix& x);

struct EighOptions {
  int max_sweeps = 100;
  double relative_tolerance = 1e-14;
};

/// Cyclic Jacobi eigensolver. Eigenvalues are sorted non-increasing and each
/// eigenvector has its largest-magnitude component positive.
/// Throws NumericalFailureError (carrying the off-diagonal residual) if the
/// sweep budget is exhausted.
EigenDecomposition eigh(const SymPsdMatrix& p, const EighOptions& options = {});

/// Replaces every eigenvalue below prec.eps() by prec.eps().
EigenDecomposition clamp_eigenvalues(const EigenDecomposition& e, Precision prec);

/// Number of eigenvalues clamp_eigenvalues would change.
std::size_t count_below_eps(const EigenDecomposition& e, Precision prec);

/// U diag(lambda^alpha) U^T. Throws DomainError for a negative eigenvalue when
/// alpha is not an integer.
SymPsdMatrix matrix_power(const EigenDecomposition& e, double alpha);

/// lambda_1 / lambda_d; +inf (flagged) when lambda_d <= 0.
ConditionNumber condition_number(const EigenDecomposition& e);

}  // namespace specgrad
