#include "specgrad/core_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "specgrad/errors.hpp"

namespace specgrad {

FeatureMatrix::FeatureMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1) throw InvalidInputError("feature matrix needs d >= 1");
  if (data_.cols() < 2) throw InvalidInputError("feature matrix needs N >= 2 samples");
  if (!data_.allFinite()) throw InvalidInputError("feature matrix has non-finite entries");
}

SymPsdMatrix::SymPsdMatrix(const Matrix& data) {
  if (data.rows() != data.cols()) throw InvalidInputError("matrix must be square");
  if (!data.allFinite()) throw InvalidInputError("matrix has non-finite entries");
  data_ = 0.5 * (data + data.transpose());
}

Matrix EigenDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

Matrix centered_scaled(const Matrix& x) {
  const double n = static_cast<double>(x.cols());
  const Vector mean = x.rowwise().mean();
  return (x.colwise() - mean) / n;
}

SymPsdMatrix covariance(const FeatureMatrix& x) {
  const Matrix& data = x.data();
  const Vector mean = data.rowwise().mean();
  const Matrix centered = data.colwise() - mean;
  const double n = static_cast<double>(data.cols());
  return SymPsdMatrix(centered * centered.transpose() / n);
}

namespace {

double max_off_diagonal(const Matrix& a) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) m = std::max(m, std::abs(a(i, j)));
  return m;
}

// One Jacobi rotation zeroing a(p, q), p < q. Updates a in place and
// accumulates the rotation into v.
void rotate(Matrix& a, Matrix& v, Eigen::Index p, Eigen::Index q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  double t;
  if (std::abs(theta) > 1e150) {
    t = 0.5 / theta;
  } else {
    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  }
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigenDecomposition eigh(const SymPsdMatrix& p, const EighOptions& options) {
  const Eigen::Index n = p.dim();
  Matrix a = p.data();
  Matrix v = Matrix::Identity(n, n);

  const double scale = a.cwiseAbs().maxCoeff();
  const double tol = options.relative_tolerance * scale;

  double off = max_off_diagonal(a);
  int sweep = 0;
  while (off > tol) {
    if (sweep == options.max_sweeps) {
      std::ostringstream msg;
      msg << "Jacobi eigensolver did not converge in " << options.max_sweeps
          << " sweeps; max off-diagonal " << off;
      throw NumericalFailureError(msg.str(), off);
    }
    for (Eigen::Index i = 0; i + 1 < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) rotate(a, v, i, j);
    off = max_off_diagonal(a);
    ++sweep;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return a(l, l) > a(r, r); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    Vector col = v.col(src);
    Eigen::Index big = 0;
    col.cwiseAbs().maxCoeff(&big);
    if (col(big) < 0.0) col = -col;
    out.eigenvectors.col(k) = col;
  }
  return out;
}

EigenDecomposition clamp_eigenvalues(const EigenDecomposition& e, Precision prec) {
  EigenDecomposition out = e;
  const double eps = prec.eps();
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i)
    if (out.eigenvalues(i) < eps) out.eigenvalues(i) = eps;
  return out;
}

std::size_t count_below_eps(const EigenDecomposition& e, Precision prec) {
  return static_cast<std::size_t>((e.eigenvalues.array() < prec.eps()).count());
}

SymPsdMatrix matrix_power(const EigenDecomposition& e, double alpha) {
  const bool integral = std::floor(alpha) == alpha;
  Vector f(e.dim());
  for (Eigen::Index i = 0; i < e.dim(); ++i) {
    const double lambda = e.eigenvalues(i);
    if (lambda < 0.0 && !integral) {
      std::ostringstream msg;
      msg << "matrix_power: eigenvalue " << lambda << " is negative for fractional power "
          << alpha;
      throw DomainError(msg.str());
    }
    f(i) = std::pow(lambda, alpha);
  }
  return SymPsdMatrix(e.eigenvectors * f.asDiagonal() * e.eigenvectors.transpose());
}

ConditionNumber condition_number(const EigenDecomposition& e) {
  const double lmax = e.eigenvalues.maxCoeff();
  const double lmin = e.eigenvalues.minCoeff();
  if (lmin <= 0.0) return {std::numeric_limits<double>::infinity(), true};
  const double value = lmax / lmin;
  return {value, value > kIllConditionThreshold};
}

}  // namespace specgrad
