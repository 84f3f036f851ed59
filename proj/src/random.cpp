#include "specgrad/random.hpp"

#include <cmath>

#include "specgrad/errors.hpp"

namespace specgrad {

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

Matrix random_orthogonal(Rng& rng, Eigen::Index d) {
  const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rng, d, d));
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i)
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  return q;
}

Matrix features_with_spectrum(Rng& rng, const Vector& spectrum, Eigen::Index n) {
  const Eigen::Index d = spectrum.size();
  if (n <= d) throw InvalidInputError("need more samples than dimensions for an exact spectrum");
  for (Eigen::Index i = 0; i < d; ++i)
    if (spectrum(i) < 0.0) throw InvalidInputError("spectrum must be non-negative");

  // Rows of z: zero mean, orthogonal, squared norm n, so z z^T / n = I.
  Matrix z = gaussian_matrix(rng, d, n);
  z = z.colwise() - Vector(z.rowwise().mean());
  const Eigen::HouseholderQR<Matrix> qr(z.transpose());
  const Matrix basis = qr.householderQ() * Matrix::Identity(n, d);  // n x d, orthonormal cols
  z = basis.transpose() * std::sqrt(static_cast<double>(n));

  const Matrix u = random_orthogonal(rng, d);
  return u * spectrum.cwiseSqrt().asDiagonal() * z;
}

Vector geometric_spectrum(Eigen::Index d, double cond) {
  if (d < 1) throw InvalidInputError("spectrum dimension must be >= 1");
  if (!(cond >= 1.0)) throw InvalidInputError("condition number must be >= 1");
  Vector s(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double t = d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
    s(i) = std::pow(cond, -t);
  }
  return s;
}

}  // namespace specgrad
