#pragma once

#include <functional>

#include "specgrad/core_matrix.hpp"
#include "specgrad/random.hpp"

namespace testing {

using specgrad::Matrix;
using specgrad::Vector;

/// U diag(spectrum) U^T for a random orthogonal U.
inline Matrix spd_with_spectrum(specgrad::Rng& rng, const Vector& spectrum) {
  const Matrix u = specgrad::random_orthogonal(rng, spectrum.size());
  return u * spectrum.asDiagonal() * u.transpose();
}

/// Central-difference gradient of f over every entry of x.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                               double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = f(probe);
      probe(i, j) = orig - h;
      const double down = f(probe);
      probe(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

/// Directional derivative of f at a symmetric p along symmetric e.
inline double symmetric_directional(const std::function<double(const Matrix&)>& f, const Matrix& p,
                                    const Matrix& e, double h = 1e-6) {
  return (f(p + h * e) - f(p - h * e)) / (2.0 * h);
}

/// max |a - b| / max |b|.
inline double rel_error(const Matrix& a, const Matrix& b) {
  const double scale = b.cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / (scale > 0.0 ? scale : 1.0);
}

inline Matrix random_symmetric(specgrad::Rng& rng, Eigen::Index d) {
  const Matrix a = specgrad::gaussian_matrix(rng, d, d);
  return 0.5 * (a + a.transpose());
}

}  // namespace testing
