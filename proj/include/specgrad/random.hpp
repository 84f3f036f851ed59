#pragma once

#include <cstdint>
#include <random>

#include "specgrad/core_matrix.hpp"

namespace specgrad {

using Rng = std::mt19937_64;

/// i.i.d. standard normal entries.
Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols);

/// Random orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
Matrix random_orthogonal(Rng& rng, Eigen::Index d);

/// d x n features whose covariance is exactly U diag(spectrum) U^T for a
/// random orthogonal U. Requires n > d.
Matrix features_with_spectrum(Rng& rng, const Vector& spectrum, Eigen::Index n);

/// lambda_i = cond^{-(i-1)/(d-1)}: lambda_1 = 1, lambda_d = 1/cond.
Vector geometric_spectrum(Eigen::Index d, double cond);

}  // namespace specgrad
