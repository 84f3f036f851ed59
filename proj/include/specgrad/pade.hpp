#pragma once

#include <span>
#include <string>
#include <vector>

#include "specgrad/core_matrix.hpp"

namespace specgrad {

/// Maclaurin coefficients a_0 ... a_L.
class PowerSeries {
 public:
  /// Throws InvalidInputError for fewer than two or non-finite coefficients.
  explicit PowerSeries(std::vector<double> coeffs);

  const std::vector<double>& coeffs() const { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }
  double operator[](std::ptrdiff_t i) const {
    return i < 0 || static_cast<std::size_t>(i) >= coeffs_.size()
               ? 0.0
               : coeffs_[static_cast<std::size_t>(i)];
  }

 private:
  std::vector<double> coeffs_;
};

/// Truncated geometric series 1 + x + ... + x^degree, the Maclaurin series of
/// 1/(1-x) that the gradient schemes approximate.
PowerSeries geometric_series(int degree);

/// [M/N] rational approximant P_M(x) / Q_N(x) with Q_N(0) = 1.
/// `p` holds p_0..p_M and `q` holds q_1..q_N.
struct PadeApproximant {
  std::vector<double> p;
  std::vector<double> q;

  int m() const { return static_cast<int>(p.size()) - 1; }
  int n() const { return static_cast<int>(q.size()); }

  /// Coefficients of Q_N including the leading q_0 = 1.
  std::vector<double> denominator() const;
};

/// Solves the Toeplitz block for q and then the explicit block for p. A
/// singular or rank-deficient Toeplitz block yields the minimum-norm
/// least-squares q.
PadeApproximant pade_from_series(const PowerSeries& s, int m, int n);

/// Diagonal [n+1/n] approximant from the convergents of the corresponding
/// continued fraction c_0 + c_1 x / (1 + c_2 x / (1 + ...)), built with
/// A_k = A_{k-1} + c_k x A_{k-2} (and likewise B_k). A fraction that
/// terminates early (the series is an exact lower-order rational) returns the
/// terminal convergent padded to [n+1/n].
/// Throws InvalidInputError when the series is too short and
/// NumericalFailureError on a zero partial numerator.
PadeApproximant pade_from_continued_fraction(const PowerSeries& s, int n);

/// P_M(x) / Q_N(x) by Horner. Throws PoleError when |Q_N(x)| < 1e-300.
double eval_rational(const PadeApproximant& pa, double x);

/// Largest |coefficient mismatch| between the Maclaurin expansion of P/Q and
/// the series through order M+N, relative to max(1, max|a_i|). Computed as
/// (Q * A - P) mod x^{M+N+1}.
double series_match_residual(const PadeApproximant& pa, const PowerSeries& s);

/// Degrees of the diagonal approximant matched to a degree-K Taylor series:
/// N = (K-1)/2 rounded down and M = N+1, so M+N+1 <= K+1 coefficients are used.
struct DiagonalDegrees {
  int m;
  int n;
};
DiagonalDegrees diagonal_degrees(int taylor_degree);

/// The diagonal approximant to the degree-K truncated geometric series.
PadeApproximant diagonal_pade_for_degree(int taylor_degree);

/// Approximation of f(x) = 1/(1-x) on [0, 1] by a diagonal approximant. Values
/// at x >= 1 (tied eigenvalues) and the saturation cap come from the x = 1
/// value sum(p) / (1 + sum(q)).
class PadeFactor {
 public:
  explicit PadeFactor(int taylor_degree);

  int degree() const { return degree_; }
  const PadeApproximant& approximant() const { return approximant_; }

  /// |sum(p) / (1 + sum(q))|, +inf when the denominator sums to exactly zero.
  double peak() const { return peak_; }

  /// Throws NumericalFailureError identifying the ratio when the rational
  /// hits a pole or turns non-positive.
  double operator()(double ratio) const;

 private:
  int degree_;
  PadeApproximant approximant_;
  double peak_;
};

/// Truncated geometric sum 1 + x + ... + x^degree by Horner.
double taylor_geometric(int degree, double x);

enum class ApproxKind { Taylor, Pade };

std::string to_string(ApproxKind kind);

/// errors[r][k] = |1/(1 - ratios[r]) - approx_k(ratios[r])| for degree k,
/// evaluated in the requested precision.
struct ErrorTable {
  ApproxKind kind = ApproxKind::Taylor;
  Precision precision;
  std::vector<int> degrees;
  std::vector<double> ratios;
  std::vector<std::vector<double>> errors;
};

/// Throws InvalidInputError if any ratio is outside [0, 1) or a degree < 1.
ErrorTable approximation_error_table(ApproxKind kind, std::span<const int> degrees,
                                     std::span<const double> ratios, Precision prec);

}  // namespace specgrad
