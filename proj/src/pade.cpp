#include "specgrad/pade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "specgrad/errors.hpp"

namespace specgrad {

namespace {

// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

template <typename T>
T horner(std::span<const double> coeffs, T x) {
  T acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + static_cast<T>(*it);
  return acc;
}

template <typename T>
T eval_rational_as(const PadeApproximant& pa, T x) {
  const std::vector<double> den = pa.denominator();
  return horner<T>(pa.p, x) / horner<T>(den, x);
}

template <typename T>
T taylor_as(int degree, T x) {
  T acc = 1;
  for (int i = 0; i < degree; ++i) acc = acc * x + T(1);
  return acc;
}

// c / r as a power series truncated to r.size() terms.
std::vector<double> series_quotient(double c, const std::vector<double>& r) {
  std::vector<double> w(r.size(), 0.0);
  w[0] = c / r[0];
  for (std::size_t k = 1; k < r.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 1; i <= k; ++i) acc += r[i] * w[k - i];
    w[k] = -acc / r[0];
  }
  return w;
}

std::vector<double> poly_axpy(const std::vector<double>& a, double c, const std::vector<double>& b,
                              int shift) {
  // a + c * x^shift * b
  std::vector<double> out(std::max(a.size(), b.size() + static_cast<std::size_t>(shift)), 0.0);
  std::copy(a.begin(), a.end(), out.begin());
  for (std::size_t i = 0; i < b.size(); ++i) out[i + static_cast<std::size_t>(shift)] += c * b[i];
  return out;
}

}  // namespace

PowerSeries::PowerSeries(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.size() < 2) throw InvalidInputError("power series needs at least two coefficients");
  for (double c : coeffs_)
    if (!std::isfinite(c)) throw InvalidInputError("power series has a non-finite coefficient");
}

PowerSeries geometric_series(int degree) {
  if (degree < 1) throw InvalidInputError("geometric series degree must be >= 1");
  return PowerSeries(std::vector<double>(static_cast<std::size_t>(degree) + 1, 1.0));
}

std::vector<double> PadeApproximant::denominator() const {
  std::vector<double> den;
  den.reserve(q.size() + 1);
  den.push_back(1.0);
  den.insert(den.end(), q.begin(), q.end());
  return den;
}

PadeApproximant pade_from_series(const PowerSeries& s, int m, int n) {
  if (m < 0 || n < 0) throw InvalidInputError("Pade degrees must be non-negative");
  if (s.size() < static_cast<std::size_t>(m + n + 1)) {
    std::ostringstream msg;
    msg << "[" << m << "/" << n << "] Pade approximant needs " << m + n + 1
        << " series coefficients, got " << s.size();
    throw InvalidInputError(msg.str());
  }

  PadeApproximant pa;
  pa.q.assign(static_cast<std::size_t>(n), 0.0);
  if (n > 0) {
    // Row k (1..N): sum_j a_{M+k-j} q_j = -a_{M+k}.
    Matrix toeplitz(n, n);
    Vector rhs(n);
    for (int k = 1; k <= n; ++k) {
      rhs(k - 1) = -s[m + k];
      for (int j = 1; j <= n; ++j) toeplitz(k - 1, j - 1) = s[m + k - j];
    }
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(toeplitz);
    const Vector q = cod.solve(rhs);
    for (int j = 0; j < n; ++j) pa.q[static_cast<std::size_t>(j)] = q(j);
  }

  const std::vector<double> den = pa.denominator();
  pa.p.assign(static_cast<std::size_t>(m) + 1, 0.0);
  for (int i = 0; i <= m; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= std::min(i, n); ++j) acc += s[i - j] * den[static_cast<std::size_t>(j)];
    pa.p[static_cast<std::size_t>(i)] = acc;
  }
  return pa;
}

PadeApproximant pade_from_continued_fraction(const PowerSeries& s, int n) {
  if (n < 0) throw InvalidInputError("continued fraction order must be non-negative");
  const std::size_t needed = 2 * static_cast<std::size_t>(n) + 2;
  if (s.size() < needed) {
    std::ostringstream msg;
    msg << "[" << n + 1 << "/" << n << "] convergent needs " << needed
        << " series coefficients, got " << s.size();
    throw InvalidInputError(msg.str());
  }

  double scale = 1.0;
  for (std::size_t i = 0; i < needed; ++i) scale = std::max(scale, std::abs(s.coeffs()[i]));
  const double zero_tol = 64.0 * std::numeric_limits<double>::epsilon() * scale;

  // Partial numerators c_0, c_1 x, c_2 x, ... of the corresponding fraction.
  std::vector<double> cf{s.coeffs()[0]};
  std::vector<double> rest(s.coeffs().begin() + 1, s.coeffs().begin() + static_cast<long>(needed));
  for (std::size_t step = 1; step < needed; ++step) {
    const bool exhausted = std::all_of(rest.begin(), rest.end(),
                                       [&](double v) { return std::abs(v) <= zero_tol; });
    if (exhausted) break;
    if (std::abs(rest[0]) <= zero_tol) {
      std::ostringstream msg;
      msg << "continued fraction breaks down at step " << step << ": zero partial numerator";
      throw NumericalFailureError(msg.str(), rest[0]);
    }
    const double c = rest[0];
    cf.push_back(c);
    const std::vector<double> w = series_quotient(c, rest);
    rest.assign(w.begin() + 1, w.end());
  }

  std::vector<double> a_prev{1.0};
  std::vector<double> b_prev{0.0};
  std::vector<double> a_cur{cf[0]};
  std::vector<double> b_cur{1.0};
  for (std::size_t k = 1; k < cf.size(); ++k) {
    std::vector<double> a_next = poly_axpy(a_cur, cf[k], a_prev, 1);
    std::vector<double> b_next = poly_axpy(b_cur, cf[k], b_prev, 1);
    a_prev = std::move(a_cur);
    b_prev = std::move(b_cur);
    a_cur = std::move(a_next);
    b_cur = std::move(b_next);
  }

  PadeApproximant pa;
  pa.p.assign(static_cast<std::size_t>(n) + 2, 0.0);
  pa.q.assign(static_cast<std::size_t>(n), 0.0);
  const double b0 = b_cur[0];
  for (std::size_t i = 0; i < a_cur.size() && i < pa.p.size(); ++i) pa.p[i] = a_cur[i] / b0;
  for (std::size_t i = 1; i < b_cur.size() && i <= pa.q.size(); ++i) pa.q[i - 1] = b_cur[i] / b0;
  return pa;
}

double eval_rational(const PadeApproximant& pa, double x) {
  const std::vector<double> den = pa.denominator();
  const double q = horner<double>(den, x);
  if (!(std::abs(q) >= 1e-300)) {
    std::ostringstream msg;
    msg << "rational approximant has a pole at x = " << x;
    throw PoleError(msg.str(), x);
  }
  return horner<double>(pa.p, x) / q;
}

double series_match_residual(const PadeApproximant& pa, const PowerSeries& s) {
  const int order = pa.m() + pa.n();
  const std::vector<double> den = pa.denominator();
  double scale = 1.0;
  for (int i = 0; i <= order; ++i) scale = std::max(scale, std::abs(s[i]));
  double worst = 0.0;
  for (int i = 0; i <= order; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= std::min(i, pa.n()); ++j) acc += den[static_cast<std::size_t>(j)] * s[i - j];
    const double target = i <= pa.m() ? pa.p[static_cast<std::size_t>(i)] : 0.0;
    worst = std::max(worst, std::abs(acc - target));
  }
  return worst / scale;
}

DiagonalDegrees diagonal_degrees(int taylor_degree) {
  if (taylor_degree < 1) throw InvalidInputError("Taylor degree must be >= 1");
  const int n = (taylor_degree - 1) / 2;
  return {n + 1, n};
}

PadeApproximant diagonal_pade_for_degree(int taylor_degree) {
  const DiagonalDegrees deg = diagonal_degrees(taylor_degree);
  return pade_from_series(geometric_series(taylor_degree), deg.m, deg.n);
}

PadeFactor::PadeFactor(int taylor_degree)
    : degree_(taylor_degree), approximant_(diagonal_pade_for_degree(taylor_degree)) {
  const double num = compensated_sum(approximant_.p);
  const double den = compensated_sum(approximant_.denominator());
  peak_ = den == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(num / den);
}

double PadeFactor::operator()(double ratio) const {
  if (ratio >= 1.0) {
    if (!std::isfinite(peak_)) {
      std::ostringstream msg;
      msg << "Pade[" << approximant_.m() << "/" << approximant_.n()
          << "] denominator vanishes at ratio " << ratio;
      throw NumericalFailureError(msg.str());
    }
    return peak_;
  }
  double value;
  try {
    value = eval_rational(approximant_, ratio);
  } catch (const PoleError&) {
    std::ostringstream msg;
    msg << "Pade[" << approximant_.m() << "/" << approximant_.n()
        << "] denominator vanishes at ratio " << ratio;
    throw NumericalFailureError(msg.str());
  }
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << "Pade[" << approximant_.m() << "/" << approximant_.n() << "] gives " << value
        << " at ratio " << ratio;
    throw NumericalFailureError(msg.str());
  }
  return std::min(value, peak_);
}

double taylor_geometric(int degree, double x) { return taylor_as<double>(degree, x); }

std::string to_string(ApproxKind kind) { return kind == ApproxKind::Taylor ? "taylor" : "pade"; }

namespace {

template <typename T>
std::vector<std::vector<double>> fill_table(ApproxKind kind, std::span<const int> degrees,
                                            std::span<const double> ratios) {
  std::vector<PadeApproximant> approximants;
  if (kind == ApproxKind::Pade)
    for (int k : degrees) approximants.push_back(diagonal_pade_for_degree(k));

  std::vector<std::vector<double>> rows;
  rows.reserve(ratios.size());
  for (double r : ratios) {
    const T x = static_cast<T>(r);
    const T exact = T(1) / (T(1) - x);
    std::vector<double> row;
    row.reserve(degrees.size());
    for (std::size_t k = 0; k < degrees.size(); ++k) {
      const T approx = kind == ApproxKind::Taylor ? taylor_as<T>(degrees[k], x)
                                                  : eval_rational_as<T>(approximants[k], x);
      row.push_back(static_cast<double>(std::abs(exact - approx)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ErrorTable approximation_error_table(ApproxKind kind, std::span<const int> degrees,
                                     std::span<const double> ratios, Precision prec) {
  for (double r : ratios) {
    if (!(r >= 0.0 && r < 1.0)) {
      std::ostringstream msg;
      msg << "ratio " << r << " is outside [0, 1)";
      throw InvalidInputError(msg.str());
    }
  }
  for (int k : degrees)
    if (k < 1) throw InvalidInputError("approximation degree must be >= 1");

  ErrorTable table;
  table.kind = kind;
  table.precision = prec;
  table.degrees.assign(degrees.begin(), degrees.end());
  table.ratios.assign(ratios.begin(), ratios.end());
  table.errors = prec.mode() == Precision::Mode::Double ? fill_table<double>(kind, degrees, ratios)
                                                        : fill_table<float>(kind, degrees, ratios);
  return table;
}

}  // namespace specgrad
