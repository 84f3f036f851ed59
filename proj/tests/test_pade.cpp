#include "doctest.h"

#include <cmath>
#include <vector>

#include "specgrad/errors.hpp"
#include "specgrad/pade.hpp"

using namespace specgrad;

namespace {

PowerSeries exp_series(int terms) {
  std::vector<double> c(static_cast<std::size_t>(terms));
  double f = 1.0;
  for (int i = 0; i < terms; ++i) {
    if (i > 0) f *= i;
    c[static_cast<std::size_t>(i)] = 1.0 / f;
  }
  return PowerSeries(c);
}

}  // namespace

TEST_SUITE("pade") {

TEST_CASE("power series validation") {
  CHECK_THROWS_AS(PowerSeries({1.0}), InvalidInputError);
  CHECK_THROWS_AS(PowerSeries({1.0, NAN}), InvalidInputError);
  CHECK_THROWS_AS(geometric_series(0), InvalidInputError);
  const PowerSeries s = geometric_series(3);
  CHECK(s.size() == 4);
  CHECK(s[10] == 0.0);
}

TEST_CASE("geometric [0/1] is exactly 1/(1-x)") {
  const PadeApproximant pa = pade_from_series(geometric_series(4), 0, 1);
  REQUIRE(pa.p.size() == 1);
  REQUIRE(pa.q.size() == 1);
  CHECK(pa.p[0] == doctest::Approx(1.0));
  CHECK(pa.q[0] == doctest::Approx(-1.0));
  CHECK(eval_rational(pa, 0.5) == doctest::Approx(2.0));
  CHECK_THROWS_AS(eval_rational(pa, 1.0), PoleError);
}

TEST_CASE("exp [1/1] is (1+x/2)/(1-x/2)") {
  const PowerSeries s = exp_series(6);
  const PadeApproximant pa = pade_from_series(s, 1, 1);
  CHECK(pa.p[0] == doctest::Approx(1.0));
  CHECK(pa.p[1] == doctest::Approx(0.5));
  CHECK(pa.q[0] == doctest::Approx(-0.5));
  CHECK(eval_rational(pa, 1.0) == doctest::Approx(3.0));
  CHECK(series_match_residual(pa, s) < 1e-15);
}

TEST_CASE("exp [2/1] matches the classical coefficients") {
  const PadeApproximant pa = pade_from_series(exp_series(8), 2, 1);
  CHECK(pa.p[0] == doctest::Approx(1.0));
  CHECK(pa.p[1] == doctest::Approx(2.0 / 3.0));
  CHECK(pa.p[2] == doctest::Approx(1.0 / 6.0));
  CHECK(pa.q[0] == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("N = 0 degenerates to the truncated series") {
  const PowerSeries s = exp_series(6);
  const PadeApproximant pa = pade_from_series(s, 3, 0);
  REQUIRE(pa.p.size() == 4);
  for (int i = 0; i <= 3; ++i) CHECK(pa.p[static_cast<std::size_t>(i)] == s[i]);
  CHECK(pa.q.empty());
  CHECK(eval_rational(pa, 0.0) == pa.p[0]);
}

TEST_CASE("construction needs enough coefficients") {
  CHECK_THROWS_AS(pade_from_series(geometric_series(2), 2, 2), InvalidInputError);
  CHECK_THROWS_AS(pade_from_series(geometric_series(2), -1, 1), InvalidInputError);
  CHECK_THROWS_AS(pade_from_continued_fraction(geometric_series(2), 2), InvalidInputError);
}

TEST_CASE("continued fraction of the geometric series is exact") {
  for (int n : {1, 3, 10}) {
    const PadeApproximant pa = pade_from_continued_fraction(geometric_series(2 * n + 2), n);
    for (double x : {0.1, 0.5, 0.9}) CHECK(std::abs(eval_rational(pa, x) - 1.0 / (1.0 - x)) <= 1e-12);
  }
}

TEST_CASE("continued fraction n=0 gives a0 + a1 x") {
  const PadeApproximant pa = pade_from_continued_fraction(exp_series(4), 0);
  CHECK(pa.p.size() == 2);
  CHECK(pa.q.empty());
  CHECK(pa.p[0] == doctest::Approx(1.0));
  CHECK(pa.p[1] == doctest::Approx(1.0));
}

TEST_CASE("continued fraction and linear solve agree for exp [2/1]") {
  const PowerSeries s = exp_series(10);
  const PadeApproximant a = pade_from_series(s, 2, 1);
  const PadeApproximant b = pade_from_continued_fraction(s, 1);
  for (int i = -10; i <= 10; ++i) {
    const double x = 0.1 * i;
    CHECK(std::abs(eval_rational(a, x) - eval_rational(b, x)) <= 1e-10);
  }
}

TEST_CASE("continued fraction reports a breakdown") {
  // 1 + x^2: the second partial numerator vanishes while the tail does not.
  CHECK_THROWS_AS(pade_from_continued_fraction(PowerSeries({1.0, 0.0, 1.0, 0.0}), 1),
                  NumericalFailureError);
}

TEST_CASE("diagonal degree bookkeeping") {
  CHECK(diagonal_degrees(100).m == 50);
  CHECK(diagonal_degrees(100).n == 49);
  CHECK(diagonal_degrees(1).m == 1);
  CHECK(diagonal_degrees(1).n == 0);
  CHECK_THROWS_AS(diagonal_degrees(0), InvalidInputError);
}

TEST_CASE("Taylor table matches the closed-form remainder") {
  const std::vector<int> degrees{50, 100, 200, 300};
  const std::vector<double> ratios{0.9, 0.99, 0.999};
  const ErrorTable t = approximation_error_table(ApproxKind::Taylor, degrees, ratios, Precision::double_());
  for (std::size_t r = 0; r < ratios.size(); ++r) {
    for (std::size_t k = 0; k < degrees.size(); ++k) {
      const double x = ratios[r];
      const double remainder = std::pow(x, degrees[k] + 1) / (1.0 - x);
      CHECK(t.errors[r][k] == doctest::Approx(remainder).epsilon(1e-6 + 1e-12 / remainder));
    }
  }
}

TEST_CASE("zero ratio gives zero error") {
  const std::vector<int> degrees{50, 100};
  const std::vector<double> ratios{0.0};
  for (ApproxKind kind : {ApproxKind::Taylor, ApproxKind::Pade}) {
    const ErrorTable t = approximation_error_table(kind, degrees, ratios, Precision::double_());
    CHECK(t.errors[0][0] == 0.0);
    CHECK(t.errors[0][1] == 0.0);
  }
}

TEST_CASE("table input validation") {
  const std::vector<int> degrees{10};
  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS(approximation_error_table(ApproxKind::Taylor, degrees, bad, Precision::double_()),
                  InvalidInputError);
  const std::vector<int> zero{0};
  const std::vector<double> ok{0.5};
  CHECK_THROWS_AS(approximation_error_table(ApproxKind::Pade, zero, ok, Precision::double_()),
                  InvalidInputError);
}

TEST_CASE("single-precision tables are coarser") {
  const std::vector<int> degrees{100};
  const std::vector<double> ratios{0.3};
  const ErrorTable t = approximation_error_table(ApproxKind::Taylor, degrees, ratios, Precision::single());
  CHECK(t.errors[0][0] < 1e-6);
  CHECK(t.precision == Precision::single());
}

TEST_CASE("Pade factor near the pole") {
  const PadeFactor f(100);
  CHECK(f(0.999) == doctest::Approx(1000.0).epsilon(1e-6));
  CHECK(f(0.5) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f(1.0) == f.peak());
  CHECK(f.peak() > 1e15);
  CHECK(std::isfinite(f.peak()));
}

TEST_CASE("Taylor geometric helper") {
  CHECK(taylor_geometric(3, 0.5) == doctest::Approx(1.875));
  CHECK(taylor_geometric(100, 1.0) == doctest::Approx(101.0));
}

}  // TEST_SUITE
