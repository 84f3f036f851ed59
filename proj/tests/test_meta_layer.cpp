#include "doctest.h"

#include <cmath>
#include <vector>

#include "specgrad/errors.hpp"
#include "specgrad/meta_layer.hpp"
#include "support.hpp"

using namespace specgrad;

namespace {

std::vector<GcpLayerConfig> legal_pairs(Eigen::Index d) {
  return {GcpLayerConfig::eig(BackwardScheme::ordinary()),
          GcpLayerConfig::eig(BackwardScheme::top_n(static_cast<int>(d))),
          GcpLayerConfig::eig(BackwardScheme::trunc()),
          GcpLayerConfig::eig(BackwardScheme::power_iteration()),
          GcpLayerConfig::eig(BackwardScheme::taylor()),
          GcpLayerConfig::eig(BackwardScheme::pade()),
          GcpLayerConfig::eig(BackwardScheme::newton_schulz(20)),
          GcpLayerConfig::newton_schulz(5)};
}

FeatureMatrix sample(std::uint64_t seed, Eigen::Index d, double cond, Eigen::Index n) {
  Rng rng(seed);
  return FeatureMatrix(features_with_spectrum(rng, geometric_spectrum(d, cond), n));
}

}  // namespace

TEST_SUITE("meta_layer") {

TEST_CASE("pairing rules") {
  GcpLayerConfig bad{forward::NewtonSchulz{5}, BackwardScheme::pade(), {}};
  CHECK_THROWS_AS(bad.validate(4), InvalidInputError);
  GcpLayerConfig mismatch{forward::NewtonSchulz{5}, BackwardScheme::newton_schulz(7), {}};
  CHECK_THROWS_AS(mismatch.validate(4), InvalidInputError);
  for (const auto& cfg : legal_pairs(4)) CHECK_NOTHROW(cfg.validate(4));
  CHECK(GcpLayerConfig::newton_schulz(5).describe() == "ns(5)+newton(iters=5)");
  CHECK(GcpLayerConfig::eig(BackwardScheme::taylor(100)).describe() == "eig+taylor(K=100)");
}

TEST_CASE("upper triangle round trip") {
  Matrix m(3, 3);
  m << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  const Vector v = upper_triangle(m);
  REQUIRE(v.size() == 6);
  CHECK(v(0) == 1);
  CHECK(v(2) == 3);
  CHECK(v(3) == 4);
  CHECK(v(5) == 6);
  const Matrix g = upper_triangle_adjoint(v, 3);
  CHECK(g(0, 2) == 3);
  CHECK(g(2, 0) == 0);
  CHECK_THROWS_AS(upper_triangle_adjoint(Vector::Ones(5), 3), InvalidInputError);
}

TEST_CASE("constant rows clamp to an eps-scaled identity") {
  Matrix x(3, 6);
  x.row(0).setConstant(1.0);
  x.row(1).setConstant(-2.0);
  x.row(2).setConstant(0.5);
  const GcpOutput out = gcp_forward(FeatureMatrix(x), GcpLayerConfig::eig(BackwardScheme::ordinary()));
  CHECK(out.clamped() == 3);
  CHECK((out.q.data() - std::sqrt(Precision::double_().eps()) * Matrix::Identity(3, 3)).norm() < 1e-20);
  CHECK_THROWS_AS(gcp_forward(FeatureMatrix(x), GcpLayerConfig::newton_schulz(5)), DomainError);
}

TEST_CASE("hand example composes covariance, clamp and square root") {
  Matrix x(2, 2);
  x << 1, -1, 0, 0;
  const GcpOutput out = gcp_forward(FeatureMatrix(x), GcpLayerConfig::eig(BackwardScheme::ordinary()));
  CHECK(out.clamped() == 1);
  CHECK(out.q.data()(0, 0) == doctest::Approx(1.0));
  CHECK(out.q.data()(1, 1) == doctest::Approx(std::sqrt(Precision::double_().eps())));
  CHECK(std::abs(out.q.data()(0, 1)) < 1e-15);
  CHECK(out.upper.size() == 3);
}

TEST_CASE("EigSqrt and NewtonSchulz(20) forwards agree for cond <= 100") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FeatureMatrix x = sample(seed, 6, 100.0, 24);
    const Matrix a = gcp_forward(x, GcpLayerConfig::eig(BackwardScheme::ordinary())).q.data();
    const Matrix b = gcp_forward(x, GcpLayerConfig::newton_schulz(20)).q.data();
    CHECK((a - b).norm() <= 1e-5 * a.norm());
  }
}

TEST_CASE("forward output is symmetric PSD") {
  const FeatureMatrix x = sample(3, 5, 1e3, 20);
  for (const auto& cfg : legal_pairs(5)) {
    const Matrix q = gcp_forward(x, cfg).q.data();
    CHECK((q - q.transpose()).norm() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(q);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("zero upstream gradient gives zero") {
  const FeatureMatrix x = sample(1, 4, 10.0, 12);
  for (const auto& cfg : legal_pairs(4)) {
    const GcpOutput out = gcp_forward(x, cfg);
    CHECK(gcp_backward(out.cache, Matrix::Zero(4, 4), cfg).norm() == 0.0);
  }
}

TEST_CASE("mismatched cache and config are rejected") {
  const FeatureMatrix x = sample(1, 3, 10.0, 9);
  const GcpOutput eig = gcp_forward(x, GcpLayerConfig::eig(BackwardScheme::ordinary()));
  CHECK_THROWS_AS(gcp_backward(eig.cache, Matrix::Ones(3, 3), GcpLayerConfig::newton_schulz(5)),
                  InvalidInputError);
}

TEST_CASE("every legal pair passes the gradient check on well-conditioned input") {
  const FeatureMatrix x = sample(7, 4, 10.0, 16);
  for (const auto& cfg : legal_pairs(4)) {
    for (LossKind loss : {LossKind::Sum, LossKind::Trace, LossKind::RandomLinear}) {
      GradCheckOptions opts;
      opts.loss = loss;
      const GradCheckReport r = grad_check(cfg, x, opts);
      CHECK_MESSAGE(r.passed, cfg.describe() << " " << to_string(loss) << " err=" << r.max_rel_error << " "
                                             << r.error);
      CHECK(r.n_nonfinite == 0);
    }
  }
}

TEST_CASE("sum loss through EigSqrt+Ordinary is accurate") {
  const FeatureMatrix x = sample(2, 3, 5.0, 10);
  GradCheckOptions opts;
  opts.loss = LossKind::Sum;
  const GradCheckReport r = grad_check(GcpLayerConfig::eig(BackwardScheme::ordinary()), x, opts);
  CHECK(r.max_rel_error <= 1e-5);
  CHECK(r.mean_rel_error <= r.max_rel_error);
}

TEST_CASE("Taylor report tracks the Ordinary report for a 0.5 eigengap") {
  Rng rng(5);
  Vector spectrum(3);
  spectrum << 1.0, 0.5, 0.25;
  const FeatureMatrix x(features_with_spectrum(rng, spectrum, 12));
  const GradCheckReport o = grad_check(GcpLayerConfig::eig(BackwardScheme::ordinary()), x);
  const GradCheckReport t = grad_check(GcpLayerConfig::eig(BackwardScheme::taylor(100)), x);
  CHECK(std::abs(o.max_rel_error - t.max_rel_error) <= 1e-6);
}

TEST_CASE("Trunc bias on a near-degenerate spectrum is reported, not thrown") {
  Rng rng(8);
  Vector spectrum(3);
  spectrum << 1.0, 1.0 - 1e-11, 0.5;
  const FeatureMatrix x(features_with_spectrum(rng, spectrum, 12));
  GradCheckReport r;
  CHECK_NOTHROW(r = grad_check(GcpLayerConfig::eig(BackwardScheme::trunc(1e10)), x));
  CHECK(r.error.empty());
  CHECK(r.n_nonfinite == 0);
}

TEST_CASE("TopN reports active bias") {
  const FeatureMatrix x = sample(4, 4, 10.0, 16);
  const GradCheckReport r = grad_check(GcpLayerConfig::eig(BackwardScheme::top_n(2)), x);
  CHECK(r.bias_active);
  CHECK_FALSE(r.passed);
  CHECK(r.n_nonfinite == 0);
}

TEST_CASE("Ordinary with tied eigenvalues raises a typed error") {
  Rng rng(3);
  Vector spectrum(3);
  spectrum << 1.0, 1.0, 0.5;
  EigCache cache{gaussian_matrix(rng, 3, 8), EigenDecomposition{spectrum, random_orthogonal(rng, 3)}, 0};
  const GcpLayerConfig cfg = GcpLayerConfig::eig(BackwardScheme::ordinary());
  try {
    (void)gcp_backward(GcpCache{cache}, Matrix::Ones(3, 3), cfg);
    FAIL("expected a numerical failure");
  } catch (const NumericalFailureError& e) {
    const std::string what = e.what();
    CHECK(what.find("ordinary") != std::string::npos);
    CHECK(what.find("(0,1)") != std::string::npos);
  }
  CHECK_NOTHROW(gcp_backward(GcpCache{cache}, Matrix::Ones(3, 3), GcpLayerConfig::eig(BackwardScheme::taylor())));
}

TEST_CASE("loss kind names") {
  for (LossKind k : {LossKind::Sum, LossKind::Trace, LossKind::RandomLinear})
    CHECK(parse_loss_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_loss_kind("mean"), InvalidInputError);
}

TEST_CASE("grad_check size limit") {
  Rng rng(1);
  CHECK_THROWS_AS(grad_check(GcpLayerConfig::eig(BackwardScheme::ordinary()),
                             FeatureMatrix(gaussian_matrix(rng, 10, 1001))),
                  InvalidInputError);
}

}  // TEST_SUITE
