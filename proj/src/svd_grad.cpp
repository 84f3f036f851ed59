#include "specgrad/svd_grad.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "specgrad/errors.hpp"
#include "specgrad/newton_schulz.hpp"
#include "specgrad/pade.hpp"
#include "specgrad/random.hpp"

namespace specgrad {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fills the upper triangle with upper(i, j) and mirrors it with a sign flip.
template <typename F>
Matrix antisymmetric_from_upper(Eigen::Index d, F&& upper) {
  Matrix k = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double v = upper(i, j);
      k(i, j) = v;
      k(j, i) = -v;
    }
  return k;
}

double taylor_factor(int degree, double ratio) {
  // 1 + r + ... + r^K
  double acc = 1.0;
  for (int m = 0; m < degree; ++m) acc = acc * ratio + 1.0;
  return acc;
}

// Building the approximant is a least-squares solve; reuse it per degree.
const PadeFactor& pade_factor(int degree) {
  static std::mutex mutex;
  static std::map<int, PadeFactor> cache;
  const std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, PadeFactor(degree)).first;
  return it->second;
}

Matrix deflated(const EigenDecomposition& e, Eigen::Index from) {
  const Eigen::Index d = e.dim();
  const Eigen::Index k = d - from;
  const auto u = e.eigenvectors.rightCols(k);
  return u * e.eigenvalues.tail(k).asDiagonal() * u.transpose();
}

Matrix pi_grad_covariance(const Matrix& grad_q, const EigenDecomposition& e, int iterations) {
  const Eigen::Index d = e.dim();
  const EigenGradients g = grad_eigvec_eigval(grad_q, e);
  const Matrix& u = e.eigenvectors;
  const Matrix w = u.transpose() * g.grad_u;

  Matrix grad_p = u * g.grad_lambda.asDiagonal() * u.transpose();
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    const auto upper = u.rightCols(d - i - 1);
    const PowerIterationTrace trace =
        power_iteration(SymPsdMatrix(deflated(e, i)), iterations, u.col(i));
    // Entries (j, i), j > i, come from this chain directly; entries (i, j)
    // are their antisymmetric mirror.
    const Vector down = upper * (upper.transpose() * g.grad_u.col(i));
    const Vector across = upper * w.row(i).tail(d - i - 1).transpose();
    grad_p += pi_gradient(trace, down);
    grad_p -= pi_gradient(trace, across).transpose();
  }
  return grad_p;
}

}  // namespace

std::string BackwardScheme::name() const {
  return std::visit(overloaded{
                        [](const scheme::Ordinary&) { return std::string("ordinary"); },
                        [](const scheme::TopN&) { return std::string("topn"); },
                        [](const scheme::Trunc&) { return std::string("trunc"); },
                        [](const scheme::PowerIteration&) { return std::string("pi"); },
                        [](const scheme::Taylor&) { return std::string("taylor"); },
                        [](const scheme::Pade&) { return std::string("pade"); },
                        [](const scheme::NewtonSchulzBackward&) { return std::string("newton"); },
                    },
                    kind);
}

std::string BackwardScheme::describe() const {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const scheme::Ordinary&) { out << "ordinary"; },
                 [&](const scheme::TopN& s) { out << "topn(N=" << s.n << ")"; },
                 [&](const scheme::Trunc& s) { out << "trunc(T=" << s.threshold << ")"; },
                 [&](const scheme::PowerIteration& s) { out << "pi(k=" << s.iterations << ")"; },
                 [&](const scheme::Taylor& s) { out << "taylor(K=" << s.degree << ")"; },
                 [&](const scheme::Pade& s) { out << "pade(K=" << s.degree << ")"; },
                 [&](const scheme::NewtonSchulzBackward& s) {
                   out << "newton(iters=" << s.iterations << ")";
                 },
             },
             kind);
  return out.str();
}

void BackwardScheme::validate(Eigen::Index d) const {
  auto fail = [this](const std::string& why) {
    throw InvalidInputError(describe() + ": " + why);
  };
  std::visit(overloaded{
                 [](const scheme::Ordinary&) {},
                 [&](const scheme::TopN& s) {
                   if (s.n < 1 || s.n > d) fail("need 1 <= N <= d");
                 },
                 [&](const scheme::Trunc& s) {
                   if (!(s.threshold > 0.0)) fail("need T > 0");
                 },
                 [&](const scheme::PowerIteration& s) {
                   if (s.iterations < 1) fail("need at least one iteration");
                 },
                 [&](const scheme::Taylor& s) {
                   if (s.degree < 1) fail("need K >= 1");
                 },
                 [&](const scheme::Pade& s) {
                   if (s.degree < 1) fail("need K >= 1");
                 },
                 [&](const scheme::NewtonSchulzBackward& s) {
                   if (s.iterations < 1) fail("need at least one iteration");
                 },
             },
             kind);
}

bool BackwardScheme::has_k_matrix() const {
  return !std::holds_alternative<scheme::PowerIteration>(kind) &&
         !std::holds_alternative<scheme::NewtonSchulzBackward>(kind);
}

int default_top_n(Eigen::Index d) {
  const auto n = static_cast<int>(std::lround(static_cast<double>(d) * 200.0 / 256.0));
  return std::max(1, n);
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> KMatrix::nonfinite_entries() const {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (Eigen::Index j = 0; j < data_.cols(); ++j)
    for (Eigen::Index i = 0; i < data_.rows(); ++i)
      if (!std::isfinite(data_(i, j))) out.emplace_back(i, j);
  return out;
}

EigenGradients grad_eigvec_eigval(const Matrix& grad_q, const EigenDecomposition& e) {
  const Eigen::Index d = e.dim();
  if (grad_q.rows() != d || grad_q.cols() != d)
    throw InvalidInputError("grad_q does not match the eigendecomposition");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(e.eigenvalues(i) > 0.0)) {
      std::ostringstream msg;
      msg << "eigenvalue " << i << " is " << e.eigenvalues(i) << "; clamp before backward";
      throw DomainError(msg.str());
    }
  }
  const Matrix& u = e.eigenvectors;
  const Vector f = e.eigenvalues.cwiseSqrt();

  EigenGradients g;
  g.grad_u = (grad_q + grad_q.transpose()) * u * f.asDiagonal();
  const Vector projected = (u.transpose() * grad_q * u).diagonal();
  g.grad_lambda = 0.5 * projected.cwiseQuotient(f);
  return g;
}

KMatrix k_matrix(const EigenDecomposition& e, const BackwardScheme& s) {
  const Eigen::Index d = e.dim();
  const Vector& lambda = e.eigenvalues;
  const auto ordinary = [&](Eigen::Index i, Eigen::Index j) {
    const double gap = lambda(i) - lambda(j);
    return gap == 0.0 ? kInf : 1.0 / gap;
  };

  return std::visit(
      overloaded{
          [&](const scheme::Ordinary&) { return KMatrix(antisymmetric_from_upper(d, ordinary)); },
          [&](const scheme::TopN& t) {
            Vector kept = lambda;
            for (Eigen::Index i = t.n; i < d; ++i) kept(i) = 0.0;
            return KMatrix(antisymmetric_from_upper(d, [&](Eigen::Index i, Eigen::Index j) {
              if (kept(i) == 0.0 && kept(j) == 0.0) return 0.0;
              const double gap = kept(i) - kept(j);
              return gap == 0.0 ? kInf : 1.0 / gap;
            }));
          },
          [&](const scheme::Trunc& t) {
            return KMatrix(antisymmetric_from_upper(d, [&](Eigen::Index i, Eigen::Index j) {
              return std::clamp(ordinary(i, j), -t.threshold, t.threshold);
            }));
          },
          [&](const scheme::Taylor& t) {
            return KMatrix(antisymmetric_from_upper(d, [&](Eigen::Index i, Eigen::Index j) {
              return taylor_factor(t.degree, lambda(j) / lambda(i)) / lambda(i);
            }));
          },
          [&](const scheme::Pade& t) {
            const PadeFactor& factor = pade_factor(t.degree);
            return KMatrix(antisymmetric_from_upper(d, [&](Eigen::Index i, Eigen::Index j) {
              return factor(lambda(j) / lambda(i)) / lambda(i);
            }));
          },
          [&](const scheme::PowerIteration&) -> KMatrix {
            throw InvalidInputError("power-iteration scheme has no K matrix");
          },
          [&](const scheme::NewtonSchulzBackward&) -> KMatrix {
            throw InvalidInputError("Newton-Schulz backward has no K matrix");
          },
      },
      s.kind);
}

Matrix grad_covariance(const Matrix& grad_q, const EigenDecomposition& e,
                       const BackwardScheme& s) {
  if (const auto* pi = std::get_if<scheme::PowerIteration>(&s.kind))
    return pi_grad_covariance(grad_q, e, pi->iterations);
  if (const auto* ns = std::get_if<scheme::NewtonSchulzBackward>(&s.kind)) {
    if (grad_q.rows() != e.dim() || grad_q.cols() != e.dim())
      throw InvalidInputError("grad_q does not match the eigendecomposition");
    const NewtonSchulzResult fwd = ns_forward(SymPsdMatrix(e.reconstruct()), ns->iterations);
    return ns_backward(fwd.trace, grad_q);
  }

  const EigenGradients g = grad_eigvec_eigval(grad_q, e);
  const KMatrix k = k_matrix(e, s);
  const Matrix& u = e.eigenvectors;
  Matrix inner = k.data().transpose().cwiseProduct(u.transpose() * g.grad_u);
  inner.diagonal() += g.grad_lambda;
  return u * inner * u.transpose();
}

PowerIterationTrace power_iteration(const SymPsdMatrix& p, int k_iters, const Vector& v0) {
  if (k_iters < 1) throw InvalidInputError("power iteration needs at least one step");
  if (v0.size() != p.dim()) throw InvalidInputError("start vector has the wrong dimension");
  const double n0 = v0.norm();
  if (!(n0 > 0.0)) throw InvalidInputError("power iteration start vector is zero");

  PowerIterationTrace trace;
  trace.p = p.data();
  trace.steps.reserve(static_cast<std::size_t>(k_iters) + 1);
  trace.norms.reserve(static_cast<std::size_t>(k_iters));
  trace.steps.push_back(v0 / n0);
  for (int k = 1; k <= k_iters; ++k) {
    const Vector w = trace.p * trace.steps.back();
    const double norm = w.norm();
    if (!(norm > 0.0)) {
      std::ostringstream msg;
      msg << "power iteration step " << k << ": P u is zero";
      throw DegenerateInputError(msg.str());
    }
    trace.norms.push_back(norm);
    trace.steps.push_back(w / norm);
  }
  return trace;
}

Matrix pi_gradient(const PowerIterationTrace& trace, const Vector& grad_u) {
  const Eigen::Index d = trace.p.rows();
  if (grad_u.size() != d) throw InvalidInputError("grad_u has the wrong dimension");
  Matrix grad_p = Matrix::Zero(d, d);
  Vector g = grad_u;
  for (int k = trace.iterations() - 1; k >= 0; --k) {
    const auto idx = static_cast<std::size_t>(k);
    const double norm = trace.norms[idx];
    if (!(norm > 0.0)) throw DegenerateInputError("power iteration trace has a zero norm");
    const Vector& next = trace.steps[idx + 1];
    const Vector gw = (g - next * next.dot(g)) / norm;
    grad_p.noalias() += gw * trace.steps[idx].transpose();
    g = trace.p.transpose() * gw;
  }
  return grad_p;
}

bool GradBound::single_safe() const {
  return has_analytic_bound && std::isfinite(max_value) && max_value < static_cast<double>(FLT_MAX);
}

GradBound gradient_upper_bound(const BackwardScheme& s, Precision prec) {
  const double eps = prec.eps();
  GradBound b;
  b.scheme = s.name();
  std::visit(overloaded{
                 [&](const scheme::Ordinary&) {
                   b.analytic_form = "1/(lambda_i-lambda_j)";
                   b.max_value = kInf;
                   b.trigger = "lambda_i=lambda_j";
                 },
                 [&](const scheme::TopN&) {
                   b.analytic_form = "1/lambda_N";
                   b.max_value = 1.0 / eps;
                   b.trigger = "lambda_N<=eps";
                 },
                 [&](const scheme::Trunc& t) {
                   b.analytic_form = "T";
                   b.max_value = t.threshold;
                   b.trigger = "|1/(lambda_i-lambda_j)|>=T";
                 },
                 [&](const scheme::PowerIteration& p) {
                   b.analytic_form = "k/lambda_i";
                   b.max_value = static_cast<double>(p.iterations) / eps;
                   b.trigger = "lambda_i=lambda_j<=eps";
                 },
                 [&](const scheme::Taylor& t) {
                   b.analytic_form = "(K+1)/lambda_i";
                   b.max_value = static_cast<double>(t.degree + 1) / eps;
                   b.trigger = "lambda_i=lambda_j<=eps";
                 },
                 [&](const scheme::Pade& t) {
                   b.analytic_form = "(1/lambda_i)*sum(p_m)/(1+sum(q_n))";
                   b.max_value = pade_factor(t.degree).peak() / eps;
                   b.trigger = "lambda_i=lambda_j<=eps";
                 },
                 [&](const scheme::NewtonSchulzBackward&) {
                   b.analytic_form = "/";
                   b.max_value = std::numeric_limits<double>::quiet_NaN();
                   b.has_analytic_bound = false;
                   b.trigger = "/";
                 },
             },
             s.kind);
  return b;
}

double beta_smoothness(const GradientFn& layer_grad, const Matrix& x,
                       const BetaSmoothnessOptions& options, const std::string& scheme_name) {
  if (options.samples < 2) throw InvalidInputError("beta-smoothness needs at least two samples");
  if (!(options.perturb_scale > 0.0)) throw InvalidInputError("perturbation scale must be > 0");

  auto checked = [&](const Matrix& at) {
    Matrix g = layer_grad(at);
    if (!g.allFinite())
      throw NumericalFailureError("non-finite gradient from scheme " + scheme_name);
    return g;
  };

  Rng rng(options.seed);
  const Matrix base = checked(x);
  const double radius = options.perturb_scale * x.norm();
  double worst = 0.0;
  for (int s = 0; s < options.samples; ++s) {
    Matrix delta = gaussian_matrix(rng, x.rows(), x.cols());
    delta *= radius / delta.norm();
    const Matrix moved = checked(x + delta);
    worst = std::max(worst, (base - moved).norm() / delta.norm());
  }
  return worst;
}

}  // namespace specgrad
