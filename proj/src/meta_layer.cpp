#include "specgrad/meta_layer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "specgrad/errors.hpp"
#include "specgrad/random.hpp"

namespace specgrad {

namespace {

constexpr double kNewtonSchulzBiasTolerance = 1e-6;

struct BackwardResult {
  Matrix grad_x;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> nonfinite_k;
};

// Gradient without the finiteness guard; grad_check needs to count the damage.
BackwardResult backward_unchecked(const GcpCache& cache, const Matrix& grad_q,
                                  const GcpLayerConfig& cfg) {
  BackwardResult out;
  if (const auto* ns = std::get_if<NsCache>(&cache)) {
    if (!cfg.uses_newton_schulz_forward())
      throw InvalidInputError("Newton-Schulz cache passed with an eigendecomposition config");
    const Matrix grad_p = ns_backward(ns->trace, grad_q);
    out.grad_x = (grad_p + grad_p.transpose()) * centered_scaled(ns->x);
    return out;
  }
  const auto& eig = std::get<EigCache>(cache);
  if (cfg.uses_newton_schulz_forward())
    throw InvalidInputError("eigendecomposition cache passed with a Newton-Schulz config");
  if (cfg.backward.has_k_matrix()) out.nonfinite_k = k_matrix(eig.eig, cfg.backward).nonfinite_entries();
  const Matrix grad_p = grad_covariance(grad_q, eig.eig, cfg.backward);
  out.grad_x = (grad_p + grad_p.transpose()) * centered_scaled(eig.x);
  return out;
}

std::string format_entries(const std::vector<std::pair<Eigen::Index, Eigen::Index>>& entries) {
  std::ostringstream out;
  const std::size_t shown = std::min<std::size_t>(entries.size(), 8);
  for (std::size_t k = 0; k < shown; ++k) {
    if (k) out << ", ";
    out << "(" << entries[k].first << "," << entries[k].second << ")";
  }
  if (entries.size() > shown) out << ", ... " << entries.size() - shown << " more";
  return out.str();
}

bool scheme_bias_active(const GcpLayerConfig& cfg, const GcpCache& cache) {
  const auto* eig = std::get_if<EigCache>(&cache);
  if (!eig) return false;
  const Vector& lambda = eig->eig.eigenvalues;
  if (const auto* t = std::get_if<scheme::TopN>(&cfg.backward.kind))
    return t->n < lambda.size() && lambda(t->n) > 0.0;
  if (const auto* t = std::get_if<scheme::Trunc>(&cfg.backward.kind)) {
    const KMatrix k = k_matrix(eig->eig, BackwardScheme::ordinary());
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
      for (Eigen::Index j = 0; j < lambda.size(); ++j)
        if (i != j && !(std::abs(k(i, j)) <= t->threshold)) return true;
  }
  if (const auto* t = std::get_if<scheme::NewtonSchulzBackward>(&cfg.backward.kind)) {
    // The reverse pass differentiates an unconverged iteration.
    const Matrix exact = matrix_power(eig->eig, 0.5).data();
    const Matrix approx = ns_forward(SymPsdMatrix(eig->eig.reconstruct()), t->iterations).q.data();
    return (approx - exact).norm() > kNewtonSchulzBiasTolerance * exact.norm();
  }
  return false;
}

double loss_value(const Matrix& q, LossKind kind, const Matrix& weights) {
  switch (kind) {
    case LossKind::Sum:
      return q.sum();
    case LossKind::Trace:
      return q.trace();
    case LossKind::RandomLinear:
      return weights.cwiseProduct(q).sum();
  }
  return 0.0;
}

Matrix loss_gradient(Eigen::Index d, LossKind kind, const Matrix& weights) {
  switch (kind) {
    case LossKind::Sum:
      return Matrix::Ones(d, d);
    case LossKind::Trace:
      return Matrix::Identity(d, d);
    case LossKind::RandomLinear:
      return weights;
  }
  return Matrix::Zero(d, d);
}

}  // namespace

GcpLayerConfig GcpLayerConfig::eig(BackwardScheme backward, Precision prec) {
  backward.precision = prec;
  return {forward::EigSqrt{}, backward, prec};
}

GcpLayerConfig GcpLayerConfig::newton_schulz(int iterations, Precision prec) {
  BackwardScheme backward = BackwardScheme::newton_schulz(iterations);
  backward.precision = prec;
  return {forward::NewtonSchulz{iterations}, backward, prec};
}

bool GcpLayerConfig::uses_newton_schulz_forward() const {
  return std::holds_alternative<forward::NewtonSchulz>(forward);
}

std::string GcpLayerConfig::describe() const {
  std::ostringstream out;
  if (const auto* ns = std::get_if<forward::NewtonSchulz>(&forward))
    out << "ns(" << ns->iterations << ")";
  else
    out << "eig";
  out << "+" << backward.describe();
  return out.str();
}

void GcpLayerConfig::validate(Eigen::Index d) const {
  backward.validate(d);
  if (const auto* ns = std::get_if<forward::NewtonSchulz>(&forward)) {
    if (ns->iterations < 1) throw InvalidInputError("Newton-Schulz forward needs iterations >= 1");
    const auto* back = std::get_if<scheme::NewtonSchulzBackward>(&backward.kind);
    if (!back)
      throw InvalidInputError("Newton-Schulz forward pairs only with the Newton-Schulz backward, got " +
                              backward.describe());
    if (back->iterations != ns->iterations)
      throw InvalidInputError("Newton-Schulz forward and backward iteration counts differ");
  }
}

std::size_t GcpOutput::clamped() const {
  const auto* eig = std::get_if<EigCache>(&cache);
  return eig ? eig->clamped : 0;
}

Vector upper_triangle(const Matrix& m) {
  const Eigen::Index d = m.rows();
  Vector v(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) v(k++) = m(i, j);
  return v;
}

Matrix upper_triangle_adjoint(const Vector& grad_upper, Eigen::Index d) {
  if (grad_upper.size() != d * (d + 1) / 2)
    throw InvalidInputError("upper-triangle gradient has the wrong length");
  Matrix g = Matrix::Zero(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) g(i, j) = grad_upper(k++);
  return g;
}

GcpOutput gcp_forward(const FeatureMatrix& x, const GcpLayerConfig& cfg) {
  cfg.validate(x.dim());
  const SymPsdMatrix p = covariance(x);
  if (const auto* ns = std::get_if<forward::NewtonSchulz>(&cfg.forward)) {
    NewtonSchulzResult r = ns_forward(p, ns->iterations);
    Vector upper = upper_triangle(r.q.data());
    return {std::move(r.q), NsCache{x.data(), std::move(r.trace)}, std::move(upper)};
  }
  const EigenDecomposition raw = eigh(p);
  EigCache cache{x.data(), clamp_eigenvalues(raw, cfg.precision), count_below_eps(raw, cfg.precision)};
  SymPsdMatrix q = matrix_power(cache.eig, 0.5);
  Vector upper = upper_triangle(q.data());
  return {std::move(q), std::move(cache), std::move(upper)};
}

Matrix gcp_backward(const GcpCache& cache, const Matrix& grad_q, const GcpLayerConfig& cfg) {
  BackwardResult r = backward_unchecked(cache, grad_q, cfg);
  if (!r.nonfinite_k.empty()) {
    throw NumericalFailureError("scheme " + cfg.backward.describe() + " produced non-finite K entries " +
                                format_entries(r.nonfinite_k));
  }
  if (!r.grad_x.allFinite())
    throw NumericalFailureError("scheme " + cfg.backward.describe() + " produced a non-finite gradient");
  return std::move(r.grad_x);
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Sum:
      return "sum";
    case LossKind::Trace:
      return "trace";
    case LossKind::RandomLinear:
      return "random-linear";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "sum") return LossKind::Sum;
  if (name == "trace") return LossKind::Trace;
  if (name == "random-linear") return LossKind::RandomLinear;
  throw InvalidInputError("unknown loss kind '" + name + "'");
}

GradCheckReport grad_check(const GcpLayerConfig& cfg, const FeatureMatrix& x,
                           const GradCheckOptions& options) {
  const Eigen::Index d = x.dim();
  const Eigen::Index n = x.samples();
  if (d * n > 10000) throw InvalidInputError("grad_check needs d * N <= 10^4");
  cfg.validate(d);

  GradCheckReport report;
  report.scheme = cfg.describe();
  report.tolerance = options.tolerance;

  Rng rng(options.seed);
  const Matrix weights = gaussian_matrix(rng, d, d);
  const Matrix grad_q = loss_gradient(d, options.loss, weights);

  BackwardResult analytic;
  try {
    const GcpOutput out = gcp_forward(x, cfg);
    report.clamped = out.clamped();
    report.bias_active = scheme_bias_active(cfg, out.cache);
    analytic = backward_unchecked(out.cache, grad_q, cfg);
  } catch (const Error& e) {
    report.error = e.what();
    return report;
  }
  report.nonfinite_k = analytic.nonfinite_k;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < d; ++i)
      if (!std::isfinite(analytic.grad_x(i, j))) ++report.n_nonfinite;

  Matrix numeric(d, n);
  try {
    Matrix probe = x.data();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) {
        const double orig = probe(i, j);
        const double h = options.step_scale * (1.0 + std::abs(orig));
        probe(i, j) = orig + h;
        const double up = loss_value(gcp_forward(FeatureMatrix(probe), cfg).q.data(), options.loss, weights);
        probe(i, j) = orig - h;
        const double down = loss_value(gcp_forward(FeatureMatrix(probe), cfg).q.data(), options.loss, weights);
        probe(i, j) = orig;
        numeric(i, j) = (up - down) / (2.0 * h);
      }
    }
  } catch (const Error& e) {
    report.error = std::string("finite differences: ") + e.what();
    return report;
  }

  const double scale = std::max(numeric.cwiseAbs().maxCoeff(), 1e-300);
  double total = 0.0;
  report.max_rel_error = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double a = analytic.grad_x(i, j);
      const double rel = std::isfinite(a) ? std::abs(a - numeric(i, j)) / scale
                                          : std::numeric_limits<double>::infinity();
      total += rel;
      if (!(rel <= report.max_rel_error)) {
        report.max_rel_error = rel;
        report.worst_i = i;
        report.worst_j = j;
      }
    }
  }
  report.mean_rel_error = total / static_cast<double>(d * n);
  report.passed = report.n_nonfinite == 0 && report.nonfinite_k.empty() &&
                  report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace specgrad
