#include "specgrad/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "specgrad/errors.hpp"
#include "specgrad/meta_layer.hpp"
#include "specgrad/random.hpp"

namespace specgrad {

namespace {

struct Params {
  Matrix w;  // d x raw_dim
  Matrix h;  // classes x d(d+1)/2
  Vector b;  // classes
};

struct Grads {
  Matrix w;
  Matrix h;
  Vector b;
};

struct ExampleResult {
  double loss = 0.0;
  bool correct = false;
  double condition = 0.0;
};

GcpLayerConfig layer_config(const ToyModelSpec& model, const HybridSchedule& schedule, int step) {
  if (schedule.switched(step)) return GcpLayerConfig::eig(schedule.post_switch_scheme, model.precision);
  return GcpLayerConfig::newton_schulz(model.ns_iterations, model.precision);
}

double mean_condition_of(const SymPsdMatrix& p, Precision prec) {
  return condition_number(clamp_eigenvalues(eigh(p), prec)).value;
}

// Forward plus, when `grads` is non-null, accumulation of the backward pass.
ExampleResult run_example(const Params& params, const Matrix& raw, int label,
                          const GcpLayerConfig& cfg, Grads* grads) {
  const FeatureMatrix f(params.w * raw);
  const GcpOutput out = gcp_forward(f, cfg);

  ExampleResult r;
  if (const auto* eig = std::get_if<EigCache>(&out.cache))
    r.condition = condition_number(eig->eig).value;
  else
    r.condition = mean_condition_of(covariance(f), cfg.precision);

  const Vector logits = params.h * out.upper + params.b;
  const double top = logits.maxCoeff();
  const Vector shifted = (logits.array() - top).exp().matrix();
  const double z = shifted.sum();
  r.loss = std::log(z) - (logits(label) - top);
  Eigen::Index argmax = 0;
  logits.maxCoeff(&argmax);
  r.correct = argmax == label;
  if (!grads) return r;

  Vector g_logits = shifted / z;
  g_logits(label) -= 1.0;
  grads->h.noalias() += g_logits * out.upper.transpose();
  grads->b += g_logits;
  const Vector g_upper = params.h.transpose() * g_logits;
  const Matrix g_q = upper_triangle_adjoint(g_upper, f.dim());
  const Matrix g_f = gcp_backward(out.cache, g_q, cfg);
  grads->w.noalias() += g_f * raw.transpose();
  return r;
}

bool all_finite(const Grads& g) {
  return g.w.allFinite() && g.h.allFinite() && g.b.allFinite();
}

}  // namespace

ToyDataset make_toy_dataset(const ToyTaskConfig& cfg) {
  if (cfg.classes < 2) throw InvalidInputError("toy task needs at least two classes");
  if (cfg.raw_dim <= cfg.classes) throw InvalidInputError("toy task needs raw_dim > classes");
  if (cfg.samples < 2 || cfg.examples_per_class < 1) throw InvalidInputError("toy task is empty");
  if (!(cfg.nuisance_scale > 0.0 && cfg.signal_scale > 0.0 && cfg.signal_boost > 0.0))
    throw InvalidInputError("toy task scales must be positive");

  Rng rng(cfg.seed);
  const Matrix basis = random_orthogonal(rng, cfg.raw_dim);
  const int nuisance = cfg.raw_dim - cfg.classes;

  ToyDataset data;
  data.classes = cfg.classes;
  for (int c = 0; c < cfg.classes; ++c) {
    Vector stddev(cfg.raw_dim);
    for (int i = 0; i < nuisance; ++i) stddev(i) = std::sqrt(cfg.nuisance_scale);
    for (int k = 0; k < cfg.classes; ++k)
      stddev(nuisance + k) = std::sqrt(cfg.signal_scale * (k == c ? cfg.signal_boost : 1.0));
    const Matrix mix = basis * stddev.asDiagonal();
    for (int e = 0; e < cfg.examples_per_class; ++e) {
      data.inputs.push_back(mix * gaussian_matrix(rng, cfg.raw_dim, cfg.samples));
      data.labels.push_back(c);
    }
  }
  return data;
}

void HybridSchedule::validate() const {
  if (total_steps < 1) throw InvalidInputError("schedule needs at least one step");
  if (switch_step < 0) throw InvalidInputError("switch step must be non-negative");
  if (warmup_steps < 0) throw InvalidInputError("warm-up steps must be non-negative");
  if (lr_schedule.empty() || lr_schedule.front().step != 0)
    throw InvalidInputError("learning-rate schedule must start at step 0");
  for (std::size_t i = 0; i < lr_schedule.size(); ++i) {
    if (!(lr_schedule[i].lr > 0.0) || !std::isfinite(lr_schedule[i].lr))
      throw InvalidInputError("learning rates must be positive and finite");
    if (i > 0 && lr_schedule[i].step <= lr_schedule[i - 1].step)
      throw InvalidInputError("learning-rate schedule steps must increase");
  }
  post_switch_scheme.validate(std::numeric_limits<Eigen::Index>::max());
  if (switch_step < total_steps && lr_schedule.size() > 1 && switch_step >= lr_schedule.back().step) {
    std::ostringstream msg;
    msg << "switch step " << switch_step << " must precede the final decay at step "
        << lr_schedule.back().step;
    throw InvalidInputError(msg.str());
  }
}

double HybridSchedule::lr_at(int step) const {
  auto rate = [this](int s) {
    double lr = lr_schedule.front().lr;
    for (const LrPoint& p : lr_schedule)
      if (p.step <= s) lr = p.lr;
    return lr;
  };
  if (switch_step < total_steps && step >= switch_step && step < switch_step + warmup_steps)
    return rate(std::max(0, switch_step - 1));
  return rate(step);
}

HybridSchedule default_schedule(int total_steps, double switch_frac, double warmup_frac,
                                BackwardScheme post_switch, double base_lr) {
  if (!(switch_frac >= 0.0) || !(warmup_frac >= 0.0))
    throw InvalidInputError("switch and warm-up fractions must be non-negative");
  HybridSchedule s;
  s.total_steps = total_steps;
  s.switch_step = static_cast<int>(std::lround(switch_frac * total_steps));
  s.warmup_steps = static_cast<int>(std::lround(warmup_frac * total_steps));
  s.post_switch_scheme = post_switch;
  s.lr_schedule = {{0, base_lr},
                   {static_cast<int>(std::lround(0.5 * total_steps)), base_lr / 10.0},
                   {static_cast<int>(std::lround(0.8 * total_steps)), base_lr / 100.0}};
  return s;
}

TrainingLog run_hybrid_training(const ToyModelSpec& model, const HybridSchedule& schedule,
                                const ToyDataset& data, const TrainOptions& options) {
  schedule.validate();
  if (data.size() == 0) throw InvalidInputError("training set is empty");
  if (options.batch_size < 1) throw InvalidInputError("batch size must be >= 1");
  if (model.feature_dim < 1) throw InvalidInputError("feature dimension must be >= 1");
  const Eigen::Index d = model.feature_dim;
  const Eigen::Index raw_dim = data.inputs.front().rows();
  schedule.post_switch_scheme.validate(d);

  Rng rng(options.seed);
  Params params;
  params.w = Matrix::Identity(d, raw_dim) + model.init_noise * gaussian_matrix(rng, d, raw_dim);
  params.h = 0.01 * gaussian_matrix(rng, data.classes, d * (d + 1) / 2);
  params.b = Vector::Zero(data.classes);
  Grads velocity{Matrix::Zero(d, raw_dim), Matrix::Zero(params.h.rows(), params.h.cols()),
                 Vector::Zero(data.classes)};

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  TrainingLog log;
  for (int step = 0; step < schedule.total_steps; ++step) {
    const GcpLayerConfig cfg = layer_config(model, schedule, step);
    const double lr = schedule.lr_at(step);
    Grads grads{Matrix::Zero(d, raw_dim), Matrix::Zero(params.h.rows(), params.h.cols()),
                Vector::Zero(data.classes)};
    StepRecord rec;
    rec.step = step;
    rec.scheme = cfg.describe();
    rec.lr = lr;
    try {
      for (int k = 0; k < options.batch_size; ++k) {
        if (cursor == order.size()) {
          std::shuffle(order.begin(), order.end(), rng);
          cursor = 0;
        }
        const std::size_t idx = order[cursor++];
        const ExampleResult r = run_example(params, data.inputs[idx], data.labels[idx], cfg, &grads);
        rec.loss += r.loss;
        rec.accuracy += r.correct ? 1.0 : 0.0;
        rec.mean_condition += r.condition;
      }
    } catch (const Error& e) {
      log.diverged = true;
      std::ostringstream msg;
      msg << "step " << step << ": " << e.what();
      log.failure = msg.str();
      return log;
    }
    const double inv = 1.0 / options.batch_size;
    rec.loss *= inv;
    rec.accuracy *= inv;
    rec.mean_condition *= inv;
    if (!std::isfinite(rec.loss) || !all_finite(grads)) {
      log.diverged = true;
      std::ostringstream msg;
      msg << "step " << step << ": non-finite " << (std::isfinite(rec.loss) ? "gradient" : "loss");
      log.failure = msg.str();
      return log;
    }
    log.steps.push_back(rec);

    velocity.w = options.momentum * velocity.w + grads.w * inv;
    velocity.h = options.momentum * velocity.h + grads.h * inv;
    velocity.b = options.momentum * velocity.b + grads.b * inv;
    params.w -= lr * velocity.w;
    params.h -= lr * velocity.h;
    params.b -= lr * velocity.b;
  }

  const GcpLayerConfig final_cfg = layer_config(model, schedule, schedule.total_steps - 1);
  try {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const ExampleResult r = run_example(params, data.inputs[i], data.labels[i], final_cfg, nullptr);
      log.final_loss += r.loss;
      log.final_accuracy += r.correct ? 1.0 : 0.0;
    }
  } catch (const Error& e) {
    log.diverged = true;
    log.failure = std::string("final evaluation: ") + e.what();
    return log;
  }
  log.final_loss /= static_cast<double>(data.size());
  log.final_accuracy /= static_cast<double>(data.size());
  if (!std::isfinite(log.final_loss)) {
    log.diverged = true;
    log.failure = "final evaluation: non-finite loss";
  }
  return log;
}

}  // namespace specgrad
