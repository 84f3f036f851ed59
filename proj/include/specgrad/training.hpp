#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specgrad/core_matrix.hpp"
#include "specgrad/svd_grad.hpp"

namespace specgrad {

/// Seeded synthetic classification task. Every example is a raw_dim x n block
/// of Gaussian columns whose covariance depends on the class. The shared
/// nuisance directions have large variance; each class inflates one of the
/// low-variance directions, so the class signal lives in small eigenvalues.
struct ToyTaskConfig {
  int classes = 3;
  int raw_dim = 8;
  int samples = 32;  // columns per example
  int examples_per_class = 64;
  double nuisance_scale = 1.0;
  double signal_scale = 1e-2;
  double signal_boost = 4.0;  // variance multiplier of the class direction
  std::uint64_t seed = 0;
};

struct ToyDataset {
  int classes = 0;
  std::vector<Matrix> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
};

ToyDataset make_toy_dataset(const ToyTaskConfig& cfg);

/// Raw input -> F = W R -> GCP -> upper triangle -> linear head -> softmax
/// cross-entropy.
struct ToyModelSpec {
  int feature_dim = 8;  // d, rows of W
  int ns_iterations = 10;
  Precision precision;
  double init_noise = 0.05;  // W starts at identity plus this much Gaussian noise
};

struct LrPoint {
  int step = 0;
  double lr = 0.0;
};

struct HybridSchedule {
  int total_steps = 0;
  /// First step trained with the post-switch scheme; >= total_steps means the
  /// whole run uses Newton-Schulz.
  int switch_step = 0;
  int warmup_steps = 0;
  BackwardScheme post_switch_scheme = BackwardScheme::pade();
  /// Piecewise-constant learning rate, sorted by step, first entry at step 0.
  std::vector<LrPoint> lr_schedule;

  /// Throws InvalidInputError unless the schedule is well formed and, for a
  /// run that switches, the switch precedes the final decay.
  void validate() const;
  bool switched(int step) const { return step >= switch_step; }
  /// During the warm-up window the rate stays at its value just before the
  /// switch; decays falling inside the window take effect when it ends.
  double lr_at(int step) const;
};

/// Decays by 10x at 50% and 80% of the run; switch and warm-up given as
/// fractions of total_steps.
HybridSchedule default_schedule(int total_steps, double switch_frac, double warmup_frac,
                                BackwardScheme post_switch, double base_lr);

struct TrainOptions {
  int batch_size = 16;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

struct StepRecord {
  int step = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double mean_condition = 0.0;
  std::string scheme;
  double lr = 0.0;
};

struct TrainingLog {
  std::vector<StepRecord> steps;
  bool diverged = false;
  std::string failure;  // why the run stopped early
  double final_loss = 0.0;  // over the whole training set
  double final_accuracy = 0.0;
};

/// Minibatch SGD with momentum. Stops early, with diverged set, when the
/// loss or a gradient becomes non-finite. Deterministic for a given seed.
TrainingLog run_hybrid_training(const ToyModelSpec& model, const HybridSchedule& schedule,
                                const ToyDataset& data, const TrainOptions& options = {});

}  // namespace specgrad
