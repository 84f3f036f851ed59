#include "doctest.h"

#include "specgrad/errors.hpp"
#include "specgrad/training.hpp"

using namespace specgrad;

TEST_SUITE("training") {

TEST_CASE("toy dataset shape and determinism") {
  ToyTaskConfig cfg;
  cfg.examples_per_class = 5;
  cfg.seed = 3;
  const ToyDataset a = make_toy_dataset(cfg);
  const ToyDataset b = make_toy_dataset(cfg);
  REQUIRE(a.size() == 15);
  CHECK(a.inputs[0].rows() == 8);
  CHECK(a.inputs[0].cols() == 32);
  CHECK(a.labels[14] == 2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.inputs[i] == b.inputs[i]);

  cfg.raw_dim = 3;
  CHECK_THROWS_AS(make_toy_dataset(cfg), InvalidInputError);
}

TEST_CASE("default schedule and warm-up semantics") {
  const HybridSchedule s = default_schedule(100, 0.6, 0.05, BackwardScheme::pade(), 0.1);
  CHECK(s.switch_step == 60);
  CHECK(s.warmup_steps == 5);
  CHECK(s.lr_at(0) == 0.1);
  CHECK(s.lr_at(49) == 0.1);
  CHECK(s.lr_at(50) == doctest::Approx(0.01));
  CHECK(s.lr_at(62) == doctest::Approx(0.01));
  CHECK(s.lr_at(80) == doctest::Approx(0.001));
  CHECK_FALSE(s.switched(59));
  CHECK(s.switched(60));
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("warm-up holds the pre-switch rate across a decay") {
  HybridSchedule s;
  s.total_steps = 100;
  s.switch_step = 48;
  s.warmup_steps = 10;
  s.lr_schedule = {{0, 0.1}, {50, 0.01}, {80, 0.001}};
  CHECK(s.lr_at(47) == 0.1);
  CHECK(s.lr_at(52) == 0.1);
  CHECK(s.lr_at(57) == 0.1);
  CHECK(s.lr_at(58) == 0.01);
}

TEST_CASE("schedule validation") {
  HybridSchedule s = default_schedule(100, 0.9, 0.05, BackwardScheme::pade(), 0.1);
  CHECK_THROWS_AS(s.validate(), InvalidInputError);  // switch after the final decay
  s = default_schedule(100, 1.0, 0.05, BackwardScheme::pade(), 0.1);
  CHECK_NOTHROW(s.validate());  // never switches
  s.lr_schedule = {{5, 0.1}};
  CHECK_THROWS_AS(s.validate(), InvalidInputError);
  s.lr_schedule = {{0, 0.1}, {0, 0.01}};
  CHECK_THROWS_AS(s.validate(), InvalidInputError);
  s.lr_schedule = {{0, -1.0}};
  CHECK_THROWS_AS(s.validate(), InvalidInputError);
  s = default_schedule(100, 0.5, 0.0, BackwardScheme::pade(), 0.1);
  s.warmup_steps = -1;
  CHECK_THROWS_AS(s.validate(), InvalidInputError);
}

TEST_CASE("pure Newton-Schulz run learns and is deterministic") {
  ToyTaskConfig task;
  task.examples_per_class = 24;
  task.seed = 2;
  const ToyDataset data = make_toy_dataset(task);
  const HybridSchedule s = default_schedule(120, 1.0, 0.05, BackwardScheme::pade(), 0.1);
  TrainOptions opts;
  opts.seed = 2;
  const TrainingLog a = run_hybrid_training(ToyModelSpec{}, s, data, opts);
  const TrainingLog b = run_hybrid_training(ToyModelSpec{}, s, data, opts);
  REQUIRE_FALSE(a.diverged);
  REQUIRE(a.steps.size() == 120);
  CHECK(a.final_loss < a.steps.front().loss);
  for (const StepRecord& r : a.steps) CHECK(r.scheme == "ns(10)+newton(iters=10)");
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].loss == b.steps[i].loss);
    CHECK(a.steps[i].mean_condition == b.steps[i].mean_condition);
  }
  CHECK(a.final_loss == b.final_loss);
}

TEST_CASE("hybrid run switches scheme at the switch step") {
  ToyTaskConfig task;
  task.examples_per_class = 12;
  const ToyDataset data = make_toy_dataset(task);
  const HybridSchedule s = default_schedule(40, 0.6, 0.05, BackwardScheme::taylor(), 0.1);
  const TrainingLog log = run_hybrid_training(ToyModelSpec{}, s, data);
  REQUIRE_FALSE(log.diverged);
  CHECK(log.steps[23].scheme.rfind("ns(", 0) == 0);
  CHECK(log.steps[24].scheme == "eig+taylor(K=100)");
}

TEST_CASE("a poisoned gradient aborts the run with a log") {
  ToyTaskConfig task;
  task.examples_per_class = 8;
  const ToyDataset data = make_toy_dataset(task);
  HybridSchedule s = default_schedule(20, 0.6, 0.0, BackwardScheme::pade(), 1e300);
  const TrainingLog log = run_hybrid_training(ToyModelSpec{}, s, data);
  CHECK(log.diverged);
  CHECK_FALSE(log.failure.empty());
  CHECK(log.steps.size() < 20);
}

}  // TEST_SUITE
