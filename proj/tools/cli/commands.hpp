#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cli/format.hpp"
#include "specgrad/core_matrix.hpp"
#include "specgrad/svd_grad.hpp"

namespace specgrad::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitDiverged = 2,
  kExitUsage = 64,
  kExitIo = 74,
};

/// Reading or writing an output/input file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

/// "single" or "double"; throws InvalidInputError otherwise.
Precision parse_precision(const std::string& name);

/// Builds a backward scheme from its short name (ordinary, topn, trunc, pi,
/// taylor, pade, newton). Zero-valued parameters select the defaults.
BackwardScheme make_scheme(const std::string& name, Eigen::Index d, int top_n, int degree,
                           int iterations, double threshold);

/// "step:lr,step:lr,..."; throws InvalidInputError on malformed text.
std::vector<std::pair<int, double>> parse_lr_schedule(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// Table rendered as CSV (preamble + header + rows) or as a JSON object
/// {"config": {...}, "header": [...], "rows": [[...]]}.
std::string render_table(const CsvDocument& doc, const std::string& format);
/// Parses either rendering back.
CsvDocument parse_table(const std::string& text, const std::string& format);

struct ApproxTableOptions {
  std::vector<int> degrees{50, 100, 200, 300};
  std::vector<double> ratios{0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999};
  std::string precision = "double";
  std::string kind = "both";  // taylor, pade or both
  std::string out = ".";      // directory
  std::string format = "csv";
  std::uint64_t seed = 0;
};

struct BoundsOptions {
  std::string precision = "double";
  int degree = 100;
  int pi_iterations = 100;
  double threshold = 1e10;
  std::string out = "bounds.csv";
  std::string format = "csv";
  std::uint64_t seed = 0;
};

struct GradcheckOptions {
  std::string scheme = "ordinary";
  std::string forward = "eig";  // eig or ns
  int d = 4;
  int n = 0;  // 0 selects 4d
  double cond = 10.0;
  std::string loss = "random-linear";
  int top_n = 0;
  int degree = 0;
  int iterations = 0;
  double threshold = 0.0;
  double tolerance = 1e-4;
  std::string precision = "double";
  std::string out;  // optional file; the report always goes to stdout
  std::string format = "json";
  std::uint64_t seed = 0;
};

struct ConditionOptions {
  std::string in;  // GCPF file; synthetic batch when empty
  int d = 8;
  int n = 32;
  int count = 16;
  double cond = 0.0;  // > 0: geometric spectrum with this condition number
  bool identity = false;
  std::string out;  // optional per-matrix table
  std::string format = "csv";
  std::uint64_t seed = 0;
};

struct GenFeaturesOptions {
  int d = 8;
  int n = 32;
  int count = 16;
  double cond = 0.0;
  bool identity = false;
  std::string out = "features.gcpf";
  std::uint64_t seed = 0;
};

struct TrainToyOptions {
  std::string backward = "pade";
  int top_n = 0;
  int degree = 0;
  int d = 8;
  int n = 32;
  int examples_per_class = 64;
  int steps = 400;
  int batch = 16;
  int ns_iterations = 10;
  double switch_frac = 0.6;
  double warmup_frac = 0.05;
  double lr = 0.1;
  std::string lr_schedule;  // overrides the default decays when set
  std::string precision = "double";
  std::string out = "train_toy.jsonl";
  std::uint64_t seed = 0;
};

int cmd_approx_table(const ApproxTableOptions& opts, std::ostream& log);
int cmd_bounds(const BoundsOptions& opts, std::ostream& log);
int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& log);
int cmd_condition(const ConditionOptions& opts, std::ostream& log);
int cmd_gen_features(const GenFeaturesOptions& opts, std::ostream& log);
int cmd_train_toy(const TrainToyOptions& opts, std::ostream& log);

}  // namespace specgrad::cli
