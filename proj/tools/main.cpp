#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "specgrad/errors.hpp"

namespace {

using namespace specgrad::cli;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Turns "key=value" lines into "--key=value" arguments for every key the
// command line does not already set.
std::vector<std::string> config_arguments(const std::string& path, const std::vector<std::string>& argv) {
  std::set<std::string> given;
  for (const std::string& a : argv) {
    if (a.rfind("--", 0) != 0) continue;
    given.insert(a.substr(0, a.find('=')));
  }
  std::vector<std::string> extra;
  std::istringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw specgrad::InvalidInputError(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) != 0) key = "--" + key;
    if (!given.count(key)) extra.push_back(key + "=" + trim(line.substr(eq + 1)));
  }
  return extra;
}

std::string find_config(const std::vector<std::string>& argv) {
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--config" && i + 1 < argv.size()) return argv[i + 1];
    if (argv[i].rfind("--config=", 0) == 0) return argv[i].substr(9);
  }
  return "";
}

template <typename Opts>
void add_common(CLI::App* cmd, Opts& opts, std::string& config) {
  cmd->add_option("--seed", opts.seed, "Seed for all randomness")->envname("SPECGRAD_SEED");
  cmd->add_option("--config", config, "key=value file; flags take precedence");
}

int run(int argc, char** argv) {
  CLI::App app{"Differentiable matrix square root toolkit"};
  app.require_subcommand(1);
  std::string config;

  ApproxTableOptions approx;
  auto* c_approx = app.add_subcommand("approx-table", "Taylor and Pade approximation error tables");
  c_approx->add_option("--degrees", approx.degrees, "Series degrees")->delimiter(',')->capture_default_str();
  c_approx->add_option("--ratios", approx.ratios, "Eigenvalue ratios in [0, 1)")->delimiter(',');
  c_approx->add_option("--precision", approx.precision)->check(CLI::IsMember({"single", "double"}));
  c_approx->add_option("--kind", approx.kind)->check(CLI::IsMember({"taylor", "pade", "both"}));
  c_approx->add_option("--out", approx.out, "Output directory");
  c_approx->add_option("--format", approx.format)->check(CLI::IsMember({"csv", "json"}));
  add_common(c_approx, approx, config);

  BoundsOptions bounds;
  auto* c_bounds = app.add_subcommand("bounds", "Worst-case gradient bound per backward scheme");
  c_bounds->add_option("--precision", bounds.precision)->check(CLI::IsMember({"single", "double"}));
  c_bounds->add_option("--degree", bounds.degree, "Taylor/Pade degree");
  c_bounds->add_option("--pi-iters", bounds.pi_iterations, "Power-iteration steps");
  c_bounds->add_option("--threshold", bounds.threshold, "Truncation threshold");
  c_bounds->add_option("--out", bounds.out);
  c_bounds->add_option("--format", bounds.format)->check(CLI::IsMember({"csv", "json"}));
  add_common(c_bounds, bounds, config);

  GradcheckOptions grad;
  auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference check of a backward scheme");
  c_grad->add_option("--scheme", grad.scheme)
      ->check(CLI::IsMember({"ordinary", "topn", "trunc", "pi", "taylor", "pade", "newton"}));
  c_grad->add_option("--forward", grad.forward)->check(CLI::IsMember({"eig", "ns"}));
  c_grad->add_option("--d", grad.d);
  c_grad->add_option("--n", grad.n, "Samples (default 4d)");
  c_grad->add_option("--cond", grad.cond, "Condition number of the synthetic spectrum");
  c_grad->add_option("--loss", grad.loss)->check(CLI::IsMember({"sum", "trace", "random-linear"}));
  c_grad->add_option("--topn", grad.top_n);
  c_grad->add_option("--degree", grad.degree);
  c_grad->add_option("--iters", grad.iterations);
  c_grad->add_option("--threshold", grad.threshold);
  c_grad->add_option("--tol", grad.tolerance);
  c_grad->add_option("--precision", grad.precision)->check(CLI::IsMember({"single", "double"}));
  c_grad->add_option("--out", grad.out);
  c_grad->add_option("--format", grad.format)->check(CLI::IsMember({"csv", "json"}));
  add_common(c_grad, grad, config);

  ConditionOptions cond;
  auto* c_cond = app.add_subcommand("condition", "Condition numbers of feature covariances");
  c_cond->add_option("--in", cond.in, "GCPF feature file");
  c_cond->add_option("--d", cond.d);
  c_cond->add_option("--n", cond.n);
  c_cond->add_option("--count", cond.count);
  c_cond->add_option("--cond", cond.cond, "Geometric spectrum with this condition number");
  c_cond->add_flag("--identity", cond.identity, "Identity covariances");
  c_cond->add_option("--out", cond.out);
  c_cond->add_option("--format", cond.format)->check(CLI::IsMember({"csv", "json"}));
  add_common(c_cond, cond, config);

  GenFeaturesOptions gen;
  auto* c_gen = app.add_subcommand("gen-features", "Write a synthetic GCPF feature file");
  c_gen->add_option("--d", gen.d);
  c_gen->add_option("--n", gen.n);
  c_gen->add_option("--count", gen.count);
  c_gen->add_option("--cond", gen.cond);
  c_gen->add_flag("--identity", gen.identity);
  c_gen->add_option("--out", gen.out);
  add_common(c_gen, gen, config);

  TrainToyOptions train;
  auto* c_train = app.add_subcommand("train-toy", "Hybrid Newton-Schulz / eigendecomposition training");
  c_train->add_option("--backward", train.backward, "Scheme after the switch")
      ->check(CLI::IsMember({"ordinary", "topn", "trunc", "pi", "taylor", "pade", "newton"}));
  c_train->add_option("--topn", train.top_n);
  c_train->add_option("--degree", train.degree);
  c_train->add_option("--d", train.d);
  c_train->add_option("--n", train.n);
  c_train->add_option("--examples-per-class", train.examples_per_class);
  c_train->add_option("--steps", train.steps);
  c_train->add_option("--batch", train.batch);
  c_train->add_option("--ns-iters", train.ns_iterations);
  c_train->add_option("--switch-frac", train.switch_frac);
  c_train->add_option("--warmup-frac", train.warmup_frac);
  c_train->add_option("--lr", train.lr);
  c_train->add_option("--lr-schedule", train.lr_schedule, "step:lr,step:lr,...");
  c_train->add_option("--precision", train.precision)->check(CLI::IsMember({"single", "double"}));
  c_train->add_option("--out", train.out);
  add_common(c_train, train, config);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const std::string path = find_config(args);
    if (!path.empty())
      for (std::string& extra : config_arguments(path, args)) args.push_back(std::move(extra));
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const specgrad::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_approx->parsed()) return cmd_approx_table(approx, std::cout);
    if (c_bounds->parsed()) return cmd_bounds(bounds, std::cout);
    if (c_grad->parsed()) return cmd_gradcheck(grad, std::cout);
    if (c_cond->parsed()) return cmd_condition(cond, std::cout);
    if (c_gen->parsed()) return cmd_gen_features(gen, std::cout);
    if (c_train->parsed()) return cmd_train_toy(train, std::cout);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const specgrad::InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const specgrad::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const specgrad::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
