#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cli/feature_file.hpp"
#include "json.hpp"
#include "specgrad/errors.hpp"
#include "specgrad/meta_layer.hpp"
#include "specgrad/pade.hpp"
#include "specgrad/random.hpp"
#include "specgrad/training.hpp"

namespace specgrad::cli {

using json = nlohmann::ordered_json;

namespace {

std::string join_numbers(const auto& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    out += format_number(static_cast<double>(v));
  }
  return out;
}

std::string path_join(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void check_format(const std::string& format) {
  if (format != "csv" && format != "json")
    throw InvalidInputError("format must be csv or json, got '" + format + "'");
}

json settings_json(const Settings& settings) {
  json obj = json::object();
  for (const auto& [k, v] : settings) obj[k] = v;
  return obj;
}

// Number for JSON; non-finite values become their text form.
json json_number(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

Matrix synthetic_block(Rng& rng, int d, int n, double cond, bool identity) {
  if (identity) return features_with_spectrum(rng, Vector::Ones(d), n);
  if (cond > 0.0) return features_with_spectrum(rng, geometric_spectrum(d, cond), n);
  return gaussian_matrix(rng, d, n);
}

void check_block_shape(int d, int n, int count) {
  if (d < 1 || n < 2 || count < 1) throw InvalidInputError("need d >= 1, n >= 2 and count >= 1");
}

}  // namespace

Precision parse_precision(const std::string& name) {
  if (name == "double") return Precision::double_();
  if (name == "single") return Precision::single();
  throw InvalidInputError("precision must be single or double, got '" + name + "'");
}

BackwardScheme make_scheme(const std::string& name, Eigen::Index d, int top_n, int degree,
                           int iterations, double threshold) {
  BackwardScheme s;
  if (name == "ordinary")
    s = BackwardScheme::ordinary();
  else if (name == "topn")
    s = BackwardScheme::top_n(top_n > 0 ? top_n : default_top_n(d));
  else if (name == "trunc")
    s = BackwardScheme::trunc(threshold > 0.0 ? threshold : scheme::Trunc{}.threshold);
  else if (name == "pi")
    s = BackwardScheme::power_iteration(iterations > 0 ? iterations : scheme::PowerIteration{}.iterations);
  else if (name == "taylor")
    s = BackwardScheme::taylor(degree > 0 ? degree : scheme::Taylor{}.degree);
  else if (name == "pade")
    s = BackwardScheme::pade(degree > 0 ? degree : scheme::Pade{}.degree);
  else if (name == "newton")
    s = BackwardScheme::newton_schulz(iterations > 0 ? iterations
                                                     : scheme::NewtonSchulzBackward{}.iterations);
  else
    throw InvalidInputError("unknown scheme '" + name + "'");
  s.validate(d);
  return s;
}

std::vector<std::pair<int, double>> parse_lr_schedule(const std::string& text) {
  std::vector<std::pair<int, double>> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw InvalidInputError("learning-rate entry '" + item + "' is not step:lr");
    try {
      const double step = parse_number(item.substr(0, colon));
      if (step < 0 || step != std::floor(step)) throw std::invalid_argument("step");
      out.emplace_back(static_cast<int>(step), parse_number(item.substr(colon + 1)));
    } catch (const std::invalid_argument&) {
      throw InvalidInputError("learning-rate entry '" + item + "' is not step:lr");
    }
  }
  if (out.empty()) throw InvalidInputError("learning-rate schedule is empty");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string render_table(const CsvDocument& doc, const std::string& format) {
  check_format(format);
  if (format == "csv") return to_csv(doc);
  json obj;
  obj["config"] = settings_json(doc.preamble);
  obj["header"] = doc.header;
  obj["rows"] = doc.rows;
  return obj.dump(2) + "\n";
}

CsvDocument parse_table(const std::string& text, const std::string& format) {
  check_format(format);
  if (format == "csv") return parse_csv(text);
  const json obj = json::parse(text);
  CsvDocument doc;
  for (const auto& [k, v] : obj.at("config").items()) doc.preamble.emplace_back(k, v.get<std::string>());
  doc.header = obj.at("header").get<std::vector<std::string>>();
  doc.rows = obj.at("rows").get<std::vector<std::vector<std::string>>>();
  return doc;
}

int cmd_approx_table(const ApproxTableOptions& opts, std::ostream& log) {
  check_format(opts.format);
  const Precision prec = parse_precision(opts.precision);
  std::vector<ApproxKind> kinds;
  if (opts.kind == "taylor" || opts.kind == "both") kinds.push_back(ApproxKind::Taylor);
  if (opts.kind == "pade" || opts.kind == "both") kinds.push_back(ApproxKind::Pade);
  if (kinds.empty()) throw InvalidInputError("kind must be taylor, pade or both");

  for (ApproxKind kind : kinds) {
    const ErrorTable table = approximation_error_table(kind, opts.degrees, opts.ratios, prec);
    CsvDocument doc;
    doc.preamble = {{"command", "approx-table"},  {"kind", to_string(kind)},
                    {"precision", prec.name()},   {"degrees", join_numbers(opts.degrees)},
                    {"ratios", join_numbers(opts.ratios)}, {"seed", std::to_string(opts.seed)}};
    doc.header.push_back("ratio");
    for (int k : table.degrees) doc.header.push_back("deg" + std::to_string(k));
    for (std::size_t r = 0; r < table.ratios.size(); ++r) {
      std::vector<std::string> row{format_number(table.ratios[r])};
      for (double e : table.errors[r]) row.push_back(format_number(e));
      doc.rows.push_back(std::move(row));
    }
    const std::string path = path_join(opts.out, "approx_" + to_string(kind) + "." + opts.format);
    write_file(path, render_table(doc, opts.format));
    log << "wrote " << path << "\n";
  }
  return kExitOk;
}

int cmd_bounds(const BoundsOptions& opts, std::ostream& log) {
  check_format(opts.format);
  const Precision prec = parse_precision(opts.precision);
  const std::vector<BackwardScheme> schemes{
      BackwardScheme::ordinary(),          BackwardScheme::top_n(1),
      BackwardScheme::trunc(opts.threshold), BackwardScheme::power_iteration(opts.pi_iterations),
      BackwardScheme::taylor(opts.degree), BackwardScheme::pade(opts.degree),
      BackwardScheme::newton_schulz()};

  CsvDocument doc;
  doc.preamble = {{"command", "bounds"},
                  {"precision", prec.name()},
                  {"eps", format_number(prec.eps())},
                  {"degree", std::to_string(opts.degree)},
                  {"pi_iterations", std::to_string(opts.pi_iterations)},
                  {"threshold", format_number(opts.threshold)},
                  {"seed", std::to_string(opts.seed)}};
  doc.header = {"scheme", "analytic_form", "max_value", "trigger", "single_safe"};
  for (const BackwardScheme& s : schemes) {
    const GradBound b = gradient_upper_bound(s, prec);
    const std::string safe = !b.has_analytic_bound ? "n/a" : (b.single_safe() ? "true" : "false");
    doc.rows.push_back({b.scheme, b.analytic_form,
                        b.has_analytic_bound ? format_number(b.max_value) : "n/a", b.trigger, safe});
    log << b.scheme << ": " << doc.rows.back()[2] << " single_safe=" << safe << "\n";
  }
  write_file(opts.out, render_table(doc, opts.format));
  log << "wrote " << opts.out << "\n";
  return kExitOk;
}

int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& log) {
  check_format(opts.format);
  const Precision prec = parse_precision(opts.precision);
  if (opts.d < 1) throw InvalidInputError("d must be >= 1");
  const int n = opts.n > 0 ? opts.n : 4 * opts.d;
  if (n <= opts.d) throw InvalidInputError("n must exceed d");
  if (!(opts.cond >= 1.0)) throw InvalidInputError("cond must be >= 1");
  if (!(opts.tolerance > 0.0)) throw InvalidInputError("tolerance must be > 0");

  GcpLayerConfig cfg;
  if (opts.forward == "ns") {
    if (opts.scheme != "newton")
      throw InvalidInputError("the Newton-Schulz forward pairs only with --scheme newton");
    cfg = GcpLayerConfig::newton_schulz(opts.iterations > 0 ? opts.iterations : kDefaultNewtonSchulzIterations,
                                        prec);
  } else if (opts.forward == "eig") {
    cfg = GcpLayerConfig::eig(
        make_scheme(opts.scheme, opts.d, opts.top_n, opts.degree, opts.iterations, opts.threshold), prec);
  } else {
    throw InvalidInputError("forward must be eig or ns");
  }

  Rng rng(opts.seed);
  const FeatureMatrix x(features_with_spectrum(rng, geometric_spectrum(opts.d, opts.cond), n));
  GradCheckOptions gopts;
  gopts.loss = parse_loss_kind(opts.loss);
  gopts.seed = opts.seed + 1;
  gopts.tolerance = opts.tolerance;
  const GradCheckReport r = grad_check(cfg, x, gopts);

  const Settings settings{{"command", "gradcheck"},
                          {"forward", opts.forward},
                          {"scheme", cfg.backward.describe()},
                          {"d", std::to_string(opts.d)},
                          {"n", std::to_string(n)},
                          {"cond", format_number(opts.cond)},
                          {"loss", opts.loss},
                          {"precision", prec.name()},
                          {"tolerance", format_number(opts.tolerance)},
                          {"seed", std::to_string(opts.seed)}};

  std::string nonfinite_k;
  for (const auto& [i, j] : r.nonfinite_k) {
    if (!nonfinite_k.empty()) nonfinite_k += ';';
    nonfinite_k += std::to_string(i) + ":" + std::to_string(j);
  }
  std::string text;
  if (opts.format == "json") {
    json report{{"scheme", r.scheme},
                {"max_rel_error", json_number(r.max_rel_error)},
                {"mean_rel_error", json_number(r.mean_rel_error)},
                {"n_nonfinite", r.n_nonfinite},
                {"nonfinite_k", json::array()},
                {"worst_entry", {r.worst_i, r.worst_j}},
                {"clamped", r.clamped},
                {"bias_active", r.bias_active},
                {"tolerance", r.tolerance},
                {"passed", r.passed},
                {"error", r.error}};
    for (const auto& [i, j] : r.nonfinite_k) report["nonfinite_k"].push_back({i, j});
    text = json{{"config", settings_json(settings)}, {"report", report}}.dump(2) + "\n";
  } else {
    CsvDocument doc;
    doc.preamble = settings;
    doc.header = {"scheme",  "max_rel_error", "mean_rel_error", "n_nonfinite", "nonfinite_k", "worst_i",
                  "worst_j", "clamped",       "bias_active",    "tolerance",   "passed",      "error"};
    doc.rows.push_back({r.scheme, format_number(r.max_rel_error), format_number(r.mean_rel_error),
                        std::to_string(r.n_nonfinite), nonfinite_k, std::to_string(r.worst_i),
                        std::to_string(r.worst_j), std::to_string(r.clamped),
                        r.bias_active ? "true" : "false", format_number(r.tolerance),
                        r.passed ? "true" : "false", r.error});
    text = to_csv(doc);
  }
  if (!opts.out.empty()) write_file(opts.out, text);
  log << text;
  return r.passed ? kExitOk : kExitCheckFailed;
}

int cmd_condition(const ConditionOptions& opts, std::ostream& log) {
  check_format(opts.format);
  std::vector<Matrix> blocks;
  Settings settings{{"command", "condition"}};
  if (!opts.in.empty()) {
    FeatureBatch batch;
    try {
      batch = decode_features(read_file(opts.in));
    } catch (const std::invalid_argument& e) {
      throw IoError(opts.in + ": " + e.what());
    }
    blocks = std::move(batch.blocks);
    settings.emplace_back("in", opts.in);
  } else {
    check_block_shape(opts.d, opts.n, opts.count);
    Rng rng(opts.seed);
    for (int k = 0; k < opts.count; ++k)
      blocks.push_back(synthetic_block(rng, opts.d, opts.n, opts.cond, opts.identity));
    settings.insert(settings.end(), {{"d", std::to_string(opts.d)},
                                     {"n", std::to_string(opts.n)},
                                     {"count", std::to_string(opts.count)},
                                     {"cond", format_number(opts.cond)},
                                     {"identity", opts.identity ? "true" : "false"}});
  }
  settings.emplace_back("seed", std::to_string(opts.seed));
  settings.emplace_back("threshold", format_number(kIllConditionThreshold));
  if (blocks.empty()) throw InvalidInputError("no feature blocks to analyse");

  CsvDocument doc;
  doc.header = {"index", "lambda_max", "lambda_min", "condition", "ill_conditioned"};
  double sum = 0.0;
  double worst = 0.0;
  std::size_t ill = 0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const EigenDecomposition e = eigh(covariance(FeatureMatrix(blocks[k])));
    const ConditionNumber c = condition_number(e);
    sum += c.value;
    worst = std::max(worst, c.value);
    ill += c.ill_conditioned ? 1 : 0;
    doc.rows.push_back({std::to_string(k), format_number(e.eigenvalues(0)),
                        format_number(e.eigenvalues(e.dim() - 1)), format_number(c.value),
                        c.ill_conditioned ? "true" : "false"});
  }
  const double mean = sum / static_cast<double>(blocks.size());
  const double fraction = static_cast<double>(ill) / static_cast<double>(blocks.size());
  doc.preamble = settings;
  doc.preamble.insert(doc.preamble.end(), {{"mean", format_number(mean)},
                                           {"max", format_number(worst)},
                                           {"ill_fraction", format_number(fraction)}});
  if (!opts.out.empty()) write_file(opts.out, render_table(doc, opts.format));
  log << "count=" << blocks.size() << " mean=" << format_number(mean) << " max=" << format_number(worst)
      << " ill_fraction=" << format_number(fraction) << "\n";
  return kExitOk;
}

int cmd_gen_features(const GenFeaturesOptions& opts, std::ostream& log) {
  check_block_shape(opts.d, opts.n, opts.count);
  Rng rng(opts.seed);
  FeatureBatch batch;
  batch.d = static_cast<std::uint32_t>(opts.d);
  batch.n = static_cast<std::uint32_t>(opts.n);
  for (int k = 0; k < opts.count; ++k)
    batch.blocks.push_back(synthetic_block(rng, opts.d, opts.n, opts.cond, opts.identity));
  write_file(opts.out, encode_features(batch));
  log << "wrote " << opts.count << " blocks of " << opts.d << "x" << opts.n << " to " << opts.out << "\n";
  return kExitOk;
}

int cmd_train_toy(const TrainToyOptions& opts, std::ostream& log) {
  const Precision prec = parse_precision(opts.precision);
  if (opts.steps < 1) throw InvalidInputError("steps must be >= 1");
  ToyTaskConfig task;
  task.raw_dim = opts.d;
  task.samples = opts.n;
  task.examples_per_class = opts.examples_per_class;
  task.seed = opts.seed;
  const ToyDataset data = make_toy_dataset(task);

  ToyModelSpec model;
  model.feature_dim = opts.d;
  model.ns_iterations = opts.ns_iterations;
  model.precision = prec;

  const BackwardScheme post = make_scheme(opts.backward, opts.d, opts.top_n, opts.degree, 0, 0.0);
  HybridSchedule schedule = default_schedule(opts.steps, opts.switch_frac, opts.warmup_frac, post, opts.lr);
  if (!opts.lr_schedule.empty()) {
    schedule.lr_schedule.clear();
    for (const auto& [step, lr] : parse_lr_schedule(opts.lr_schedule)) schedule.lr_schedule.push_back({step, lr});
  }
  schedule.validate();

  TrainOptions train;
  train.batch_size = opts.batch;
  train.seed = opts.seed;
  const TrainingLog result = run_hybrid_training(model, schedule, data, train);

  std::string lr_text;
  for (const LrPoint& p : schedule.lr_schedule) {
    if (!lr_text.empty()) lr_text += ',';
    lr_text += std::to_string(p.step) + ":" + format_number(p.lr);
  }
  const Settings settings{{"command", "train-toy"},
                          {"backward", post.describe()},
                          {"d", std::to_string(opts.d)},
                          {"n", std::to_string(opts.n)},
                          {"examples_per_class", std::to_string(opts.examples_per_class)},
                          {"steps", std::to_string(opts.steps)},
                          {"batch", std::to_string(opts.batch)},
                          {"ns_iterations", std::to_string(opts.ns_iterations)},
                          {"switch_step", std::to_string(schedule.switch_step)},
                          {"warmup_steps", std::to_string(schedule.warmup_steps)},
                          {"lr_schedule", lr_text},
                          {"precision", prec.name()},
                          {"seed", std::to_string(opts.seed)}};

  std::ostringstream out;
  out << json{{"type", "config"}, {"config", settings_json(settings)}}.dump() << "\n";
  for (const StepRecord& r : result.steps) {
    out << json{{"type", "step"},
                {"step", r.step},
                {"loss", r.loss},
                {"accuracy", r.accuracy},
                {"mean_condition", json_number(r.mean_condition)},
                {"scheme", r.scheme},
                {"lr", r.lr}}
               .dump()
        << "\n";
  }
  json summary{{"type", "summary"}, {"completed_steps", result.steps.size()}, {"diverged", result.diverged}};
  if (result.diverged) {
    summary["failure"] = result.failure;
  } else {
    summary["final_loss"] = result.final_loss;
    summary["final_accuracy"] = result.final_accuracy;
  }
  out << summary.dump() << "\n";
  write_file(opts.out, out.str());

  if (result.diverged) {
    log << "diverged: " << result.failure << "\nwrote " << opts.out << "\n";
    return kExitDiverged;
  }
  log << "final_loss=" << format_number(result.final_loss)
      << " final_accuracy=" << format_number(result.final_accuracy) << "\nwrote " << opts.out << "\n";
  return kExitOk;
}

}  // namespace specgrad::cli
