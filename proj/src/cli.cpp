#include "biascorr/cli.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "biascorr/core.hpp"
#include "biascorr/datagen.hpp"
#include "biascorr/errors.hpp"
#include "biascorr/io.hpp"
#include "biascorr/logistic.hpp"
#include "biascorr/random.hpp"
#include "biascorr/sampling.hpp"

namespace biascorr::cli {

namespace fs = std::filesystem;

namespace {

// Raised for flag combinations CLI11 cannot express on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_real_list(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  if (text.empty()) return values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(item, &used);
      if (used != item.size() || !std::isfinite(v)) throw std::invalid_argument(item);
      values.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(flag + ": cannot parse '" + item + "' as a number");
    }
  }
  return values;
}

fs::path truth_manifest_path(const fs::path& out) { return fs::path(out.string() + ".truth.json"); }
fs::path sampling_manifest_path(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

double z_score(double estimate, double expected, double se) {
  const double diff = estimate - expected;
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

struct GenerateArgs {
  std::size_t n = 0;
  std::size_t features = 0;
  double intercept = 0.0;
  std::string weights;
  std::uint64_t seed = 0;
  std::string out;
};

struct SampleArgs {
  std::string in;
  std::optional<double> s0;
  std::optional<double> s1;
  bool per_instance = false;
  std::uint64_t seed = 0;
  std::string out;
};

struct TrainArgs {
  std::string in;
  std::optional<double> s0;
  std::optional<double> s1;
  bool per_instance = false;
  std::string manifest;
  double lambda = 0.0;
  double lr = 1.0;
  int max_iters = 10'000;
  double tol = 1e-8;
  std::string out_model;
};

struct PredictArgs {
  std::string model;
  std::string in;
  double deploy_ratio = 1.0;
  std::string out;
};

struct EvaluateArgs {
  std::string model;
  std::string in;
  std::string truth_manifest;
};

struct VerifyArgs {
  std::size_t labels = 3;
  std::uint64_t trials = 1'000'000;
  std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs& a, std::ostream& out) {
  datagen::GenSpec spec;
  spec.n = a.n;
  spec.feature_count = a.features;
  spec.true_intercept = a.intercept;
  spec.true_weights = a.weights.empty() ? std::vector<double>(a.features, 0.0)
                                        : parse_real_list(a.weights, "--weights");
  spec.seed = a.seed;
  if (spec.true_weights.size() != spec.feature_count) {
    throw UsageError("--weights has " + std::to_string(spec.true_weights.size()) +
                     " entries but --features is " + std::to_string(spec.feature_count));
  }
  if (spec.n < 1) throw UsageError("--n must be at least 1");
  const Dataset data = datagen::generate(spec);
  io::write_dataset(data, fs::path(a.out));
  io::write_text(truth_manifest_path(a.out), io::truth_manifest_to_json(spec));
  std::size_t positives = 0;
  for (std::size_t i = 0; i < data.size(); ++i) positives += data.label(i);
  out << "instances " << data.size() << "\npositives " << positives << "\n"
      << "truth_manifest " << truth_manifest_path(a.out).string() << "\n";
  return kExitOk;
}

int run_sample(const SampleArgs& a, std::ostream& out) {
  const Dataset data = io::read_dataset(fs::path(a.in));
  SamplingSpec spec = a.per_instance ? SamplingSpec::per_instance(2)
                                     : SamplingSpec::constant({*a.s0, *a.s1});
  if (a.per_instance && !data.has_rates()) {
    throw DomainError(a.in + ": --per-instance needs 's0' and 's1' columns");
  }
  const auto result = sampling::downsample(data, spec, a.seed);
  io::write_dataset(result.data, fs::path(a.out));
  io::write_text(sampling_manifest_path(a.out), io::sampling_manifest_to_json(result.manifest));
  out << "original " << result.manifest.original_count << "\nretained "
      << result.manifest.retained_count << "\n";
  for (std::size_t y = 0; y < result.manifest.retained_per_label.size(); ++y) {
    out << "retained_label_" << y << ' ' << result.manifest.retained_per_label[y] << "\n";
  }
  out << "manifest " << sampling_manifest_path(a.out).string() << "\n";
  return kExitOk;
}

int run_train(const TrainArgs& a, std::ostream& out) {
  const Dataset data = io::read_dataset(fs::path(a.in));
  SamplingSpec spec = SamplingSpec::constant({a.s0.value_or(1.0), a.s1.value_or(1.0)});
  if (a.per_instance) {
    spec = SamplingSpec::per_instance(2);
  } else if (!a.manifest.empty()) {
    spec = io::sampling_manifest_from_json(io::read_text(a.manifest), a.manifest).spec;
  }
  if (spec.mode() == SamplingSpec::Mode::per_instance && !data.has_rates()) {
    throw DomainError(a.in + ": per-instance correction needs 's0' and 's1' columns");
  }
  logistic::TrainConfig config;
  config.lambda = a.lambda;
  config.learning_rate = a.lr;
  config.max_iters = a.max_iters;
  config.grad_tol = a.tol;
  const auto report = logistic::train(data, spec, config);

  io::ModelFile file;
  file.model = report.model;
  file.lambda = a.lambda;
  file.train_s_r_mode =
      spec.mode() == SamplingSpec::Mode::constant ? "constant" : "per-instance";
  io::write_model(file, fs::path(a.out_model));
  out << "final_loss " << io::format_real(report.loss_trace.back()) << "\n"
      << "grad_norm " << io::format_real(report.final_grad_norm) << "\n"
      << "iterations " << report.iterations << "\n"
      << "converged " << (report.converged ? "true" : "false") << "\n";
  return kExitOk;
}

void check_model_fits(const io::ModelFile& model, const Dataset& data, const std::string& in) {
  if (model.model.weights.size() != data.feature_count()) {
    throw DomainError(in + " has " + std::to_string(data.feature_count()) +
                      " features but the model expects " +
                      std::to_string(model.model.weights.size()));
  }
}

int run_predict(const PredictArgs& a, std::ostream& out) {
  if (!(a.deploy_ratio > 0.0) || !std::isfinite(a.deploy_ratio)) {
    throw UsageError("--deploy-ratio must be positive and finite");
  }
  const io::ModelFile model = io::read_model(fs::path(a.model));
  const Dataset data = io::read_dataset(fs::path(a.in));
  check_model_fits(model, data, a.in);
  std::vector<double> p(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    p[n] = logistic::predict(model.model, data.features(n), a.deploy_ratio);
  }
  std::ofstream file(a.out, std::ios::binary);
  if (!file) throw IoError("cannot open " + a.out + " for writing");
  io::write_dataset_with_column(data, "p", p, file);
  file.flush();
  if (!file) throw IoError("failed writing " + a.out);
  out << "predictions " << data.size() << "\n";
  return kExitOk;
}

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const io::ModelFile model = io::read_model(fs::path(a.model));
  const Dataset data = io::read_dataset(fs::path(a.in));
  check_model_fits(model, data, a.in);
  if (!a.truth_manifest.empty()) {
    const auto truth = io::truth_manifest_from_json(io::read_text(a.truth_manifest),
                                                    a.truth_manifest);
    if (truth.feature_count != model.model.weights.size()) {
      throw DomainError(a.truth_manifest + ": feature count differs from the model");
    }
    double weight_error = 0.0;
    for (std::size_t f = 0; f < truth.feature_count; ++f) {
      weight_error = std::max(weight_error,
                              std::abs(model.model.weights[f] - truth.true_weights[f]));
    }
    out << "intercept_error " << io::format_real(model.model.intercept - truth.true_intercept)
        << "\nmax_weight_error " << io::format_real(weight_error) << "\n";
  }
  out << "instances " << data.size() << "\n"
      << "mean_nll " << io::format_real(logistic::mean_nll(data, model.model)) << "\n"
      << "calibration\n"
      << "bin_lower,bin_upper,count,mean_predicted,observed_rate\n";
  for (const auto& bin : logistic::calibration_table(data, model.model)) {
    out << io::format_real(bin.lower) << ',' << io::format_real(bin.upper) << ','
        << bin.count << ',' << io::format_real(bin.mean_predicted) << ','
        << io::format_real(bin.observed_rate) << "\n";
  }
  return kExitOk;
}

int run_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  if (a.labels < 2) throw UsageError("--labels must be at least 2");
  if (a.trials < 1) throw UsageError("--trials must be at least 1");
  Rng rng(a.seed);
  std::vector<double> weights(a.labels);
  std::vector<double> rates(a.labels);
  for (auto& w : weights) w = rng.uniform(0.1, 2.0);
  for (auto& r : rates) r = rng.uniform(0.05, 1.0);
  const auto pred = DiscretePredictor::tabulated(weights);
  const std::vector<double> x;
  const auto closed = corrected_distribution(pred, rates, x);
  const auto mc = monte_carlo_corrected_distribution(pred, rates, x, a.trials, rng);

  double max_z = 0.0;
  out << "label,rel_prob,rate,closed_form,monte_carlo,std_error,z\n";
  for (std::size_t y = 0; y < a.labels; ++y) {
    const double z = z_score(mc[y].estimate, closed[y], mc[y].standard_error);
    max_z = std::max(max_z, std::abs(z));
    out << y << ',' << io::format_real(weights[y]) << ',' << io::format_real(rates[y]) << ','
        << io::format_real(closed[y]) << ',' << io::format_real(mc[y].estimate) << ','
        << io::format_real(mc[y].standard_error) << ',' << io::format_real(z) << "\n";
  }
  out << "max_abs_z " << io::format_real(max_z) << "\n";
  if (max_z > 5.0) {
    err << "verify-oracle: Monte-Carlo estimate deviates from the closed form by "
        << max_z << " standard errors (limit 5)\n";
    return kExitDataError;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sampling-bias-corrected logistic regression"};
  app.name("biascorr");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Draw a synthetic dataset from a known logistic model");
  generate->add_option("--n", gen.n, "Number of instances")->required();
  generate->add_option("--features", gen.features, "Feature count")->required();
  generate->add_option("--intercept", gen.intercept, "True intercept");
  generate->add_option("--weights", gen.weights, "True weights, comma separated");
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_option("--out", gen.out, "Output CSV; truth manifest goes to <out>.truth.json")->required();

  SampleArgs smp;
  auto* sample = app.add_subcommand("sample", "Downsample a dataset with per-label inclusion rates");
  sample->add_option("--in", smp.in, "Input CSV")->required();
  auto* smp_s0 = sample->add_option("--s0", smp.s0, "Inclusion rate for label 0")
                     ->check(CLI::Range(0.0, 1.0));
  auto* smp_s1 = sample->add_option("--s1", smp.s1, "Inclusion rate for label 1")
                     ->check(CLI::Range(0.0, 1.0));
  auto* smp_pi = sample->add_flag("--per-instance", smp.per_instance,
                                  "Use the 's0'/'s1' columns of the input");
  sample->add_option("--seed", smp.seed, "Random seed");
  sample->add_option("--out", smp.out, "Output CSV; manifest goes to <out>.manifest.json")->required();
  smp_pi->excludes(smp_s0)->excludes(smp_s1);

  TrainArgs trn;
  auto* train = app.add_subcommand("train", "Fit bias-corrected L2 logistic regression");
  train->add_option("--in", trn.in, "Training CSV")->required();
  auto* trn_s0 = train->add_option("--s0", trn.s0, "Label-0 inclusion rate (default 1)")
                     ->check(CLI::Range(0.0, 1.0));
  auto* trn_s1 = train->add_option("--s1", trn.s1, "Label-1 inclusion rate (default 1)")
                     ->check(CLI::Range(0.0, 1.0));
  auto* trn_pi = train->add_flag("--per-instance", trn.per_instance,
                                 "Use the 's0'/'s1' columns of the input");
  auto* trn_mf = train->add_option("--manifest", trn.manifest, "Sampling manifest to correct for");
  train->add_option("--lambda", trn.lambda, "L2 precision on the weights")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--lr", trn.lr, "Initial (largest) step size")->check(CLI::PositiveNumber);
  train->add_option("--max-iters", trn.max_iters, "Iteration limit")->check(CLI::PositiveNumber);
  train->add_option("--tol", trn.tol, "Gradient max-norm tolerance")->check(CLI::PositiveNumber);
  train->add_option("--out-model", trn.out_model, "Output model JSON")->required();
  trn_pi->excludes(trn_s0)->excludes(trn_s1)->excludes(trn_mf);
  trn_mf->excludes(trn_s0)->excludes(trn_s1);

  PredictArgs prd;
  auto* predict = app.add_subcommand("predict", "Append predicted probabilities as column 'p'");
  predict->add_option("--model", prd.model, "Model JSON")->required();
  predict->add_option("--in", prd.in, "Input CSV")->required();
  predict->add_option("--deploy-ratio", prd.deploy_ratio, "Sample ratio at deployment");
  predict->add_option("--out", prd.out, "Output CSV")->required();

  EvaluateArgs evl;
  auto* evaluate = app.add_subcommand("evaluate", "Report NLL, calibration and parameter error");
  evaluate->add_option("--model", evl.model, "Model JSON")->required();
  evaluate->add_option("--in", evl.in, "Evaluation CSV")->required();
  evaluate->add_option("--truth-manifest", evl.truth_manifest, "Truth manifest from generate");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify-oracle",
                                    "Compare the closed-form correction with the generative process");
  verify->add_option("--labels", ver.labels, "Label count K");
  verify->add_option("--trials", ver.trials, "Monte-Carlo trials");
  verify->add_option("--seed", ver.seed, "Random seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    if (sample->parsed() && !smp.per_instance && !(smp.s0 && smp.s1)) {
      throw UsageError("sample: give both --s0 and --s1, or --per-instance");
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "biascorr: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "biascorr: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (generate->parsed()) return run_generate(gen, out);
    if (sample->parsed()) return run_sample(smp, out);
    if (train->parsed()) return run_train(trn, out);
    if (predict->parsed()) return run_predict(prd, out);
    if (evaluate->parsed()) return run_evaluate(evl, out);
    if (verify->parsed()) return run_verify(ver, out, err);
  } catch (const UsageError& e) {
    err << "biascorr: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "biascorr: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "biascorr: unexpected error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace biascorr::cli
