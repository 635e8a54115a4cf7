// somsam: train, evaluate and benchmark SOM-quantized associative classifiers
// over FVB feature files. Results go to stdout as CSV; the first line of
// every table is a comment holding the resolved configuration.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "somsam/dataio.hpp"
#include "somsam/error.hpp"
#include "somsam/eval.hpp"
#include "somsam/rng.hpp"

namespace {

using namespace somsam;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitShape = 4;
constexpr int kExitIo = 5;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Contract: return kExitUsage;
    case ErrorKind::Shape: return kExitShape;
    case ErrorKind::Format: return kExitFormat;
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::Overflow:
    case ErrorKind::Internal: return kExitFailure;
  }
  return kExitFailure;
}

struct ModelFlags {
  std::uint32_t k = 8;
  std::uint32_t n = 16;
  std::uint32_t epochs = 10;
  double alpha = 0.1;
  std::optional<double> theta;
  Decay decay = Decay::Linear;
  ClassifierMode mode = ClassifierMode::Binary;
  std::uint64_t seed = 0;

  TrainOptions options() const {
    TrainOptions opt;
    opt.k = k;
    opt.n_per_som = n;
    opt.mode = mode;
    opt.som.epochs = epochs;
    opt.som.alpha = alpha;
    opt.som.theta = theta;
    opt.som.decay = decay;
    opt.som.seed = seed;
    return opt;
  }

  std::string describe() const {
    const GridTopology grid = GridTopology::near_square(n);
    std::ostringstream os;
    os << "k=" << k << " n=" << n << " grid=" << grid.rows << "x" << grid.cols
       << " epochs=" << epochs << " alpha=" << alpha
       << " theta=" << theta.value_or(static_cast<double>(std::max(grid.rows, grid.cols)) / 2.0)
       << " decay=" << (decay == Decay::Linear ? "linear" : "exponential")
       << " mode=" << (mode == ClassifierMode::Binary ? "binary" : "integer") << " seed=" << seed;
    return os.str();
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  const std::map<std::string, Decay> decays{{"linear", Decay::Linear},
                                            {"exponential", Decay::Exponential}};
  const std::map<std::string, ClassifierMode> modes{{"binary", ClassifierMode::Binary},
                                                    {"integer", ClassifierMode::Integer}};
  cmd->add_option("--k", f.k, "Number of SOMs (subspaces)")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--n", f.n, "Neurons per SOM")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", f.epochs, "SOM training epochs")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", f.alpha, "SOM learning rate in (0, 1]")->capture_default_str();
  cmd->add_option("--theta", f.theta, "Neighborhood width (default max(rows, cols) / 2)");
  cmd->add_option("--decay", f.decay, "linear | exponential")
      ->transform(CLI::CheckedTransformer(decays, CLI::ignore_case));
  cmd->add_option("--mode", f.mode, "binary | integer")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case));
  cmd->add_option("--seed", f.seed, "PRNG seed")->capture_default_str();
}

std::vector<std::uint32_t> parse_topk(const std::string& text) {
  std::vector<std::uint32_t> ks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      ks.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::logic_error&) {
      throw ContractError("invalid --topk entry '" + item + "'");
    }
  }
  if (ks.empty()) throw ContractError("--topk needs at least one value");
  return ks;
}

FeatureSet load_normalized(const std::string& path) {
  auto result = l2_normalize(read_features(path));
  if (result.skipped_zero > 0) {
    std::cerr << "warning: " << path << ": " << result.skipped_zero
              << " zero vectors left unnormalized\n";
  }
  return std::move(result.set);
}

void print_eval_csv(const std::string& config, const std::vector<EvalReport>& runs) {
  auto mean_std = [&](auto get) {
    double sum = 0.0;
    for (const auto& r : runs) sum += get(r);
    const double mean = sum / static_cast<double>(runs.size());
    double sq = 0.0;
    for (const auto& r : runs) sq += (get(r) - mean) * (get(r) - mean);
    return std::pair{mean, runs.size() > 1 ? std::sqrt(sq / static_cast<double>(runs.size() - 1)) : 0.0};
  };
  const EvalReport& first = runs.front();
  std::cout << "# schema=somsam-eval/1 runs=" << runs.size() << " " << config << "\n";
  std::cout << "metric,key,mean,std\n";
  for (std::size_t i = 0; i < first.ks.size(); ++i) {
    const auto [m, s] = mean_std([i](const EvalReport& r) { return r.topk_accuracy[i]; });
    std::cout << "topk," << first.ks[i] << "," << m << "," << s << "\n";
  }
  for (std::size_t c = 0; c < first.per_class_accuracy.size(); ++c) {
    if (!first.class_present[c]) continue;
    const auto [m, s] = mean_std([c](const EvalReport& r) { return r.per_class_accuracy[c]; });
    std::cout << "class_top1," << c << "," << m << "," << s << "\n";
  }
  std::cout << "samples,," << first.samples << ",0\n";
  const auto [tm, ts] = mean_std([](const EvalReport& r) { return r.train_ms; });
  std::cout << "train_ms,," << tm << "," << ts << "\n";
  const auto [em, es] = mean_std([](const EvalReport& r) { return r.eval_ms; });
  std::cout << "eval_ms,," << em << "," << es << "\n";
}

void print_eval_json(const std::string& config, const std::vector<EvalReport>& runs) {
  nlohmann::json out;
  out["schema"] = "somsam-eval/1";
  out["config"] = config;
  out["runs"] = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json run;
    for (std::size_t i = 0; i < r.ks.size(); ++i) {
      run["topk"][std::to_string(r.ks[i])] = r.topk_accuracy[i];
    }
    run["per_class_top1"] = nlohmann::json::object();
    for (std::size_t c = 0; c < r.per_class_accuracy.size(); ++c) {
      if (r.class_present[c]) run["per_class_top1"][std::to_string(c)] = r.per_class_accuracy[c];
    }
    run["samples"] = r.samples;
    run["train_ms"] = r.train_ms;
    run["eval_ms"] = r.eval_ms;
    out["runs"].push_back(run);
  }
  std::cout << out.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOM product quantizer + sparse associative memory classifier"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "somsam 0.1.0");

  // gen-synthetic
  SyntheticSpec synth;
  std::uint32_t test_per_class = 0;
  std::string synth_out;
  std::string synth_test_out;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a seeded Gaussian-cluster feature set");
  gen->add_option("--classes", synth.num_classes)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--dim", synth.dim)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--train-per-class", synth.samples_per_class)->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--test-per-class", test_per_class, "Also emit a test split with these many")
      ->capture_default_str();
  gen->add_option("--spread", synth.cluster_spread, "Within-class standard deviation")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", synth.seed)->capture_default_str();
  gen->add_option("--out", synth_out, "Training FVB output")->required();
  gen->add_option("--out-test", synth_test_out, "Test FVB output");

  // train
  ModelFlags train_flags;
  std::string train_features;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Train the quantizer and classifier, save a model");
  add_model_flags(train, train_flags);
  train->add_option("--features", train_features, "Training FVB")->required();
  train->add_option("--out", train_out, "Model output")->required();

  // eval
  std::string eval_model;
  std::string eval_features;
  std::string eval_train;
  std::string eval_topk = "1,5";
  std::string eval_format = "csv";
  std::uint32_t eval_runs = 1;
  ModelFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Top-K accuracy of a model on a test FVB");
  eval->add_option("--model", eval_model, "Saved model");
  eval->add_option("--features", eval_features, "Test FVB")->required();
  eval->add_option("--features-train", eval_train,
                   "Train fresh models instead of loading one (combine with --runs)");
  eval->add_option("--runs", eval_runs, "Repetitions with per-run derived seeds")
      ->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--topk", eval_topk, "Comma-separated K values")->capture_default_str();
  eval->add_option("--format", eval_format)->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  add_model_flags(eval, eval_flags);

  // incremental-curve
  ModelFlags curve_flags;
  std::string curve_train;
  std::string curve_test;
  std::string curve_order = "label-ascending";
  auto* curve = app.add_subcommand("incremental-curve",
                                   "Accuracy while classes are learned one at a time");
  add_model_flags(curve, curve_flags);
  curve->add_option("--features-train", curve_train)->required();
  curve->add_option("--features-test", curve_test)->required();
  curve->add_option("--order", curve_order, "label-ascending | seed")
      ->check(CLI::IsMember({"label-ascending", "seed"}))->capture_default_str();

  // baseline-knn
  std::string knn_train;
  std::string knn_test;
  std::size_t knn_k = 1;
  std::string knn_topk = "1,5";
  std::uint64_t knn_seed = 0;
  auto* knn = app.add_subcommand("baseline-knn", "Brute-force cosine k-NN reference");
  knn->add_option("--features-train", knn_train)->required();
  knn->add_option("--features-test", knn_test)->required();
  knn->add_option("--knn-k", knn_k, "Neighbors")->capture_default_str()->check(CLI::PositiveNumber);
  knn->add_option("--topk", knn_topk)->capture_default_str();
  knn->add_option("--seed", knn_seed, "Unused; accepted for uniformity")->capture_default_str();

  // bench-timing
  ModelFlags bench_flags;
  std::string bench_features;
  std::string bench_scenario = "both";
  std::size_t bench_repeats = 5;
  std::uint32_t bench_runs = 1;
  auto* bench = app.add_subcommand("bench-timing",
                                   "Full retraining vs adding the last class to the classifier");
  add_model_flags(bench, bench_flags);
  bench->add_option("--features", bench_features, "Training FVB")->required();
  bench->add_option("--scenario", bench_scenario, "full | add-last-class | both")
      ->check(CLI::IsMember({"full", "add-last-class", "both"}))->capture_default_str();
  bench->add_option("--repeats", bench_repeats, "Timings per scenario; the fastest is kept")
      ->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--runs", bench_runs, "Independent runs with derived quantizer seeds")
      ->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    std::cout.precision(6);
    if (*gen) {
      const std::uint32_t train_per_class = synth.samples_per_class;
      synth.samples_per_class += test_per_class;
      const FeatureSet all = generate_synthetic(synth);
      auto [train_set, test_set] = split_per_class(all, train_per_class);
      write_features(train_set, synth_out);
      if (!synth_test_out.empty()) {
        if (test_per_class == 0) throw ContractError("--out-test needs --test-per-class > 0");
        write_features(test_set, synth_test_out);
      }
      std::cout << "# schema=somsam-gen/1 classes=" << synth.num_classes << " dim=" << synth.dim
                << " train_per_class=" << train_per_class << " test_per_class=" << test_per_class
                << " spread=" << synth.cluster_spread << " seed=" << synth.seed << "\n"
                << "split,records\n"
                << "train," << train_set.size() << "\n"
                << "test," << test_set.size() << "\n";
    } else if (*train) {
      const FeatureSet data = load_normalized(train_features);
      const TrainResult result = train_model(data, train_flags.options());
      save_model(result.model, train_out);
      std::cout << "# schema=somsam-train/1 " << train_flags.describe() << "\n"
                << "phase,ms\n"
                << "quantizer," << result.quantizer_ms << "\n"
                << "classifier," << result.classifier_ms << "\n";
    } else if (*eval) {
      const auto ks = parse_topk(eval_topk);
      const FeatureSet test = load_normalized(eval_features);
      std::vector<EvalReport> runs;
      std::string config;
      if (!eval_train.empty()) {
        if (!eval_model.empty()) throw ContractError("use either --model or --features-train");
        const FeatureSet data = load_normalized(eval_train);
        config = eval_flags.describe();
        for (std::uint32_t r = 0; r < eval_runs; ++r) {
          TrainOptions opt = eval_flags.options();
          if (eval_runs > 1) opt.som.seed = mix_seed(eval_flags.seed, r);
          const TrainResult trained = train_model(data, opt);
          EvalReport report = evaluate(trained.model, test, ks);
          report.train_ms = trained.classifier_ms;
          runs.push_back(std::move(report));
        }
      } else {
        if (eval_model.empty()) throw ContractError("eval needs --model or --features-train");
        if (eval_runs != 1) throw ContractError("--runs needs --features-train");
        const Model model = load_model(eval_model);
        config = "model=" + eval_model;
        runs.push_back(evaluate(model, test, ks));
      }
      if (eval_format == "json") {
        print_eval_json(config, runs);
      } else {
        print_eval_csv(config, runs);
      }
    } else if (*curve) {
      const FeatureSet train_set = load_normalized(curve_train);
      const FeatureSet test_set = load_normalized(curve_test);
      const ClassOrder order =
          curve_order == "seed" ? ClassOrder::Seeded : ClassOrder::LabelAscending;
      const auto points =
          incremental_curve(train_set, test_set, curve_flags.options(), order, curve_flags.seed);
      std::cout << "# schema=somsam-curve/1 order=" << curve_order << " " << curve_flags.describe()
                << "\n"
                << "classes_learned,added_label,top1,top5,batch_top1,batch_top5,test_samples\n";
      for (const auto& p : points) {
        std::cout << p.classes_learned << "," << p.added_label << "," << p.top1 << "," << p.top5
                  << "," << p.batch_top1 << "," << p.batch_top5 << "," << p.test_samples << "\n";
      }
    } else if (*knn) {
      const auto ks = parse_topk(knn_topk);
      const FeatureSet test_set = load_normalized(knn_test);
      const KnnClassifier classifier(load_normalized(knn_train), knn_k);
      print_eval_csv("knn_k=" + std::to_string(knn_k), {evaluate_knn(classifier, test_set, ks)});
    } else if (*bench) {
      const FeatureSet data = load_normalized(bench_features);
      std::cout << "# schema=somsam-timing/1 scenario=" << bench_scenario
                << " repeats=" << bench_repeats << " runs=" << bench_runs << " "
                << bench_flags.describe() << "\n"
                << "run,scenario,ms,samples,learn_calls,ratio\n";
      for (std::uint32_t r = 0; r < bench_runs; ++r) {
        TrainOptions opt = bench_flags.options();
        if (bench_runs > 1) opt.som.seed = mix_seed(bench_flags.seed, r);
        const ProductQuantizer pq = train_pq(opt.som, opt.k, opt.n_per_som, data.view());
        const TimingResult t = bench_timing(pq, opt.mode, data, bench_repeats);
        if (bench_scenario != "add-last-class") {
          std::cout << r << ",full," << t.full_ms << "," << t.full_samples << ","
                    << t.full_samples << ",\n";
        }
        if (bench_scenario != "full") {
          std::cout << r << ",add-last-class," << t.incremental_ms << "," << t.last_class_samples
                    << "," << t.incremental_learn_calls << "," << t.ratio() << "\n";
        }
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
