#include "somsam/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <tuple>

#include "somsam/error.hpp"
#include "somsam/rng.hpp"

namespace somsam {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void check_test_set(const FeatureSet& test, std::size_t expected_dim) {
  if (test.size() == 0) throw ContractError("empty test set");
  if (test.dim != expected_dim) throw ShapeError("test feature dimension", expected_dim, test.dim);
}

/// Position of `label` in the ranking "score descending, id ascending";
/// classes beyond the scored range never rank.
std::size_t rank_of(std::span<const std::uint64_t> scores, ClassId label) {
  if (label >= scores.size()) return std::numeric_limits<std::size_t>::max();
  const std::uint64_t own = scores[label];
  std::size_t ahead = 0;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (scores[c] > own || (scores[c] == own && c < label)) ++ahead;
  }
  return ahead;
}

/// Accumulates hits per K and per-class top-1 hits.
class ReportBuilder {
 public:
  ReportBuilder(std::span<const std::uint32_t> ks, std::size_t num_classes, std::size_t label_bound)
      : classes_(num_classes), hits_(ks.size(), 0),
        class_hits_(label_bound, 0), class_total_(label_bound, 0) {
    if (ks.empty()) throw ContractError("no top-k values requested");
    for (std::uint32_t k : ks) {
      if (k == 0) throw ContractError("top-k values must be at least 1");
    }
    report_.ks.assign(ks.begin(), ks.end());
  }

  void add(ClassId label, std::size_t rank) {
    for (std::size_t i = 0; i < hits_.size(); ++i) {
      const std::size_t k = std::min<std::size_t>(report_.ks[i], classes_);
      if (rank < k) ++hits_[i];
    }
    ++class_total_[label];
    if (rank == 0) ++class_hits_[label];
    ++report_.samples;
  }

  EvalReport finish(double eval_ms) {
    const auto n = static_cast<double>(report_.samples);
    for (std::size_t h : hits_) report_.topk_accuracy.push_back(static_cast<double>(h) / n);
    for (std::size_t c = 0; c < class_total_.size(); ++c) {
      const bool present = class_total_[c] > 0;
      report_.class_present.push_back(present);
      report_.per_class_accuracy.push_back(
          present ? static_cast<double>(class_hits_[c]) / static_cast<double>(class_total_[c])
                  : 0.0);
    }
    report_.eval_ms = eval_ms;
    return std::move(report_);
  }

 private:
  std::size_t classes_;
  EvalReport report_;
  std::vector<std::size_t> hits_;
  std::vector<std::size_t> class_hits_;
  std::vector<std::size_t> class_total_;
};

}  // namespace

AssociativeClassifier train_classifier(const ProductQuantizer& pq, ClassifierMode mode,
                                       const FeatureSet& train) {
  if (train.dim != pq.input_dim()) throw ShapeError("training feature dimension", pq.input_dim(), train.dim);
  AssociativeClassifier clf(mode, pq.k(), pq.n_per_som());
  for (std::size_t i = 0; i < train.size(); ++i) clf.learn(pq.quantize(train.row(i)), train.labels[i]);
  return clf;
}

TrainResult train_model(const FeatureSet& train, const TrainOptions& options) {
  if (train.size() == 0) throw ContractError("empty training set");
  const auto t0 = Clock::now();
  ProductQuantizer pq = train_pq(options.som, options.k, options.n_per_som, train.view());
  const double pq_ms = elapsed_ms(t0);
  const auto t1 = Clock::now();
  AssociativeClassifier clf = train_classifier(pq, options.mode, train);
  const double clf_ms = elapsed_ms(t1);
  return {Model{std::move(pq), std::move(clf)}, pq_ms, clf_ms};
}

EvalReport evaluate(const Model& model, const FeatureSet& test, std::span<const std::uint32_t> ks) {
  check_test_set(test, model.quantizer.input_dim());
  const auto t0 = Clock::now();
  const std::size_t m = model.classifier.num_classes();
  ReportBuilder report(ks, m, std::max<std::size_t>(test.label_bound(), m));
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto scores = model.classifier.scores(model.quantizer.quantize(test.row(i)));
    report.add(test.labels[i], rank_of(scores, test.labels[i]));
  }
  return report.finish(elapsed_ms(t0));
}

// ---------------------------------------------------------------------------

KnnClassifier::KnnClassifier(FeatureSet train, std::size_t neighbors)
    : train_(std::move(train)), neighbors_(neighbors), num_classes_(train_.label_bound()) {
  if (neighbors_ == 0) throw ContractError("k-NN needs at least one neighbor");
  if (neighbors_ > train_.size()) {
    throw ContractError("knn-k " + std::to_string(neighbors_) + " exceeds the " +
                        std::to_string(train_.size()) + " training records");
  }
}

std::vector<ClassId> KnnClassifier::rank(std::span<const float> query) const {
  if (query.size() != train_.dim) throw ShapeError("k-NN query dimension", train_.dim, query.size());
  const std::size_t n = train_.size();
  std::vector<double> sim(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = train_.row(i);
    double dot = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) dot += static_cast<double>(row[c]) * query[c];
    sim[i] = dot;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto nearest = order.begin() + static_cast<std::ptrdiff_t>(neighbors_);
  std::partial_sort(order.begin(), nearest, order.end(), [&](std::size_t a, std::size_t b) {
    return sim[a] != sim[b] ? sim[a] > sim[b] : a < b;
  });

  std::vector<std::size_t> votes(num_classes_, 0);
  std::vector<double> best(num_classes_, -std::numeric_limits<double>::infinity());
  for (auto it = order.begin(); it != nearest; ++it) {
    const ClassId label = train_.labels[*it];
    ++votes[label];
    best[label] = std::max(best[label], sim[*it]);
  }
  std::vector<ClassId> classes(num_classes_);
  std::iota(classes.begin(), classes.end(), ClassId{0});
  std::stable_sort(classes.begin(), classes.end(), [&](ClassId a, ClassId b) {
    if (votes[a] != votes[b]) return votes[a] > votes[b];
    if (votes[a] == 0) return false;
    return best[a] > best[b];
  });
  return classes;
}

EvalReport evaluate_knn(const KnnClassifier& knn, const FeatureSet& test,
                        std::span<const std::uint32_t> ks) {
  if (test.size() == 0) throw ContractError("empty test set");
  const auto t0 = Clock::now();
  const std::size_t m = knn.num_classes();
  ReportBuilder report(ks, m, std::max<std::size_t>(test.label_bound(), m));
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto ranked = knn.rank(test.row(i));
    const auto it = std::find(ranked.begin(), ranked.end(), test.labels[i]);
    const std::size_t pos = it == ranked.end() ? std::numeric_limits<std::size_t>::max()
                                               : static_cast<std::size_t>(it - ranked.begin());
    report.add(test.labels[i], pos);
  }
  return report.finish(elapsed_ms(t0));
}

// ---------------------------------------------------------------------------

std::vector<CurvePoint> incremental_curve(const FeatureSet& train, const FeatureSet& test,
                                          const TrainOptions& options, ClassOrder order,
                                          std::uint64_t order_seed) {
  if (train.size() == 0) throw ContractError("empty training set");
  check_test_set(test, train.dim);

  const std::set<ClassId> present(train.labels.begin(), train.labels.end());
  std::vector<ClassId> sequence(present.begin(), present.end());
  if (order == ClassOrder::Seeded) {
    Rng rng(order_seed);
    rng.shuffle(std::span<ClassId>(sequence));
  }
  constexpr auto kUnseen = std::numeric_limits<ClassId>::max();
  std::vector<ClassId> position(std::max(train.label_bound(), test.label_bound()), kUnseen);
  for (std::size_t p = 0; p < sequence.size(); ++p) position[sequence[p]] = static_cast<ClassId>(p);

  const ProductQuantizer pq = train_pq(options.som, options.k, options.n_per_som, train.view());

  std::vector<std::vector<SparseCode>> train_codes(sequence.size());
  std::vector<LabeledCode> all_pairs;  // record order, for the batch rebuild
  for (std::size_t i = 0; i < train.size(); ++i) {
    all_pairs.push_back({pq.quantize(train.row(i)), position[train.labels[i]]});
    train_codes[all_pairs.back().label].push_back(all_pairs.back().code);
  }
  std::vector<LabeledCode> test_codes;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const ClassId p = position[test.labels[i]];
    if (p != kUnseen) test_codes.push_back({pq.quantize(test.row(i)), p});
  }

  auto accuracy = [&](const AssociativeClassifier& clf, ClassId learned, std::size_t k) {
    std::size_t hits = 0;
    std::size_t total = 0;
    for (const auto& probe : test_codes) {
      if (probe.label >= learned) continue;
      ++total;
      if (rank_of(clf.scores(probe.code), probe.label) < k) ++hits;
    }
    return std::pair{total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total),
                     total};
  };

  std::vector<CurvePoint> curve;
  AssociativeClassifier incremental(options.mode, pq.k(), pq.n_per_som());
  for (std::size_t p = 0; p < sequence.size(); ++p) {
    const auto label = static_cast<ClassId>(p);
    for (const auto& code : train_codes[p]) incremental.learn(code, label);

    AssociativeClassifier batch(options.mode, pq.k(), pq.n_per_som());
    std::vector<LabeledCode> seen;
    for (const auto& pair : all_pairs) {
      if (pair.label <= label) seen.push_back(pair);
    }
    batch.learn_batch(seen);
    if (!(batch == incremental)) {
      throw InternalError("incremental and batch classifiers differ after class " +
                          std::to_string(sequence[p]));
    }

    const std::size_t top5 = std::min<std::size_t>(5, p + 1);
    CurvePoint point;
    point.classes_learned = p + 1;
    point.added_label = sequence[p];
    std::tie(point.top1, point.test_samples) = accuracy(incremental, label + 1, 1);
    point.top5 = accuracy(incremental, label + 1, top5).first;
    point.batch_top1 = accuracy(batch, label + 1, 1).first;
    point.batch_top5 = accuracy(batch, label + 1, top5).first;
    if (point.top1 != point.batch_top1 || point.top5 != point.batch_top5) {
      throw InternalError("incremental and batch accuracies differ after class " +
                          std::to_string(sequence[p]));
    }
    curve.push_back(point);
  }
  return curve;
}

TimingResult bench_timing(const ProductQuantizer& pq, ClassifierMode mode, const FeatureSet& train,
                          std::size_t repeats) {
  if (train.size() == 0) throw ContractError("empty training set");
  if (repeats == 0) throw ContractError("at least one timing repetition is required");
  if (train.dim != pq.input_dim()) throw ShapeError("training feature dimension", pq.input_dim(), train.dim);

  TimingResult result;
  result.num_classes = train.distinct_labels();
  result.last_class = train.label_bound() - 1;
  result.full_samples = train.size();

  FeatureSet others{train.dim, {}, {}};
  FeatureSet last{train.dim, {}, {}};
  for (std::size_t i = 0; i < train.size(); ++i) {
    (train.labels[i] == result.last_class ? last : others).push_back(train.labels[i], train.row(i));
  }
  result.last_class_samples = last.size();
  const AssociativeClassifier base = train_classifier(pq, mode, others);

  result.full_ms = std::numeric_limits<double>::infinity();
  result.incremental_ms = std::numeric_limits<double>::infinity();
  AssociativeClassifier full(mode, pq.k(), pq.n_per_som());
  AssociativeClassifier added = base;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    full = train_classifier(pq, mode, train);
    result.full_ms = std::min(result.full_ms, elapsed_ms(t0));

    added = base;
    std::size_t calls = 0;
    const auto t1 = Clock::now();
    for (std::size_t i = 0; i < last.size(); ++i) {
      added.learn(pq.quantize(last.row(i)), last.labels[i]);
      ++calls;
    }
    result.incremental_ms = std::min(result.incremental_ms, elapsed_ms(t1));
    result.incremental_learn_calls = calls;
  }

  if (!(added == full)) throw InternalError("adding the last class did not reproduce full training");
  for (ClassId c = 0; c < base.num_classes(); ++c) {
    if (c != result.last_class && added.samples_per_class()[c] != base.samples_per_class()[c]) {
      throw InternalError("adding the last class touched class " + std::to_string(c));
    }
  }
  if (result.incremental_learn_calls != result.last_class_samples) {
    throw InternalError("incremental pass processed records outside the last class");
  }
  return result;
}

}  // namespace somsam
