#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "somsam/dataio.hpp"
#include "somsam/pq.hpp"
#include "somsam/sam.hpp"

namespace somsam {

struct TrainOptions {
  SomTrainConfig som;
  std::uint32_t k = 8;
  std::uint32_t n_per_som = 16;
  ClassifierMode mode = ClassifierMode::Binary;
};

struct TrainResult {
  Model model;
  double quantizer_ms = 0.0;
  double classifier_ms = 0.0;
};

/// Trains the quantizer on `train`, then the classifier in one pass over the
/// quantized records. `train` is used as given (normalize beforehand).
TrainResult train_model(const FeatureSet& train, const TrainOptions& options);

/// One pass of classifier training over already-trained SOMs.
AssociativeClassifier train_classifier(const ProductQuantizer& pq, ClassifierMode mode,
                                       const FeatureSet& train);

struct EvalReport {
  std::vector<std::uint32_t> ks;
  /// Fraction of records whose label is among the top ks[i] classes.
  std::vector<double> topk_accuracy;
  /// Top-1 accuracy per label; classes absent from the test set read 0 and
  /// are flagged in class_present.
  std::vector<double> per_class_accuracy;
  std::vector<bool> class_present;
  std::size_t samples = 0;
  double train_ms = 0.0;
  double eval_ms = 0.0;
};

/// Each K is clamped to the number of classes the scorer knows.
EvalReport evaluate(const Model& model, const FeatureSet& test, std::span<const std::uint32_t> ks);

/// Exact cosine-similarity k-NN over L2-normalized features.
///
/// Classes are ranked by vote count among the nearest `neighbors`, then by
/// their best single similarity, then by ascending id. Neighbors are taken by
/// descending similarity, ties to the lower training index.
class KnnClassifier {
 public:
  KnnClassifier(FeatureSet train, std::size_t neighbors);

  std::vector<ClassId> rank(std::span<const float> query) const;
  ClassId predict(std::span<const float> query) const { return rank(query).front(); }
  std::size_t num_classes() const noexcept { return num_classes_; }

 private:
  FeatureSet train_;
  std::size_t neighbors_;
  std::size_t num_classes_;
};

EvalReport evaluate_knn(const KnnClassifier& knn, const FeatureSet& test,
                        std::span<const std::uint32_t> ks);

enum class ClassOrder { LabelAscending, Seeded };

struct CurvePoint {
  std::size_t classes_learned = 0;
  ClassId added_label = 0;
  double top1 = 0.0;
  double top5 = 0.0;
  double batch_top1 = 0.0;
  double batch_top5 = 0.0;
  std::size_t test_samples = 0;
};

/// Learns classes one at a time on top of a quantizer trained once on all of
/// `train`; after each class, scores the test records of the classes seen so
/// far. A classifier rebuilt from scratch on the same classes is scored
/// alongside and must agree exactly, otherwise InternalError is thrown.
/// Class labels are remapped to their position in the learning order.
std::vector<CurvePoint> incremental_curve(const FeatureSet& train, const FeatureSet& test,
                                          const TrainOptions& options, ClassOrder order,
                                          std::uint64_t order_seed);

struct TimingResult {
  std::size_t num_classes = 0;
  ClassId last_class = 0;
  std::size_t full_samples = 0;
  /// learn() calls made while adding the last class.
  std::size_t incremental_learn_calls = 0;
  std::size_t last_class_samples = 0;
  double full_ms = 0.0;
  double incremental_ms = 0.0;
  double ratio() const { return incremental_ms > 0.0 ? full_ms / incremental_ms : 0.0; }
};

/// Classifier training time (quantizing + learning) for the whole set versus
/// adding only the highest label to a classifier that already knows the rest.
/// Each scenario is timed `repeats` times and the fastest run kept. Throws
/// InternalError if the incremental classifier differs from the full one or
/// touched records outside the last class.
TimingResult bench_timing(const ProductQuantizer& pq, ClassifierMode mode, const FeatureSet& train,
                          std::size_t repeats);

}  // namespace somsam
