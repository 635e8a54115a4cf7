#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "somsam/pq.hpp"

namespace somsam {

/// Binary: cells are set (max rule), the k x N-AL model.
/// Integer: cells count hits (sum rule), the k x N-IAL model.
enum class ClassifierMode : std::uint32_t { Binary = 0, Integer = 1 };

using ClassId = std::uint32_t;

struct LabeledCode {
  SparseCode code;
  ClassId label = 0;
};

struct ClassScore {
  ClassId label = 0;
  std::uint64_t score = 0;
  bool operator==(const ClassScore&) const = default;
};

/// Connection matrix between the kN quantizer outputs and M class neurons.
///
/// Rows are created on demand: learning label c grows the matrix to c + 1
/// rows, gaps stay all-zero. Binary rows are packed 64 columns per word,
/// Integer rows hold one uint32 counter per column and refuse to wrap.
///
/// Const member functions may be called concurrently; learn/learn_batch need
/// exclusive access.
class AssociativeClassifier {
 public:
  AssociativeClassifier(ClassifierMode mode, std::size_t k, std::size_t n_per_som);

  ClassifierMode mode() const noexcept { return mode_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t n_per_som() const noexcept { return n_; }
  std::size_t columns() const noexcept { return k_ * n_; }
  std::size_t num_classes() const noexcept { return samples_.size(); }
  std::size_t words_per_row() const noexcept { return words_; }

  std::span<const std::uint64_t> samples_per_class() const noexcept { return samples_; }

  void learn(const SparseCode& code, ClassId label);
  /// All codes are validated before anything is written; a bad pair leaves
  /// the classifier untouched and the error names its index.
  void learn_batch(std::span<const LabeledCode> pairs);

  /// Raw cell value (0/1 in Binary mode).
  std::uint32_t cell(ClassId row, std::size_t column) const;
  std::uint64_t row_sum(ClassId row) const;

  /// Omega . Q(x): k cell reads per class.
  std::vector<std::uint64_t> scores(const SparseCode& code) const;
  /// Winner-takes-all over scores, lowest class id on ties.
  ClassId predict(const SparseCode& code) const;
  /// The `count` best classes by descending score, then ascending id.
  std::vector<ClassScore> top_k(const SparseCode& code, std::size_t count) const;

  /// Packed storage, exposed for persistence.
  std::span<const std::uint64_t> bit_rows() const noexcept { return bits_; }
  std::span<const std::uint32_t> counter_rows() const noexcept { return counts_; }

  /// Rebuilds a classifier from persisted storage. Sizes must match
  /// samples.size() rows of the given mode.
  static AssociativeClassifier from_storage(ClassifierMode mode, std::size_t k,
                                            std::size_t n_per_som,
                                            std::vector<std::uint64_t> samples,
                                            std::vector<std::uint64_t> bits,
                                            std::vector<std::uint32_t> counts);

  friend AssociativeClassifier merge(const AssociativeClassifier& a,
                                     const AssociativeClassifier& b);

  bool operator==(const AssociativeClassifier&) const = default;

 private:
  void grow_to(std::size_t rows);
  void check_code(const SparseCode& code) const;
  void check_nonempty() const;

  ClassifierMode mode_;
  std::size_t k_;
  std::size_t n_;
  std::size_t words_;
  std::vector<std::uint64_t> samples_;
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint32_t> counts_;
};

/// Cellwise max (Binary) or sum (Integer), shorter operand padded with zero
/// rows; sample counters add.
AssociativeClassifier merge(const AssociativeClassifier& a, const AssociativeClassifier& b);

}  // namespace somsam
