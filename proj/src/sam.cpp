#include "somsam/sam.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <string>

#include "somsam/error.hpp"

namespace somsam {

namespace {

constexpr auto kCounterMax = std::numeric_limits<std::uint32_t>::max();

bool test_bit(std::span<const std::uint64_t> row, std::size_t column) {
  return (row[column >> 6] >> (column & 63)) & 1U;
}

}  // namespace

AssociativeClassifier::AssociativeClassifier(ClassifierMode mode, std::size_t k,
                                             std::size_t n_per_som)
    : mode_(mode), k_(k), n_(n_per_som), words_((k * n_per_som + 63) / 64) {
  if (k == 0) throw ContractError("classifier needs k >= 1");
  if (n_per_som == 0) throw ContractError("classifier needs N >= 1");
  if (mode != ClassifierMode::Binary && mode != ClassifierMode::Integer) {
    throw ContractError("unknown classifier mode");
  }
}

void AssociativeClassifier::grow_to(std::size_t rows) {
  if (rows <= samples_.size()) return;
  samples_.resize(rows, 0);
  if (mode_ == ClassifierMode::Binary) {
    bits_.resize(rows * words_, 0);
  } else {
    counts_.resize(rows * columns(), 0);
  }
}

void AssociativeClassifier::check_code(const SparseCode& code) const { code.validate(k_, n_); }

void AssociativeClassifier::check_nonempty() const {
  if (samples_.empty()) throw ContractError("classifier has no classes");
}

void AssociativeClassifier::learn(const SparseCode& code, ClassId label) {
  check_code(code);
  if (mode_ == ClassifierMode::Integer && label < samples_.size()) {
    const std::uint32_t* row = counts_.data() + std::size_t{label} * columns();
    for (std::size_t j = 0; j < k_; ++j) {
      if (row[code.column(j)] == kCounterMax) {
        throw OverflowError("counter overflow in class " + std::to_string(label));
      }
    }
  }
  grow_to(std::size_t{label} + 1);
  if (mode_ == ClassifierMode::Binary) {
    std::uint64_t* row = bits_.data() + std::size_t{label} * words_;
    for (std::size_t j = 0; j < k_; ++j) {
      const std::size_t col = code.column(j);
      row[col >> 6] |= std::uint64_t{1} << (col & 63);
    }
  } else {
    std::uint32_t* row = counts_.data() + std::size_t{label} * columns();
    for (std::size_t j = 0; j < k_; ++j) ++row[code.column(j)];
  }
  ++samples_[label];
}

void AssociativeClassifier::learn_batch(std::span<const LabeledCode> pairs) {
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    try {
      check_code(pairs[p].code);
    } catch (const ShapeError& e) {
      throw ShapeError("pair " + std::to_string(p) + ": " + e.what(), e.expected(), e.actual());
    }
  }
  if (mode_ == ClassifierMode::Binary) {
    for (const auto& pair : pairs) learn(pair.code, pair.label);
    return;
  }
  // Integer updates can overflow midway, so they go to a copy first.
  AssociativeClassifier staged = *this;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    try {
      staged.learn(pairs[p].code, pairs[p].label);
    } catch (const OverflowError& e) {
      throw OverflowError("pair " + std::to_string(p) + ": " + e.what());
    }
  }
  *this = std::move(staged);
}

std::uint32_t AssociativeClassifier::cell(ClassId row, std::size_t column) const {
  if (row >= num_classes()) throw ContractError("class row out of range");
  if (column >= columns()) throw ContractError("column out of range");
  if (mode_ == ClassifierMode::Binary) {
    return test_bit({bits_.data() + std::size_t{row} * words_, words_}, column) ? 1U : 0U;
  }
  return counts_[std::size_t{row} * columns() + column];
}

std::uint64_t AssociativeClassifier::row_sum(ClassId row) const {
  if (row >= num_classes()) throw ContractError("class row out of range");
  if (mode_ == ClassifierMode::Binary) {
    std::uint64_t sum = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      sum += static_cast<std::uint64_t>(std::popcount(bits_[std::size_t{row} * words_ + w]));
    }
    return sum;
  }
  const auto begin = counts_.begin() + static_cast<std::ptrdiff_t>(std::size_t{row} * columns());
  return std::accumulate(begin, begin + static_cast<std::ptrdiff_t>(columns()), std::uint64_t{0});
}

std::vector<std::uint64_t> AssociativeClassifier::scores(const SparseCode& code) const {
  check_code(code);
  check_nonempty();
  const std::size_t m = num_classes();
  std::vector<std::uint64_t> out(m, 0);
  if (mode_ == ClassifierMode::Binary) {
    // Per block: word offset and mask of the active column, shared by all rows.
    std::vector<std::pair<std::size_t, std::uint64_t>> probes(k_);
    for (std::size_t j = 0; j < k_; ++j) {
      const std::size_t col = code.column(j);
      probes[j] = {col >> 6, std::uint64_t{1} << (col & 63)};
    }
    for (std::size_t c = 0; c < m; ++c) {
      const std::uint64_t* row = bits_.data() + c * words_;
      std::uint64_t s = 0;
      for (const auto& [word, mask] : probes) s += (row[word] & mask) != 0;
      out[c] = s;
    }
  } else {
    for (std::size_t c = 0; c < m; ++c) {
      const std::uint32_t* row = counts_.data() + c * columns();
      std::uint64_t s = 0;
      for (std::size_t j = 0; j < k_; ++j) s += row[code.column(j)];
      out[c] = s;
    }
  }
  return out;
}

ClassId AssociativeClassifier::predict(const SparseCode& code) const {
  const auto s = scores(code);
  return static_cast<ClassId>(std::max_element(s.begin(), s.end()) - s.begin());
}

std::vector<ClassScore> AssociativeClassifier::top_k(const SparseCode& code,
                                                     std::size_t count) const {
  const auto s = scores(code);
  if (count < 1 || count > s.size()) {
    throw ContractError("top-k count " + std::to_string(count) + " outside [1, " +
                        std::to_string(s.size()) + "]");
  }
  std::vector<ClassScore> ranked(s.size());
  for (std::size_t c = 0; c < s.size(); ++c) ranked[c] = {static_cast<ClassId>(c), s[c]};
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(count),
                    ranked.end(), [](const ClassScore& a, const ClassScore& b) {
                      return a.score != b.score ? a.score > b.score : a.label < b.label;
                    });
  ranked.resize(count);
  return ranked;
}

AssociativeClassifier AssociativeClassifier::from_storage(ClassifierMode mode, std::size_t k,
                                                          std::size_t n_per_som,
                                                          std::vector<std::uint64_t> samples,
                                                          std::vector<std::uint64_t> bits,
                                                          std::vector<std::uint32_t> counts) {
  AssociativeClassifier clf(mode, k, n_per_som);
  const std::size_t m = samples.size();
  if (mode == ClassifierMode::Binary) {
    if (bits.size() != m * clf.words_) throw ShapeError("bit row storage", m * clf.words_, bits.size());
    if (!counts.empty()) throw ShapeError("counter storage in binary mode", 0, counts.size());
    const std::size_t tail = clf.columns() % 64;
    if (tail != 0) {
      const std::uint64_t unused = ~((std::uint64_t{1} << tail) - 1);
      for (std::size_t r = 0; r < m; ++r) {
        if (bits[r * clf.words_ + clf.words_ - 1] & unused) {
          throw ContractError("bits set beyond the last column in row " + std::to_string(r));
        }
      }
    }
  } else {
    if (counts.size() != m * clf.columns()) {
      throw ShapeError("counter row storage", m * clf.columns(), counts.size());
    }
    if (!bits.empty()) throw ShapeError("bit storage in integer mode", 0, bits.size());
  }
  clf.samples_ = std::move(samples);
  clf.bits_ = std::move(bits);
  clf.counts_ = std::move(counts);
  return clf;
}

AssociativeClassifier merge(const AssociativeClassifier& a, const AssociativeClassifier& b) {
  if (a.mode_ != b.mode_) throw ContractError("cannot merge classifiers of different modes");
  if (a.k_ != b.k_) throw ShapeError("merge: k", a.k_, b.k_);
  if (a.n_ != b.n_) throw ShapeError("merge: neurons per SOM", a.n_, b.n_);

  AssociativeClassifier out = a;
  out.grow_to(b.num_classes());
  for (std::size_t c = 0; c < b.num_classes(); ++c) out.samples_[c] += b.samples_[c];
  if (a.mode_ == ClassifierMode::Binary) {
    for (std::size_t i = 0; i < b.bits_.size(); ++i) out.bits_[i] |= b.bits_[i];
  } else {
    for (std::size_t i = 0; i < b.counts_.size(); ++i) {
      if (out.counts_[i] > kCounterMax - b.counts_[i]) {
        throw OverflowError("counter overflow while merging class " +
                            std::to_string(i / a.columns()));
      }
      out.counts_[i] += b.counts_[i];
    }
  }
  return out;
}

}  // namespace somsam
