#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rnarl/sequence.hpp"

namespace rnarl {

// Pair-additive stand-in for a thermodynamic model. Disallowed pairs are +inf.
struct PairEnergyTable {
  double gc = -3.0;
  double au = -2.0;
  double gu = -1.0;
  std::size_t min_loop = 3;

  double energy(Base x, Base y) const;
  bool can_pair(Base x, Base y) const {
    return energy(x, y) < std::numeric_limits<double>::infinity();
  }
};

using BasePair = std::pair<std::size_t, std::size_t>;

class SecondaryStructure {
 public:
  SecondaryStructure() = default;
  SecondaryStructure(std::size_t length, std::vector<BasePair> pairs);

  static SecondaryStructure from_dot_bracket(std::string_view text);

  std::size_t length() const { return length_; }
  // Sorted by opening index.
  const std::vector<BasePair>& pairs() const { return pairs_; }
  std::string dot_bracket() const;

  friend bool operator==(const SecondaryStructure&,
                         const SecondaryStructure&) = default;

 private:
  std::size_t length_ = 0;
  std::vector<BasePair> pairs_;
};

// Empty string when the structure is admissible for s under the table,
// otherwise a description of the first violated rule.
std::string structure_violation(const SecondaryStructure& st,
                                const RnaSequence& s,
                                const PairEnergyTable& table);

double structure_energy(const SecondaryStructure& st, const RnaSequence& s,
                        const PairEnergyTable& table);

struct FoldResult {
  SecondaryStructure structure;
  double energy = 0.0;
};

// O(L^3) minimum-energy fold over nested structures. Traceback prefers
// leaving i unpaired, then the smallest partner k.
FoldResult nussinov_fold(const RnaSequence& s, const PairEnergyTable& table);

inline constexpr std::size_t kBruteForceMaxLength = 16;

// Exhaustive enumeration; throws SequenceTooLong above kBruteForceMaxLength.
FoldResult brute_force_fold(const RnaSequence& s, const PairEnergyTable& table);

class FitnessModel {
 public:
  virtual ~FitnessModel() = default;
  virtual FoldResult fold(const RnaSequence& s) const = 0;
  virtual std::string name() const = 0;
};

// Higher is better: the negated fold energy.
double fitness_of(const RnaSequence& s, const FitnessModel& model);

class BuiltinFitness final : public FitnessModel {
 public:
  BuiltinFitness() = default;
  explicit BuiltinFitness(PairEnergyTable table) : table_(table) {}

  FoldResult fold(const RnaSequence& s) const override {
    return nussinov_fold(s, table_);
  }
  std::string name() const override { return "builtin"; }
  const PairEnergyTable& table() const { return table_; }

 private:
  PairEnergyTable table_;
};

// Counts every call to the wrapped model against an optional limit. This is
// the budget currency shared by all optimizers.
class EvalCounter {
 public:
  static constexpr std::uint64_t kUnlimited =
      std::numeric_limits<std::uint64_t>::max();

  explicit EvalCounter(const FitnessModel& model,
                       std::uint64_t limit = kUnlimited)
      : model_(&model), limit_(limit) {}

  double evaluate(const RnaSequence& s) {
    ++count_;
    return fitness_of(s, *model_);
  }

  std::uint64_t count() const { return count_; }
  std::uint64_t limit() const { return limit_; }
  bool exhausted() const { return count_ >= limit_; }
  const FitnessModel& model() const { return *model_; }

 private:
  const FitnessModel* model_;
  std::uint64_t limit_;
  std::uint64_t count_ = 0;
};

}  // namespace rnarl
