#include "rnarl/fitness.hpp"

#include <algorithm>
#include <functional>

#include "rnarl/errors.hpp"

namespace rnarl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_pair(Base x, Base y, Base p, Base q) {
  return (x == p && y == q) || (x == q && y == p);
}

}  // namespace

double PairEnergyTable::energy(Base x, Base y) const {
  if (is_pair(x, y, Base::G, Base::C)) return gc;
  if (is_pair(x, y, Base::A, Base::U)) return au;
  if (is_pair(x, y, Base::G, Base::U)) return gu;
  return kInf;
}

SecondaryStructure::SecondaryStructure(std::size_t length,
                                       std::vector<BasePair> pairs)
    : length_(length), pairs_(std::move(pairs)) {
  std::sort(pairs_.begin(), pairs_.end());
}

SecondaryStructure SecondaryStructure::from_dot_bracket(std::string_view text) {
  std::vector<std::size_t> open;
  std::vector<BasePair> pairs;
  for (std::size_t i = 0; i < text.size(); ++i) {
    switch (text[i]) {
      case '.':
        break;
      case '(':
        open.push_back(i);
        break;
      case ')':
        if (open.empty()) {
          throw Error("unbalanced ')' at position " + std::to_string(i));
        }
        pairs.emplace_back(open.back(), i);
        open.pop_back();
        break;
      default:
        throw Error("invalid dot-bracket character '" + std::string(1, text[i]) +
                    "' at position " + std::to_string(i));
    }
  }
  if (!open.empty()) {
    throw Error("unbalanced '(' at position " + std::to_string(open.back()));
  }
  return SecondaryStructure(text.size(), std::move(pairs));
}

std::string SecondaryStructure::dot_bracket() const {
  std::string out(length_, '.');
  for (const auto& [i, j] : pairs_) {
    out[i] = '(';
    out[j] = ')';
  }
  return out;
}

std::string structure_violation(const SecondaryStructure& st,
                                const RnaSequence& s,
                                const PairEnergyTable& table) {
  if (st.length() != s.size()) return "length differs from sequence";
  std::vector<int> partner(s.size(), -1);
  for (const auto& [i, j] : st.pairs()) {
    if (!(i < j) || j >= s.size()) return "pair indices out of order or range";
    if (partner[i] != -1 || partner[j] != -1) return "index paired twice";
    partner[i] = static_cast<int>(j);
    partner[j] = static_cast<int>(i);
    if (j - i - 1 < table.min_loop) return "hairpin shorter than min_loop";
    if (!table.can_pair(s[i], s[j])) return "disallowed pair";
  }
  const auto& ps = st.pairs();
  for (std::size_t a = 0; a < ps.size(); ++a) {
    for (std::size_t b = a + 1; b < ps.size(); ++b) {
      const auto [i, j] = ps[a];
      const auto [k, l] = ps[b];
      // ps is sorted, so i < k.
      if (!(k > j || l < j)) return "pseudoknot";
    }
  }
  return {};
}

double structure_energy(const SecondaryStructure& st, const RnaSequence& s,
                        const PairEnergyTable& table) {
  double e = 0.0;
  for (const auto& [i, j] : st.pairs()) e += table.energy(s[i], s[j]);
  return e;
}

FoldResult nussinov_fold(const RnaSequence& s, const PairEnergyTable& table) {
  const std::size_t n = s.size();
  if (n == 0) return {};
  // best[i * n + j] for i <= j; empty spans read as 0.
  std::vector<double> best(n * n, 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double {
    if (i > j || j >= n) return 0.0;
    return best[i * n + j];
  };
  auto pair_term = [&](std::size_t i, std::size_t k, std::size_t j) {
    const double inner = k == 0 ? 0.0 : at(i + 1, k - 1);
    return table.energy(s[i], s[k]) + inner + at(k + 1, j);
  };

  for (std::size_t span = table.min_loop + 1; span < n; ++span) {
    for (std::size_t i = 0; i + span < n; ++i) {
      const std::size_t j = i + span;
      double e = at(i + 1, j);
      for (std::size_t k = i + table.min_loop + 1; k <= j; ++k) {
        if (!table.can_pair(s[i], s[k])) continue;
        e = std::min(e, pair_term(i, k, j));
      }
      best[i * n + j] = e;
    }
  }

  std::vector<BasePair> pairs;
  std::vector<BasePair> stack{{0, n - 1}};
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    stack.pop_back();
    if (i >= j || j - i < table.min_loop + 1) continue;
    const double target = at(i, j);
    if (at(i + 1, j) == target) {
      stack.emplace_back(i + 1, j);
      continue;
    }
    for (std::size_t k = i + table.min_loop + 1; k <= j; ++k) {
      if (!table.can_pair(s[i], s[k])) continue;
      if (pair_term(i, k, j) == target) {
        pairs.emplace_back(i, k);
        if (k > i + 1) stack.emplace_back(i + 1, k - 1);
        if (k < j) stack.emplace_back(k + 1, j);
        break;
      }
    }
  }
  return {SecondaryStructure(n, std::move(pairs)), at(0, n - 1)};
}

FoldResult brute_force_fold(const RnaSequence& s,
                            const PairEnergyTable& table) {
  const std::size_t n = s.size();
  if (n > kBruteForceMaxLength) {
    throw SequenceTooLong("brute_force_fold supports at most " +
                          std::to_string(kBruteForceMaxLength) +
                          " bases, got " + std::to_string(n));
  }
  FoldResult best;
  best.structure = SecondaryStructure(n, {});
  std::vector<std::size_t> open;
  std::vector<BasePair> pairs;

  // Left-to-right scan: each position is unpaired, opens a pair, or closes
  // the innermost open position.
  std::function<void(std::size_t, double)> walk = [&](std::size_t pos,
                                                      double energy) {
    if (pos == n) {
      if (open.empty() && energy < best.energy) {
        best.energy = energy;
        best.structure = SecondaryStructure(n, pairs);
      }
      return;
    }
    const std::size_t remaining = n - pos;
    if (open.size() > remaining) return;

    walk(pos + 1, energy);

    if (open.size() + 1 <= remaining - 1) {
      open.push_back(pos);
      walk(pos + 1, energy);
      open.pop_back();
    }

    if (!open.empty()) {
      const std::size_t i = open.back();
      if (pos - i - 1 >= table.min_loop && table.can_pair(s[i], s[pos])) {
        open.pop_back();
        pairs.emplace_back(i, pos);
        walk(pos + 1, energy + table.energy(s[i], s[pos]));
        pairs.pop_back();
        open.push_back(i);
      }
    }
  };
  walk(0, 0.0);
  return best;
}

double fitness_of(const RnaSequence& s, const FitnessModel& model) {
  return 0.0 - model.fold(s).energy;
}

}  // namespace rnarl
