#include "rnarl/sequence.hpp"

#include "rnarl/errors.hpp"

namespace rnarl {

char to_char(Base b) {
  static constexpr std::array<char, kNumBases> kChars = {'A', 'C', 'G', 'U'};
  return kChars[static_cast<std::size_t>(b)];
}

Base base_from_char(char c) {
  switch (c) {
    case 'A': case 'a': return Base::A;
    case 'C': case 'c': return Base::C;
    case 'G': case 'g': return Base::G;
    case 'U': case 'u': return Base::U;
    default: throw InvalidBase(0, c);
  }
}

std::string RnaSequence::str() const {
  std::string out;
  out.reserve(bases_.size());
  for (Base b : bases_) out.push_back(to_char(b));
  return out;
}

RnaSequence parse_sequence(std::string_view text) {
  if (text.empty()) throw Error("sequence text is empty");
  std::vector<Base> bases;
  bases.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    try {
      bases.push_back(base_from_char(text[i]));
    } catch (const InvalidBase&) {
      throw InvalidBase(i, text[i]);
    }
  }
  return RnaSequence(std::move(bases));
}

RnaSequence apply_action(const RnaSequence& s, const FlipAction& a) {
  if (a.position >= s.size()) {
    throw OutOfRange("flip position " + std::to_string(a.position) +
                     " outside sequence of length " + std::to_string(s.size()));
  }
  if (s[a.position] == a.target) throw SelfFlip(a.position);
  std::vector<Base> bases = s.bases();
  bases[a.position] = a.target;
  return RnaSequence(std::move(bases));
}

std::vector<FlipAction> valid_actions(const RnaSequence& s) {
  std::vector<FlipAction> out;
  out.reserve(3 * s.size());
  for (std::size_t p = 0; p < s.size(); ++p) {
    for (Base b : kAllBases) {
      if (b != s[p]) out.push_back({p, b});
    }
  }
  return out;
}

std::vector<bool> self_flip_mask(const RnaSequence& s) {
  std::vector<bool> mask(kNumBases * s.size(), false);
  for (std::size_t p = 0; p < s.size(); ++p) {
    mask[FlipAction{p, s[p]}.slot()] = true;
  }
  return mask;
}

std::vector<double> encode_one_hot(const RnaSequence& s) {
  std::vector<double> out(kNumBases * s.size(), 0.0);
  for (std::size_t p = 0; p < s.size(); ++p) {
    out[p * kNumBases + static_cast<std::size_t>(s[p])] = 1.0;
  }
  return out;
}

RnaSequence random_sequence(Rng& rng, std::size_t length) {
  if (length == 0) throw Error("random_sequence: length must be >= 1");
  std::uniform_int_distribution<int> pick(0, kNumBases - 1);
  std::vector<Base> bases(length);
  for (auto& b : bases) b = static_cast<Base>(pick(rng));
  return RnaSequence(std::move(bases));
}

}  // namespace rnarl
