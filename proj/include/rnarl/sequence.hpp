#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace rnarl {

using Rng = std::mt19937_64;

// Ordering A < C < G < U is used for encoding and action enumeration.
enum class Base : std::uint8_t { A = 0, C = 1, G = 2, U = 3 };

inline constexpr std::size_t kNumBases = 4;
inline constexpr std::array<Base, kNumBases> kAllBases = {Base::A, Base::C,
                                                          Base::G, Base::U};

char to_char(Base b);
// Accepts either case; throws InvalidBase (position 0) otherwise.
Base base_from_char(char c);

class RnaSequence {
 public:
  RnaSequence() = default;
  explicit RnaSequence(std::vector<Base> bases) : bases_(std::move(bases)) {}

  std::size_t size() const { return bases_.size(); }
  Base operator[](std::size_t i) const { return bases_[i]; }
  const std::vector<Base>& bases() const { return bases_; }

  std::string str() const;

  friend bool operator==(const RnaSequence&, const RnaSequence&) = default;

 private:
  std::vector<Base> bases_;
};

struct FlipAction {
  std::size_t position = 0;
  Base target = Base::A;

  // Slot in the fixed 4L-wide network head: position-major, base-minor.
  std::size_t slot() const {
    return position * kNumBases + static_cast<std::size_t>(target);
  }
  static FlipAction from_slot(std::size_t slot) {
    return {slot / kNumBases, static_cast<Base>(slot % kNumBases)};
  }

  friend bool operator==(const FlipAction&, const FlipAction&) = default;
};

RnaSequence parse_sequence(std::string_view text);

RnaSequence apply_action(const RnaSequence& s, const FlipAction& a);

// All 3L flips that change a base, position-major then A<C<G<U.
std::vector<FlipAction> valid_actions(const RnaSequence& s);

// True for the L slots of the 4L head that would leave the sequence as is.
std::vector<bool> self_flip_mask(const RnaSequence& s);

std::vector<double> encode_one_hot(const RnaSequence& s);

RnaSequence random_sequence(Rng& rng, std::size_t length);

}  // namespace rnarl
