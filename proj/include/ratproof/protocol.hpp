#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ratproof/dyadic.hpp"

namespace ratproof {

using Word = std::uint64_t;

inline constexpr Word low_mask(unsigned width) {
    return width >= 64 ? ~Word{0} : (Word{1} << width) - 1;
}

/// Fixed-width bit string of at most 64 bits, stored in the low bits of a word.
struct BitString {
    Word bits = 0;
    unsigned width = 0;

    static BitString of(Word bits, unsigned width) { return {bits & low_mask(width), width}; }
    static BitString bit(bool b) { return {b ? Word{1} : Word{0}, 1}; }

    /// `high` placed above this string's bits.
    BitString append_high(const BitString& high) const;
    /// Most significant bit first; the empty string renders as "-".
    std::string to_string() const;
    static BitString parse(std::string_view text);

    friend auto operator<=>(const BitString&, const BitString&) = default;
};

/// Lower bound on a reward gap. Infinite marks a protocol in which no
/// message is ever strictly suboptimal, so no finite gap exists.
class Gap {
public:
    Gap(Dyadic value) : value_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
    static Gap infinite() { return Gap(); }

    bool is_infinite() const { return !value_.has_value(); }
    const Dyadic& value() const;
    std::string to_string() const { return value_ ? value_->to_string() : "inf"; }

    friend bool operator==(const Gap&, const Gap&) = default;
    friend std::strong_ordering operator<=>(const Gap& a, const Gap& b);

private:
    Gap() = default;
    std::optional<Dyadic> value_;
};

/// Arthur's next message from Merlin's messages m_1..m_t and randomness r_1..r_t.
using ArthurRule = std::function<BitString(std::span<const Word> merlin, std::span<const Word> randomness)>;
/// Reward from all k Merlin messages and all k random strings.
using RewardRule = std::function<Dyadic(std::span<const Word> merlin, std::span<const Word> randomness)>;
/// Output from m_1..m_k and a_1..a_{k-1}.
using ValueRule = std::function<BitString(std::span<const Word> merlin, std::span<const BitString> arthur)>;

/// A k-round rational Arthur-Merlin protocol bound to one input.
///
/// Round t (0-based): Merlin sends a msg_bits[t]-bit word, Arthur draws a
/// rand_bits[t]-bit word and answers with arthur(m_0..m_t, r_0..r_t). The
/// answer to the last message is never observed by Merlin and is not
/// computed by the solver. Every message of the right width is legal; format
/// violations must be priced into `reward`.
struct ProtocolSpec {
    std::string kind;
    std::string input;
    std::vector<unsigned> msg_bits;
    std::vector<unsigned> rand_bits;
    ArthurRule arthur;
    RewardRule reward;
    ValueRule value;
    Gap declared_delta = Gap::infinite();
    /// Every reward is a multiple of 2^-reward_resolution_bits.
    unsigned reward_resolution_bits = 0;
    /// How many expectation/composition wrappers sit between this protocol and a base protocol.
    unsigned wrapper_depth = 0;

    std::size_t rounds() const { return msg_bits.size(); }
    unsigned total_message_bits() const;
    unsigned total_random_bits() const;
    /// Random bits drawn in rounds [from, k).
    unsigned future_random_bits(std::size_t from) const;

    /// Shape checks; throws ProtocolError.
    void validate() const;
};

/// The resolution bound available in any protocol of this model:
/// 2^-(reward resolution + total random bits).
Dyadic resolution_delta(unsigned reward_resolution_bits, unsigned total_random_bits);

/// Observable transcript m_1, a_1, m_2, ... starting with a Merlin message.
/// `arthur.size()` is `merlin.size()` (Merlin to move) or one less.
struct Transcript {
    std::vector<BitString> merlin;
    std::vector<BitString> arthur;

    std::string to_string() const;
    friend auto operator<=>(const Transcript&, const Transcript&) = default;
};

}  // namespace ratproof
