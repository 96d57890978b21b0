#include "ratproof/protocol.hpp"

#include <numeric>

#include "ratproof/errors.hpp"

namespace ratproof {

BitString BitString::append_high(const BitString& high) const {
    if (width + high.width > 64) throw ProtocolError("bit string longer than 64 bits");
    return {bits | (high.width ? high.bits << width : 0), width + high.width};
}

std::string BitString::to_string() const {
    if (width == 0) return "-";
    std::string out(width, '0');
    for (unsigned i = 0; i < width; ++i)
        if ((bits >> i) & 1u) out[width - 1 - i] = '1';
    return out;
}

BitString BitString::parse(std::string_view text) {
    if (text == "-") return {};
    if (text.size() > 64) throw ParseError(0, "bit string longer than 64 bits");
    BitString out{0, static_cast<unsigned>(text.size())};
    for (char ch : text) {
        if (ch != '0' && ch != '1') throw ParseError(0, "bad bit string '" + std::string(text) + "'");
        out.bits = (out.bits << 1) | static_cast<Word>(ch == '1');
    }
    return out;
}

const Dyadic& Gap::value() const {
    if (!value_) throw PreconditionError("gap is infinite");
    return *value_;
}

std::strong_ordering operator<=>(const Gap& a, const Gap& b) {
    if (a.is_infinite() || b.is_infinite()) return a.is_infinite() <=> b.is_infinite();
    return *a.value_ <=> *b.value_;
}

unsigned ProtocolSpec::total_message_bits() const {
    return std::accumulate(msg_bits.begin(), msg_bits.end(), 0u);
}

unsigned ProtocolSpec::total_random_bits() const {
    return std::accumulate(rand_bits.begin(), rand_bits.end(), 0u);
}

unsigned ProtocolSpec::future_random_bits(std::size_t from) const {
    unsigned total = 0;
    for (std::size_t t = from; t < rand_bits.size(); ++t) total += rand_bits[t];
    return total;
}

void ProtocolSpec::validate() const {
    const std::string who = "protocol '" + kind + "'";
    if (msg_bits.empty()) throw ProtocolError(who + " has no rounds");
    if (rand_bits.size() != msg_bits.size()) throw ProtocolError(who + " has mismatched round widths");
    for (unsigned w : msg_bits)
        if (w > 63) throw ProtocolError(who + " has a message wider than 63 bits");
    for (unsigned w : rand_bits)
        if (w > 63) throw ProtocolError(who + " draws more than 63 random bits in one round");
    if (!reward || !value || (rounds() > 1 && !arthur)) throw ProtocolError(who + " is missing a rule");
    if (!declared_delta.is_infinite() && declared_delta.value().sign() <= 0)
        throw ProtocolError(who + " declares a non-positive delta");
}

Dyadic resolution_delta(unsigned reward_resolution_bits, unsigned total_random_bits) {
    return Dyadic::pow2_neg(std::uint64_t{reward_resolution_bits} + total_random_bits);
}

std::string Transcript::to_string() const {
    std::string out;
    for (std::size_t t = 0; t < merlin.size(); ++t) {
        if (t) out += ' ';
        out += "m:" + merlin[t].to_string();
        if (t < arthur.size()) out += " a:" + arthur[t].to_string();
    }
    return out.empty() ? "(empty)" : out;
}

}  // namespace ratproof
