#pragma once

#include <functional>
#include <vector>

#include "ratproof/circuit.hpp"
#include "ratproof/protocol.hpp"
#include "ratproof/solver.hpp"

namespace ratproof {

/// Acceptance probability of the comparison test: draw r for c0 and r' for
/// c1 independently, accept when c1(r') > c0(r), and on equal outputs accept
/// on a fair coin. Computed by enumerating every (r, r', coin).
Dyadic compare_expectations_prob(const TruthTable& c0, const TruthTable& c1);
Dyadic compare_expectations_prob(const BooleanCircuit& c0, const BooleanCircuit& c1,
                                 unsigned max_inputs = kDefaultEnumerationInputs);

/// Oracle for "E[a] <= E[b]" between two root messages of a one-round protocol.
using MessageComparator = std::function<bool(Word a, Word b)>;

/// Exact comparison of the messages' expected rewards.
MessageComparator exact_comparator(const ProtocolSpec& spec, const SolveOptions& options = {});
/// Applies the one-bit transform, turns each message into the truth table of
/// its bit reward over the randomness, and asks compare_expectations_prob >= 1/2.
MessageComparator one_bit_comparator(const ProtocolSpec& spec, unsigned max_random_bits = 12);

struct KnockoutMatch {
    std::size_t stage = 0;
    Word first = 0;
    Word second = 0;
    Word winner = 0;
};

struct KnockoutResult {
    Word winner = 0;
    std::vector<KnockoutMatch> trace;
};

/// Single-elimination tournament over all messages of a one-round protocol.
/// Adjacent messages meet; an odd one out advances unplayed. The second
/// operand wins whenever the comparator reports E[first] <= E[second].
KnockoutResult knockout_argmax(const ProtocolSpec& spec, const MessageComparator& comparator);
KnockoutResult knockout_argmax(const ProtocolSpec& spec, const SolveOptions& options = {});

}  // namespace ratproof
