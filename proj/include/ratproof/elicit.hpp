#pragma once

#include <string>
#include <vector>

#include "ratproof/protocol.hpp"
#include "ratproof/solver.hpp"

namespace ratproof {

/// The expectation-eliciting protocol for one transcript prefix T_i.
///
/// It plays the remaining k-i rounds of the base protocol. Merlin's first
/// message carries the next base message in its low bits and a claim
/// E = e/2^g in its high g+1 bits. Arthur's first random word carries the
/// base randomness in its low bits and, above it, an index into the
/// randomness prefixes consistent with T_i. The reward is
/// 1/2 R + 1/4 D (1 - (E - R)^2), and 0 when E > 1.
struct ElicitedProtocol {
    ProtocolSpec spec;
    ProtocolSpec base;
    Transcript prefix;
    std::vector<std::vector<Word>> belief;
    /// Declared delta of the base protocol.
    Dyadic delta;
    /// Claims live on the grid 2^-grid_bits.
    unsigned grid_bits = 0;
    /// Width of the base message carried alongside the claim.
    unsigned next_bits = 0;

    Word encode(Word e, Word next_message) const { return next_message | (e << next_bits); }
    Word claim_index(Word message) const { return message >> next_bits; }
    Word next_message(Word message) const { return message & low_mask(next_bits); }
    /// e / 2^g for a claim index e.
    Dyadic claim(Word e) const { return Dyadic(mpz_class(static_cast<unsigned long>(e)), grid_bits); }
    /// Claim index of a dyadic on the grid; throws ProtocolError off the grid.
    Word index_of(const Dyadic& value) const;
};

/// Builds the eliciting protocol at `prefix`, which must end with an Arthur
/// message and hold 1 <= i < k rounds. Throws PreconditionError when the base
/// declares no finite delta and ProtocolError when the consistent randomness
/// set is not a power of two.
ElicitedProtocol elicit_expectation(const ProtocolSpec& spec, const Transcript& prefix,
                                    const SolveOptions& options = {});

/// Value of the eliciting protocol when the claim is pinned to index e.
Dyadic elicited_value_at(const ElicitedProtocol& ep, Word e, const SolveOptions& options = {});

/// Proof that E* = info_set_value(base, prefix) is the unique optimal claim
/// and that any claim E in [0,1] loses at least D/4 (E - E*)^2.
///
/// value(E) is a maximum of quadratics in E with leading coefficient -D/4,
/// so value(E) + D/4 (E - E*)^2 is convex and is bounded on [0,1] by its
/// endpoint values; both are checked against value(E*).
struct ElicitCertificate {
    Dyadic expected;     // E*
    Dyadic best_value;   // value(E*)
    Dyadic at_zero;      // value(0) + D/4 E*^2
    Dyadic at_one;       // value(1) + D/4 (1 - E*)^2
    bool holds = false;
};

ElicitCertificate certify_elicitation(const ElicitedProtocol& ep, const SolveOptions& options = {});

struct SplitNodeMismatch {
    Transcript transcript;
    std::string what;
};

struct SplitReport {
    bool pass = true;
    std::size_t compared_nodes = 0;
    std::size_t oracle_calls = 0;
    std::size_t rational_prefixes = 0;
    std::vector<SplitNodeMismatch> mismatches;
};

/// Replaces rounds i+1..k of `spec` by a one-shot oracle that answers each
/// prefix T_i through its eliciting protocol, then checks that the truncated
/// protocol agrees with `spec` on values and argmax sets at every node of
/// rounds 1..i, and that on every rational T_i the oracle's second output
/// equals the outputs of the direct solve. Throws PreconditionError unless
/// 1 <= i < k.
SplitReport split_at_round(const ProtocolSpec& spec, std::size_t i, const SolveOptions& options = {});

}  // namespace ratproof
