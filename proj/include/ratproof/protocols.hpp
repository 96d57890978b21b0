#pragma once

#include <vector>

#include "ratproof/circuit.hpp"
#include "ratproof/protocol.hpp"
#include "ratproof/solver.hpp"

namespace ratproof {

/// One round, one bit: Arthur evaluates the circuit on a uniform assignment y
/// and pays I{b == C(y)}. The output is the bit itself.
/// Throws TieNotAllowed when exactly half the assignments accept.
ProtocolSpec make_pp_vote(const CountingInstance& instance);

/// One round: Merlin claims a count c on n+1 bits, Arthur samples one
/// assignment y and pays the quadratic score 1 - (c/2^n - C(y))^2; claims
/// above 2^n pay 0. The output is c mod 2 in parity mode and c in count mode.
ProtocolSpec make_brier_count(const CountingInstance& instance);

/// Pays `reward` whatever happens. No message is ever suboptimal.
ProtocolSpec make_constant_reward(const Dyadic& reward, unsigned msg_bits = 1, unsigned rand_bits = 1);

/// Replaces the reward by a single bit that is 1 with probability exactly R,
/// drawing reward_resolution_bits extra random bits in the last round.
/// Throws ProtocolError (during solving) if a reward is off its declared grid.
ProtocolSpec one_bit_transform(const ProtocolSpec& spec);

/// Prepends a round in which Merlin sends a bit b and Arthur reveals a uniform
/// index y; the game then continues as inner[y], and Arthur pays
/// 1/2 R_y + (D/4) I{b == pi_y} with D the smallest inner declared delta.
/// `inner` must hold 2^q protocols of identical shape. The constructor solves
/// every inner protocol to reject a y-majority tie.
ProtocolSpec pp_oracle_round(const std::vector<ProtocolSpec>& inner, const SolveOptions& options = {});

/// Decision bit of a decision protocol on its rational branches; throws
/// ProtocolError when the branches disagree.
bool rational_decision(const ProtocolSpec& spec, const SolveOptions& options = {});

}  // namespace ratproof
