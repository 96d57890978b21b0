#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ratproof/protocol.hpp"
#include "ratproof/solver.hpp"

namespace ratproof {

struct MachineStep {
    enum class Kind { Query, Accept, Reject };
    Kind kind = Kind::Reject;
    std::string query;

    static MachineStep ask(std::string q) { return {Kind::Query, std::move(q)}; }
    static MachineStep halt(bool accept) { return {accept ? Kind::Accept : Kind::Reject, {}}; }
};

/// Deterministic adaptive oracle machine for a fixed input: given the answers
/// so far, either asks the next query or halts.
struct OracleMachine {
    std::string name;
    unsigned query_bound = 0;
    std::function<MachineStep(const std::vector<bool>& answers)> program;
};

struct MachineRun {
    std::vector<std::string> queries;
    bool accept = false;
};

/// Built-in machines. "equal-answers" asks q1 and q2 and accepts iff the
/// answers agree. "adaptive-3" asks q1, then q2 on yes or q3 on no, then q4
/// when the first two answers differ, and accepts on a strict majority of
/// yes answers. Throws PreconditionError for other names.
OracleMachine named_machine(std::string_view name);
/// Distinct query names a built-in machine can ask, in order.
std::vector<std::string> machine_query_names(std::string_view name);

/// Runs the machine against `oracle`; throws ProtocolError past the query bound.
MachineRun run_machine(const OracleMachine& machine, const std::function<bool(const std::string&)>& oracle);

/// Every query the machine can ask on some answer sequence, after checking
/// the query bound on all of them.
std::vector<std::string> reachable_queries(const OracleMachine& machine);

/// R_1/2 + D R_2/4 + ... + D^(l-1) R_l / 2^l + D^l / 2^(l+1).
Dyadic composition_reward(const std::vector<Dyadic>& sub_rewards, const Dyadic& delta);

/// A decision protocol simulating an oracle machine whose queries are
/// answered by rational sub-protocols played in parallel.
///
/// First message, low bits first: the query count l, the answers y_1..y_L,
/// then each slot's first sub-message. Later messages hold one sub-message
/// per slot; each Arthur word holds one sub-random-string per slot. A
/// message pays 0 unless l is the number of queries the machine asks when
/// fed y, unused slots are zero, and every y_j is the output of its
/// sub-transcript.
struct ComposedProtocol {
    ProtocolSpec spec;
    OracleMachine machine;
    std::shared_ptr<const std::map<std::string, ProtocolSpec>> family;
    unsigned slots = 0;       // L
    unsigned count_bits = 0;  // width of l
    std::vector<unsigned> sub_msg_bits;
    std::vector<unsigned> sub_rand_bits;
    std::vector<unsigned> sub_arthur_bits;

    struct Decoded {
        unsigned l = 0;
        std::vector<bool> answers;
        /// sub_messages[j][t]: message of slot j in round t.
        std::vector<std::vector<Word>> sub_messages;
    };
    Decoded decode(std::span<const Word> merlin) const;
    Word encode(const Decoded& d) const;
    /// Splits an outer Arthur message into per-slot messages for `l` slots.
    std::vector<BitString> split_arthur(const BitString& a, std::size_t round, unsigned l) const;
};

/// Throws PreconditionError if the family misses a reachable query, the
/// inner protocols differ in shape, or one lacks a finite delta.
ComposedProtocol compose_with_machine(const OracleMachine& machine,
                                      const std::map<std::string, ProtocolSpec>& family,
                                      const std::string& input);

/// Exhaustive check of the three composition properties on every rational
/// branch: (a) the simulated queries are the machine's true queries, (b)
/// every sub-message is optimal in its sub-protocol, (c) every announced
/// answer is the true oracle answer.
struct CompositionCheck {
    bool pass = true;
    std::size_t branches = 0;
    std::vector<std::string> violations;
};

CompositionCheck check_composition(const ComposedProtocol& composed, const InfoSetTable& table,
                                   const std::map<std::string, bool>& truth,
                                   const std::map<std::string, InfoSetTable>& inner_tables);

}  // namespace ratproof
