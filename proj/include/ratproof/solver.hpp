#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ratproof/protocol.hpp"

namespace ratproof {

struct SolveOptions {
    /// Upper bound on prod 2^msg_bits * prod 2^rand_bits.
    std::uint64_t max_enumeration = std::uint64_t{1} << 24;
    /// Threads used for the root's message subtrees; results do not depend on it.
    unsigned workers = 1;
    /// Restricts Merlin's first message to this list (used to price a fixed choice).
    std::optional<std::vector<Word>> root_messages;
};

/// Observable history at a Merlin-to-move node: m_1..m_t and a_1..a_t.
struct NodeKey {
    std::vector<Word> merlin;
    std::vector<BitString> arthur;
    friend auto operator<=>(const NodeKey&, const NodeKey&) = default;
};

struct MessageEntry {
    Word message = 0;
    /// Expected reward of sending `message` here and playing rationally afterwards.
    Dyadic value;
    /// Arthur replies that occur with positive probability (empty in the last round).
    std::vector<BitString> replies;
};

/// One information set of Merlin.
struct InfoSetNode {
    std::size_t round = 0;
    Dyadic value;
    std::vector<MessageEntry> messages;  // sorted by message
    std::vector<Word> argmax;            // every maximizing message, ascending
    /// Randomness prefixes r_1..r_t reproducing the observed Arthur messages.
    std::vector<std::vector<Word>> belief;
    bool rational_reachable = false;

    const MessageEntry* find(Word message) const;
    bool is_argmax(Word message) const;
};

/// Solver output: every Merlin information set of the game tree with exact
/// values. Nodes off the rational path are kept (their values feed the
/// maxima) and are flagged by `rational_reachable`.
class InfoSetTable {
public:
    InfoSetTable() = default;
    explicit InfoSetTable(std::map<NodeKey, InfoSetNode> nodes) : nodes_(std::move(nodes)) {}

    const InfoSetNode& root() const;
    const InfoSetNode* find(const NodeKey& key) const;
    const std::map<NodeKey, InfoSetNode>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }

private:
    std::map<NodeKey, InfoSetNode> nodes_;
};

/// Backward induction over information sets.
InfoSetTable solve_rational(const ProtocolSpec& spec, const SolveOptions& options = {});

/// Expected reward from an arbitrary prefix when Merlin plays rationally from
/// there on. The prefix may end with an Arthur message (Merlin to move) or a
/// Merlin message.
Dyadic info_set_value(const ProtocolSpec& spec, const Transcript& prefix, const SolveOptions& options = {});

/// Randomness prefixes consistent with the Arthur messages of `prefix`.
std::vector<std::vector<Word>> consistent_randomness(const ProtocolSpec& spec, const Transcript& prefix,
                                                     const SolveOptions& options = {});

/// Minimum over rationally reachable nodes of (best value - value of a
/// non-maximizing message). Infinite when no node has a suboptimal message.
Gap delta_exact(const InfoSetTable& table);
Gap delta_exact(const ProtocolSpec& spec, const SolveOptions& options = {});

struct Violation {
    Transcript transcript;
    BitString output;
};

struct VerifyReport {
    bool pass = true;
    std::size_t branches = 0;
    std::vector<BitString> outputs;  // distinct outputs seen on rational branches
    std::vector<Violation> violations;
};

/// Checks value == truth on every branch a rational Merlin can produce.
VerifyReport verify_protocol(const ProtocolSpec& spec, const InfoSetTable& table, const BitString& truth);
VerifyReport verify_protocol(const ProtocolSpec& spec, const BitString& truth, const SolveOptions& options = {});

/// Output on rational branches when all of them agree.
std::optional<BitString> rational_output(const ProtocolSpec& spec, const InfoSetTable& table);

/// Maps a Merlin-to-move transcript to the next message.
using Strategy = std::function<BitString(const Transcript&)>;

struct Interaction {
    Transcript transcript;
    Dyadic reward;
    bool completed = true;
};

/// One play-through with randomness from std::mt19937_64 seeded by `seed`.
Interaction run_interaction(const ProtocolSpec& spec, const Strategy& strategy, std::uint64_t seed);
/// One play-through with the given per-round randomness.
Interaction run_interaction(const ProtocolSpec& spec, const Strategy& strategy, std::span<const Word> randomness);

/// Plays the smallest argmax message at every information set of `table`.
Strategy argmax_strategy(const ProtocolSpec& spec, const InfoSetTable& table);

NodeKey key_of(const Transcript& transcript);
Transcript transcript_of(const ProtocolSpec& spec, const NodeKey& key);

}  // namespace ratproof
