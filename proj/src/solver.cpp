#include "ratproof/solver.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <exception>
#include <random>
#include <set>
#include <thread>

#include "ratproof/errors.hpp"

namespace ratproof {

namespace {

using Belief = std::vector<std::vector<Word>>;

unsigned exact_log2(std::size_t count, const ProtocolSpec& spec) {
    if (count == 0 || !std::has_single_bit(count))
        throw ProtocolError("protocol '" + spec.kind + "': an information set holds " + std::to_string(count) +
                            " randomness prefixes, not a power of two; its value is not dyadic");
    return static_cast<unsigned>(std::countr_zero(count));
}

void check_enumeration(const ProtocolSpec& spec, const SolveOptions& options, std::uint64_t root_count) {
    unsigned bits = spec.total_random_bits();
    for (std::size_t t = 1; t < spec.rounds(); ++t) bits += spec.msg_bits[t];
    const unsigned limit = std::bit_width(options.max_enumeration) - 1;
    const bool too_big = bits > limit || (root_count << bits) > options.max_enumeration ||
                         (root_count << bits) >> bits != root_count;
    if (too_big)
        throw BoundExceeded("protocol '" + spec.kind + "' needs " + std::to_string(root_count) + " * 2^" +
                            std::to_string(bits) + " leaf evaluations; bound is " +
                            std::to_string(options.max_enumeration));
}

struct MessageResult {
    Word message = 0;
    Dyadic total;
    std::vector<BitString> replies;
};

class Solver {
public:
    Solver(const ProtocolSpec& spec, std::map<NodeKey, InfoSetNode>* table) : spec_(spec), table_(table) {}

    /// Sum of rewards over the belief and all future randomness, for a
    /// rational Merlin at a Merlin-to-move node with t = merlin.size().
    Dyadic node_total(std::vector<Word>& merlin, std::vector<BitString>& arthur, const Belief& belief) {
        const std::size_t t = merlin.size();
        std::vector<MessageResult> results;
        const Word count = Word{1} << spec_.msg_bits[t];
        results.reserve(count);
        for (Word m = 0; m < count; ++m) results.push_back(message_total(merlin, arthur, belief, m));
        return build_node(merlin, arthur, belief, std::move(results));
    }

    MessageResult message_total(std::vector<Word>& merlin, std::vector<BitString>& arthur, const Belief& belief,
                                Word m) {
        const std::size_t t = merlin.size();
        MessageResult result;
        result.message = m;
        merlin.push_back(m);
        const Word draws = Word{1} << spec_.rand_bits[t];
        std::vector<Word> rand(t + 1);
        if (t + 1 == spec_.rounds()) {
            DyadicAccumulator acc;
            for (const auto& prefix : belief) {
                std::copy(prefix.begin(), prefix.end(), rand.begin());
                for (Word r = 0; r < draws; ++r) {
                    rand[t] = r;
                    acc.add(checked_reward(merlin, rand));
                }
            }
            result.total = acc.result();
        } else {
            std::map<BitString, Belief> children;
            for (const auto& prefix : belief) {
                std::copy(prefix.begin(), prefix.end(), rand.begin());
                for (Word r = 0; r < draws; ++r) {
                    rand[t] = r;
                    children[spec_.arthur(merlin, rand)].push_back(rand);
                }
            }
            DyadicAccumulator acc;
            for (const auto& [reply, child] : children) {
                arthur.push_back(reply);
                acc.add(node_total(merlin, arthur, child));
                arthur.pop_back();
                result.replies.push_back(reply);
            }
            result.total = acc.result();
        }
        merlin.pop_back();
        return result;
    }

    Dyadic build_node(const std::vector<Word>& merlin, const std::vector<BitString>& arthur, const Belief& belief,
                      std::vector<MessageResult> results) {
        const std::size_t t = merlin.size();
        const std::int64_t scale = -static_cast<std::int64_t>(exact_log2(belief.size(), spec_) +
                                                              spec_.future_random_bits(t));
        const Dyadic* best = nullptr;
        for (const auto& r : results)
            if (!best || r.total > *best) best = &r.total;
        Dyadic best_total = *best;
        if (table_) {
            InfoSetNode node;
            node.round = t;
            node.value = best_total.scaled_pow2(scale);
            node.belief = belief;
            for (auto& r : results) {
                if (r.total == best_total) node.argmax.push_back(r.message);
                node.messages.push_back(MessageEntry{r.message, r.total.scaled_pow2(scale), std::move(r.replies)});
            }
            table_->emplace(NodeKey{merlin, arthur}, std::move(node));
        }
        return best_total;
    }

    Dyadic checked_reward(std::span<const Word> merlin, std::span<const Word> rand) const {
        Dyadic r = spec_.reward(merlin, rand);
        const auto& num = r.numerator();
        const bool in_range =
            sgn(num) >= 0 && (r.exponent() == 0 ? num <= 1 : mpz_sizeinbase(num.get_mpz_t(), 2) <= r.exponent());
        if (!in_range)
            throw ProtocolError("protocol '" + spec_.kind + "' paid reward " + r.to_string() + " outside [0,1]");
        if (r.exponent() > spec_.reward_resolution_bits)
            throw ProtocolError("protocol '" + spec_.kind + "' paid reward " + r.to_string() +
                                " finer than its declared resolution 2^-" +
                                std::to_string(spec_.reward_resolution_bits));
        return r;
    }

private:
    const ProtocolSpec& spec_;
    std::map<NodeKey, InfoSetNode>* table_;
};

void mark_reachable(std::map<NodeKey, InfoSetNode>& nodes) {
    std::deque<NodeKey> queue{NodeKey{}};
    while (!queue.empty()) {
        NodeKey key = std::move(queue.front());
        queue.pop_front();
        auto it = nodes.find(key);
        if (it == nodes.end() || it->second.rational_reachable) continue;
        it->second.rational_reachable = true;
        for (Word m : it->second.argmax) {
            const MessageEntry* entry = it->second.find(m);
            for (const BitString& reply : entry->replies) {
                NodeKey child = key;
                child.merlin.push_back(m);
                child.arthur.push_back(reply);
                queue.push_back(std::move(child));
            }
        }
    }
}

void check_transcript_shape(const ProtocolSpec& spec, const Transcript& prefix) {
    const std::size_t t = prefix.merlin.size();
    if (t > spec.rounds()) throw InconsistentTranscript("transcript has more rounds than the protocol");
    if (!(prefix.arthur.size() == t || (t > 0 && prefix.arthur.size() + 1 == t)))
        throw InconsistentTranscript("transcript does not alternate starting with Merlin");
    for (std::size_t i = 0; i < t; ++i) {
        const BitString& m = prefix.merlin[i];
        if (m.width != spec.msg_bits[i] || (m.bits & ~low_mask(m.width)))
            throw InconsistentTranscript("Merlin message " + std::to_string(i + 1) + " has width " +
                                         std::to_string(m.width) + ", protocol expects " +
                                         std::to_string(spec.msg_bits[i]));
    }
}

}  // namespace

const MessageEntry* InfoSetNode::find(Word message) const {
    auto it = std::lower_bound(messages.begin(), messages.end(), message,
                               [](const MessageEntry& e, Word m) { return e.message < m; });
    return it != messages.end() && it->message == message ? &*it : nullptr;
}

bool InfoSetNode::is_argmax(Word message) const {
    return std::binary_search(argmax.begin(), argmax.end(), message);
}

const InfoSetNode& InfoSetTable::root() const {
    auto it = nodes_.find(NodeKey{});
    if (it == nodes_.end()) throw PreconditionError("empty solver table");
    return it->second;
}

const InfoSetNode* InfoSetTable::find(const NodeKey& key) const {
    auto it = nodes_.find(key);
    return it == nodes_.end() ? nullptr : &it->second;
}

InfoSetTable solve_rational(const ProtocolSpec& spec, const SolveOptions& options) {
    spec.validate();
    std::vector<Word> root_messages;
    if (options.root_messages) {
        root_messages = *options.root_messages;
        std::sort(root_messages.begin(), root_messages.end());
        root_messages.erase(std::unique(root_messages.begin(), root_messages.end()), root_messages.end());
        if (root_messages.empty()) throw PreconditionError("empty root message restriction");
        for (Word m : root_messages)
            if (m > low_mask(spec.msg_bits[0])) throw PreconditionError("restricted root message out of range");
    } else {
        root_messages.resize(Word{1} << spec.msg_bits[0]);
        for (Word m = 0; m < root_messages.size(); ++m) root_messages[m] = m;
    }
    check_enumeration(spec, options, root_messages.size());

    const Belief root_belief{std::vector<Word>{}};
    std::map<NodeKey, InfoSetNode> table;
    std::vector<MessageResult> results(root_messages.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, root_messages.size()));

    if (workers == 1) {
        Solver solver(spec, &table);
        std::vector<Word> merlin;
        std::vector<BitString> arthur;
        for (std::size_t i = 0; i < root_messages.size(); ++i)
            results[i] = solver.message_total(merlin, arthur, root_belief, root_messages[i]);
    } else {
        std::vector<std::map<NodeKey, InfoSetNode>> partial(workers);
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> threads;
        for (unsigned w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    Solver solver(spec, &partial[w]);
                    std::vector<Word> merlin;
                    std::vector<BitString> arthur;
                    for (std::size_t i = w; i < root_messages.size(); i += workers)
                        results[i] = solver.message_total(merlin, arthur, root_belief, root_messages[i]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& th : threads) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (auto& part : partial) table.merge(part);
    }
    Solver(spec, &table).build_node({}, {}, root_belief, std::move(results));
    mark_reachable(table);
    return InfoSetTable(std::move(table));
}

std::vector<std::vector<Word>> consistent_randomness(const ProtocolSpec& spec, const Transcript& prefix,
                                                     const SolveOptions& options) {
    check_transcript_shape(spec, prefix);
    const std::size_t u = prefix.arthur.size();
    unsigned bits = 0;
    for (std::size_t i = 0; i < u; ++i) bits += spec.rand_bits[i];
    if (bits >= 63 || (Word{1} << bits) > options.max_enumeration)
        throw BoundExceeded("belief enumeration over 2^" + std::to_string(bits) + " randomness prefixes");
    std::vector<Word> merlin;
    for (const auto& m : prefix.merlin) merlin.push_back(m.bits);

    Belief out;
    std::vector<Word> rand;
    // Depth-first in lexicographic order, pruning on the first mismatching reply.
    std::function<void()> extend = [&] {
        const std::size_t v = rand.size();
        if (v == u) {
            out.push_back(rand);
            return;
        }
        for (Word r = 0; r < (Word{1} << spec.rand_bits[v]); ++r) {
            rand.push_back(r);
            if (spec.arthur(std::span(merlin).first(v + 1), rand) == prefix.arthur[v]) extend();
            rand.pop_back();
        }
    };
    extend();
    return out;
}

Dyadic info_set_value(const ProtocolSpec& spec, const Transcript& prefix, const SolveOptions& options) {
    spec.validate();
    const Belief belief = consistent_randomness(spec, prefix, options);
    if (belief.empty())
        throw InconsistentTranscript("no randomness produces the Arthur messages of " + prefix.to_string());
    const unsigned belief_bits = exact_log2(belief.size(), spec);

    Solver solver(spec, nullptr);
    std::vector<Word> merlin;
    for (const auto& m : prefix.merlin) merlin.push_back(m.bits);
    std::vector<BitString> arthur = prefix.arthur;
    const std::size_t t = merlin.size();

    if (arthur.size() == t) {
        if (t == spec.rounds()) {
            DyadicAccumulator acc;
            for (const auto& r : belief) acc.add(solver.checked_reward(merlin, r));
            return acc.result().scaled_pow2(-static_cast<std::int64_t>(belief_bits));
        }
        const Dyadic total = solver.node_total(merlin, arthur, belief);
        return total.scaled_pow2(-static_cast<std::int64_t>(belief_bits + spec.future_random_bits(t)));
    }
    const Word last = merlin.back();
    merlin.pop_back();
    const MessageResult r = solver.message_total(merlin, arthur, belief, last);
    return r.total.scaled_pow2(-static_cast<std::int64_t>(belief_bits + spec.future_random_bits(t - 1)));
}

Gap delta_exact(const InfoSetTable& table) {
    std::optional<Dyadic> best;
    for (const auto& [key, node] : table.nodes()) {
        if (!node.rational_reachable) continue;
        for (const auto& entry : node.messages) {
            if (node.is_argmax(entry.message)) continue;
            Dyadic gap = node.value - entry.value;
            if (!best || gap < *best) best = std::move(gap);
        }
    }
    return best ? Gap(*best) : Gap::infinite();
}

Gap delta_exact(const ProtocolSpec& spec, const SolveOptions& options) {
    return delta_exact(solve_rational(spec, options));
}

VerifyReport verify_protocol(const ProtocolSpec& spec, const InfoSetTable& table, const BitString& truth) {
    VerifyReport report;
    std::set<BitString> outputs;
    const std::size_t last = spec.rounds() - 1;
    for (const auto& [key, node] : table.nodes()) {
        if (!node.rational_reachable || node.round != last) continue;
        for (Word m : node.argmax) {
            std::vector<Word> merlin = key.merlin;
            merlin.push_back(m);
            const BitString out = spec.value(merlin, key.arthur);
            ++report.branches;
            outputs.insert(out);
            if (out != truth) {
                Transcript witness = transcript_of(spec, key);
                witness.merlin.push_back(BitString::of(m, spec.msg_bits[last]));
                report.violations.push_back(Violation{std::move(witness), out});
            }
        }
    }
    report.outputs.assign(outputs.begin(), outputs.end());
    report.pass = report.violations.empty();
    return report;
}

VerifyReport verify_protocol(const ProtocolSpec& spec, const BitString& truth, const SolveOptions& options) {
    return verify_protocol(spec, solve_rational(spec, options), truth);
}

std::optional<BitString> rational_output(const ProtocolSpec& spec, const InfoSetTable& table) {
    const VerifyReport r = verify_protocol(spec, table, BitString{});
    if (r.outputs.size() != 1) return std::nullopt;
    return r.outputs.front();
}

Interaction run_interaction(const ProtocolSpec& spec, const Strategy& strategy, std::span<const Word> randomness) {
    spec.validate();
    if (randomness.size() != spec.rounds()) throw PreconditionError("one random word per round is required");
    Interaction out;
    std::vector<Word> merlin;
    std::vector<Word> rand;
    for (std::size_t t = 0; t < spec.rounds(); ++t) {
        const BitString m = strategy(out.transcript);
        if (m.width != spec.msg_bits[t] || (m.bits & ~low_mask(m.width))) {
            out.reward = Dyadic(0);
            out.completed = false;
            return out;
        }
        out.transcript.merlin.push_back(m);
        merlin.push_back(m.bits);
        rand.push_back(randomness[t] & low_mask(spec.rand_bits[t]));
        if (t + 1 < spec.rounds()) out.transcript.arthur.push_back(spec.arthur(merlin, rand));
    }
    out.reward = spec.reward(merlin, rand);
    return out;
}

Interaction run_interaction(const ProtocolSpec& spec, const Strategy& strategy, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Word> randomness(spec.rounds());
    for (std::size_t t = 0; t < spec.rounds(); ++t) randomness[t] = rng() & low_mask(spec.rand_bits[t]);
    return run_interaction(spec, strategy, std::span<const Word>(randomness));
}

Strategy argmax_strategy(const ProtocolSpec& spec, const InfoSetTable& table) {
    return [&spec, &table](const Transcript& prefix) {
        const InfoSetNode* node = table.find(key_of(prefix));
        if (!node) throw InconsistentTranscript("no information set for " + prefix.to_string());
        return BitString::of(node->argmax.front(), spec.msg_bits[node->round]);
    };
}

NodeKey key_of(const Transcript& transcript) {
    NodeKey key;
    for (const auto& m : transcript.merlin) key.merlin.push_back(m.bits);
    key.arthur = transcript.arthur;
    return key;
}

Transcript transcript_of(const ProtocolSpec& spec, const NodeKey& key) {
    Transcript t;
    for (std::size_t i = 0; i < key.merlin.size(); ++i) t.merlin.push_back(BitString::of(key.merlin[i], spec.msg_bits[i]));
    t.arthur = key.arthur;
    return t;
}

}  // namespace ratproof
