#include "ratproof/elicit.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <memory>
#include <set>

#include "ratproof/errors.hpp"

namespace ratproof {

namespace {

struct ElicitContext {
    ProtocolSpec base;
    std::vector<Word> prefix_merlin;
    std::vector<BitString> prefix_arthur;
    std::vector<std::vector<Word>> belief;
    std::size_t i = 0;
    unsigned next_bits = 0;
    unsigned base_rand_bits = 0;
    unsigned claim_bits = 0;
    unsigned grid_bits = 0;

    std::vector<Word> merlin(std::span<const Word> m) const {
        std::vector<Word> full = prefix_merlin;
        full.push_back(m[0] & low_mask(next_bits));
        full.insert(full.end(), m.begin() + 1, m.end());
        return full;
    }
    std::vector<Word> randomness(std::span<const Word> r) const {
        std::vector<Word> full = belief[r[0] >> base_rand_bits];
        full.push_back(r[0] & low_mask(base_rand_bits));
        full.insert(full.end(), r.begin() + 1, r.end());
        return full;
    }
};

/// Outputs on every rational branch of `table` below `key`.
std::set<BitString> outputs_below(const ProtocolSpec& spec, const InfoSetTable& table, const NodeKey& key) {
    std::set<BitString> out;
    std::deque<NodeKey> queue{key};
    std::set<NodeKey> seen;
    while (!queue.empty()) {
        NodeKey k = std::move(queue.front());
        queue.pop_front();
        if (!seen.insert(k).second) continue;
        const InfoSetNode* node = table.find(k);
        if (!node) throw PreconditionError("solver table has no node for " + transcript_of(spec, k).to_string());
        for (Word m : node->argmax) {
            if (node->round + 1 == spec.rounds()) {
                std::vector<Word> merlin = k.merlin;
                merlin.push_back(m);
                out.insert(spec.value(merlin, k.arthur));
                continue;
            }
            for (const BitString& reply : node->find(m)->replies) {
                NodeKey child = k;
                child.merlin.push_back(m);
                child.arthur.push_back(reply);
                queue.push_back(std::move(child));
            }
        }
    }
    return out;
}

}  // namespace

Word ElicitedProtocol::index_of(const Dyadic& value) const {
    mpz_class scaled;
    if (value.sign() < 0 || value > Dyadic(1) || !value.integer_at_resolution(grid_bits, scaled))
        throw ProtocolError("claim " + value.to_string() + " is not on the grid 2^-" + std::to_string(grid_bits));
    return scaled.get_ui();
}

ElicitedProtocol elicit_expectation(const ProtocolSpec& spec, const Transcript& prefix, const SolveOptions& options) {
    spec.validate();
    const std::size_t k = spec.rounds();
    const std::size_t i = prefix.merlin.size();
    if (i < 1 || i >= k || prefix.arthur.size() != i)
        throw PreconditionError("elicitation needs a prefix of i rounds ending with an Arthur message, 1 <= i < " +
                                std::to_string(k));
    if (spec.declared_delta.is_infinite())
        throw PreconditionError("protocol '" + spec.kind + "' declares no finite delta");

    auto ctx = std::make_shared<ElicitContext>();
    ctx->base = spec;
    ctx->i = i;
    for (const auto& m : prefix.merlin) ctx->prefix_merlin.push_back(m.bits);
    ctx->prefix_arthur = prefix.arthur;
    ctx->belief = consistent_randomness(spec, prefix, options);
    if (ctx->belief.empty())
        throw InconsistentTranscript("no randomness produces the Arthur messages of " + prefix.to_string());
    if (!std::has_single_bit(ctx->belief.size()))
        throw ProtocolError("prefix " + prefix.to_string() + " is consistent with " +
                            std::to_string(ctx->belief.size()) + " randomness prefixes, not a power of two");
    const auto belief_bits = static_cast<unsigned>(std::countr_zero(ctx->belief.size()));
    ctx->next_bits = spec.msg_bits[i];
    ctx->base_rand_bits = spec.rand_bits[i];
    ctx->grid_bits = spec.reward_resolution_bits + belief_bits + spec.future_random_bits(i);
    ctx->claim_bits = ctx->grid_bits + 1;
    if (ctx->next_bits + ctx->claim_bits > 63 || ctx->base_rand_bits + belief_bits > 63)
        throw BoundExceeded("eliciting protocol needs a word wider than 63 bits");

    const Dyadic delta = spec.declared_delta.value();
    const Dyadic quarter_delta = delta * Dyadic::pow2_neg(2);
    const Dyadic half = Dyadic::pow2_neg(1);

    ProtocolSpec out;
    out.kind = "elicit(" + spec.kind + ")";
    out.input = spec.input + " @ " + prefix.to_string();
    out.msg_bits.assign(spec.msg_bits.begin() + static_cast<std::ptrdiff_t>(i), spec.msg_bits.end());
    out.rand_bits.assign(spec.rand_bits.begin() + static_cast<std::ptrdiff_t>(i), spec.rand_bits.end());
    out.msg_bits[0] += ctx->claim_bits;
    out.rand_bits[0] += belief_bits;
    out.arthur = [ctx](std::span<const Word> m, std::span<const Word> r) {
        return ctx->base.arthur(ctx->merlin(m), ctx->randomness(r));
    };
    out.reward = [ctx, quarter_delta, half](std::span<const Word> m, std::span<const Word> r) {
        const Word e = m[0] >> ctx->next_bits;
        if (e > (Word{1} << ctx->grid_bits)) return Dyadic(0);
        const Dyadic reward = ctx->base.reward(ctx->merlin(m), ctx->randomness(r));
        const Dyadic miss = Dyadic(mpz_class(static_cast<unsigned long>(e)), ctx->grid_bits) - reward;
        return half * reward + quarter_delta * (Dyadic(1) - miss * miss);
    };
    out.value = [ctx](std::span<const Word> m, std::span<const BitString> a) {
        std::vector<BitString> arthur = ctx->prefix_arthur;
        arthur.insert(arthur.end(), a.begin(), a.end());
        const BitString v = ctx->base.value(ctx->merlin(m), arthur);
        return v.append_high(BitString::of(m[0] >> ctx->next_bits, ctx->claim_bits));
    };
    out.reward_resolution_bits = std::max<unsigned>(
        spec.reward_resolution_bits + 1, static_cast<unsigned>(quarter_delta.exponent()) + 2 * ctx->grid_bits);
    out.declared_delta = resolution_delta(out.reward_resolution_bits, out.total_random_bits());
    out.wrapper_depth = spec.wrapper_depth + 1;

    ElicitedProtocol ep;
    ep.spec = std::move(out);
    ep.base = spec;
    ep.prefix = prefix;
    ep.belief = ctx->belief;
    ep.delta = delta;
    ep.grid_bits = ctx->grid_bits;
    ep.next_bits = ctx->next_bits;
    return ep;
}

Dyadic elicited_value_at(const ElicitedProtocol& ep, Word e, const SolveOptions& options) {
    SolveOptions pinned = options;
    pinned.root_messages.emplace();
    for (Word m = 0; m <= low_mask(ep.next_bits); ++m) pinned.root_messages->push_back(ep.encode(e, m));
    return solve_rational(ep.spec, pinned).root().value;
}

ElicitCertificate certify_elicitation(const ElicitedProtocol& ep, const SolveOptions& options) {
    ElicitCertificate cert;
    cert.expected = info_set_value(ep.base, ep.prefix, options);
    const Dyadic quarter_delta = ep.delta * Dyadic::pow2_neg(2);
    auto penalty = [&](const Dyadic& e) {
        const Dyadic d = e - cert.expected;
        return quarter_delta * d * d;
    };
    cert.best_value = elicited_value_at(ep, ep.index_of(cert.expected), options);
    cert.at_zero = elicited_value_at(ep, 0, options) + penalty(Dyadic(0));
    cert.at_one = elicited_value_at(ep, Word{1} << ep.grid_bits, options) + penalty(Dyadic(1));
    cert.holds = cert.best_value.sign() > 0 && cert.at_zero <= cert.best_value && cert.at_one <= cert.best_value;
    return cert;
}

SplitReport split_at_round(const ProtocolSpec& spec, std::size_t i, const SolveOptions& options) {
    spec.validate();
    if (i < 1 || i >= spec.rounds())
        throw PreconditionError("split round must satisfy 1 <= i < " + std::to_string(spec.rounds()));
    if (spec.declared_delta.is_infinite())
        throw PreconditionError("protocol '" + spec.kind + "' declares no finite delta");

    SplitReport report;
    const InfoSetTable direct = solve_rational(spec, options);

    // Oracle answers for every prefix T_i, through the eliciting protocol.
    auto answers = std::make_shared<std::map<NodeKey, Dyadic>>();
    std::map<NodeKey, ElicitedProtocol> elicited;
    for (const auto& [key, node] : direct.nodes()) {
        if (node.round != i) continue;
        ElicitedProtocol ep = elicit_expectation(spec, transcript_of(spec, key), options);
        const ElicitCertificate cert = certify_elicitation(ep, options);
        ++report.oracle_calls;
        if (!cert.holds)
            report.mismatches.push_back({ep.prefix, "elicitation certificate fails at E* = " +
                                                        cert.expected.to_string()});
        answers->emplace(key, cert.expected);
        elicited.emplace(key, std::move(ep));
    }

    ProtocolSpec truncated;
    truncated.kind = "split(" + spec.kind + ")";
    truncated.input = spec.input;
    truncated.msg_bits.assign(spec.msg_bits.begin(), spec.msg_bits.begin() + static_cast<std::ptrdiff_t>(i));
    truncated.rand_bits.assign(spec.rand_bits.begin(), spec.rand_bits.begin() + static_cast<std::ptrdiff_t>(i));
    truncated.arthur = spec.arthur;
    truncated.reward = [answers, arthur = spec.arthur](std::span<const Word> m, std::span<const Word> r) {
        NodeKey key{std::vector<Word>(m.begin(), m.end()), {}};
        for (std::size_t t = 0; t < m.size(); ++t) key.arthur.push_back(arthur(m.first(t + 1), r.first(t + 1)));
        auto it = answers->find(key);
        if (it == answers->end()) throw ProtocolError("oracle has no answer for a reachable prefix");
        return it->second;
    };
    // The truncated protocol cannot see a_i, so its own output is not used;
    // outputs are checked through the oracle's second component below.
    truncated.value = [](std::span<const Word>, std::span<const BitString>) { return BitString{}; };
    truncated.reward_resolution_bits = spec.reward_resolution_bits + spec.total_random_bits();
    const InfoSetTable cut = solve_rational(truncated, options);

    for (const auto& [key, node] : cut.nodes()) {
        const InfoSetNode* twin = direct.find(key);
        ++report.compared_nodes;
        if (!twin) {
            report.mismatches.push_back({transcript_of(spec, key), "node missing from the direct solve"});
        } else if (twin->value != node.value) {
            report.mismatches.push_back({transcript_of(spec, key), "value " + node.value.to_string() +
                                                                       " vs direct " + twin->value.to_string()});
        } else if (twin->argmax != node.argmax) {
            report.mismatches.push_back({transcript_of(spec, key), "argmax sets differ"});
        }
    }

    for (const auto& [key, node] : cut.nodes()) {
        if (!node.rational_reachable || node.round + 1 != i) continue;
        const InfoSetNode* twin = direct.find(key);
        if (!twin) continue;
        for (Word m : node.argmax) {
            const MessageEntry* entry = twin->find(m);
            if (!entry) continue;
            for (const BitString& reply : entry->replies) {
                NodeKey prefix_key = key;
                prefix_key.merlin.push_back(m);
                prefix_key.arthur.push_back(reply);
                ++report.rational_prefixes;
                const ElicitedProtocol& ep = elicited.at(prefix_key);
                const Word e = ep.index_of(answers->at(prefix_key));
                SolveOptions pinned = options;
                pinned.root_messages.emplace();
                for (Word next = 0; next <= low_mask(ep.next_bits); ++next)
                    pinned.root_messages->push_back(ep.encode(e, next));
                const InfoSetTable oracle_table = solve_rational(ep.spec, pinned);
                const std::set<BitString> expected = outputs_below(spec, direct, prefix_key);
                const VerifyReport oracle = verify_protocol(ep.spec, oracle_table, BitString{});
                bool ok = !oracle.outputs.empty();
                for (const BitString& out : oracle.outputs) {
                    const unsigned width = out.width - (ep.grid_bits + 1);
                    const BitString v = BitString::of(out.bits, width);
                    ok = ok && (out.bits >> width) == e && expected.count(v);
                }
                if (!ok)
                    report.mismatches.push_back({transcript_of(spec, prefix_key),
                                                 "oracle output is not an output of the direct solve"});
            }
        }
    }
    report.pass = report.mismatches.empty();
    return report;
}

}  // namespace ratproof
