#include "ratproof/compose.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "ratproof/errors.hpp"

namespace ratproof {

namespace {

struct SlotPlan {
    unsigned l = 0;
    std::vector<const ProtocolSpec*> specs;
    Dyadic delta;
    bool accept = false;
};

std::vector<Word> zeros(std::size_t n) { return std::vector<Word>(n, 0); }

}  // namespace

OracleMachine named_machine(std::string_view name) {
    if (name == "equal-answers")
        return {"equal-answers", 2, [](const std::vector<bool>& a) {
                    if (a.size() < 2) return MachineStep::ask(a.empty() ? "q1" : "q2");
                    return MachineStep::halt(a[0] == a[1]);
                }};
    if (name == "adaptive-3")
        return {"adaptive-3", 3, [](const std::vector<bool>& a) {
                    if (a.empty()) return MachineStep::ask("q1");
                    if (a.size() == 1) return MachineStep::ask(a[0] ? "q2" : "q3");
                    if (a.size() == 2 && a[0] != a[1]) return MachineStep::ask("q4");
                    std::size_t yes = 0;
                    for (bool b : a) yes += b;
                    return MachineStep::halt(2 * yes > a.size());
                }};
    throw PreconditionError("unknown oracle machine '" + std::string(name) + "'");
}

std::vector<std::string> machine_query_names(std::string_view name) {
    if (name == "equal-answers") return {"q1", "q2"};
    if (name == "adaptive-3") return {"q1", "q2", "q3", "q4"};
    throw PreconditionError("unknown oracle machine '" + std::string(name) + "'");
}

MachineRun run_machine(const OracleMachine& machine, const std::function<bool(const std::string&)>& oracle) {
    MachineRun run;
    std::vector<bool> answers;
    for (;;) {
        const MachineStep step = machine.program(answers);
        if (step.kind != MachineStep::Kind::Query) {
            run.accept = step.kind == MachineStep::Kind::Accept;
            return run;
        }
        if (answers.size() == machine.query_bound)
            throw ProtocolError("machine '" + machine.name + "' asks more than " +
                                std::to_string(machine.query_bound) + " queries");
        run.queries.push_back(step.query);
        answers.push_back(oracle(step.query));
    }
}

std::vector<std::string> reachable_queries(const OracleMachine& machine) {
    std::set<std::string> out;
    std::function<void(std::vector<bool>&)> walk = [&](std::vector<bool>& answers) {
        const MachineStep step = machine.program(answers);
        if (step.kind != MachineStep::Kind::Query) return;
        if (answers.size() == machine.query_bound)
            throw ProtocolError("machine '" + machine.name + "' asks more than " +
                                std::to_string(machine.query_bound) + " queries");
        out.insert(step.query);
        for (bool a : {false, true}) {
            answers.push_back(a);
            walk(answers);
            answers.pop_back();
        }
    };
    std::vector<bool> answers;
    walk(answers);
    return {out.begin(), out.end()};
}

Dyadic composition_reward(const std::vector<Dyadic>& sub_rewards, const Dyadic& delta) {
    Dyadic total;
    Dyadic weight = Dyadic::pow2_neg(1);  // D^(j-1) / 2^j
    for (const Dyadic& r : sub_rewards) {
        total += weight * r;
        weight = weight * delta * Dyadic::pow2_neg(1);
    }
    return total + weight;
}

ComposedProtocol::Decoded ComposedProtocol::decode(std::span<const Word> merlin) const {
    Decoded d;
    d.sub_messages.assign(slots, {});
    if (merlin.empty()) return d;
    Word first = merlin[0];
    d.l = static_cast<unsigned>(first & low_mask(count_bits));
    first >>= count_bits;
    for (unsigned j = 0; j < slots; ++j) d.answers.push_back((first >> j) & 1u);
    first >>= slots;
    for (std::size_t t = 0; t < merlin.size(); ++t) {
        Word word = t == 0 ? first : merlin[t];
        for (unsigned j = 0; j < slots; ++j) {
            d.sub_messages[j].push_back(word & low_mask(sub_msg_bits[t]));
            word >>= sub_msg_bits[t];
        }
    }
    return d;
}

Word ComposedProtocol::encode(const Decoded& d) const {
    Word first = 0;
    unsigned shift = 0;
    first |= Word{d.l} << shift;
    shift += count_bits;
    for (unsigned j = 0; j < slots; ++j) first |= Word{j < d.answers.size() && d.answers[j]} << (shift + j);
    shift += slots;
    for (unsigned j = 0; j < slots; ++j) {
        if (!d.sub_messages[j].empty()) first |= d.sub_messages[j][0] << shift;
        shift += sub_msg_bits[0];
    }
    return first;
}

std::vector<BitString> ComposedProtocol::split_arthur(const BitString& a, std::size_t round, unsigned l) const {
    const unsigned w = sub_arthur_bits[round];
    if (a.width != l * w) throw ProtocolError("composed Arthur message has the wrong width");
    std::vector<BitString> out;
    for (unsigned j = 0; j < l; ++j) out.push_back(BitString::of(a.bits >> (j * w), w));
    return out;
}

ComposedProtocol compose_with_machine(const OracleMachine& machine,
                                      const std::map<std::string, ProtocolSpec>& family,
                                      const std::string& input) {
    if (family.empty()) throw PreconditionError("composition needs at least one inner protocol");
    const std::vector<std::string> queries = reachable_queries(machine);
    const ProtocolSpec& shape = family.begin()->second;
    const std::size_t k = shape.rounds();

    ComposedProtocol cp;
    cp.machine = machine;
    cp.family = std::make_shared<const std::map<std::string, ProtocolSpec>>(family);
    cp.slots = machine.query_bound;
    cp.count_bits = static_cast<unsigned>(std::bit_width(machine.query_bound));
    cp.sub_msg_bits = shape.msg_bits;
    cp.sub_rand_bits = shape.rand_bits;

    for (std::size_t t = 0; t + 1 < k; ++t)
        cp.sub_arthur_bits.push_back(shape.arthur(zeros(t + 1), zeros(t + 1)).width);
    unsigned max_delta_exp = 0;
    unsigned inner_res = 0;
    unsigned depth = 0;
    for (const auto& [name, s] : family) {
        s.validate();
        if (s.msg_bits != shape.msg_bits || s.rand_bits != shape.rand_bits)
            throw PreconditionError("inner protocol '" + name + "' differs in shape");
        for (std::size_t t = 0; t + 1 < k; ++t)
            if (s.arthur(zeros(t + 1), zeros(t + 1)).width != cp.sub_arthur_bits[t])
                throw PreconditionError("inner protocol '" + name + "' has different Arthur widths");
        if (s.declared_delta.is_infinite())
            throw PreconditionError("inner protocol '" + name + "' declares no finite delta");
        max_delta_exp = std::max<unsigned>(max_delta_exp, s.declared_delta.value().exponent());
        inner_res = std::max(inner_res, s.reward_resolution_bits);
        depth = std::max(depth, s.wrapper_depth);
    }
    for (const auto& q : queries)
        if (!family.count(q)) throw PreconditionError("no inner protocol answers query '" + q + "'");

    ProtocolSpec spec;
    spec.kind = "compose";
    spec.input = input;
    const unsigned L = cp.slots;
    for (std::size_t t = 0; t < k; ++t) {
        spec.msg_bits.push_back(L * shape.msg_bits[t] + (t == 0 ? cp.count_bits + L : 0));
        spec.rand_bits.push_back(L * shape.rand_bits[t]);
    }
    for (std::size_t t = 0; t + 1 < k; ++t)
        if (L * cp.sub_arthur_bits[t] > 64) throw BoundExceeded("composed Arthur message exceeds 64 bits");

    // One plan per answer vector y: the queries the machine asks when fed y.
    auto plans = std::make_shared<std::vector<SlotPlan>>(std::size_t{1} << L);
    for (Word y = 0; y < plans->size(); ++y) {
        SlotPlan& plan = (*plans)[y];
        std::vector<bool> answers;
        for (;;) {
            const MachineStep step = machine.program(answers);
            if (step.kind != MachineStep::Kind::Query) {
                plan.accept = step.kind == MachineStep::Kind::Accept;
                break;
            }
            const ProtocolSpec& s = cp.family->at(step.query);
            plan.specs.push_back(&s);
            const Dyadic& dv = s.declared_delta.value();
            if (plan.specs.size() == 1 || dv < plan.delta) plan.delta = dv;
            answers.push_back((y >> answers.size()) & 1u);
        }
        plan.l = static_cast<unsigned>(plan.specs.size());
    }

    auto self = std::make_shared<ComposedProtocol>(cp);
    // Plan for a well-formed prefix, or nullptr when the format is broken.
    auto plan_for = [self, plans](const ComposedProtocol::Decoded& d) -> const SlotPlan* {
        Word y = 0;
        for (unsigned j = 0; j < self->slots; ++j) y |= Word{d.answers[j]} << j;
        const SlotPlan& plan = (*plans)[y];
        if (d.l != plan.l) return nullptr;
        for (unsigned j = plan.l; j < self->slots; ++j) {
            if (d.answers[j]) return nullptr;
            for (Word m : d.sub_messages[j])
                if (m) return nullptr;
        }
        return &plan;
    };
    auto sub_randomness = [self](std::span<const Word> r, unsigned j) {
        std::vector<Word> out;
        for (std::size_t t = 0; t < r.size(); ++t)
            out.push_back((r[t] >> (j * self->sub_rand_bits[t])) & low_mask(self->sub_rand_bits[t]));
        return out;
    };

    spec.arthur = [self, plan_for, sub_randomness](std::span<const Word> m, std::span<const Word> r) {
        const auto d = self->decode(m);
        const SlotPlan* plan = plan_for(d);
        if (!plan) return BitString{};
        BitString out;
        for (unsigned j = 0; j < plan->l; ++j)
            out = out.append_high(plan->specs[j]->arthur(d.sub_messages[j], sub_randomness(r, j)));
        return out;
    };
    spec.reward = [self, plan_for, sub_randomness](std::span<const Word> m, std::span<const Word> r) {
        const auto d = self->decode(m);
        const SlotPlan* plan = plan_for(d);
        if (!plan) return Dyadic(0);
        std::vector<Dyadic> rewards;
        for (unsigned j = 0; j < plan->l; ++j) {
            const ProtocolSpec& s = *plan->specs[j];
            const auto& sm = d.sub_messages[j];
            const auto sr = sub_randomness(r, j);
            std::vector<BitString> replies;
            for (std::size_t t = 1; t < sm.size(); ++t)
                replies.push_back(s.arthur(std::span(sm).first(t), std::span(sr).first(t)));
            if (s.value(sm, replies) != BitString::bit(d.answers[j])) return Dyadic(0);
            rewards.push_back(s.reward(sm, sr));
        }
        return composition_reward(rewards, plan->delta);
    };
    spec.value = [self, plan_for](std::span<const Word> m, std::span<const BitString> a) {
        const auto d = self->decode(m);
        const SlotPlan* plan = plan_for(d);
        if (!plan) return BitString::bit(false);
        std::vector<std::vector<BitString>> replies(plan->l);
        for (std::size_t t = 0; t < a.size(); ++t) {
            const auto parts = self->split_arthur(a[t], t, plan->l);
            for (unsigned j = 0; j < plan->l; ++j) replies[j].push_back(parts[j]);
        }
        for (unsigned j = 0; j < plan->l; ++j)
            if (plan->specs[j]->value(d.sub_messages[j], replies[j]) != BitString::bit(d.answers[j]))
                return BitString::bit(false);
        return BitString::bit(plan->accept);
    };

    const unsigned e = max_delta_exp;
    spec.reward_resolution_bits = L == 0 ? 1 : std::max(L * e + L + 1, (L - 1) * e + L + inner_res);
    spec.declared_delta = resolution_delta(spec.reward_resolution_bits, spec.total_random_bits());
    spec.wrapper_depth = depth + 1;
    spec.validate();
    cp.spec = std::move(spec);
    return cp;
}

CompositionCheck check_composition(const ComposedProtocol& composed, const InfoSetTable& table,
                                   const std::map<std::string, bool>& truth,
                                   const std::map<std::string, InfoSetTable>& inner_tables) {
    CompositionCheck check;
    const MachineRun real = run_machine(composed.machine, [&](const std::string& q) { return truth.at(q); });
    const std::size_t k = composed.spec.rounds();
    auto fail = [&](const NodeKey& key, Word m, const std::string& what) {
        Transcript t = transcript_of(composed.spec, key);
        t.merlin.push_back(BitString::of(m, composed.spec.msg_bits[key.merlin.size()]));
        check.violations.push_back(what + " at " + t.to_string());
    };

    for (const auto& [key, node] : table.nodes()) {
        if (!node.rational_reachable) continue;
        for (Word m : node.argmax) {
            if (node.round + 1 == k) ++check.branches;
            std::vector<Word> merlin = key.merlin;
            merlin.push_back(m);
            const auto d = composed.decode(merlin);
            if (d.l != real.queries.size()) {
                fail(key, m, "announced " + std::to_string(d.l) + " queries, machine asks " +
                                 std::to_string(real.queries.size()));
                continue;
            }
            // (a): the queries simulated from the announced answers.
            std::vector<std::string> simulated;
            std::vector<bool> answers;
            for (;;) {
                const MachineStep step = composed.machine.program(answers);
                if (step.kind != MachineStep::Kind::Query || simulated.size() == d.l) break;
                simulated.push_back(step.query);
                answers.push_back(d.answers[answers.size()]);
            }
            if (simulated != real.queries) fail(key, m, "(a) simulated queries differ from the machine's");
            for (unsigned j = 0; j < d.l && j < simulated.size(); ++j) {
                // (c)
                if (d.answers[j] != truth.at(real.queries[j]))
                    fail(key, m, "(c) wrong answer to query '" + real.queries[j] + "'");
                // (b)
                NodeKey sub;
                for (std::size_t t = 0; t < node.round; ++t) {
                    sub.merlin.push_back(d.sub_messages[j][t]);
                    sub.arthur.push_back(composed.split_arthur(key.arthur[t], t, d.l)[j]);
                }
                const InfoSetNode* inner = inner_tables.at(real.queries[j]).find(sub);
                if (!inner || !inner->is_argmax(d.sub_messages[j][node.round]))
                    fail(key, m, "(b) suboptimal play in sub-protocol '" + real.queries[j] + "'");
            }
        }
    }
    check.pass = check.violations.empty();
    return check;
}

}  // namespace ratproof
