#include <algorithm>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "ratproof/elicit.hpp"
#include "ratproof/errors.hpp"
#include "ratproof/tournament.hpp"

using namespace ratproof;
using namespace fixtures;
using oracle::to_rational;

namespace {

void check_same_values(const InfoSetTable& a, const InfoSetTable& b) {
    REQUIRE(a.size() == b.size());
    for (const auto& [key, node] : a.nodes()) {
        const InfoSetNode* twin = b.find(key);
        REQUIRE(twin != nullptr);
        CHECK(twin->value == node.value);
        CHECK(twin->argmax == node.argmax);
    }
}

/// Double brute force: the rational Merlin's decision bit for a pp-vote
/// protocol is the strict majority of the circuit.
bool majority_of(const CorpusEntry& e) { return 2 * e.count > (std::uint64_t{1} << e.circuit.n_inputs()); }

ProtocolSpec toy_oracle_round() {
    return pp_oracle_round({make_pp_vote(circuit(kOr2, CountingMode::Majority, "or")),
                            make_pp_vote(circuit(kTrue2, CountingMode::Majority, "true"))});
}

}  // namespace

TEST_CASE("pp-vote examples") {
    const ProtocolSpec vote = make_pp_vote(circuit(kOr2));
    CHECK(vote.msg_bits == std::vector<unsigned>{1});
    CHECK(vote.rand_bits == std::vector<unsigned>{2});
    CHECK(vote.declared_delta == Gap(Dyadic::ratio(1, 2)));
    const InfoSetTable t = solve_rational(vote);
    CHECK(t.root().argmax == std::vector<Word>{1});
    CHECK(t.root().value == Dyadic::ratio(3, 2));
    CHECK_THROWS_AS(make_pp_vote(circuit("inputs 2\ng1 = XOR x1 x2\noutput g1")), TieNotAllowed);
}

TEST_CASE("pp-vote corpus invariants") {
    for (const auto& e : generate_corpus(23, 80, 7)) {
        CAPTURE(e.name);
        const ProtocolSpec vote = make_pp_vote(e.instance(CountingMode::Majority));
        const InfoSetTable t = solve_rational(vote);
        const std::uint64_t total = std::uint64_t{1} << e.circuit.n_inputs();
        CHECK(to_rational(t.root().value) == oracle::Rational(std::max(e.count, total - e.count), total));
        CHECK(verify_protocol(vote, t, BitString::bit(majority_of(e))).pass);
        const Gap d = delta_exact(t);
        REQUIRE_FALSE(d.is_infinite());
        CHECK(vote.declared_delta <= d);
    }
}

TEST_CASE("brier-count examples") {
    const ProtocolSpec and_parity = make_brier_count(circuit(kAnd2, CountingMode::Parity));
    const InfoSetTable t1 = solve_rational(and_parity);
    CHECK(t1.root().argmax == std::vector<Word>{1});
    CHECK(*rational_output(and_parity, t1) == BitString::bit(true));
    // Direct enumeration of all 5 claims x 4 assignments for AND.
    for (Word c = 0; c < 8; ++c) {
        oracle::Rational expected = 0;
        for (int y = 0; y < 4; ++y) {
            const int b = y == 3;
            if (c <= 4) expected += 1 - (oracle::Rational(c, 4) - b) * (oracle::Rational(c, 4) - b);
        }
        CHECK(to_rational(t1.root().find(c)->value) == expected / 4);
    }
    const InfoSetTable t0 = solve_rational(make_brier_count(circuit(kFalse2, CountingMode::Parity)));
    CHECK(t0.root().argmax == std::vector<Word>{0});
    CHECK(t0.root().value == Dyadic(1));
    const ProtocolSpec or_count = make_brier_count(circuit(kOr2, CountingMode::Count));
    const InfoSetTable t3 = solve_rational(or_count);
    CHECK(t3.root().argmax == std::vector<Word>{3});
    CHECK(t3.root().value == Dyadic::ratio(13, 4));
    CHECK(*rational_output(or_count, t3) == BitString::of(3, 3));
    CHECK_THROWS_AS(make_brier_count(circuit(kOr2)), PreconditionError);
}

TEST_CASE("brier-count argmax is the true count") {
    for (const auto& e : generate_corpus(31, 60, 5)) {
        const ProtocolSpec spec = make_brier_count(e.instance(CountingMode::Count));
        const InfoSetTable t = solve_rational(spec);
        CHECK(t.root().argmax == std::vector<Word>{e.count});
        CHECK(spec.declared_delta <= delta_exact(t));
    }
}

TEST_CASE("one-bit transform examples") {
    const ProtocolSpec five_eighths = one_bit_transform(make_constant_reward(Dyadic::ratio(5, 3), 1, 0));
    CHECK(five_eighths.rand_bits == std::vector<unsigned>{3});
    int paid = 0;
    for (Word u = 0; u < 8; ++u) {
        const Word m[1] = {0};
        const Word r[1] = {u};
        const Dyadic v = five_eighths.reward(m, r);
        CHECK((v == Dyadic(0) || v == Dyadic(1)));
        paid += v == Dyadic(1);
    }
    CHECK(paid == 5);
    const ProtocolSpec zero = one_bit_transform(make_constant_reward(Dyadic(0), 1, 2));
    for (Word r = 0; r < 4; ++r) {
        const Word m[1] = {1};
        const Word rr[1] = {r};
        CHECK(zero.reward(m, rr) == Dyadic(0));
    }
    // A reward off its declared grid is caught during solving.
    ProtocolSpec liar = make_constant_reward(Dyadic::ratio(1, 1), 1, 0);
    liar.reward = [](std::span<const Word>, std::span<const Word>) { return Dyadic::ratio(1, 2); };
    CHECK_THROWS_AS(solve_rational(one_bit_transform(liar)), ProtocolError);
}

TEST_CASE("one-bit transform preserves every node") {
    std::vector<ProtocolSpec> specs;
    for (const auto& e : generate_corpus(41, 30, 6)) specs.push_back(make_pp_vote(e.instance(CountingMode::Majority)));
    for (const auto& e : generate_corpus(43, 20, 3)) specs.push_back(make_brier_count(e.instance(CountingMode::Parity)));
    for (std::uint64_t s = 0; s < 10; ++s) specs.push_back(oracle::random_linear_protocol(s, {1, 2}, {2, 1}, 3));
    specs.push_back(toy_oracle_round());
    for (const auto& spec : specs) {
        CAPTURE(spec.kind);
        const ProtocolSpec bit = one_bit_transform(spec);
        CHECK(bit.rounds() == spec.rounds());
        CHECK(bit.msg_bits == spec.msg_bits);
        check_same_values(solve_rational(spec), solve_rational(bit));
    }
}

TEST_CASE("pp-oracle-round decides the majority of majorities") {
    const auto entries = corpus_with_inputs(5, 3, 64);
    for (std::size_t start = 0; start + 4 <= entries.size(); start += 4) {
        std::vector<ProtocolSpec> inner;
        int yes = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            inner.push_back(make_pp_vote(entries[start + j].instance(CountingMode::Majority)));
            yes += majority_of(entries[start + j]);
        }
        if (yes == 2) {
            CHECK_THROWS_AS(pp_oracle_round(inner), TieNotAllowed);
            continue;
        }
        const ProtocolSpec outer = pp_oracle_round(inner);
        const InfoSetTable t = solve_rational(outer);
        CHECK(t.root().argmax == std::vector<Word>{yes > 2 ? Word{1} : Word{0}});
        CHECK(verify_protocol(outer, t, BitString::bit(yes > 2)).pass);
        CHECK(outer.declared_delta <= delta_exact(t));
    }
}

TEST_CASE("pp-oracle-round with equal inner decisions") {
    const ProtocolSpec a = make_pp_vote(circuit(kOr2));
    const ProtocolSpec outer = pp_oracle_round({a, a});
    const Dyadic inner_root = solve_rational(a).root().value;
    CHECK(solve_rational(outer).root().value ==
          Dyadic::pow2_neg(1) * inner_root + a.declared_delta.value() * Dyadic::pow2_neg(2));
    CHECK_THROWS_AS(pp_oracle_round({make_pp_vote(circuit(kOr2)), make_pp_vote(circuit(kFalse2))}), TieNotAllowed);
    CHECK_THROWS_AS(pp_oracle_round({a, a, a}), PreconditionError);
}

TEST_CASE("elicitation on the oracle-round toy") {
    const ProtocolSpec toy = toy_oracle_round();
    const InfoSetTable base = solve_rational(toy);
    std::size_t checked = 0;
    for (const auto& [key, node] : base.nodes()) {
        if (node.round != 1) continue;
        const Transcript prefix = transcript_of(toy, key);
        const ElicitedProtocol ep = elicit_expectation(toy, prefix);
        const Dyadic expected = info_set_value(toy, prefix);
        const InfoSetTable t = solve_rational(ep.spec);
        // Every optimal message claims exactly E*.
        for (Word m : t.root().argmax) CHECK(ep.claim(ep.claim_index(m)) == expected);
        // Every other claim loses at least D/4 (E - E*)^2.
        const Dyadic quarter = ep.delta * Dyadic::pow2_neg(2);
        for (const auto& entry : t.root().messages) {
            const Word e = ep.claim_index(entry.message);
            if (e > (Word{1} << ep.grid_bits)) {
                CHECK(entry.value == Dyadic(0));
                continue;
            }
            const Dyadic miss = ep.claim(e) - expected;
            CHECK(entry.value <= t.root().value - quarter * miss * miss);
        }
        // The second output is the base protocol's output on rational branches.
        const VerifyReport v = verify_protocol(ep.spec, t, BitString{});
        for (const auto& out : v.outputs) CHECK((out.bits >> 1) == ep.index_of(expected));
        CHECK(certify_elicitation(ep).holds);
        ++checked;
    }
    CHECK(checked == 4);
}

TEST_CASE("elicitation of a constant subtree") {
    ProtocolSpec flat;
    flat.kind = "flat";
    flat.msg_bits = {1, 1};
    flat.rand_bits = {1, 1};
    flat.arthur = [](std::span<const Word>, std::span<const Word> r) { return BitString::bit(r[0]); };
    flat.reward = [](std::span<const Word> m, std::span<const Word>) {
        return m[0] ? Dyadic::ratio(3, 2) : Dyadic::ratio(1, 1);
    };
    flat.value = [](std::span<const Word> m, std::span<const BitString>) { return BitString::bit(m[0]); };
    flat.reward_resolution_bits = 2;
    flat.declared_delta = Dyadic::ratio(1, 2);
    const Transcript prefix{{BitString::bit(true)}, {BitString::bit(false)}};
    const ElicitedProtocol ep = elicit_expectation(flat, prefix);
    const InfoSetTable t = solve_rational(ep.spec);
    for (Word m : t.root().argmax) CHECK(ep.claim(ep.claim_index(m)) == Dyadic::ratio(3, 2));
}

TEST_CASE("elicitation preconditions") {
    const ProtocolSpec toy = toy_oracle_round();
    const Transcript full{{BitString::bit(true), BitString::bit(true)}, {BitString::bit(false), BitString::bit(true)}};
    CHECK_THROWS_AS(elicit_expectation(toy, full), PreconditionError);
    CHECK_THROWS_AS(elicit_expectation(toy, Transcript{}), PreconditionError);
    CHECK_THROWS_AS(elicit_expectation(make_pp_vote(circuit(kOr2)), Transcript{{BitString::bit(true)}, {BitString{}}}),
                    PreconditionError);
    ProtocolSpec no_delta = toy;
    no_delta.declared_delta = Gap::infinite();
    CHECK_THROWS_AS(elicit_expectation(no_delta, Transcript{{BitString::bit(true)}, {BitString::bit(false)}}),
                    PreconditionError);
}

TEST_CASE("split at round") {
    const SplitReport toy = split_at_round(toy_oracle_round(), 1);
    CHECK(toy.pass);
    CHECK(toy.compared_nodes > 0);
    CHECK(toy.rational_prefixes == 2);
    CHECK_THROWS_AS(split_at_round(toy_oracle_round(), 2), PreconditionError);
    CHECK_THROWS_AS(split_at_round(toy_oracle_round(), 0), PreconditionError);

    // Composition with two queries over two-round inner protocols.
    std::map<std::string, ProtocolSpec> family;
    std::map<std::string, bool> truth;
    family.emplace("q1", toy_oracle_round());
    family.emplace("q2", pp_oracle_round({make_pp_vote(circuit(kFalse2)), make_pp_vote(circuit(kAnd2))}));
    truth["q1"] = true;
    truth["q2"] = false;
    const ComposedProtocol cp = compose_with_machine(equal_answers_machine(), family, "toy-pair");
    const SplitReport composed = split_at_round(cp.spec, 1);
    CHECK(composed.pass);
    CHECK(composed.rational_prefixes >= 1);
    for (const auto& m : composed.mismatches) MESSAGE(m.transcript.to_string() << ": " << m.what);
}

TEST_CASE("composition reward formula") {
    CHECK(composition_reward({Dyadic(1), Dyadic(1)}, Dyadic::ratio(1, 2)) == Dyadic::ratio(73, 7));
    CHECK(composition_reward({}, Dyadic::ratio(1, 2)) == Dyadic::ratio(1, 1));
    const Dyadic d = Dyadic::ratio(3, 5);
    const Dyadic r1 = Dyadic::ratio(5, 3), r2 = Dyadic::ratio(1, 2);
    CHECK(composition_reward({r1, r2}, d) ==
          Dyadic::pow2_neg(1) * r1 + d * Dyadic::pow2_neg(2) * r2 + d * d * Dyadic::pow2_neg(3));
}

TEST_CASE("composition decides like the machine") {
    const auto entries = corpus_with_inputs(9, 2, 40);
    std::size_t runs = 0;
    for (std::size_t i = 0; i + 1 < entries.size(); i += 2) {
        std::map<std::string, bool> truth;
        const auto family = vote_family({entries[i], entries[i + 1]}, &truth);
        const ComposedProtocol cp = compose_with_machine(equal_answers_machine(), family, "pair");
        const InfoSetTable t = solve_rational(cp.spec);
        const bool verdict = truth["q1"] == truth["q2"];
        CHECK(verify_protocol(cp.spec, t, BitString::bit(verdict)).pass);
        std::map<std::string, InfoSetTable> inner;
        for (const auto& [name, s] : family) inner.emplace(name, solve_rational(s));
        const CompositionCheck check = check_composition(cp, t, truth, inner);
        CHECK(check.pass);
        CHECK(check.branches >= 1);
        CHECK(cp.spec.declared_delta <= delta_exact(t));

        // Lying about the first answer is strictly worse than the rational value.
        ComposedProtocol::Decoded lie;
        lie.l = 2;
        lie.answers = {!truth["q1"], truth["q2"]};
        SolveOptions pinned;
        pinned.root_messages.emplace();
        for (Word m0 = 0; m0 < 2; ++m0)
            for (Word m1 = 0; m1 < 2; ++m1) {
                lie.sub_messages = {{m0}, {m1}};
                pinned.root_messages->push_back(cp.encode(lie));
            }
        CHECK(solve_rational(cp.spec, pinned).root().value < t.root().value);
        ++runs;
    }
    CHECK(runs == 20);
}

TEST_CASE("composition format violations pay nothing") {
    const auto entries = corpus_with_inputs(2, 2, 2);
    const auto family = vote_family(entries);
    const ComposedProtocol cp = compose_with_machine(equal_answers_machine(), family, "pair");
    const Word r[1] = {0};
    ComposedProtocol::Decoded d;
    d.answers = {false, false};
    d.sub_messages = {{0}, {0}};
    for (unsigned l : {0u, 1u, 3u}) {
        d.l = l;
        const Word m[1] = {cp.encode(d)};
        CHECK(cp.spec.reward(m, r) == Dyadic(0));
    }
    // An unused slot must stay zero: a one-query machine with a non-zero second slot.
    OracleMachine single{"single", 2, [](const std::vector<bool>& a) {
                             return a.empty() ? MachineStep::ask("q1") : MachineStep::halt(a[0]);
                         }};
    const ComposedProtocol one = compose_with_machine(single, family, "single");
    d.l = 1;
    d.answers = {true, false};
    d.sub_messages = {{1}, {1}};
    const Word bad[1] = {one.encode(d)};
    for (Word rr = 0; rr < 16; ++rr) {
        const Word rand[1] = {rr};
        CHECK(one.spec.reward(bad, rand) == Dyadic(0));
    }
    OracleMachine greedy{"greedy", 1, [](const std::vector<bool>& a) {
                             return a.size() < 2 ? MachineStep::ask("q1") : MachineStep::halt(true);
                         }};
    CHECK_THROWS_AS(compose_with_machine(greedy, family, "x"), ProtocolError);
    OracleMachine stray{"stray", 1, [](const std::vector<bool>& a) {
                            return a.empty() ? MachineStep::ask("nowhere") : MachineStep::halt(true);
                        }};
    CHECK_THROWS_AS(compose_with_machine(stray, family, "x"), PreconditionError);
}

TEST_CASE("adaptive three-query composition") {
    const auto entries = corpus_with_inputs(13, 2, 16);
    for (std::size_t i = 0; i + 4 <= entries.size(); i += 4) {
        std::map<std::string, bool> truth;
        const auto family = vote_family({entries.begin() + i, entries.begin() + i + 4}, &truth);
        const OracleMachine m = adaptive_machine();
        const ComposedProtocol cp = compose_with_machine(m, family, "adaptive");
        const MachineRun run = run_machine(m, [&](const std::string& q) { return truth.at(q); });
        const InfoSetTable t = solve_rational(cp.spec);
        CHECK(verify_protocol(cp.spec, t, BitString::bit(run.accept)).pass);
        std::map<std::string, InfoSetTable> inner;
        for (const auto& [name, s] : family) inner.emplace(name, solve_rational(s));
        CHECK(check_composition(cp, t, truth, inner).pass);
    }
}

TEST_CASE("compare-expectations examples") {
    const BooleanCircuit zero = BooleanCircuit::parse(kFalse2);
    const BooleanCircuit one = BooleanCircuit::parse(kTrue2);
    CHECK(compare_expectations_prob(zero, one) == Dyadic(1));
    CHECK(compare_expectations_prob(one, one) == Dyadic::ratio(1, 1));
    const BooleanCircuit five = BooleanCircuit::parse("inputs 3\ng1 = AND x2 x3\ng2 = OR x1 g1\noutput g2\n");
    const BooleanCircuit three_eighths =
        BooleanCircuit::parse("inputs 3\ng1 = OR x2 x3\ng2 = AND x1 g1\noutput g2\n");
    REQUIRE(count_accepting(three_eighths) == 3);
    REQUIRE(count_accepting(five) == 5);
    CHECK(compare_expectations_prob(three_eighths, five) == Dyadic::ratio(5, 3));
}

TEST_CASE("compare-expectations is exact and antisymmetric") {
    const auto corpus = generate_corpus(77, 40, 6);
    for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
        const auto& a = corpus[i];
        const auto& b = corpus[i + 1];
        const Dyadic p = compare_expectations_prob(a.circuit, b.circuit);
        const oracle::Rational e0(a.count, std::uint64_t{1} << a.circuit.n_inputs());
        const oracle::Rational e1(b.count, std::uint64_t{1} << b.circuit.n_inputs());
        CHECK(to_rational(p) == oracle::Rational(1, 2) + (e1 - e0) / 2);
        CHECK(p + compare_expectations_prob(b.circuit, a.circuit) == Dyadic(1));
    }
}

TEST_CASE("knockout examples") {
    const ProtocolSpec brier = make_brier_count(circuit(kAnd2, CountingMode::Count));
    const KnockoutResult r = knockout_argmax(brier);
    CHECK(r.winner == 1);
    CHECK(r.trace.size() == 7);
    CHECK(knockout_argmax(brier, one_bit_comparator(brier)).winner == 1);
    CHECK(knockout_argmax(make_constant_reward(Dyadic::ratio(1, 1), 0, 1)).winner == 0);
    CHECK(knockout_argmax(make_constant_reward(Dyadic::ratio(1, 1), 3, 1)).winner == 7);
    const ProtocolSpec odd = [] {
        ProtocolSpec s = make_constant_reward(Dyadic::ratio(1, 1), 2, 0);
        s.reward = [](std::span<const Word> m, std::span<const Word>) { return Dyadic(m[0] == 2 ? 1 : 0); };
        return s;
    }();
    CHECK(knockout_argmax(odd).winner == 2);
    CHECK_THROWS_AS(knockout_argmax(toy_oracle_round()), PreconditionError);
}

TEST_CASE("knockout winner is an argmax on the corpus") {
    for (const auto& e : generate_corpus(19, 40, 4)) {
        for (const ProtocolSpec& spec : {make_pp_vote(e.instance(CountingMode::Majority)),
                                         make_brier_count(e.instance(CountingMode::Count))}) {
            const InfoSetTable t = solve_rational(spec);
            CHECK(t.root().is_argmax(knockout_argmax(spec).winner));
            if (e.circuit.n_inputs() <= 2)
                CHECK(t.root().is_argmax(knockout_argmax(spec, one_bit_comparator(spec)).winner));
        }
    }
}
