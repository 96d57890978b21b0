#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ratproof/circuit.hpp"
#include "ratproof/corpus.hpp"
#include "ratproof/errors.hpp"
#include "ratproof/protocols.hpp"
#include "ratproof/solver.hpp"

using namespace ratproof;
using oracle::to_rational;

namespace {

CountingInstance instance(const char* text, CountingMode mode = CountingMode::Majority) {
    return {BooleanCircuit::parse(text), mode, "fixture"};
}

const char* kOr2 = "inputs 2\ng1 = OR x1 x2\noutput g1\n";
const char* kAnd2 = "inputs 2\ng1 = AND x1 x2\noutput g1\n";
// x1 OR (x2 AND x3): 5 of 8 assignments accept.
const char* kFiveEighths = "inputs 3\ng1 = AND x2 x3\ng2 = OR x1 g1\noutput g2\n";

Transcript merlin_only(std::initializer_list<BitString> msgs) { return Transcript{msgs, {}}; }

/// Every full randomness vector, fed to run_interaction.
oracle::Rational exhaustive_average(const ProtocolSpec& spec, const Strategy& strategy) {
    oracle::Rational sum = 0;
    const auto all = oracle::all_randomness(spec);
    for (const auto& r : all) sum += to_rational(run_interaction(spec, strategy, std::span<const Word>(r)).reward);
    return sum / all.size();
}

void check_against_naive(const ProtocolSpec& spec, const InfoSetTable& table) {
    for (const auto& [key, node] : table.nodes()) {
        oracle::Rational best = -1;
        for (const auto& entry : node.messages) {
            const auto naive = oracle::naive_message_value(spec, key.merlin, key.arthur, entry.message);
            CHECK(to_rational(entry.value) == naive);
            if (naive > best) best = naive;
        }
        CHECK(to_rational(node.value) == best);
        for (const auto& entry : node.messages)
            CHECK(node.is_argmax(entry.message) == (to_rational(entry.value) == best));
        CHECK(node.messages.size() == (std::size_t{1} << spec.msg_bits[node.round]));
    }
}

/// value at every node = belief-weighted average of the values of its children.
void check_local_consistency(const ProtocolSpec& spec, const InfoSetTable& table) {
    for (const auto& [key, node] : table.nodes()) {
        if (node.round + 1 == spec.rounds()) continue;
        for (const auto& entry : node.messages) {
            oracle::Rational weighted = 0;
            std::size_t mass = 0;
            for (const auto& reply : entry.replies) {
                NodeKey child = key;
                child.merlin.push_back(entry.message);
                child.arthur.push_back(reply);
                const InfoSetNode* c = table.find(child);
                REQUIRE(c != nullptr);
                weighted += to_rational(c->value) * c->belief.size();
                mass += c->belief.size();
                CHECK(info_set_value(spec, transcript_of(spec, child)) == c->value);
                CHECK(consistent_randomness(spec, transcript_of(spec, child)) == c->belief);
            }
            CHECK(mass == node.belief.size() * (std::size_t{1} << spec.rand_bits[node.round]));
            CHECK(to_rational(entry.value) == weighted / mass);
        }
    }
}

void check_same_tables(const InfoSetTable& a, const InfoSetTable& b) {
    REQUIRE(a.size() == b.size());
    auto ia = a.nodes().begin();
    for (auto ib = b.nodes().begin(); ib != b.nodes().end(); ++ia, ++ib) {
        CHECK(ia->first == ib->first);
        CHECK(ia->second.value == ib->second.value);
        CHECK(ia->second.argmax == ib->second.argmax);
        CHECK(ia->second.belief == ib->second.belief);
        CHECK(ia->second.rational_reachable == ib->second.rational_reachable);
        for (std::size_t i = 0; i < ia->second.messages.size(); ++i) {
            CHECK(ia->second.messages[i].value == ib->second.messages[i].value);
            CHECK(ia->second.messages[i].replies == ib->second.messages[i].replies);
        }
    }
}

}  // namespace

TEST_CASE("solve_rational examples") {
    const ProtocolSpec vote = make_pp_vote(instance(kOr2));
    const InfoSetTable table = solve_rational(vote);
    CHECK(table.root().value == Dyadic::ratio(3, 2));
    CHECK(table.root().argmax == std::vector<Word>{1});

    const ProtocolSpec flat = make_constant_reward(Dyadic::ratio(1, 1), 2, 1);
    const InfoSetTable ft = solve_rational(flat);
    CHECK(ft.root().argmax == std::vector<Word>{0, 1, 2, 3});
    CHECK(delta_exact(ft).is_infinite());
}

TEST_CASE("pp-oracle-round toy: root = 1/2 inner root + delta/4") {
    // Two inner protocols that both decide 1: value = 1/2 avg(inner roots) + D/4.
    const ProtocolSpec a = make_pp_vote(instance(kOr2));
    const ProtocolSpec b = make_pp_vote({BooleanCircuit::parse("inputs 2\ng1 = CONST1\noutput g1\n"),
                                         CountingMode::Majority, "one"});
    const ProtocolSpec outer = pp_oracle_round({a, b});
    const InfoSetTable table = solve_rational(outer);
    // Hand expansion: each y has probability 1/2; inner roots 3/4 and 1; D = 1/4.
    const oracle::Rational expected = oracle::Rational(1, 2) * (oracle::Rational(1, 2) * oracle::Rational(3, 4) +
                                                                oracle::Rational(1, 2) * 1) +
                                      oracle::Rational(1, 16);
    CHECK(to_rational(table.root().value) == expected);
    check_against_naive(outer, table);
}

TEST_CASE("info_set_value examples") {
    const ProtocolSpec vote = make_pp_vote(instance(kOr2));
    CHECK(info_set_value(vote, Transcript{}) == solve_rational(vote).root().value);
    CHECK(info_set_value(vote, merlin_only({BitString::bit(false)})) == Dyadic::ratio(1, 2));
    CHECK(info_set_value(vote, merlin_only({BitString::bit(true)})) == Dyadic::ratio(3, 2));

    const ProtocolSpec outer = pp_oracle_round({make_pp_vote(instance(kOr2)), make_pp_vote(instance(kOr2))});
    Transcript impossible{{BitString::bit(true)}, {BitString::of(5, 3)}};
    CHECK_THROWS_AS(info_set_value(outer, impossible), InconsistentTranscript);
    Transcript wrong_width{{BitString::of(1, 2)}, {}};
    CHECK_THROWS_AS(info_set_value(vote, wrong_width), InconsistentTranscript);
}

TEST_CASE("delta_exact examples") {
    CHECK(delta_exact(make_pp_vote(instance(kOr2))) == Gap(Dyadic::ratio(1, 1)));
    CHECK(delta_exact(make_pp_vote(instance(kFiveEighths))) == Gap(Dyadic::ratio(1, 2)));
    CHECK(delta_exact(make_constant_reward(Dyadic::ratio(1, 1))).is_infinite());
    const ProtocolSpec one = make_pp_vote({BooleanCircuit::parse("inputs 1\ng1 = CONST1\noutput g1\n"),
                                           CountingMode::Majority, "one"});
    CHECK(delta_exact(one) == Gap(Dyadic(1)));
    CHECK(solve_rational(one).root().value == Dyadic(1));
}

TEST_CASE("verify_protocol examples") {
    for (const auto& e : generate_corpus(5, 60, 6)) {
        const ProtocolSpec vote = make_pp_vote(e.instance(CountingMode::Majority));
        const VerifyReport r = verify_protocol(vote, BitString::bit(e.majority));
        CHECK(r.pass);
        CHECK(r.branches >= 1);
        if (e.circuit.n_inputs() <= 6) {
            const ProtocolSpec brier = make_brier_count(e.instance(CountingMode::Parity));
            CHECK(verify_protocol(brier, BitString::bit(e.parity)).pass);
        }
    }
    ProtocolSpec broken = make_pp_vote(instance(kOr2));
    broken.reward = [](std::span<const Word> m, std::span<const Word>) { return Dyadic(m[0] == 0 ? 1 : 0); };
    const VerifyReport r = verify_protocol(broken, BitString::bit(true));
    CHECK_FALSE(r.pass);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].transcript.to_string() == "m:0");
}

TEST_CASE("reward range and resolution are enforced") {
    ProtocolSpec bad = make_constant_reward(Dyadic::ratio(1, 1));
    bad.reward = [](std::span<const Word>, std::span<const Word>) { return Dyadic::ratio(3, 1); };
    CHECK_THROWS_AS(solve_rational(bad), ProtocolError);
    ProtocolSpec fine = make_constant_reward(Dyadic::ratio(1, 1));
    fine.reward = [](std::span<const Word>, std::span<const Word>) { return Dyadic::ratio(1, 2); };
    CHECK_THROWS_AS(solve_rational(fine), ProtocolError);
    SolveOptions tight;
    tight.max_enumeration = 4;
    CHECK_THROWS_AS(solve_rational(make_pp_vote(instance(kFiveEighths)), tight), BoundExceeded);
}

TEST_CASE("non power-of-two information sets are rejected") {
    ProtocolSpec spec = oracle::random_linear_protocol(1, {1, 1}, {2, 1}, 2);
    spec.arthur = [](std::span<const Word>, std::span<const Word> r) { return BitString::bit(r[0] == 0); };
    CHECK_THROWS_AS(solve_rational(spec), ProtocolError);
}

TEST_CASE("run_interaction") {
    const ProtocolSpec vote = make_pp_vote(instance(kOr2));
    const Strategy always_one = [](const Transcript&) { return BitString::bit(true); };
    const Interaction a = run_interaction(vote, always_one, std::uint64_t{42});
    const Interaction b = run_interaction(vote, always_one, std::uint64_t{42});
    CHECK(a.transcript == b.transcript);
    CHECK(a.reward == b.reward);
    CHECK((a.reward == Dyadic(0) || a.reward == Dyadic(1)));
    const Strategy too_wide = [](const Transcript&) { return BitString::of(2, 2); };
    const Interaction w = run_interaction(vote, too_wide, std::uint64_t{1});
    CHECK(w.reward == Dyadic(0));
    CHECK_FALSE(w.completed);
    CHECK(w.transcript.merlin.empty());

    const InfoSetTable table = solve_rational(vote);
    CHECK(exhaustive_average(vote, argmax_strategy(vote, table)) == to_rational(table.root().value));
}

TEST_CASE("solver matches the naive definition on random protocols") {
    struct Shape {
        std::vector<unsigned> msg, rand;
        unsigned reply_bits;
    };
    const std::vector<Shape> shapes = {
        {{1}, {2}, 1}, {{2}, {1}, 1}, {{1, 1}, {1, 1}, 1}, {{1, 2}, {2, 1}, 1},
        {{2, 1}, {2, 2}, 2}, {{1, 1, 1}, {1, 1, 1}, 1}, {{1, 1}, {3, 0}, 2}, {{1, 1}, {0, 2}, 1},
    };
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const Shape& s = shapes[seed % shapes.size()];
        const ProtocolSpec spec = oracle::random_linear_protocol(seed, s.msg, s.rand, 3, s.reply_bits);
        CAPTURE(seed);
        const InfoSetTable table = solve_rational(spec);
        check_against_naive(spec, table);
        check_local_consistency(spec, table);
        CHECK(info_set_value(spec, Transcript{}) == table.root().value);
        CHECK(exhaustive_average(spec, argmax_strategy(spec, table)) == to_rational(table.root().value));
        const Gap d = delta_exact(table);
        CHECK((d.is_infinite() || d.value().sign() > 0));
        if (!d.is_infinite())
            CHECK(resolution_delta(spec.reward_resolution_bits, spec.total_random_bits()) <= d.value());
    }
}

TEST_CASE("delta_exact follows the rational path only") {
    // Round 1: message 1 pays through a branch where every later message ties,
    // message 0 reaches a branch with a tiny gap that no rational Merlin visits.
    ProtocolSpec spec;
    spec.kind = "fixture";
    spec.msg_bits = {1, 1};
    spec.rand_bits = {0, 0};
    spec.arthur = [](std::span<const Word>, std::span<const Word>) { return BitString{}; };
    spec.reward = [](std::span<const Word> m, std::span<const Word>) {
        if (m[0] == 1) return Dyadic(1);
        return m[1] ? Dyadic::ratio(1, 3) : Dyadic(0);
    };
    spec.value = [](std::span<const Word> m, std::span<const BitString>) { return BitString::bit(m[0]); };
    spec.reward_resolution_bits = 3;
    const InfoSetTable table = solve_rational(spec);
    CHECK(delta_exact(table).is_infinite() == false);
    CHECK(delta_exact(table) == Gap(Dyadic::ratio(7, 3)));
    const InfoSetNode* off = table.find(NodeKey{{0}, {BitString{}}});
    REQUIRE(off != nullptr);
    CHECK_FALSE(off->rational_reachable);
}

TEST_CASE("worker count does not change the table") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const ProtocolSpec spec = oracle::random_linear_protocol(seed, {2, 1}, {2, 2}, 4, 2);
        SolveOptions one, two, eight;
        two.workers = 2;
        eight.workers = 8;
        const InfoSetTable a = solve_rational(spec, one);
        check_same_tables(a, solve_rational(spec, two));
        check_same_tables(a, solve_rational(spec, eight));
    }
}

TEST_CASE("root restriction prices a fixed first message") {
    const ProtocolSpec spec = oracle::random_linear_protocol(7, {2, 1}, {1, 1}, 3);
    const InfoSetTable full = solve_rational(spec);
    for (Word m = 0; m < 4; ++m) {
        SolveOptions only;
        only.root_messages = std::vector<Word>{m};
        CHECK(solve_rational(spec, only).root().value == full.root().find(m)->value);
    }
}
