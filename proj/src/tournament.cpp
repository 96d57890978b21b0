#include "ratproof/tournament.hpp"

#include <map>
#include <memory>

#include "ratproof/errors.hpp"
#include "ratproof/protocols.hpp"

namespace ratproof {

Dyadic compare_expectations_prob(const TruthTable& c0, const TruthTable& c1) {
    std::uint64_t accepted = 0;
    for (std::uint64_t r = 0; r < c0.size(); ++r) {
        const bool b0 = c0[r];
        for (std::uint64_t r2 = 0; r2 < c1.size(); ++r2) {
            const bool b1 = c1[r2];
            for (int coin = 0; coin < 2; ++coin)
                if ((b1 && !b0) || (b1 == b0 && coin)) ++accepted;
        }
    }
    return Dyadic(mpz_class(static_cast<unsigned long>(accepted)), std::uint64_t{c0.n_inputs} + c1.n_inputs + 1);
}

Dyadic compare_expectations_prob(const BooleanCircuit& c0, const BooleanCircuit& c1, unsigned max_inputs) {
    return compare_expectations_prob(c0.truth_table(max_inputs), c1.truth_table(max_inputs));
}

MessageComparator exact_comparator(const ProtocolSpec& spec, const SolveOptions& options) {
    if (spec.rounds() != 1) throw PreconditionError("knockout needs a one-round protocol");
    auto table = std::make_shared<InfoSetTable>(solve_rational(spec, options));
    return [table](Word a, Word b) {
        const InfoSetNode& root = table->root();
        return root.find(a)->value <= root.find(b)->value;
    };
}

MessageComparator one_bit_comparator(const ProtocolSpec& spec, unsigned max_random_bits) {
    if (spec.rounds() != 1) throw PreconditionError("knockout needs a one-round protocol");
    auto bit = std::make_shared<ProtocolSpec>(one_bit_transform(spec));
    const unsigned bits = bit->rand_bits[0];
    if (bits > max_random_bits)
        throw BoundExceeded("one-bit comparator needs 2^" + std::to_string(2 * bits + 1) + " enumerations");
    auto cache = std::make_shared<std::map<Word, TruthTable>>();
    auto table_of = [bit, bits, cache](Word m) -> const TruthTable& {
        auto it = cache->find(m);
        if (it != cache->end()) return it->second;
        TruthTable tt;
        tt.n_inputs = bits;
        tt.words.assign(std::max<std::uint64_t>(1, (std::uint64_t{1} << bits) / 64), 0);
        const Word msg[1] = {m};
        for (Word r = 0; r < (Word{1} << bits); ++r) {
            const Word rand[1] = {r};
            if (!bit->reward(msg, rand).is_zero()) tt.words[r >> 6] |= std::uint64_t{1} << (r & 63u);
        }
        return cache->emplace(m, std::move(tt)).first->second;
    };
    return [table_of](Word a, Word b) {
        return compare_expectations_prob(table_of(a), table_of(b)) >= Dyadic::pow2_neg(1);
    };
}

KnockoutResult knockout_argmax(const ProtocolSpec& spec, const MessageComparator& comparator) {
    if (spec.rounds() != 1) throw PreconditionError("knockout needs a one-round protocol");
    if (spec.msg_bits[0] > 24) throw BoundExceeded("knockout over more than 2^24 messages");
    KnockoutResult result;
    std::vector<Word> field(Word{1} << spec.msg_bits[0]);
    for (Word m = 0; m < field.size(); ++m) field[m] = m;
    for (std::size_t stage = 0; field.size() > 1; ++stage) {
        std::vector<Word> next;
        for (std::size_t i = 0; i + 1 < field.size(); i += 2) {
            const Word a = field[i];
            const Word b = field[i + 1];
            const Word winner = comparator(a, b) ? b : a;
            result.trace.push_back({stage, a, b, winner});
            next.push_back(winner);
        }
        if (field.size() % 2) next.push_back(field.back());
        field = std::move(next);
    }
    result.winner = field.front();
    return result;
}

KnockoutResult knockout_argmax(const ProtocolSpec& spec, const SolveOptions& options) {
    return knockout_argmax(spec, exact_comparator(spec, options));
}

}  // namespace ratproof
