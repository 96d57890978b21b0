#include "ratproof/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <memory>

#include "ratproof/errors.hpp"

namespace ratproof {

namespace {

std::string join_inputs(const std::vector<ProtocolSpec>& specs) {
    std::string out = "[";
    for (std::size_t i = 0; i < specs.size(); ++i) out += (i ? "," : "") + specs[i].input;
    return out + "]";
}

}  // namespace

ProtocolSpec make_pp_vote(const CountingInstance& instance) {
    CountingInstance majority = instance;
    majority.mode = CountingMode::Majority;
    membership(majority);  // rejects ties
    const unsigned n = instance.circuit.n_inputs();
    auto table = std::make_shared<TruthTable>(instance.circuit.truth_table());

    ProtocolSpec spec;
    spec.kind = "pp-vote";
    spec.input = instance.name;
    spec.msg_bits = {1};
    spec.rand_bits = {n};
    spec.reward = [table](std::span<const Word> m, std::span<const Word> r) {
        return Dyadic(m[0] == static_cast<Word>((*table)[r[0]]) ? 1 : 0);
    };
    spec.value = [](std::span<const Word> m, std::span<const BitString>) { return BitString::bit(m[0] != 0); };
    spec.declared_delta = Dyadic::pow2_neg(n);
    spec.reward_resolution_bits = 0;
    return spec;
}

ProtocolSpec make_brier_count(const CountingInstance& instance) {
    if (instance.mode == CountingMode::Majority)
        throw PreconditionError("brier-count needs a parity or count instance");
    const unsigned n = instance.circuit.n_inputs();
    if (2 * n > 62) throw BoundExceeded("brier-count supports at most 31 inputs");
    auto table = std::make_shared<TruthTable>(instance.circuit.truth_table());
    const bool parity = instance.mode == CountingMode::Parity;

    ProtocolSpec spec;
    spec.kind = "brier-count";
    spec.input = instance.name;
    spec.msg_bits = {n + 1};
    spec.rand_bits = {n};
    spec.reward = [table, n](std::span<const Word> m, std::span<const Word> r) {
        const long scale = 1L << n;
        const long c = static_cast<long>(m[0]);
        if (c > scale) return Dyadic(0);
        const long miss = c - ((*table)[r[0]] ? scale : 0);
        return Dyadic(mpz_class(scale) * scale - mpz_class(miss) * miss, 2 * std::uint64_t{n});
    };
    spec.value = [parity, n](std::span<const Word> m, std::span<const BitString>) {
        return parity ? BitString::bit(m[0] & 1u) : BitString::of(m[0], n + 1);
    };
    spec.declared_delta = Dyadic::pow2_neg(2 * n);
    spec.reward_resolution_bits = 2 * n;
    return spec;
}

ProtocolSpec make_constant_reward(const Dyadic& reward, unsigned msg_bits, unsigned rand_bits) {
    if (reward.sign() < 0 || reward > Dyadic(1)) throw PreconditionError("constant reward outside [0,1]");
    ProtocolSpec spec;
    spec.kind = "constant";
    spec.input = reward.to_string();
    spec.msg_bits = {msg_bits};
    spec.rand_bits = {rand_bits};
    spec.reward = [reward](std::span<const Word>, std::span<const Word>) { return reward; };
    spec.value = [](std::span<const Word>, std::span<const BitString>) { return BitString::bit(false); };
    spec.reward_resolution_bits = static_cast<unsigned>(reward.exponent());
    return spec;
}

ProtocolSpec one_bit_transform(const ProtocolSpec& spec) {
    spec.validate();
    const unsigned p = spec.reward_resolution_bits;
    const std::size_t last = spec.rounds() - 1;
    const unsigned orig = spec.rand_bits[last];
    if (orig + p > 63) throw BoundExceeded("one-bit transform needs more than 63 random bits in the last round");

    ProtocolSpec out = spec;
    out.kind = "one-bit(" + spec.kind + ")";
    out.rand_bits[last] = orig + p;
    out.reward_resolution_bits = 0;
    const std::size_t k = spec.rounds();
    auto strip = [k, last, orig](std::span<const Word> r) {
        std::vector<Word> own(r.begin(), r.end());
        if (own.size() == k) own[last] &= low_mask(orig);
        return own;
    };
    if (spec.arthur) {
        out.arthur = [inner = spec.arthur, strip](std::span<const Word> m, std::span<const Word> r) {
            return inner(m, strip(r));
        };
    }
    // The solver visits every u for each base outcome, so the scaled base
    // reward is memoized per thread for the current history.
    struct Memo {
        std::uint64_t owner = 0;
        std::vector<Word> history;
        std::vector<mpz_class> scaled;
        std::vector<char> known;
    };
    static std::atomic<std::uint64_t> next_id{1};
    const std::uint64_t id = next_id.fetch_add(1);
    out.reward = [base = spec, id, p, last, orig](std::span<const Word> m, std::span<const Word> r) {
        thread_local Memo memo;
        const Word own = r[last] & low_mask(orig);
        const bool cacheable = orig <= 16;
        if (cacheable) {
            const bool same = memo.owner == id && memo.history.size() == m.size() + last &&
                              std::equal(m.begin(), m.end(), memo.history.begin()) &&
                              std::equal(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(last),
                                         memo.history.begin() + static_cast<std::ptrdiff_t>(m.size()));
            if (!same) {
                memo.owner = id;
                memo.history.assign(m.begin(), m.end());
                memo.history.insert(memo.history.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(last));
                memo.scaled.assign(std::size_t{1} << orig, mpz_class());
                memo.known.assign(std::size_t{1} << orig, 0);
            }
        }
        mpz_class local;
        mpz_class& scaled = cacheable ? memo.scaled[own] : local;
        if (!cacheable || !memo.known[own]) {
            std::vector<Word> stripped(r.begin(), r.end());
            stripped[last] = own;
            const Dyadic reward = base.reward(m, stripped);
            if (reward.sign() < 0 || !reward.integer_at_resolution(p, scaled))
                throw ProtocolError("protocol '" + base.kind + "' paid " + reward.to_string() +
                                    ", not a multiple of 2^-" + std::to_string(p));
            if (cacheable) memo.known[own] = 1;
        }
        if (scaled >= (mpz_class(1) << p)) return Dyadic(1);
        const Word u = r[last] >> orig;
        if (u == 0) return Dyadic(0);
        // The first set bit of u, read from the top, sits at depth j with
        // probability 2^-j; pay the j-th binary digit of the reward.
        const auto shift = static_cast<mp_bitcnt_t>(std::bit_width(u) - 1);
        return Dyadic(mpz_tstbit(scaled.get_mpz_t(), shift) ? 1 : 0);
    };
    return out;
}

bool rational_decision(const ProtocolSpec& spec, const SolveOptions& options) {
    const InfoSetTable table = solve_rational(spec, options);
    const auto out = rational_output(spec, table);
    if (!out || out->width != 1)
        throw ProtocolError("protocol '" + spec.kind + "' on '" + spec.input +
                            "' has no single one-bit output on its rational branches");
    return out->bits != 0;
}

ProtocolSpec pp_oracle_round(const std::vector<ProtocolSpec>& inner, const SolveOptions& options) {
    if (inner.empty() || !std::has_single_bit(inner.size()))
        throw PreconditionError("pp-oracle-round needs a power-of-two number of inner protocols");
    const unsigned q = static_cast<unsigned>(std::countr_zero(inner.size()));
    const ProtocolSpec& first = inner.front();
    std::optional<Dyadic> delta;
    unsigned inner_res = 0;
    unsigned depth = 0;
    unsigned ones = 0;
    for (const auto& s : inner) {
        s.validate();
        if (s.msg_bits != first.msg_bits || s.rand_bits != first.rand_bits)
            throw PreconditionError("pp-oracle-round inner protocols differ in shape");
        if (s.declared_delta.is_infinite())
            throw PreconditionError("inner protocol '" + s.input + "' has no finite delta");
        if (!delta || s.declared_delta.value() < *delta) delta = s.declared_delta.value();
        inner_res = std::max(inner_res, s.reward_resolution_bits);
        depth = std::max(depth, s.wrapper_depth);
        ones += rational_decision(s, options) ? 1 : 0;
    }
    if (2 * ones == inner.size())
        throw TieNotAllowed("pp-oracle-round: inner decisions split evenly over y");

    auto shared = std::make_shared<const std::vector<ProtocolSpec>>(inner);
    const Dyadic bonus = *delta * Dyadic::pow2_neg(2);
    const Dyadic half = Dyadic::pow2_neg(1);

    ProtocolSpec spec;
    spec.kind = "pp-oracle-round";
    spec.input = join_inputs(inner);
    spec.msg_bits.push_back(1);
    spec.msg_bits.insert(spec.msg_bits.end(), first.msg_bits.begin(), first.msg_bits.end());
    spec.rand_bits.push_back(q);
    spec.rand_bits.insert(spec.rand_bits.end(), first.rand_bits.begin(), first.rand_bits.end());
    spec.arthur = [shared, q](std::span<const Word> m, std::span<const Word> r) {
        if (m.size() == 1) return BitString::of(r[0], q);
        return (*shared)[r[0]].arthur(m.subspan(1), r.subspan(1));
    };
    spec.reward = [shared, bonus, half](std::span<const Word> m, std::span<const Word> r) {
        const ProtocolSpec& sub = (*shared)[r[0]];
        const auto sm = m.subspan(1);
        const auto sr = r.subspan(1);
        std::vector<BitString> replies;
        for (std::size_t t = 1; t < sm.size(); ++t) replies.push_back(sub.arthur(sm.first(t), sr.first(t)));
        const BitString pi = sub.value(sm, replies);
        Dyadic reward = half * sub.reward(sm, sr);
        if (pi.width == 1 && pi.bits == m[0]) reward += bonus;
        return reward;
    };
    spec.value = [](std::span<const Word> m, std::span<const BitString>) { return BitString::bit(m[0] != 0); };
    spec.reward_resolution_bits =
        std::max<unsigned>(inner_res + 1, static_cast<unsigned>(bonus.exponent()));
    spec.declared_delta = resolution_delta(spec.reward_resolution_bits, spec.total_random_bits());
    spec.wrapper_depth = depth + 1;
    return spec;
}

}  // namespace ratproof
