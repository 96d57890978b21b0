#include "ratproof/parity_lab.hpp"

#include <algorithm>
#include <bit>
#include <exception>
#include <thread>

#include "ratproof/errors.hpp"

namespace ratproof {

namespace {

void check_sampler(const SamplerProtocol& sp, unsigned max_sample_bits = 20) {
    if (!sp.reward || !sp.value) throw ProtocolError("sampler '" + sp.name + "' is missing a rule");
    if (sp.s + sp.d > max_sample_bits)
        throw BoundExceeded("sampler '" + sp.name + "' enumerates 2^" + std::to_string(sp.s + sp.d) +
                            " sample strings; bound is 2^" + std::to_string(max_sample_bits));
}

Dyadic grid_point(std::uint64_t k, unsigned n) {
    return Dyadic(mpz_class(static_cast<unsigned long>(k)), n);
}

/// Runs body(i) for i in [0, count) on `workers` threads, strided.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body body) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i, 0u);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) body(i, w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

unsigned count_alternations(const std::vector<int>& signs) {
    unsigned changes = 0;
    int last = 0;
    for (int s : signs) {
        if (s == 0) continue;
        if (last != 0 && s != last) ++changes;
        last = s;
    }
    return changes;
}

}  // namespace

DyadicPolynomial bernoulli_poly(const SamplerProtocol& sp, Word m) {
    check_sampler(sp);
    std::vector<DyadicAccumulator> by_weight(sp.d + 1);
    for (Word a = 0; a < (Word{1} << sp.s); ++a)
        for (Word r = 0; r < (Word{1} << sp.d); ++r) by_weight[std::popcount(r)].add(sp.reward(m, a, r));
    DyadicPolynomial q;
    const Dyadic scale = Dyadic::pow2_neg(sp.s);
    for (unsigned w = 0; w <= sp.d; ++w) {
        const DyadicPolynomial basis =
            DyadicPolynomial::identity().pow(w) * DyadicPolynomial::one_minus_p().pow(sp.d - w);
        q = q + (by_weight[w].result() * scale) * basis;
    }
    return q;
}

Dyadic direct_expectation(const SamplerProtocol& sp, Word m, std::uint64_t k) {
    check_sampler(sp);
    if (k > (std::uint64_t{1} << sp.n)) throw PreconditionError("k exceeds 2^n");
    const Dyadic p = grid_point(k, sp.n);
    const Dyadic q = Dyadic(1) - p;
    DyadicAccumulator acc;
    for (Word r = 0; r < (Word{1} << sp.d); ++r) {
        Dyadic weight(1);
        for (unsigned b = 0; b < sp.d; ++b) weight *= ((r >> b) & 1u) ? p : q;
        for (Word a = 0; a < (Word{1} << sp.s); ++a) acc.add(sp.reward(m, a, r) * weight);
    }
    return acc.result().scaled_pow2(-static_cast<std::int64_t>(sp.s));
}

unsigned sign_alternations(const SamplerProtocol& sp, Word m0, Word m1) {
    const DyadicPolynomial diff = bernoulli_poly(sp, m0) - bernoulli_poly(sp, m1);
    std::vector<int> signs;
    for (std::uint64_t k = 0; k <= (std::uint64_t{1} << sp.n); ++k) signs.push_back(diff.eval(grid_point(k, sp.n)).sign());
    return count_alternations(signs);
}

AuditReport parity_audit(const SamplerProtocol& sp, const AuditOptions& options) {
    if (sp.n > options.max_n)
        throw BoundExceeded("audit size n = " + std::to_string(sp.n) + " exceeds the bound " +
                            std::to_string(options.max_n));
    if (sp.msg_bits > options.max_msg_bits)
        throw BoundExceeded("audit message width " + std::to_string(sp.msg_bits) + " exceeds the bound " +
                            std::to_string(options.max_msg_bits));
    check_sampler(sp, options.max_sample_bits);

    AuditReport report;
    report.protocol = sp.name;
    report.n = sp.n;
    report.msg_bits = sp.msg_bits;
    report.d = sp.d;

    const std::size_t messages = std::size_t{1} << sp.msg_bits;
    const std::size_t grid = (std::size_t{1} << sp.n) + 1;
    std::vector<DyadicPolynomial> polys(messages);
    parallel_for(messages, options.workers, [&](std::size_t m, unsigned) { polys[m] = bernoulli_poly(sp, m); });

    // values[m][k] = Q_m(k / 2^n)
    std::vector<std::vector<Dyadic>> values(messages, std::vector<Dyadic>(grid));
    parallel_for(messages, options.workers, [&](std::size_t m, unsigned) {
        for (std::size_t k = 0; k < grid; ++k) values[m][k] = polys[m].eval(grid_point(k, sp.n));
    });

    std::vector<std::optional<ParityFailure>> per_k(grid);
    report.argmax_by_k.resize(grid);
    parallel_for(grid, options.workers, [&](std::size_t k, unsigned) {
        const Dyadic* best = &values[0][k];
        for (std::size_t m = 1; m < messages; ++m)
            if (values[m][k] > *best) best = &values[m][k];
        std::vector<Word> argmax;
        std::optional<bool> wrong;
        for (std::size_t m = 0; m < messages; ++m) {
            if (values[m][k] != *best) continue;
            argmax.push_back(m);
            if (sp.value(m) != static_cast<bool>(k & 1u)) wrong = sp.value(m);
        }
        if (wrong) per_k[k] = ParityFailure{k, argmax, *wrong};
        report.argmax_by_k[k] = std::move(argmax);
    });
    for (auto& f : per_k)
        if (f) report.failures.push_back(std::move(*f));
    for (std::size_t m = 0; m < messages; ++m) report.polynomials.emplace(m, polys[m]);

    if (options.check_mechanics) {
        report.mechanics_checked = true;
        for (const auto& q : polys) report.max_degree = std::max(report.max_degree, q.degree());

        std::vector<std::size_t> mismatches(std::max(1u, options.workers), 0);
        parallel_for(messages, options.workers, [&](std::size_t m, unsigned w) {
            for (std::size_t k = 0; k < grid; ++k)
                if (direct_expectation(sp, m, k) != values[m][k]) ++mismatches[w];
        });
        for (auto c : mismatches) report.grid_mismatches += c;

        // Integers on a common denominator make the pairwise sweep cheap.
        std::uint64_t common = 0;
        for (const auto& row : values)
            for (const auto& v : row) common = std::max(common, v.exponent());
        std::vector<std::vector<mpz_class>> scaled(messages, std::vector<mpz_class>(grid));
        for (std::size_t m = 0; m < messages; ++m)
            for (std::size_t k = 0; k < grid; ++k)
                mpz_mul_2exp(scaled[m][k].get_mpz_t(), values[m][k].numerator().get_mpz_t(),
                             common - values[m][k].exponent());

        const unsigned slots = std::max(1u, options.workers);
        std::vector<unsigned> max_alt(slots, 0);
        std::vector<std::size_t> violations(slots, 0);
        std::vector<std::size_t> pairs(slots, 0);
        parallel_for(messages, options.workers, [&](std::size_t m0, unsigned w) {
            std::vector<int> signs(grid);
            for (std::size_t m1 = m0 + 1; m1 < messages; ++m1) {
                for (std::size_t k = 0; k < grid; ++k) signs[k] = cmp(scaled[m0][k], scaled[m1][k]);
                const unsigned alt = count_alternations(signs);
                ++pairs[w];
                max_alt[w] = std::max(max_alt[w], alt);
                if (alt > sp.d && polys[m0] != polys[m1]) ++violations[w];
            }
        });
        for (unsigned w = 0; w < slots; ++w) {
            report.max_alternations = std::max(report.max_alternations, max_alt[w]);
            report.alternation_violations += violations[w];
            report.pairs_checked += pairs[w];
        }
    }
    return report;
}

SamplerProtocol brier_sampler(unsigned n, std::optional<unsigned> width) {
    if (n > 30) throw BoundExceeded("brier sampler supports n <= 30");
    SamplerProtocol sp;
    sp.n = n;
    sp.s = 0;
    sp.d = 1;
    sp.value = [](Word m) { return (m & 1u) != 0; };
    if (!width) {
        sp.name = "brier-count(n=" + std::to_string(n) + ")";
        sp.msg_bits = n + 1;
        sp.reward = [n](Word m, Word, Word r) {
            const long scale = 1L << n;
            const long c = static_cast<long>(m);
            if (c > scale) return Dyadic(0);
            const long miss = c - (r ? scale : 0);
            return Dyadic(mpz_class(scale) * scale - mpz_class(miss) * miss, 2 * std::uint64_t{n});
        };
    } else {
        const unsigned w = *width;
        if (w == 0 || w > 30) throw PreconditionError("claim width must be in 1..30");
        sp.name = "brier-count(n=" + std::to_string(n) + ",width=" + std::to_string(w) + ")";
        sp.msg_bits = w;
        sp.reward = [w](Word m, Word, Word r) {
            const long scale = 1L << w;
            const long miss = static_cast<long>(m) - (r ? scale : 0);
            return Dyadic(mpz_class(scale) * scale - mpz_class(miss) * miss, 2 * std::uint64_t{w});
        };
    }
    return sp;
}

SamplerProtocol sample_blind_sampler(unsigned n, unsigned msg_bits, bool output) {
    SamplerProtocol sp;
    sp.name = "sample-blind(n=" + std::to_string(n) + ")";
    sp.n = n;
    sp.msg_bits = msg_bits;
    sp.reward = [msg_bits](Word m, Word, Word) {
        return Dyadic(mpz_class(static_cast<unsigned long>(m)), msg_bits);
    };
    sp.value = [output](Word) { return output; };
    return sp;
}

SamplerProtocol agreement_sampler(unsigned n) {
    SamplerProtocol sp;
    sp.name = "agreement(n=" + std::to_string(n) + ")";
    sp.n = n;
    sp.msg_bits = 1;
    sp.d = 2;
    sp.reward = [](Word m, Word, Word r) {
        const bool agree = (r & 1u) == ((r >> 1) & 1u);
        return Dyadic(agree == (m == 0) ? 1 : 0);
    };
    sp.value = [](Word m) { return m != 0; };
    return sp;
}

unsigned alpha_width(const Dyadic& alpha, unsigned n) {
    if (alpha.sign() <= 0 || alpha >= Dyadic(1)) throw PreconditionError("alpha must lie in (0,1)");
    mpz_class budget;
    mpz_class scaled = alpha.numerator() * n;
    mpz_cdiv_q_2exp(budget.get_mpz_t(), scaled.get_mpz_t(), alpha.exponent());
    const long width = budget.get_si() - 1;
    return static_cast<unsigned>(std::max(1L, width));
}

}  // namespace ratproof
