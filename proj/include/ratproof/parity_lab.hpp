#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ratproof/dyadic.hpp"
#include "ratproof/polynomial.hpp"
#include "ratproof/protocol.hpp"

namespace ratproof {

/// One-round protocol whose randomness is a uniform string a of s bits and d
/// i.i.d. Bernoulli(k/2^n) bits r. Merlin knows k and sends m.
struct SamplerProtocol {
    std::string name;
    unsigned n = 0;
    unsigned msg_bits = 0;
    unsigned s = 0;
    unsigned d = 0;
    std::function<Dyadic(Word m, Word a, Word r)> reward;
    std::function<bool(Word m)> value;
};

/// Q_m(p) = 2^-s sum_a sum_r R(m,a,r) p^|r| (1-p)^(d-|r|), expanded exactly.
DyadicPolynomial bernoulli_poly(const SamplerProtocol& sp, Word m);

/// E[R(m, a, r)] at p = k/2^n by weighting every (a, r) with its probability.
Dyadic direct_expectation(const SamplerProtocol& sp, Word m, std::uint64_t k);

/// Sign changes of Q_m0 - Q_m1 along k = 0..2^n, zeros skipped.
unsigned sign_alternations(const SamplerProtocol& sp, Word m0, Word m1);

struct ParityFailure {
    std::uint64_t k = 0;
    std::vector<Word> argmax;
    /// The output some optimal message gives, which is not k mod 2.
    bool wrong_output = false;
};

struct AuditOptions {
    unsigned workers = 1;
    /// Also check degree bounds, grid agreement with direct enumeration and
    /// alternation bounds over all message pairs.
    bool check_mechanics = true;
    unsigned max_n = 16;
    unsigned max_msg_bits = 16;
    unsigned max_sample_bits = 16;
};

struct AuditReport {
    std::string protocol;
    unsigned n = 0;
    unsigned msg_bits = 0;
    unsigned d = 0;
    std::vector<ParityFailure> failures;  // sorted by k
    /// Optimal messages at every grid point k = 0..2^n.
    std::vector<std::vector<Word>> argmax_by_k;
    std::map<Word, DyadicPolynomial> polynomials;

    bool mechanics_checked = false;
    int max_degree = -1;
    std::size_t grid_mismatches = 0;
    std::size_t pairs_checked = 0;
    unsigned max_alternations = 0;
    /// Pairs with more than d alternations whose polynomials differ.
    std::size_t alternation_violations = 0;

    bool mechanics_ok() const {
        return max_degree <= static_cast<int>(d) && grid_mismatches == 0 && alternation_violations == 0;
    }
};

/// Checks, for every k in 0..2^n, that every optimal message outputs k mod 2.
/// Throws BoundExceeded past the configured sizes.
AuditReport parity_audit(const SamplerProtocol& sp, const AuditOptions& options = {});

/// Quadratic-score sampler, d = 1, s = 0. Without `width` Merlin sends a
/// count c on n+1 bits with claim c/2^n (claims above 1 pay 0); with width w
/// he sends m on w bits with claim m/2^w. The output is m mod 2 either way.
SamplerProtocol brier_sampler(unsigned n, std::optional<unsigned> width = std::nullopt);

/// Reward ignores the samples (d = 0) and pays more for larger messages;
/// the output is the constant `output`.
SamplerProtocol sample_blind_sampler(unsigned n, unsigned msg_bits, bool output);

/// d = 2: pays I{r_1 = r_2} on message 0 and I{r_1 != r_2} on message 1.
SamplerProtocol agreement_sampler(unsigned n);

/// Message width for a budget fraction alpha: ceil(alpha n) - 1, at least 1.
unsigned alpha_width(const Dyadic& alpha, unsigned n);

}  // namespace ratproof
