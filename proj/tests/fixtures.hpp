#pragma once

// Shared protocol fixtures for tests and the acceptance run.

#include <map>
#include <string>
#include <vector>

#include "ratproof/compose.hpp"
#include "ratproof/corpus.hpp"
#include "ratproof/protocols.hpp"

namespace fixtures {

using namespace ratproof;

inline CountingInstance circuit(const char* text, CountingMode mode = CountingMode::Majority,
                                const char* name = "fixture") {
    return {BooleanCircuit::parse(text), mode, name};
}

inline const char* kOr2 = "inputs 2\ng1 = OR x1 x2\noutput g1\n";
inline const char* kAnd2 = "inputs 2\ng1 = AND x1 x2\noutput g1\n";
inline const char* kFalse2 = "inputs 2\ng1 = CONST0\noutput g1\n";
inline const char* kTrue2 = "inputs 2\ng1 = CONST1\noutput g1\n";

/// Corpus entries with exactly n inputs.
inline std::vector<CorpusEntry> corpus_with_inputs(std::uint64_t seed, unsigned n, std::size_t want) {
    std::vector<CorpusEntry> out;
    std::mt19937_64 rng(seed);
    std::size_t index = 0;
    while (out.size() < want) {
        BooleanCircuit c = random_circuit(rng, n, 1 + static_cast<unsigned>(rng() % (3 * n)));
        CorpusEntry e = make_entry("n" + std::to_string(n) + "_" + std::to_string(index++), std::move(c));
        if (2 * e.count != (std::uint64_t{1} << n)) out.push_back(std::move(e));
    }
    return out;
}

inline OracleMachine equal_answers_machine() { return named_machine("equal-answers"); }
inline OracleMachine adaptive_machine() { return named_machine("adaptive-3"); }

/// Majority vote protocols on the given entries, keyed q1, q2, ...
inline std::map<std::string, ProtocolSpec> vote_family(const std::vector<CorpusEntry>& entries,
                                                       std::map<std::string, bool>* truth = nullptr) {
    std::map<std::string, ProtocolSpec> family;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::string key = "q" + std::to_string(i + 1);
        family.emplace(key, make_pp_vote(entries[i].instance(CountingMode::Majority)));
        if (truth) (*truth)[key] = entries[i].majority;
    }
    return family;
}

}  // namespace fixtures
