#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ratproof/circuit.hpp"

namespace ratproof {

/// A circuit with brute-force ground truth.
struct CorpusEntry {
    std::string name;
    BooleanCircuit circuit;
    std::uint64_t count = 0;
    bool majority = false;
    bool parity = false;
    /// Passed through shift_away_from_tie because the raw circuit tied.
    bool shifted = false;

    CountingInstance instance(CountingMode mode) const { return {circuit, mode, name}; }
};

/// Circuit on exactly n inputs with `gates` random gates; the output is the last gate.
BooleanCircuit random_circuit(std::mt19937_64& rng, unsigned n, unsigned gates);

/// Truth fields filled in by enumeration; majority ties are left to the caller.
CorpusEntry make_entry(std::string name, BooleanCircuit circuit, bool shifted = false);

/// Deterministic corpus for a seed: `count` circuits on 1..max_n inputs.
/// Circuits that tie at one half are replaced by their shifted version (two
/// more inputs), so no entry ties.
std::vector<CorpusEntry> generate_corpus(std::uint64_t seed, std::size_t count, unsigned max_n);

/// Blocks separated by "---" lines, each starting with
/// "truth: name=NAME count=K majority=B parity=B".
std::string write_corpus(const std::vector<CorpusEntry>& corpus);

/// Reads the corpus format. A block without a truth header (a bare circuit
/// file) gets its truth by enumeration; a header that disagrees with
/// enumeration is a ParseError. Line numbers refer to the whole text.
std::vector<CorpusEntry> read_corpus(std::string_view text, unsigned max_inputs = kDefaultEnumerationInputs);

}  // namespace ratproof
