#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ratproof {

enum class GateKind { And, Or, Not, Xor, Const0, Const1 };

std::string_view gate_kind_name(GateKind kind);
unsigned gate_arity(GateKind kind);

/// A gate argument: either input xJ (1-based) or an earlier gate gID.
struct Operand {
    bool is_input = true;
    unsigned index = 1;

    static Operand input(unsigned j) { return {true, j}; }
    static Operand gate(unsigned id) { return {false, id}; }
    friend bool operator==(const Operand&, const Operand&) = default;
};

struct Gate {
    unsigned id = 0;
    GateKind kind = GateKind::Const0;
    std::vector<Operand> args;
    friend bool operator==(const Gate&, const Gate&) = default;
};

/// Enumeration limit for brute-force counting.
inline constexpr unsigned kDefaultEnumerationInputs = 20;

/// Packed truth table over 2^n assignments; bit a is the output on assignment a.
struct TruthTable {
    unsigned n_inputs = 0;
    std::vector<std::uint64_t> words;

    bool operator[](std::uint64_t assignment) const {
        return (words[assignment >> 6] >> (assignment & 63u)) & 1u;
    }
    std::uint64_t count() const;
    std::uint64_t size() const { return std::uint64_t{1} << n_inputs; }
};

/// Straight-line boolean circuit. Input xJ is bit J-1 of an assignment word.
///
/// Gate ids are strictly increasing and every operand names an input or an
/// earlier gate, so the gate list is already in topological order.
class BooleanCircuit {
public:
    BooleanCircuit(unsigned n_inputs, std::vector<Gate> gates, unsigned output);

    /// Parses the line-oriented text format; throws ParseError with a line number.
    static BooleanCircuit parse(std::string_view text);

    /// Canonical text: one gate per line in id order, single spaces.
    std::string serialize() const;

    unsigned n_inputs() const { return n_inputs_; }
    const std::vector<Gate>& gates() const { return gates_; }
    unsigned output() const { return output_; }

    bool evaluate(std::uint64_t assignment) const;

    /// Bit-sliced evaluation over all assignments; throws BoundExceeded past `max_inputs`.
    TruthTable truth_table(unsigned max_inputs = kDefaultEnumerationInputs) const;

    /// Same circuit followed by a NOT gate on the output.
    BooleanCircuit negated() const;

    /// Outputs on the 64 assignments (block << 6) | t, bit t of the result.
    std::uint64_t eval_block(std::uint64_t block, std::vector<std::uint64_t>& scratch) const;

    friend bool operator==(const BooleanCircuit& a, const BooleanCircuit& b) {
        return a.n_inputs_ == b.n_inputs_ && a.gates_ == b.gates_ && a.output_ == b.output_;
    }

private:
    unsigned n_inputs_;
    std::vector<Gate> gates_;
    unsigned output_;
    // Slot per gate operand: inputs occupy [0, n), gate g sits at n + position.
    std::vector<std::vector<std::uint32_t>> arg_slots_;
    std::uint32_t output_slot_ = 0;
};

/// Number of satisfying assignments, by enumeration.
std::uint64_t count_accepting(const BooleanCircuit& circuit,
                              unsigned max_inputs = kDefaultEnumerationInputs,
                              unsigned workers = 1);

enum class CountingMode { Majority, Parity, Count };

std::string_view counting_mode_name(CountingMode mode);
CountingMode parse_counting_mode(std::string_view name);

struct CountingInstance {
    BooleanCircuit circuit;
    CountingMode mode = CountingMode::Majority;
    std::string name;
};

/// Ground truth by brute force. Majority is the strict variant and throws
/// TieNotAllowed when exactly half the assignments accept.
std::uint64_t membership(const CountingInstance& instance,
                         unsigned max_inputs = kDefaultEnumerationInputs);

/// Builds a circuit on n+2 inputs whose acceptance count is
/// 3k + 2^(n-1) + 1 for an original count k. It never ties at one half and
/// accepts by strict majority exactly when the original accepted at least half.
BooleanCircuit shift_away_from_tie(const BooleanCircuit& circuit);

}  // namespace ratproof
