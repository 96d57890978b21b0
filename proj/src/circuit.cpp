#include "ratproof/circuit.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <future>
#include <map>
#include <optional>
#include <sstream>

#include "ratproof/errors.hpp"

namespace ratproof {

namespace {

constexpr std::uint64_t kLowInputMasks[6] = {
    0xAAAAAAAAAAAAAAAAull, 0xCCCCCCCCCCCCCCCCull, 0xF0F0F0F0F0F0F0F0ull,
    0xFF00FF00FF00FF00ull, 0xFFFF0000FFFF0000ull, 0xFFFFFFFF00000000ull,
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool parse_unsigned(std::string_view text, unsigned& out) {
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

bool parse_ref(std::string_view token, char prefix, unsigned& out) {
    return token.size() >= 2 && token[0] == prefix && parse_unsigned(token.substr(1), out) && out > 0;
}

std::string operand_text(const Operand& op) {
    return (op.is_input ? "x" : "g") + std::to_string(op.index);
}

}  // namespace

std::string_view gate_kind_name(GateKind kind) {
    switch (kind) {
        case GateKind::And: return "AND";
        case GateKind::Or: return "OR";
        case GateKind::Not: return "NOT";
        case GateKind::Xor: return "XOR";
        case GateKind::Const0: return "CONST0";
        case GateKind::Const1: return "CONST1";
    }
    return "?";
}

unsigned gate_arity(GateKind kind) {
    switch (kind) {
        case GateKind::And:
        case GateKind::Or:
        case GateKind::Xor: return 2;
        case GateKind::Not: return 1;
        case GateKind::Const0:
        case GateKind::Const1: return 0;
    }
    return 0;
}

std::uint64_t TruthTable::count() const {
    std::uint64_t total = 0;
    for (auto w : words) total += static_cast<std::uint64_t>(std::popcount(w));
    return total;
}

BooleanCircuit::BooleanCircuit(unsigned n_inputs, std::vector<Gate> gates, unsigned output)
    : n_inputs_(n_inputs), gates_(std::move(gates)), output_(output) {
    if (n_inputs_ > 63) throw PreconditionError("circuits are limited to 63 inputs");
    std::map<unsigned, std::uint32_t> slot_of;
    arg_slots_.reserve(gates_.size());
    for (std::size_t g = 0; g < gates_.size(); ++g) {
        const Gate& gate = gates_[g];
        if (gate.id == 0) throw ParseError(0, "gate ids start at g1");
        if (g > 0 && gate.id <= gates_[g - 1].id)
            throw ParseError(0, "gate g" + std::to_string(gate.id) + " is out of id order");
        if (gate.args.size() != gate_arity(gate.kind))
            throw ParseError(0, "arity error: " + std::string(gate_kind_name(gate.kind)) + " takes " +
                                    std::to_string(gate_arity(gate.kind)) + " operand(s), g" +
                                    std::to_string(gate.id) + " has " + std::to_string(gate.args.size()));
        std::vector<std::uint32_t> slots;
        for (const Operand& op : gate.args) {
            if (op.is_input) {
                if (op.index == 0 || op.index > n_inputs_)
                    throw ParseError(0, "dangling reference " + operand_text(op) + " in g" + std::to_string(gate.id));
                slots.push_back(op.index - 1);
            } else {
                auto it = slot_of.find(op.index);
                if (it == slot_of.end())
                    throw ParseError(0, "dangling reference " + operand_text(op) + " in g" + std::to_string(gate.id));
                slots.push_back(it->second);
            }
        }
        arg_slots_.push_back(std::move(slots));
        slot_of[gate.id] = static_cast<std::uint32_t>(n_inputs_ + g);
    }
    auto it = slot_of.find(output_);
    if (it == slot_of.end()) throw ParseError(0, "dangling reference g" + std::to_string(output_) + " in output");
    output_slot_ = it->second;
}

BooleanCircuit BooleanCircuit::parse(std::string_view text) {
    std::optional<unsigned> n_inputs;
    std::optional<unsigned> output;
    std::vector<Gate> gates;
    std::map<unsigned, bool> defined;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = split_ws(line);
        if (tok.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (output) throw ParseError(line_no, "content after the output line");
        if (!n_inputs) {
            unsigned n = 0;
            if (tok.size() != 2 || tok[0] != "inputs" || !parse_unsigned(tok[1], n))
                throw ParseError(line_no, "syntax error: expected 'inputs N'");
            n_inputs = n;
        } else if (tok[0] == "output") {
            unsigned id = 0;
            if (tok.size() != 2 || !parse_ref(tok[1], 'g', id))
                throw ParseError(line_no, "syntax error: expected 'output gID'");
            if (!defined.count(id)) throw ParseError(line_no, "dangling reference g" + std::to_string(id));
            output = id;
        } else {
            Gate gate;
            if (tok.size() < 3 || tok[1] != "=" || !parse_ref(tok[0], 'g', gate.id))
                throw ParseError(line_no, "syntax error: expected 'gID = KIND args'");
            static const std::map<std::string_view, GateKind> kinds = {
                {"AND", GateKind::And},       {"OR", GateKind::Or},         {"NOT", GateKind::Not},
                {"XOR", GateKind::Xor},       {"CONST0", GateKind::Const0}, {"CONST1", GateKind::Const1},
            };
            auto kind = kinds.find(tok[2]);
            if (kind == kinds.end()) throw ParseError(line_no, "syntax error: unknown gate kind '" + std::string(tok[2]) + "'");
            gate.kind = kind->second;
            if (!gates.empty() && gate.id <= gates.back().id)
                throw ParseError(line_no, "gate g" + std::to_string(gate.id) + " is out of id order");
            for (std::size_t t = 3; t < tok.size(); ++t) {
                unsigned idx = 0;
                if (parse_ref(tok[t], 'x', idx)) {
                    if (idx > *n_inputs) throw ParseError(line_no, "dangling reference " + std::string(tok[t]));
                    gate.args.push_back(Operand::input(idx));
                } else if (parse_ref(tok[t], 'g', idx)) {
                    if (!defined.count(idx)) throw ParseError(line_no, "dangling reference " + std::string(tok[t]));
                    gate.args.push_back(Operand::gate(idx));
                } else {
                    throw ParseError(line_no, "syntax error: bad operand '" + std::string(tok[t]) + "'");
                }
            }
            if (gate.args.size() != gate_arity(gate.kind))
                throw ParseError(line_no, "arity error: " + std::string(tok[2]) + " takes " +
                                              std::to_string(gate_arity(gate.kind)) + " operand(s)");
            defined[gate.id] = true;
            gates.push_back(std::move(gate));
        }
        if (end == text.size()) break;
    }
    if (!n_inputs) throw ParseError(line_no, "syntax error: missing 'inputs N'");
    if (!output) throw ParseError(line_no, "syntax error: missing 'output gID'");
    return BooleanCircuit(*n_inputs, std::move(gates), *output);
}

std::string BooleanCircuit::serialize() const {
    std::ostringstream out;
    out << "inputs " << n_inputs_ << '\n';
    for (const Gate& g : gates_) {
        out << 'g' << g.id << " = " << gate_kind_name(g.kind);
        for (const Operand& op : g.args) out << ' ' << operand_text(op);
        out << '\n';
    }
    out << "output g" << output_ << '\n';
    return out.str();
}

std::uint64_t BooleanCircuit::eval_block(std::uint64_t block, std::vector<std::uint64_t>& slots) const {
    slots.resize(n_inputs_ + gates_.size());
    for (unsigned j = 0; j < n_inputs_; ++j) {
        if (j < 6) {
            slots[j] = kLowInputMasks[j];
        } else {
            slots[j] = ((block >> (j - 6)) & 1u) ? ~std::uint64_t{0} : 0;
        }
    }
    for (std::size_t g = 0; g < gates_.size(); ++g) {
        const auto& a = arg_slots_[g];
        std::uint64_t v = 0;
        switch (gates_[g].kind) {
            case GateKind::And: v = slots[a[0]] & slots[a[1]]; break;
            case GateKind::Or: v = slots[a[0]] | slots[a[1]]; break;
            case GateKind::Xor: v = slots[a[0]] ^ slots[a[1]]; break;
            case GateKind::Not: v = ~slots[a[0]]; break;
            case GateKind::Const0: v = 0; break;
            case GateKind::Const1: v = ~std::uint64_t{0}; break;
        }
        slots[n_inputs_ + g] = v;
    }
    return slots[output_slot_];
}

bool BooleanCircuit::evaluate(std::uint64_t assignment) const {
    std::vector<bool> slots(n_inputs_ + gates_.size());
    for (unsigned j = 0; j < n_inputs_; ++j) slots[j] = (assignment >> j) & 1u;
    for (std::size_t g = 0; g < gates_.size(); ++g) {
        const auto& a = arg_slots_[g];
        bool v = false;
        switch (gates_[g].kind) {
            case GateKind::And: v = slots[a[0]] && slots[a[1]]; break;
            case GateKind::Or: v = slots[a[0]] || slots[a[1]]; break;
            case GateKind::Xor: v = slots[a[0]] != slots[a[1]]; break;
            case GateKind::Not: v = !slots[a[0]]; break;
            case GateKind::Const0: v = false; break;
            case GateKind::Const1: v = true; break;
        }
        slots[n_inputs_ + g] = v;
    }
    return slots[output_slot_];
}

TruthTable BooleanCircuit::truth_table(unsigned max_inputs) const {
    if (n_inputs_ > max_inputs)
        throw BoundExceeded("circuit has " + std::to_string(n_inputs_) + " inputs; enumeration bound is " +
                            std::to_string(max_inputs));
    TruthTable table;
    table.n_inputs = n_inputs_;
    const std::uint64_t blocks = n_inputs_ <= 6 ? 1 : (std::uint64_t{1} << (n_inputs_ - 6));
    table.words.resize(blocks);
    std::vector<std::uint64_t> slots;
    for (std::uint64_t b = 0; b < blocks; ++b) table.words[b] = eval_block(b, slots);
    if (n_inputs_ < 6) table.words[0] &= (std::uint64_t{1} << (std::uint64_t{1} << n_inputs_)) - 1;
    return table;
}

BooleanCircuit BooleanCircuit::negated() const {
    auto gates = gates_;
    const unsigned id = gates.empty() ? 1 : gates.back().id + 1;
    gates.push_back(Gate{id, GateKind::Not, {Operand::gate(output_)}});
    return BooleanCircuit(n_inputs_, std::move(gates), id);
}

std::uint64_t count_accepting(const BooleanCircuit& circuit, unsigned max_inputs, unsigned workers) {
    if (circuit.n_inputs() > max_inputs)
        throw BoundExceeded("circuit has " + std::to_string(circuit.n_inputs()) +
                            " inputs; enumeration bound is " + std::to_string(max_inputs));
    const unsigned n = circuit.n_inputs();
    if (workers <= 1 || n <= 12) return circuit.truth_table(max_inputs).count();
    // Partition on the top input bits; each worker counts a sub-cube.
    const unsigned split = std::min<unsigned>(std::bit_width(workers - 1u), n - 6);
    const std::uint64_t parts = std::uint64_t{1} << split;
    std::vector<std::future<std::uint64_t>> futures;
    for (std::uint64_t part = 0; part < parts; ++part) {
        futures.push_back(std::async(std::launch::async, [&circuit, part, split, n] {
            std::uint64_t total = 0;
            std::vector<std::uint64_t> scratch;
            const std::uint64_t per_part = std::uint64_t{1} << (n - 6 - split);
            for (std::uint64_t b = part * per_part; b < (part + 1) * per_part; ++b)
                total += static_cast<std::uint64_t>(std::popcount(circuit.eval_block(b, scratch)));
            return total;
        }));
    }
    std::uint64_t total = 0;
    for (auto& f : futures) total += f.get();
    return total;
}

std::string_view counting_mode_name(CountingMode mode) {
    switch (mode) {
        case CountingMode::Majority: return "majority";
        case CountingMode::Parity: return "parity";
        case CountingMode::Count: return "count";
    }
    return "?";
}

CountingMode parse_counting_mode(std::string_view name) {
    if (name == "majority") return CountingMode::Majority;
    if (name == "parity") return CountingMode::Parity;
    if (name == "count") return CountingMode::Count;
    throw ParseError(0, "unknown counting mode '" + std::string(name) + "'");
}

std::uint64_t membership(const CountingInstance& instance, unsigned max_inputs) {
    const std::uint64_t count = count_accepting(instance.circuit, max_inputs);
    const unsigned n = instance.circuit.n_inputs();
    switch (instance.mode) {
        case CountingMode::Majority: {
            const std::uint64_t total = std::uint64_t{1} << n;
            if (2 * count == total)
                throw TieNotAllowed("instance '" + instance.name + "' accepts exactly half of " +
                                    std::to_string(total) + " assignments");
            return 2 * count > total ? 1 : 0;
        }
        case CountingMode::Parity: return count & 1u;
        case CountingMode::Count: return count;
    }
    return 0;
}

BooleanCircuit shift_away_from_tie(const BooleanCircuit& circuit) {
    const unsigned n = circuit.n_inputs();
    if (n == 0) throw PreconditionError("tie shift needs at least one input");
    std::vector<Gate> gates = circuit.gates();
    unsigned next = gates.empty() ? 1 : gates.back().id + 1;
    auto add = [&](GateKind kind, std::vector<Operand> args) {
        gates.push_back(Gate{next, kind, std::move(args)});
        return next++;
    };
    // zero = [y == 0^n]
    unsigned any = 0;
    if (n == 1) {
        any = 0;
    } else {
        any = add(GateKind::Or, {Operand::input(1), Operand::input(2)});
        for (unsigned j = 3; j <= n; ++j) any = add(GateKind::Or, {Operand::gate(any), Operand::input(j)});
    }
    const unsigned zero = add(GateKind::Not, {n == 1 ? Operand::input(1) : Operand::gate(any)});
    // helper accepts 2^(n-1) + 1 assignments
    const unsigned helper = add(GateKind::Or, {Operand::input(1), Operand::gate(zero)});
    const unsigned sel = add(GateKind::And, {Operand::input(n + 1), Operand::input(n + 2)});
    const unsigned nsel = add(GateKind::Not, {Operand::gate(sel)});
    const unsigned left = add(GateKind::And, {Operand::gate(sel), Operand::gate(helper)});
    const unsigned right = add(GateKind::And, {Operand::gate(nsel), Operand::gate(circuit.output())});
    const unsigned out = add(GateKind::Or, {Operand::gate(left), Operand::gate(right)});
    return BooleanCircuit(n + 2, std::move(gates), out);
}

}  // namespace ratproof
