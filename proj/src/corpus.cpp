#include "ratproof/corpus.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include "ratproof/errors.hpp"

namespace ratproof {

namespace {

std::string entry_name(std::size_t index) {
    std::string digits = std::to_string(index);
    return "c" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

bool parse_bit(std::string_view v, bool& out) {
    if (v == "0" || v == "1") {
        out = v == "1";
        return true;
    }
    return false;
}

}  // namespace

BooleanCircuit random_circuit(std::mt19937_64& rng, unsigned n, unsigned gate_count) {
    if (n == 0 || gate_count == 0) throw PreconditionError("random circuits need inputs and gates");
    static constexpr GateKind kKinds[] = {GateKind::And, GateKind::Or, GateKind::Xor, GateKind::Not,
                                          GateKind::And, GateKind::Or};
    std::vector<Gate> gates;
    auto pick = [&](unsigned id) {
        const std::uint64_t choices = n + (id - 1);
        const std::uint64_t c = rng() % choices;
        return c < n ? Operand::input(static_cast<unsigned>(c + 1)) : Operand::gate(static_cast<unsigned>(c - n + 1));
    };
    for (unsigned id = 1; id <= gate_count; ++id) {
        const GateKind kind = kKinds[rng() % std::size(kKinds)];
        Gate g{id, kind, {}};
        for (unsigned a = 0; a < gate_arity(kind); ++a) g.args.push_back(pick(id));
        gates.push_back(std::move(g));
    }
    return BooleanCircuit(n, std::move(gates), gate_count);
}

CorpusEntry make_entry(std::string name, BooleanCircuit circuit, bool shifted) {
    const std::uint64_t count = count_accepting(circuit);
    const std::uint64_t total = std::uint64_t{1} << circuit.n_inputs();
    return CorpusEntry{std::move(name), std::move(circuit), count, 2 * count > total, (count & 1u) != 0, shifted};
}

std::vector<CorpusEntry> generate_corpus(std::uint64_t seed, std::size_t count, unsigned max_n) {
    if (max_n == 0) throw PreconditionError("corpus needs max_n >= 1");
    if (max_n + 2 > kDefaultEnumerationInputs) throw BoundExceeded("corpus max_n leaves no room for the tie shift");
    std::mt19937_64 rng(seed);
    std::vector<CorpusEntry> out;
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned n = 1 + static_cast<unsigned>(rng() % max_n);
        const unsigned gates = 1 + static_cast<unsigned>(rng() % (3 * n));
        BooleanCircuit c = random_circuit(rng, n, gates);
        CorpusEntry e = make_entry(entry_name(i), c);
        if (2 * e.count == (std::uint64_t{1} << n)) e = make_entry(entry_name(i), shift_away_from_tie(c), true);
        out.push_back(std::move(e));
    }
    return out;
}

std::string write_corpus(const std::vector<CorpusEntry>& corpus) {
    std::ostringstream out;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const CorpusEntry& e = corpus[i];
        if (i) out << "---\n";
        out << "truth: name=" << e.name << " count=" << e.count << " majority=" << e.majority
            << " parity=" << e.parity << '\n';
        if (e.shifted) out << "# shifted away from a majority tie\n";
        out << e.circuit.serialize();
    }
    return out.str();
}

std::vector<CorpusEntry> read_corpus(std::string_view text, unsigned max_inputs) {
    std::vector<CorpusEntry> out;
    std::size_t line_no = 0;
    std::size_t block_start = 1;
    std::string header;
    std::size_t header_line = 0;
    std::string body;
    bool any_content = false;

    auto finish = [&] {
        if (!any_content && header.empty()) return;
        BooleanCircuit circuit = [&] {
            try {
                return BooleanCircuit::parse(body);
            } catch (const ParseError& e) {
                // Re-anchor the circuit's line number in the whole file.
                const std::size_t line = e.line() ? e.line() + block_start - 1 : block_start;
                std::string what = e.what();
                if (auto p = what.find(": "); e.line() && p != std::string::npos) what = what.substr(p + 2);
                throw ParseError(line, what);
            }
        }();
        if (circuit.n_inputs() > max_inputs)
            throw BoundExceeded("corpus circuit has " + std::to_string(circuit.n_inputs()) +
                                " inputs; enumeration bound is " + std::to_string(max_inputs));
        std::string name = entry_name(out.size());
        CorpusEntry entry = make_entry(name, std::move(circuit));
        if (!header.empty()) {
            std::istringstream fields(header.substr(6));
            std::string field;
            while (fields >> field) {
                const auto eq = field.find('=');
                if (eq == std::string::npos) throw ParseError(header_line, "bad truth field '" + field + "'");
                const std::string key = field.substr(0, eq);
                const std::string value = field.substr(eq + 1);
                bool bit = false;
                std::uint64_t number = 0;
                if (key == "name") {
                    entry.name = value;
                } else if (key == "count") {
                    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), number);
                    if (ec != std::errc() || p != value.data() + value.size())
                        throw ParseError(header_line, "bad count '" + value + "'");
                    if (number != entry.count)
                        throw ParseError(header_line, "recorded count " + value + " but the circuit accepts " +
                                                          std::to_string(entry.count));
                } else if (key == "majority" || key == "parity") {
                    if (!parse_bit(value, bit)) throw ParseError(header_line, "bad bit '" + value + "'");
                    if (bit != (key == "majority" ? entry.majority : entry.parity))
                        throw ParseError(header_line, "recorded " + key + " disagrees with enumeration");
                } else {
                    throw ParseError(header_line, "unknown truth field '" + key + "'");
                }
            }
        }
        out.push_back(std::move(entry));
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line == "---") {
            finish();
            header.clear();
            body.clear();
            any_content = false;
            block_start = line_no + 1;
            continue;
        }
        if (line.starts_with("truth:")) {
            if (any_content || !header.empty()) throw ParseError(line_no, "truth header must open its block");
            header = std::string(line);
            header_line = line_no;
            body += '\n';  // keep circuit line numbers aligned with the file
            continue;
        }
        if (line.find_first_not_of(" \t") != std::string_view::npos && line.front() != '#') any_content = true;
        body += line;
        body += '\n';
    }
    finish();
    return out;
}

}  // namespace ratproof
