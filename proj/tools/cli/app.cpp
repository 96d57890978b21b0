#include "app.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "ratproof/compose.hpp"
#include "ratproof/corpus.hpp"
#include "ratproof/elicit.hpp"
#include "ratproof/errors.hpp"
#include "ratproof/parity_lab.hpp"
#include "ratproof/protocols.hpp"
#include "ratproof/solver.hpp"
#include "ratproof/tournament.hpp"

namespace ratproof::cli {

namespace {

using json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr std::size_t kWitnessLimit = 8;
constexpr std::size_t kPolynomialJsonLimit = 1024;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (char c : text) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

std::string csv_value(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return csv_field(v.get<std::string>());
    return csv_field(v.dump());
}

std::string csv_table(const std::vector<std::string>& columns, const std::vector<json>& rows) {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            out += (i ? "," : "") + (row.contains(columns[i]) ? csv_value(row[columns[i]]) : std::string());
        out += '\n';
    }
    return out;
}

json bit_strings(const std::vector<Word>& messages, unsigned width) {
    json list = json::array();
    for (Word m : messages) list.push_back(BitString::of(m, width).to_string());
    return list;
}

SolveOptions solve_options(const RunConfig& cfg) {
    SolveOptions options;
    options.max_enumeration = cfg.max_enum;
    options.workers = cfg.workers;
    return options;
}

CountingMode brier_mode(const RunConfig& cfg) {
    if (cfg.mode == "parity") return CountingMode::Parity;
    if (cfg.mode == "count") return CountingMode::Count;
    throw UsageError("--mode must be parity or count for brier-count");
}

BitString truth_for(const CorpusEntry& e, CountingMode mode) {
    switch (mode) {
        case CountingMode::Majority: return BitString::bit(e.majority);
        case CountingMode::Parity: return BitString::bit(e.parity);
        case CountingMode::Count: return BitString::of(e.count, e.circuit.n_inputs() + 1);
    }
    return {};
}

/// Pays 1 - R instead of R: a rational prover now aims at the wrong answer.
ProtocolSpec sabotaged(ProtocolSpec spec) {
    spec.kind = "sabotaged(" + spec.kind + ")";
    spec.reward = [inner = spec.reward](std::span<const Word> m, std::span<const Word> r) {
        return Dyadic(1) - inner(m, r);
    };
    return spec;
}

struct Outcome {
    json report;
    bool verified = true;
};

/// Fields shared by every solver-backed report; the caller appends
/// kind-specific checks and then `verified`.
Outcome solver_outcome(const ProtocolSpec& spec, const InfoSetTable& table, const BitString& truth,
                       std::uint64_t sample_seed) {
    Outcome o;
    json& j = o.report;
    const InfoSetNode& root = table.root();
    const VerifyReport verdict = verify_protocol(spec, table, truth);
    const std::optional<BitString> decision = rational_output(spec, table);
    const Gap exact = delta_exact(table);
    const bool delta_ok = spec.declared_delta <= exact;

    j["input"] = spec.input;
    j["kind"] = spec.kind;
    j["truth"] = truth.to_string();
    j["root_value"] = root.value.to_string();
    j["root_argmax"] = bit_strings(root.argmax, spec.msg_bits[0]);
    j["decision"] = decision ? json(decision->to_string()) : json(nullptr);
    j["delta_exact"] = exact.to_string();
    j["declared_delta"] = spec.declared_delta.to_string();
    j["delta_scope"] = "rational-reachable";
    j["delta_ok"] = delta_ok;
    j["wrapper_depth"] = spec.wrapper_depth;
    if (spec.wrapper_depth > 1)
        j["nesting_note"] = "more than one wrapper level: declared_delta is a resolution bound, compare with delta_exact";
    j["node_count"] = table.size();
    j["rational_branches"] = verdict.branches;
    json witnesses = json::array();
    for (std::size_t i = 0; i < verdict.violations.size() && i < kWitnessLimit; ++i)
        witnesses.push_back({{"transcript", verdict.violations[i].transcript.to_string()},
                             {"output", verdict.violations[i].output.to_string()}});
    j["violation_count"] = verdict.violations.size();
    j["violations"] = std::move(witnesses);

    const Interaction play = run_interaction(spec, argmax_strategy(spec, table), sample_seed);
    j["sample"] = {{"seed", sample_seed},
                   {"transcript", play.transcript.to_string()},
                   {"reward", play.reward.to_string()},
                   {"completed", play.completed}};
    o.verified = verdict.pass && delta_ok;
    return o;
}

Outcome solve_and_report(const ProtocolSpec& spec, const BitString& truth, const RunConfig& cfg,
                         std::uint64_t sample_seed) {
    const InfoSetTable table = solve_rational(spec, solve_options(cfg));
    return solver_outcome(spec, table, truth, sample_seed);
}

std::vector<std::vector<const CorpusEntry*>> groups_of(const std::vector<CorpusEntry>& entries, std::size_t size,
                                                      const std::string& what) {
    if (entries.size() % size != 0)
        throw UsageError(what + " takes instances in groups of " + std::to_string(size) + "; got " +
                         std::to_string(entries.size()) + " circuits");
    std::vector<std::vector<const CorpusEntry*>> groups;
    for (std::size_t i = 0; i < entries.size(); i += size) {
        std::vector<const CorpusEntry*> g;
        for (std::size_t j = 0; j < size; ++j) g.push_back(&entries[i + j]);
        groups.push_back(std::move(g));
    }
    return groups;
}

/// The entry on `n` inputs, the extra ones ignored; the acceptance fraction
/// and hence the majority are unchanged.
CorpusEntry padded(const CorpusEntry& e, unsigned n) {
    if (e.circuit.n_inputs() == n) return e;
    return make_entry(e.name, BooleanCircuit(n, e.circuit.gates(), e.circuit.output()), e.shifted);
}

/// Majority-vote protocols for a group, padded to a common input count so
/// that they share one shape.
std::vector<ProtocolSpec> padded_votes(const std::vector<const CorpusEntry*>& group) {
    unsigned n = 0;
    for (const CorpusEntry* e : group) n = std::max(n, e->circuit.n_inputs());
    std::vector<ProtocolSpec> votes;
    for (const CorpusEntry* e : group) votes.push_back(make_pp_vote(padded(*e, n).instance(CountingMode::Majority)));
    return votes;
}

ProtocolSpec oracle_round_for(const std::vector<const CorpusEntry*>& group, const RunConfig& cfg, bool& truth) {
    const std::vector<ProtocolSpec> inner = padded_votes(group);
    std::size_t yes = 0;
    for (const CorpusEntry* e : group) yes += e->majority;
    ProtocolSpec spec = pp_oracle_round(inner, solve_options(cfg));
    truth = 2 * yes > group.size();
    return spec;
}

std::string decision_bits(const std::vector<const CorpusEntry*>& group) {
    std::string bits;
    for (const CorpusEntry* e : group) bits += e->majority ? '1' : '0';
    return bits;
}

bool same_tables(const InfoSetTable& a, const InfoSetTable& b, std::size_t& compared) {
    if (a.size() != b.size()) return false;
    for (const auto& [key, node] : a.nodes()) {
        const InfoSetNode* other = b.find(key);
        if (!other || other->value != node.value || other->argmax != node.argmax) return false;
        ++compared;
    }
    return true;
}

std::vector<Outcome> run_protocol(const RunConfig& cfg, const std::vector<CorpusEntry>& entries) {
    const std::string& kind = cfg.protocol;
    if (cfg.sabotage && kind != "pp-vote" && kind != "compose")
        throw UsageError("--sabotage applies to pp-vote and compose only");
    const SolveOptions options = solve_options(cfg);
    std::vector<Outcome> outcomes;
    auto seed_for = [&](std::size_t index) { return cfg.seed + index; };

    if (kind == "pp-vote") {
        for (const auto& e : entries) {
            ProtocolSpec spec = make_pp_vote(e.instance(CountingMode::Majority));
            if (cfg.sabotage) spec = sabotaged(std::move(spec));
            outcomes.push_back(solve_and_report(spec, BitString::bit(e.majority), cfg, seed_for(outcomes.size())));
        }
    } else if (kind == "brier-count") {
        const CountingMode mode = brier_mode(cfg);
        for (const auto& e : entries)
            outcomes.push_back(solve_and_report(make_brier_count(e.instance(mode)), truth_for(e, mode), cfg,
                                                seed_for(outcomes.size())));
    } else if (kind == "one-bit") {
        for (const auto& e : entries) {
            ProtocolSpec base;
            BitString truth;
            if (cfg.base == "pp-vote") {
                base = make_pp_vote(e.instance(CountingMode::Majority));
                truth = BitString::bit(e.majority);
            } else if (cfg.base == "brier-count") {
                base = make_brier_count(e.instance(brier_mode(cfg)));
                truth = truth_for(e, brier_mode(cfg));
            } else {
                throw UsageError("--base must be pp-vote or brier-count");
            }
            const ProtocolSpec spec = one_bit_transform(base);
            const InfoSetTable before = solve_rational(base, options);
            const InfoSetTable after = solve_rational(spec, options);
            Outcome o = solver_outcome(spec, after, truth, seed_for(outcomes.size()));
            std::size_t compared = 0;
            const bool preserved = same_tables(before, after, compared);
            o.report["argmax_preserved"] = preserved;
            o.report["compared_nodes"] = compared;
            o.verified = o.verified && preserved;
            outcomes.push_back(std::move(o));
        }
    } else if (kind == "pp-oracle-round") {
        if (cfg.y_bits == 0 || cfg.y_bits > 4) throw UsageError("--y-bits must be in 1..4");
        for (const auto& group : groups_of(entries, std::size_t{1} << cfg.y_bits, kind)) {
            bool truth = false;
            const ProtocolSpec spec = oracle_round_for(group, cfg, truth);
            Outcome o = solve_and_report(spec, BitString::bit(truth), cfg, seed_for(outcomes.size()));
            o.report["inner_decisions"] = decision_bits(group);
            outcomes.push_back(std::move(o));
        }
    } else if (kind == "elicit") {
        if (cfg.y_bits == 0 || cfg.y_bits > 4) throw UsageError("--y-bits must be in 1..4");
        for (const auto& group : groups_of(entries, std::size_t{1} << cfg.y_bits, kind)) {
            bool truth = false;
            const ProtocolSpec base = oracle_round_for(group, cfg, truth);
            const InfoSetTable table = solve_rational(base, options);
            Outcome o = solver_outcome(base, table, BitString::bit(truth), seed_for(outcomes.size()));
            json elicited = json::array();
            bool all_hold = true;
            for (const auto& [key, node] : table.nodes()) {
                if (node.round != 1 || !node.rational_reachable) continue;
                const ElicitedProtocol ep = elicit_expectation(base, transcript_of(base, key), options);
                const ElicitCertificate cert = certify_elicitation(ep, options);
                const bool matches = cert.expected == node.value;
                all_hold = all_hold && cert.holds && matches;
                elicited.push_back({{"prefix", ep.prefix.to_string()},
                                    {"expected", cert.expected.to_string()},
                                    {"node_value", node.value.to_string()},
                                    {"grid_bits", ep.grid_bits},
                                    {"best_value", cert.best_value.to_string()},
                                    {"certificate", cert.holds}});
            }
            o.report["kind"] = "elicit(" + base.kind + ")";
            o.report["elicited"] = std::move(elicited);
            o.verified = o.verified && all_hold;
            outcomes.push_back(std::move(o));
        }
    } else if (kind == "compose") {
        const OracleMachine machine = named_machine(cfg.machine);
        const std::vector<std::string> queries = machine_query_names(cfg.machine);
        for (const auto& group : groups_of(entries, queries.size(), kind)) {
            std::map<std::string, ProtocolSpec> family;
            std::map<std::string, bool> truth;
            std::map<std::string, InfoSetTable> inner_tables;
            std::string input;
            std::vector<ProtocolSpec> votes = padded_votes(group);
            for (std::size_t i = 0; i < group.size(); ++i) {
                ProtocolSpec inner = std::move(votes[i]);
                if (cfg.sabotage && i == 0) inner = sabotaged(std::move(inner));
                inner_tables.emplace(queries[i], solve_rational(inner, options));
                family.emplace(queries[i], std::move(inner));
                truth[queries[i]] = group[i]->majority;
                input += (i ? "+" : "") + group[i]->name;
            }
            const ComposedProtocol cp = compose_with_machine(machine, family, input);
            const InfoSetTable table = solve_rational(cp.spec, options);
            const MachineRun verdict = run_machine(machine, [&](const std::string& q) { return truth.at(q); });
            Outcome o = solver_outcome(cp.spec, table, BitString::bit(verdict.accept), seed_for(outcomes.size()));
            const CompositionCheck check = check_composition(cp, table, truth, inner_tables);
            json problems = json::array();
            for (std::size_t i = 0; i < check.violations.size() && i < kWitnessLimit; ++i)
                problems.push_back(check.violations[i]);
            o.report["machine"] = machine.name;
            o.report["inner_decisions"] = decision_bits(group);
            o.report["composition"] = {{"pass", check.pass},
                                       {"branches", check.branches},
                                       {"violation_count", check.violations.size()},
                                       {"violations", std::move(problems)}};
            o.verified = o.verified && check.pass;
            outcomes.push_back(std::move(o));
        }
    } else if (kind == "knockout") {
        const CountingMode mode = cfg.mode == "parity" ? CountingMode::Count : brier_mode(cfg);
        for (const auto& e : entries) {
            const ProtocolSpec spec = make_brier_count(e.instance(mode));
            const InfoSetTable table = solve_rational(spec, options);
            MessageComparator comparator;
            if (cfg.comparator == "one-bit")
                comparator = one_bit_comparator(spec);
            else if (cfg.comparator == "exact")
                comparator = exact_comparator(spec, options);
            else
                throw UsageError("--comparator must be one-bit or exact");
            const KnockoutResult result = knockout_argmax(spec, comparator);
            Outcome o = solver_outcome(spec, table, truth_for(e, mode), seed_for(outcomes.size()));
            const bool in_argmax = table.root().is_argmax(result.winner);
            o.report["comparator"] = cfg.comparator;
            o.report["winner"] = BitString::of(result.winner, spec.msg_bits[0]).to_string();
            o.report["matches"] = result.trace.size();
            o.report["winner_in_argmax"] = in_argmax;
            o.verified = o.verified && in_argmax;
            outcomes.push_back(std::move(o));
        }
    } else if (kind == "compare-exp") {
        const unsigned max_inputs = cfg.max_n.value_or(kDefaultEnumerationInputs);
        for (const auto& pair : groups_of(entries, 2, kind)) {
            const CorpusEntry& a = *pair[0];
            const CorpusEntry& b = *pair[1];
            const TruthTable ta = a.circuit.truth_table(max_inputs);
            const TruthTable tb = b.circuit.truth_table(max_inputs);
            const Dyadic forward = compare_expectations_prob(ta, tb);
            const Dyadic backward = compare_expectations_prob(tb, ta);
            const Dyadic ea(mpz_class(static_cast<unsigned long>(a.count)), a.circuit.n_inputs());
            const Dyadic eb(mpz_class(static_cast<unsigned long>(b.count)), b.circuit.n_inputs());
            const Dyadic expected = Dyadic::pow2_neg(1) + (eb - ea) * Dyadic::pow2_neg(1);
            Outcome o;
            o.report["input"] = a.name + "+" + b.name;
            o.report["kind"] = "compare-exp";
            o.report["expectations"] = {ea.to_string(), eb.to_string()};
            o.report["probability"] = forward.to_string();
            o.report["expected"] = expected.to_string();
            o.report["reverse"] = backward.to_string();
            o.verified = forward == expected && forward + backward == Dyadic(1);
            outcomes.push_back(std::move(o));
        }
    } else {
        throw UsageError("unknown protocol kind '" + kind + "'");
    }
    return outcomes;
}

std::vector<CorpusEntry> load_instances(const RunConfig& cfg) {
    if (cfg.instances.empty()) throw UsageError("no --instances given");
    std::vector<CorpusEntry> entries;
    const unsigned max_inputs = cfg.max_n.value_or(kDefaultEnumerationInputs);
    for (const auto& path : cfg.instances) {
        const std::string text = read_file(path);
        // A bare circuit file takes its name from the file.
        const bool bare = text.find("truth:") == std::string::npos;
        const std::string stem = std::filesystem::path(path).stem().string();
        try {
            std::vector<CorpusEntry> read = read_corpus(text, max_inputs);
            for (std::size_t i = 0; i < read.size(); ++i) {
                if (bare) read[i].name = read.size() == 1 ? stem : stem + "#" + std::to_string(i);
                entries.push_back(std::move(read[i]));
            }
        } catch (const ParseError& e) {
            throw ParseError(0, path + ": " + e.what());
        }
    }
    if (entries.empty()) throw UsageError("instance files hold no circuits");
    return entries;
}

std::string error_label(const std::exception& e) {
    if (dynamic_cast<const TieNotAllowed*>(&e)) return "TieNotAllowed";
    if (dynamic_cast<const BoundExceeded*>(&e)) return "BoundExceeded";
    if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
    if (dynamic_cast<const PreconditionError*>(&e)) return "PreconditionError";
    if (dynamic_cast<const ProtocolError*>(&e)) return "ProtocolError";
    if (dynamic_cast<const InconsistentTranscript*>(&e)) return "InconsistentTranscript";
    if (dynamic_cast<const json::exception*>(&e)) return "ParseError";
    if (dynamic_cast<const UsageError*>(&e)) return "UsageError";
    return "Error";
}

template <class Body>
CommandResult guarded(Body body) {
    try {
        return body();
    } catch (const std::exception& e) {
        CommandResult r;
        r.exit_code = kExitUsage;
        r.diagnostics = "error [" + error_label(e) + "]: " + e.what() + "\n";
        return r;
    }
}

}  // namespace

CommandResult cmd_run(const RunConfig& cfg) {
    return guarded([&] {
        const std::vector<CorpusEntry> entries = load_instances(cfg);
        std::vector<Outcome> outcomes;
        const auto start = std::chrono::steady_clock::now();
        outcomes = run_protocol(cfg, entries);
        const double elapsed =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

        std::size_t verified = 0;
        std::vector<json> rows;
        json instances = json::array();
        for (auto& o : outcomes) {
            o.report["verified"] = o.verified;
            verified += o.verified;
            rows.push_back(o.report);
            instances.push_back(std::move(o.report));
        }
        const bool pass = verified == outcomes.size();

        CommandResult result;
        result.exit_code = pass ? kExitOk : kExitViolation;
        if (cfg.format == Format::Csv) {
            const std::vector<std::string> columns =
                cfg.protocol == "compare-exp"
                    ? std::vector<std::string>{"input", "kind", "probability", "expected", "reverse", "verified"}
                    : std::vector<std::string>{"input",       "kind",           "truth",      "decision",
                                               "root_value",  "delta_exact",    "declared_delta",
                                               "node_count",  "verified"};
            result.output = csv_table(columns, rows);
        } else {
            json report;
            report["command"] = "run";
            report["protocol"] = cfg.protocol;
            report["seed"] = cfg.seed;
            report["instances"] = std::move(instances);
            report["summary"] = {{"total", outcomes.size()}, {"verified", verified}};
            if (cfg.timing) report["wall_time_ms"] = elapsed;
            report["pass"] = pass;
            result.output = report.dump(2) + "\n";
        }
        if (!pass) {
            result.diagnostics = "verification failed on " + std::to_string(outcomes.size() - verified) + " of " +
                                 std::to_string(outcomes.size()) + " instances\n";
            for (const auto& row : rows) {
                if (row["verified"].get<bool>()) continue;
                if (row.contains("violations") && !row["violations"].empty())
                    result.diagnostics += "witness on " + row["input"].get<std::string>() + ": " +
                                          row["violations"][0]["transcript"].get<std::string>() + "\n";
                break;
            }
        }
        return result;
    });
}

CommandResult cmd_audit_parity(const RunConfig& cfg) {
    return guarded([&] {
        if (!cfg.n) throw UsageError("audit-parity needs --n");
        if (cfg.width && cfg.alpha) throw UsageError("give --width or --alpha, not both");
        const unsigned n = *cfg.n;
        AuditOptions options;
        options.workers = cfg.workers;
        options.max_n = cfg.max_n.value_or(16);
        if (n > options.max_n)
            throw BoundExceeded("n = " + std::to_string(n) + " exceeds the audit bound " +
                                std::to_string(options.max_n));

        std::optional<unsigned> width = cfg.width;
        std::optional<Dyadic> alpha;
        if (cfg.alpha) {
            alpha = Dyadic::parse(*cfg.alpha);
            width = alpha_width(*alpha, n);
        }
        const SamplerProtocol sp = brier_sampler(n, width);
        const AuditReport audit = parity_audit(sp, options);
        const bool found = !audit.failures.empty();
        const bool pass = audit.mechanics_ok() && found == cfg.expect_failure;

        CommandResult result;
        result.exit_code = pass ? kExitOk : kExitViolation;
        if (cfg.format == Format::Csv) {
            std::vector<json> polys;
            for (const auto& [m, q] : audit.polynomials) {
                std::string coeffs;
                for (const auto& c : q.coeffs()) coeffs += (coeffs.empty() ? "" : " ") + c.to_string();
                polys.push_back({{"m", BitString::of(m, sp.msg_bits).to_string()}, {"coefficients", coeffs}});
            }
            std::vector<json> grid;
            std::size_t next_failure = 0;
            for (std::size_t k = 0; k < audit.argmax_by_k.size(); ++k) {
                std::string argmax;
                for (Word m : audit.argmax_by_k[k])
                    argmax += (argmax.empty() ? "" : " ") + BitString::of(m, sp.msg_bits).to_string();
                bool correct = true;
                if (next_failure < audit.failures.size() && audit.failures[next_failure].k == k) {
                    correct = false;
                    ++next_failure;
                }
                grid.push_back({{"k", k}, {"argmax", argmax}, {"parity", k & 1u}, {"correct", correct}});
            }
            result.output = csv_table({"m", "coefficients"}, polys) + "\n" +
                            csv_table({"k", "argmax", "parity", "correct"}, grid);
        } else {
            json report;
            report["command"] = "audit-parity";
            report["protocol"] = audit.protocol;
            report["n"] = audit.n;
            report["msg_bits"] = audit.msg_bits;
            report["d"] = audit.d;
            if (alpha) {
                report["alpha"] = alpha->to_string();
                if (*alpha >= Dyadic::pow2_neg(1))
                    report["alpha_note"] = "alpha >= 1/2 lies outside the sublinear regime; no failure is predicted";
            }
            report["scope"] =
                "exhaustive audit of this sampler family at this n; it exhibits the parity obstruction "
                "constructively and does not quantify over all reward functions";
            report["expect_failure"] = cfg.expect_failure;
            json failures = json::array();
            for (const auto& f : audit.failures)
                failures.push_back({{"k", f.k},
                                    {"parity", f.k & 1u},
                                    {"argmax", bit_strings(f.argmax, sp.msg_bits)},
                                    {"wrong_output", f.wrong_output ? 1 : 0}});
            report["failure_count"] = audit.failures.size();
            report["failures"] = std::move(failures);
            report["mechanics"] = {{"degree_bound", audit.d},
                                   {"max_degree", audit.max_degree},
                                   {"grid_mismatches", audit.grid_mismatches},
                                   {"pairs_checked", audit.pairs_checked},
                                   {"max_alternations", audit.max_alternations},
                                   {"alternation_violations", audit.alternation_violations},
                                   {"ok", audit.mechanics_ok()}};
            if (audit.polynomials.size() <= kPolynomialJsonLimit) {
                json polys = json::object();
                for (const auto& [m, q] : audit.polynomials) {
                    json coeffs = json::array();
                    for (const auto& c : q.coeffs()) coeffs.push_back(c.to_string());
                    polys[BitString::of(m, sp.msg_bits).to_string()] = std::move(coeffs);
                }
                report["polynomials"] = std::move(polys);
            } else {
                report["polynomials_omitted"] = audit.polynomials.size();
            }
            report["outcome"] = found ? "failures found" : "no failures";
            report["pass"] = pass;
            result.output = report.dump(2) + "\n";
        }
        if (!pass)
            result.diagnostics = !audit.mechanics_ok()      ? "audit mechanics check failed\n"
                                 : cfg.expect_failure ? "expected a parity failure, found none\n"
                                                      : "unexpected parity failures: " +
                                                            std::to_string(audit.failures.size()) + "\n";
        return result;
    });
}

CommandResult cmd_gen_corpus(const RunConfig& cfg) {
    return guarded([&] {
        const unsigned max_n = cfg.max_n.value_or(6);
        if (cfg.count == 0) throw UsageError("--count must be positive");
        CommandResult result;
        result.output = write_corpus(generate_corpus(cfg.seed, cfg.count, max_n));
        return result;
    });
}

CommandResult cmd_report(const RunConfig& cfg) {
    return guarded([&] {
        if (cfg.instances.empty()) throw UsageError("report needs at least one input report");
        json reports = json::array();
        std::vector<json> values;
        std::size_t passed = 0;
        for (const auto& path : cfg.instances) {
            json doc;
            try {
                doc = json::parse(read_file(path));
            } catch (const json::parse_error& e) {
                throw ParseError(0, path + ": not a structured report (" + e.what() + ")");
            }
            if (!doc.is_object() || !doc.contains("command") || !doc["command"].is_string() ||
                !doc.contains("pass") || !doc["pass"].is_boolean())
                throw ParseError(0, path + ": missing command or pass field");
            const std::string command = doc["command"].get<std::string>();
            const bool pass = doc["pass"].get<bool>();
            passed += pass;
            json entry = {{"path", path}, {"command", command}, {"protocol", doc.value("protocol", "")}};
            if (command == "run") {
                if (!doc.contains("instances") || !doc["instances"].is_array())
                    throw ParseError(0, path + ": run report without instances");
                std::size_t verified = 0;
                for (const auto& inst : doc["instances"]) {
                    if (!inst.is_object()) throw ParseError(0, path + ": malformed instance entry");
                    const bool ok = inst.value("verified", false);
                    verified += ok;
                    values.push_back({{"report", path},
                                      {"input", inst.value("input", "")},
                                      {"root_value", inst.contains("root_value") ? inst["root_value"] : json()},
                                      {"decision", inst.contains("decision") ? inst["decision"] : json()},
                                      {"verified", ok}});
                }
                entry["instances"] = doc["instances"].size();
                entry["verified"] = verified;
            } else if (command == "audit-parity") {
                entry["n"] = doc.value("n", 0);
                entry["failure_count"] = doc.value("failure_count", 0);
            } else {
                throw ParseError(0, path + ": unknown report command '" + command + "'");
            }
            entry["pass"] = pass;
            reports.push_back(std::move(entry));
        }
        const std::size_t total = cfg.instances.size();
        const std::string summary = std::to_string(passed) + "/" + std::to_string(total) + " pass";

        CommandResult result;
        result.exit_code = passed == total ? kExitOk : kExitViolation;
        if (cfg.format == Format::Csv) {
            result.output = "# " + summary + "\n" +
                            csv_table({"report", "input", "root_value", "decision", "verified"}, values);
        } else {
            json out;
            out["command"] = "report";
            out["summary"] = summary;
            out["passed"] = passed;
            out["total"] = total;
            out["reports"] = std::move(reports);
            out["values"] = values;
            out["pass"] = passed == total;
            result.output = out.dump(2) + "\n";
        }
        result.diagnostics = summary + "\n";
        return result;
    });
}

CommandResult run_cli(const std::vector<std::string>& args, bool* wrote_file) {
    if (wrote_file) *wrote_file = false;
    RunConfig cfg;
    std::string format = "structured";
    unsigned max_n = 0;

    CLI::App app{"Simulator and verification lab for rational interactive proofs", "ratproof"};
    app.require_subcommand(1);

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.out, "Write the output to this file");
        sub->add_option("--format", format, "structured or csv")->check(CLI::IsMember({"structured", "csv"}));
        sub->add_option("--seed", cfg.seed, "Seed for every sampled choice");
    };

    CLI::App* run = app.add_subcommand("run", "Solve and verify a protocol on circuit instances");
    common(run);
    run->add_option("--protocol", cfg.protocol, "Protocol kind")
        ->required()
        ->check(CLI::IsMember(
            {"pp-vote", "brier-count", "compose", "pp-oracle-round", "one-bit", "elicit", "knockout", "compare-exp"}));
    run->add_option("--instances", cfg.instances, "Corpus or circuit files")->required();
    run->add_option("--max-enum", cfg.max_enum, "Largest game tree to enumerate")->check(CLI::PositiveNumber);
    run->add_option("--max-n", max_n, "Largest circuit input count")->check(CLI::PositiveNumber);
    run->add_option("--workers", cfg.workers, "Solver threads")->check(CLI::PositiveNumber);
    run->add_option("--mode", cfg.mode, "brier-count output: parity or count");
    run->add_option("--base", cfg.base, "one-bit base protocol: pp-vote or brier-count");
    run->add_option("--machine", cfg.machine, "compose machine: equal-answers or adaptive-3");
    run->add_option("--comparator", cfg.comparator, "knockout comparator: one-bit or exact");
    run->add_option("--y-bits", cfg.y_bits, "Index bits of pp-oracle-round and elicit");
    run->add_flag("--sabotage", cfg.sabotage, "Invert a reward to force a verification failure");
    run->add_flag("--timing", cfg.timing, "Add wall time to the report");

    CLI::App* audit = app.add_subcommand("audit-parity", "Exhaustive parity audit of the quadratic-score sampler");
    common(audit);
    audit->add_option("--n", cfg.n, "Sample size exponent")->required();
    audit->add_option("--width", cfg.width, "Claim width in bits")->check(CLI::PositiveNumber);
    audit->add_option("--alpha", cfg.alpha, "Budget fraction p/2^q; width is ceil(alpha n) - 1");
    audit->add_option("--max-n", max_n, "Audit size bound")->check(CLI::PositiveNumber);
    audit->add_option("--workers", cfg.workers, "Audit threads")->check(CLI::PositiveNumber);
    audit->add_flag("--expect-failure", cfg.expect_failure, "Succeed only if some k is decided wrongly");

    CLI::App* gen = app.add_subcommand("gen-corpus", "Write a seeded circuit corpus with brute-force truth");
    gen->add_option("--seed", cfg.seed, "Corpus seed")->required();
    gen->add_option("--count", cfg.count, "Number of circuits")->check(CLI::PositiveNumber);
    gen->add_option("--max-n", max_n, "Largest input count before tie shifting")->check(CLI::PositiveNumber);
    gen->add_option("--out", cfg.out, "Write the corpus to this file");

    CLI::App* report = app.add_subcommand("report", "Merge run and audit reports into one summary");
    report->add_option("--instances", cfg.instances, "Report files");
    report->add_option("--out", cfg.out, "Write the summary to this file");
    report->add_option("--format", format, "structured or csv")->check(CLI::IsMember({"structured", "csv"}));

    std::vector<std::string> argv_text{"ratproof"};
    argv_text.insert(argv_text.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_text) argv.push_back(a.data());

    CommandResult result;
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        std::ostringstream out, err;
        const int code = app.exit(e, out, err);
        result.exit_code = code == 0 ? kExitOk : kExitUsage;
        result.output = out.str();
        result.diagnostics = err.str();
        return result;
    }
    cfg.format = format == "csv" ? Format::Csv : Format::Structured;
    if (max_n) cfg.max_n = max_n;

    if (run->parsed()) {
        cfg.command = "run";
        result = cmd_run(cfg);
    } else if (audit->parsed()) {
        cfg.command = "audit-parity";
        result = cmd_audit_parity(cfg);
    } else if (gen->parsed()) {
        cfg.command = "gen-corpus";
        result = cmd_gen_corpus(cfg);
    } else {
        cfg.command = "report";
        result = cmd_report(cfg);
    }

    if (!cfg.out.empty() && result.exit_code != kExitUsage) {
        std::ofstream file(cfg.out, std::ios::binary);
        if (!(file << result.output)) {
            result.exit_code = kExitUsage;
            result.diagnostics += "error [UsageError]: cannot write '" + cfg.out + "'\n";
        } else if (wrote_file) {
            *wrote_file = true;
        }
    }
    return result;
}

}  // namespace ratproof::cli
