#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ratproof::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;

enum class Format { Structured, Csv };

struct RunConfig {
    std::string command;
    std::vector<std::string> instances;
    std::string protocol;
    std::uint64_t seed = 0;
    std::uint64_t max_enum = std::uint64_t{1} << 24;
    /// Circuit input bound for run, audit size bound for audit-parity,
    /// largest circuit for gen-corpus. Each command has its own default.
    std::optional<unsigned> max_n;
    std::optional<unsigned> n;
    std::optional<unsigned> width;
    std::optional<std::string> alpha;
    bool expect_failure = false;
    std::string out;
    Format format = Format::Structured;
    unsigned workers = 1;
    std::size_t count = 20;

    std::string mode = "parity";
    std::string base = "brier-count";
    std::string machine = "equal-answers";
    std::string comparator = "one-bit";
    unsigned y_bits = 1;
    bool sabotage = false;
    bool timing = false;
};

struct CommandResult {
    int exit_code = kExitOk;
    /// Report or corpus text.
    std::string output;
    /// Messages meant for stderr.
    std::string diagnostics;
};

CommandResult cmd_run(const RunConfig& cfg);
CommandResult cmd_audit_parity(const RunConfig& cfg);
CommandResult cmd_gen_corpus(const RunConfig& cfg);
CommandResult cmd_report(const RunConfig& cfg);

/// Parses arguments (without the program name), runs the subcommand and,
/// with --out, writes the output to that file. Exceptions never escape:
/// they become exit code 2 with a diagnostic.
CommandResult run_cli(const std::vector<std::string>& args, bool* wrote_file = nullptr);

}  // namespace ratproof::cli
