#pragma once

// Command dispatch for the `superflow` tool and its report formats.

#include <optional>
#include <string>
#include <vector>

#include "superflow/report.hpp"
#include "superflow/scenario.hpp"
#include "superflow/verdict.hpp"

namespace superflow {

/// Command-line overrides; unset values fall back to the scenario's
/// `config` clause and then to per-command defaults.
struct CommandOptions {
    std::optional<std::string> loop;
    std::optional<std::string> field;
    std::optional<cplx> t;
    std::optional<std::string> base;
    std::optional<double> step;
    std::optional<int> jet_order;
    std::optional<int> samples;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> flags;
};

/// Nonzero coefficient of a germ component, keyed by displacement exponents
/// and Grassmann generator indices.
struct GermTerm {
    std::vector<int> exponents;
    std::vector<int> generators;
    cplx value;
};

struct GermReport {
    std::string loop;
    std::vector<std::string> generator_names;
    /// One entry per coordinate: name and nonzero terms.
    std::vector<std::pair<std::string, std::vector<GermTerm>>> components;
    bool trivial = false;
};

struct ConfigSnapshot {
    double step = 1e-3;
    int jet_order = 0;
    int samples = 100;
    std::uint64_t seed = 0;
};

struct CommandResult {
    std::string command;
    std::string scenario;
    CheckReport report;
    std::optional<Verdict> verdict;
    std::vector<GermReport> germs;
    /// Human-readable result lines.
    std::vector<std::string> output;
    std::vector<std::string> warnings;
    ConfigSnapshot config;
    /// 0 all checks pass or definitive verdict, 1 check failure,
    /// 3 inconclusive verdict.
    int exit_code = 0;
};

const std::vector<std::string>& command_names();

/// Runs `command` on `scenario`. Throws Error for unknown commands and for
/// inputs the command cannot use (exit code 2 at the tool level).
CommandResult run_command(const std::string& command, const Scenario& scenario, const CommandOptions& options);

/// Stable JSON: {command, scenario, status, checks, verdict?, germs?,
/// output, warnings, config}.
std::string to_json(const CommandResult& result);
std::string to_text(const CommandResult& result);

}  // namespace superflow
