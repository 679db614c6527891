#pragma once

// Line-oriented scenario files and the built-in example scenarios.
//
//   # comment
//   scalar real|complex
//   manifold [even <names>] [odd <names>] [exclude <name>=<value>, ...]
//   algebra [<name>]
//   basis <name> parity even|odd
//   bracket [a,b] = <linear combination of basis names>
//   lambda <basis> = <vector field>
//   fields <name> = <vector field> ; <vector field> ; ...
//   loop <name> base [<coord>=<value> ...] segments [<xi>, ..., t in [a,b]] ... [winding-note <int>]
//   flags reduced_global=<bool> simply_connected=<bool> support_compact=<bool> global_flow_generators=<bool>
//   config [step=<h>] [jet=<J>] [samples=<S>] [seed=<N>]
//   primitive <expression in the even coordinate>
//
// A loop segment lists one ξ coefficient per even basis element, in the
// variable t.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "superflow/fields.hpp"
#include "superflow/holonomy.hpp"
#include "superflow/verdict.hpp"

namespace superflow {

/// Syntax or semantic error located in a scenario file.
class ScenarioError : public ParseError {
public:
    using ParseError::ParseError;
};

struct ScenarioConfig {
    std::optional<double> step;
    std::optional<int> jet_order;
    std::optional<int> samples;
    std::optional<std::uint64_t> seed;
};

struct Scenario {
    std::string name;
    Field field = Field::real;
    DomainPtr domain;
    bool has_algebra = false;
    LieSuperAlgebra algebra;
    /// Present when every basis element has a lambda image.
    std::optional<InfinitesimalAction> action;
    std::vector<std::pair<std::string, std::vector<SuperVectorField>>> field_lists;
    std::vector<GroupPath> loops;
    VerdictFlags flags;
    ScenarioConfig config;
    /// Primitive A of α for the embedding check.
    std::optional<Expr> primitive;

    const std::vector<SuperVectorField>* find_fields(std::string_view name) const;
    const GroupPath* find_loop(std::string_view name) const;
};

Scenario parse_scenario(std::string_view text, std::string name = "scenario");

/// Source text of a built-in scenario: `s1-example`, `c-example` (α = 1/z)
/// or `c-example:<alpha>` with α an expression in z.
std::optional<std::string> builtin_scenario(std::string_view name);

/// Built-in name or path of a scenario file.
Scenario load_scenario(const std::string& name_or_path);

/// Parses `k=v` items separated by commas or blanks into `flags`.
void apply_flag_assignments(VerdictFlags& flags, std::string_view text);

}  // namespace superflow
