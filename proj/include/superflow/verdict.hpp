#pragma once

// Globalizability verdicts from holonomy germs and user-asserted flags.

#include <string>
#include <vector>

#include "superflow/holonomy.hpp"

namespace superflow {

enum class VerdictKind { globalizable, not_globalizable, global, inconclusive };

std::string to_string(VerdictKind k);

/// Analytic facts the user asserts about the scenario.
struct VerdictFlags {
    bool reduced_action_global = false;
    bool group_simply_connected = false;
    bool support_relatively_compact = false;
    bool generators_with_global_flows = false;
};

struct VerdictInput {
    /// Germs for a declared generating set of loops per leaf.
    std::vector<HolonomyGerm> germs;
    VerdictFlags flags;
    double triviality_tolerance = 1e-6;
};

struct Verdict {
    VerdictKind kind = VerdictKind::inconclusive;
    /// Rule label, "(a)" to "(d)" followed by a short description.
    std::string rule;
    /// Condition of the characterization the rule relies on.
    std::string condition;
    /// Loop responsible for (a), empty otherwise.
    std::string witness;
};

/// The flags assert a global action while some germ is nontrivial.
class ContradictionError : public Error {
public:
    using Error::Error;
};

/// Rules in order: (a) a nontrivial germ gives NotGlobalizable; (b) all
/// germs trivial and a global reduced action give Globalizable, or Global
/// when G is also simply connected; (c) a simply connected G with relatively
/// compact support or generators with global flows gives Global;
/// (d) otherwise Inconclusive.
Verdict globalizability_verdict(const VerdictInput& input);

}  // namespace superflow
