#include "superflow/verdict.hpp"

namespace superflow {

std::string to_string(VerdictKind k) {
    switch (k) {
        case VerdictKind::globalizable: return "Globalizable";
        case VerdictKind::not_globalizable: return "NotGlobalizable";
        case VerdictKind::global: return "Global";
        case VerdictKind::inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

Verdict globalizability_verdict(const VerdictInput& in) {
    const VerdictFlags& f = in.flags;
    const bool global_by_topology = f.group_simply_connected && (f.support_relatively_compact || f.generators_with_global_flows);
    const HolonomyGerm* nontrivial = nullptr;
    for (const HolonomyGerm& g : in.germs)
        if (!g.is_trivial(in.triviality_tolerance)) {
            nontrivial = &g;
            break;
        }
    Verdict v;
    if (nontrivial) {
        if (global_by_topology)
            throw ContradictionError("loop '" + nontrivial->loop +
                                     "' has nontrivial holonomy, yet the flags assert a global action");
        v.kind = VerdictKind::not_globalizable;
        v.rule = "(a) holonomy free fails";
        v.condition = "every loop in a leaf must have trivial holonomy";
        v.witness = "loop " + nontrivial->loop + " deviates from the identity by " +
                    format_cplx(nontrivial->deviation_from_identity());
        return v;
    }
    if (f.reduced_action_global) {
        if (f.group_simply_connected) {
            v.kind = VerdictKind::global;
            v.rule = "(b) holonomy free, reduced action global, G simply connected";
            v.condition = "the manifold is its own unique globalization";
        } else {
            v.kind = VerdictKind::globalizable;
            v.rule = "(b) holonomy free and reduced action global";
            v.condition = "holonomy free on the declared loops with a global reduced action";
        }
        return v;
    }
    if (global_by_topology) {
        v.kind = VerdictKind::global;
        if (f.support_relatively_compact) {
            v.rule = "(c) G simply connected, support relatively compact";
            v.condition = "an action with relatively compact support globalizes to the manifold itself";
        } else {
            v.rule = "(c) G simply connected, generators with global flows";
            v.condition = "generators with global flows integrate to a global action";
        }
        return v;
    }
    v.rule = "(d) no rule applies";
    v.condition = "the supplied flags and loops establish no hypothesis";
    return v;
}

}  // namespace superflow
