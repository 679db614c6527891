#pragma once

// Transport along paths in G given by right-logarithmic-derivative data,
// holonomy germs of loops, and the checks built on them.

#include <optional>
#include <string>
#include <vector>

#include "superflow/dynamics.hpp"
#include "superflow/fields.hpp"
#include "superflow/jet.hpp"
#include "superflow/report.hpp"

namespace superflow {

/// ξ(t) on [t0, t1]: one expression in the variable `t` per basis element
/// of 𝔤 (the odd ones must vanish).
struct PathSegment {
    std::vector<Expr> xi;
    double t0 = 0.0;
    double t1 = 1.0;
};

struct GroupPath {
    std::string name;
    std::vector<PathSegment> segments;
    std::vector<cplx> base;
    double closure_tolerance = 1e-6;
    /// Winding number declared by the author of the loop, for reports only.
    std::optional<int> winding_note;

    /// Throws unless the segments tile a time interval with one coefficient per
    /// basis element, zero on odd directions.
    void validate(const LieSuperAlgebra& algebra) const;
    double start() const { return segments.front().t0; }
    double end() const { return segments.back().t1; }
};

/// `first` followed by `second`, with the times of `second` shifted.
GroupPath concatenate(const GroupPath& first, const GroupPath& second);

/// The loop that stays at `base` (ξ ≡ 0 on [0,1]).
GroupPath constant_loop(const LieSuperAlgebra& algebra, std::vector<cplx> base);

/// Time-ordered flow of Σ_k ξ_k(t)·λ(e_k) from the identity germ at the
/// path's base point, of order cfg.jet_order.
JetSuperMap transport(const InfinitesimalAction& lambda, const GroupPath& path, const FlowConfig& cfg);

/// The body of a transported germ does not return to the identity.
class NotALoopError : public Error {
public:
    NotALoopError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

struct HolonomyGerm {
    std::string loop;
    /// Germ at the base point of order J.
    JetSuperMap germ;
    /// Germ of order J + 1 used for the truncation check and compositions.
    JetSuperMap full;
    /// Largest deviation of the θ-free part of the even components from the
    /// identity jet.
    double return_residual = 0.0;
    std::vector<std::string> warnings;

    double deviation_from_identity() const { return germ.distance_to_identity(); }
    bool is_trivial(double tolerance = 1e-6) const { return deviation_from_identity() <= tolerance; }
};

/// Holonomy germ of order cfg.jet_order. Throws NotALoopError when the
/// return residual exceeds the loop's closure tolerance. A warning is
/// recorded when the order J + 1 terms differ from the identity.
HolonomyGerm holonomy(const InfinitesimalAction& lambda, const GroupPath& loop, const FlowConfig& cfg);

/// Compares the germs of every member of `family` with the first one.
CheckReport homotopy_invariance_check(const InfinitesimalAction& lambda, const std::vector<GroupPath>& family,
                                      const FlowConfig& cfg, double tolerance = 1e-5);

/// germ(γ₁·γ₂) against the composition of germ(γ₂) after germ(γ₁), and the
/// constant loop at the common base against the identity.
CheckReport homomorphism_check(const InfinitesimalAction& lambda, const GroupPath& first, const GroupPath& second,
                               const FlowConfig& cfg, double tolerance = 1e-5);

struct EmbeddingOptions {
    int samples = 50;
    std::uint64_t seed = 0;
    double step = 1e-3;
    int jet_order = 2;
    double tolerance = 1e-6;
};

/// On ℂ^{1|2} with X_α = (1 + α(z)θ₁θ₂)∂/∂z and ι*(z, θ₁, θ₂) =
/// (z − A(z)θ₁θ₂, θ₁, θ₂): compares ι∘φ^{X_α}_t with τ_t∘ι (τ_t the
/// translation by t) at sampled (t, z). Throws when A′ ≠ α.
CheckReport verify_example_embedding(const Expr& alpha, const Expr& primitive, const EmbeddingOptions& options = {});

}  // namespace superflow
