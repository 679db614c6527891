#pragma once

// Flows of even super vector fields as jet-coefficient ODEs, exponentials of
// commuting odd fields, and local actions built from commuting families.

#include <optional>
#include <string>
#include <vector>

#include "superflow/fields.hpp"
#include "superflow/jet.hpp"
#include "superflow/report.hpp"

namespace superflow {

struct FlowConfig {
    double step = 1e-3;
    /// Jet order J of the returned germs, 0 ≤ J ≤ 4.
    int jet_order = 0;

    void validate() const;
};

/// Evaluation left the domain of a coefficient along a flow.
class DomainExitError : public DomainError {
public:
    DomainExitError(const std::string& what, std::string subexpression, cplx time);
    /// Flow time at which the failing evaluation happened.
    cplx time() const noexcept { return time_; }

private:
    cplx time_;
};

/// A pair/commutation precondition failed; the witness names the residual.
class PreconditionError : public Error {
public:
    PreconditionError(const std::string& what, std::string witness);
    const std::string& witness() const noexcept { return witness_; }

private:
    std::string witness_;
};

/// One piece of a time-dependent field Σ_k ξ_k(t)·X_k with t ∈ [t0, t1].
/// The ξ_k are expressions in the variable `t`.
struct FieldSegment {
    std::vector<SuperVectorField> fields;
    std::vector<Expr> coefficients;
    double t0 = 0.0;
    double t1 = 1.0;
};

/// Integrates d/dt ψ_t*(c) = ψ_t*(X_t(c)) by RK4 starting from `start`.
/// Each segment uses ⌈(t1 − t0)/step⌉ equal steps. The parameters of
/// `start` are carried along unchanged.
JetSuperMap integrate_segments(JetSuperMap start, const std::vector<FieldSegment>& segments, double step);

/// φ_t* of an even field at `base`, order cfg.jet_order. Complex t is
/// followed along the straight segment from 0.
JetSuperMap flow_even(const SuperVectorField& X, cplx t, std::vector<cplx> base, const FlowConfig& cfg);

/// Time-ordered flow of a piecewise field starting at the identity germ.
JetSuperMap flow_time_dependent(const std::vector<FieldSegment>& segments, std::vector<cplx> base, const FlowConfig& cfg);

/// Composite flow φ^{X_1}_{t_1}∘…∘φ^{X_m}_{t_m} starting from `start`.
JetSuperMap flow_sequence(JetSuperMap start, const std::vector<SuperVectorField>& Xs, std::span<const cplx> times,
                          double step);

/// Σ_{k≤n} (1/k!)(Σ_j τ_j Y_j)^k(c) for every coordinate c of the domain,
/// as superfunctions on the domain extended by odd parameters τ (placed
/// before the odd coordinates).
struct OddExponential {
    DomainPtr extended;
    std::vector<std::string> parameters;
    std::vector<SuperFunction> components;
};

/// Throws ParityError for a non-odd Y and PreconditionError when two of them
/// fail to super-commute.
OddExponential odd_exponential(const std::vector<SuperVectorField>& Ys, const EqualityPolicy& policy = {},
                               std::vector<std::string> parameter_names = {});

/// Pullback exp(Σσ_jY_j)* composed with exp(Στ_jY_j)*, on the domain with
/// parameters σ then τ.
std::vector<SuperFunction> compose_odd_exponentials(const OddExponential& outer, const OddExponential& inner);

/// Local ℝ^{m|n}/ℂ^{m|n}-action φ = β∘(id×α) built from pairwise
/// super-commuting even fields X_i and odd fields Y_j.
class LocalAction {
public:
    LocalAction(std::vector<SuperVectorField> Xs, std::vector<SuperVectorField> Ys, const EqualityPolicy& policy = {});

    const DomainPtr& domain() const { return domain_; }
    int even_count() const { return static_cast<int>(Xs_.size()); }
    int odd_count() const { return static_cast<int>(Ys_.size()); }
    const std::vector<SuperVectorField>& even_generators() const { return Xs_; }
    const std::vector<SuperVectorField>& odd_generators() const { return Ys_; }
    const OddExponential& exponential() const { return exp_; }

    /// Germ of φ*_{(t, τ)} at `base` of order J; the odd parameters τ are
    /// named by `parameter_names` (defaults tau1, tau2, ...).
    JetSuperMap pullback(std::span<const cplx> times, std::span<const cplx> base, int order, double step,
                         std::vector<std::string> parameter_names = {}) const;

    /// λ_φ on a parameter basis direction (even directions first): the
    /// right-hand side of the flow equation at t = 0 for even directions and
    /// the τ-linear part of the odd exponential for odd ones.
    SuperVectorField induced_infinitesimal(int direction) const;

private:
    DomainPtr domain_;
    std::vector<SuperVectorField> Xs_;
    std::vector<SuperVectorField> Ys_;
    OddExponential exp_;
};

/// A local action given in closed form: pullbacks of every coordinate of 𝓜
/// as superfunctions on the domain (t | τ, θ) with even parameters t before
/// the coordinates of 𝓜 and odd parameters τ before θ.
struct SymbolicAction {
    DomainPtr manifold;
    DomainPtr total;
    std::vector<std::string> even_parameters;
    std::vector<std::string> odd_parameters;
    std::vector<SuperFunction> pullbacks;
};

/// ∂/∂t_i or ∂/∂τ_j at the origin of the parameter space, as a field on 𝓜.
SuperVectorField induced_infinitesimal(const SymbolicAction& action, int direction);

struct ActionCheckOptions {
    int samples = 100;
    std::uint64_t seed = 0;
    int jet_order = 2;
    double step = 1e-3;
    /// Bound for the semigroup and identity deviations.
    double tolerance = 1e-6;
    /// Bound for the finite-difference derivative check (h = 1e-5).
    double derivative_tolerance = 1e-5;
    /// Largest modulus of sampled times.
    double time_scale = 0.5;
    /// Sampled base points keep this distance from the excluded locus.
    double margin = 1.0;
};

/// Compares φ_{(s+t, σ+τ)}* with the composition of φ_{(s,σ)}* and φ_{(t,τ)}*
/// at sampled (s, t, p); also checks φ_0 = id, ∂/∂t_i∘φ* = φ*∘X_i by
/// centred differences and ∂/∂τ_j∘φ* = φ*∘Y_j. When `composition` is given,
/// it supplies the outer factor of the composition.
CheckReport check_action_property(const LocalAction& action, const ActionCheckOptions& options = {},
                                  const LocalAction* composition = nullptr);

/// Compares φ^X_t∘φ^Y_s with φ^Y_s∘φ^X_t at sampled (s, t, p).
CheckReport check_flows_commute(const SuperVectorField& X, const SuperVectorField& Y,
                                const ActionCheckOptions& options = {});

/// Centred difference in t of ((φ^Y_t)_*X)(c) at `base`, compared with
/// [X,Y](c) for every coordinate c.
CheckReport pushforward_derivative_check(const SuperVectorField& X, const SuperVectorField& Y,
                                         std::vector<cplx> base, double h = 1e-3, double tolerance = 1e-5);

/// X applied to a jet of a function, with X's coefficients expanded at the
/// jet's base point. The result has the same layout; its top degree is not
/// reliable.
Jet apply_field_to_jet(const SuperVectorField& X, const Jet& f, std::span<const cplx> base);

/// Deterministic sample points of a domain at distance ≥ margin from the
/// excluded locus.
std::vector<std::vector<cplx>> admissible_points(const SuperDomain& domain, int count, std::uint64_t seed,
                                                 double margin);

}  // namespace superflow
