#pragma once

// Superfunctions on superdomains, indexed by Grassmann multi-indices, with
// their pointwise values as Grassmann numbers.

#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "superflow/expr.hpp"
#include "superflow/scalar.hpp"

namespace superflow {

enum class Parity { even = 0, odd = 1 };

inline Parity operator+(Parity a, Parity b) {
    return static_cast<Parity>(static_cast<int>(a) ^ static_cast<int>(b));
}
inline int koszul_sign(Parity a, Parity b) {
    return (a == Parity::odd && b == Parity::odd) ? -1 : 1;
}
std::string to_string(Parity p);

/// Strictly increasing set of odd-generator indices, stored as a bit mask.
class MultiIndex {
public:
    constexpr MultiIndex() = default;
    constexpr explicit MultiIndex(std::uint32_t bits) : bits_(bits) {}
    static MultiIndex single(int j) { return MultiIndex(1u << j); }
    static MultiIndex from_indices(std::span<const int> idx);

    constexpr std::uint32_t bits() const { return bits_; }
    int size() const { return std::popcount(bits_); }
    bool empty() const { return bits_ == 0; }
    Parity parity() const { return (size() & 1) ? Parity::odd : Parity::even; }
    bool contains(int j) const { return (bits_ >> j) & 1u; }
    std::vector<int> indices() const;

    friend constexpr bool operator==(MultiIndex, MultiIndex) = default;
    friend constexpr auto operator<=>(MultiIndex a, MultiIndex b) { return a.bits_ <=> b.bits_; }

private:
    std::uint32_t bits_ = 0;
};

/// Sign of θ^a θ^b = sign · θ^{a∪b} for disjoint a, b.
int merge_sign(MultiIndex a, MultiIndex b);

/// Sign picked up by the left derivative ∂/∂θ_j acting on θ^I (j ∈ I).
inline int left_derivative_sign(MultiIndex I, int j) {
    return (std::popcount(I.bits() & ((1u << j) - 1u)) & 1) ? -1 : 1;
}

/// ℝ^{m|n} or ℂ^{m|n}, possibly with an excluded locus `x=v, ...`. The locus
/// only steers sampling; evaluation fails where a coefficient is singular.
class SuperDomain {
public:
    SuperDomain(std::vector<std::string> even, std::vector<std::string> odd, Field field,
                std::string excluded_locus = {});

    const std::vector<std::string>& even() const { return even_; }
    const std::vector<std::string>& odd() const { return odd_; }
    int even_dim() const { return static_cast<int>(even_.size()); }
    int odd_dim() const { return static_cast<int>(odd_.size()); }
    Field field() const { return field_; }
    const std::string& excluded_locus() const { return excluded_; }

    std::optional<int> even_index(std::string_view name) const;
    std::optional<int> odd_index(std::string_view name) const;
    /// Even then odd names.
    std::vector<std::string> all_coordinates() const;
    /// Smallest distance from an even point to the excluded hyperplanes
    /// `x_i = v` named in the excluded locus (infinity when there are none).
    double distance_to_excluded(std::span<const cplx> point) const;
    /// Same distance for the straight segment from `a` to `b`.
    double distance_to_excluded(std::span<const cplx> a, std::span<const cplx> b) const;

    friend bool operator==(const SuperDomain& a, const SuperDomain& b) {
        return a.even_ == b.even_ && a.odd_ == b.odd_ && a.field_ == b.field_;
    }

private:
    std::vector<std::string> even_;
    std::vector<std::string> odd_;
    Field field_;
    std::string excluded_;
    std::vector<std::pair<int, cplx>> excluded_points_;
};

using DomainPtr = std::shared_ptr<const SuperDomain>;

DomainPtr make_domain(std::vector<std::string> even, std::vector<std::string> odd, Field field,
                      std::string excluded_locus = {});

/// Numeric element of the Grassmann algebra on n generators; dense storage
/// indexed by multi-index bits.
class GrassmannNumber {
public:
    GrassmannNumber() = default;
    explicit GrassmannNumber(int generators);

    int generators() const { return n_; }
    cplx operator[](MultiIndex I) const { return coeffs_[I.bits()]; }
    cplx& operator[](MultiIndex I) { return coeffs_[I.bits()]; }
    cplx body() const { return coeffs_.empty() ? cplx{} : coeffs_[0]; }
    GrassmannNumber soul() const;
    /// Largest coefficient modulus.
    double norm() const;
    std::span<const cplx> coefficients() const { return coeffs_; }

    GrassmannNumber& operator+=(const GrassmannNumber& o);
    GrassmannNumber& operator-=(const GrassmannNumber& o);
    GrassmannNumber& operator*=(cplx s);
    friend GrassmannNumber operator+(GrassmannNumber a, const GrassmannNumber& b) { return a += b; }
    friend GrassmannNumber operator-(GrassmannNumber a, const GrassmannNumber& b) { return a -= b; }
    friend GrassmannNumber operator*(GrassmannNumber a, cplx s) { return a *= s; }
    friend GrassmannNumber operator*(const GrassmannNumber& a, const GrassmannNumber& b);

    /// Human form using the given generator names.
    std::string to_string(std::span<const std::string> names) const;

private:
    int n_ = 0;
    std::vector<cplx> coeffs_;
};

/// Section of the structure sheaf on a superdomain: Σ_I f_I(x) θ^I.
class SuperFunction {
public:
    SuperFunction() = default;
    explicit SuperFunction(DomainPtr domain);
    SuperFunction(DomainPtr domain, Expr body);

    static SuperFunction constant(DomainPtr domain, cplx v);
    static SuperFunction even_coordinate(DomainPtr domain, std::string_view name);
    static SuperFunction odd_coordinate(DomainPtr domain, int j);
    static SuperFunction monomial(DomainPtr domain, MultiIndex I, Expr coefficient);

    const DomainPtr& domain() const { return domain_; }
    const std::map<MultiIndex, Expr>& terms() const { return terms_; }
    Expr coefficient(MultiIndex I) const;
    /// Adds `e` to the coefficient of θ^I.
    void add_term(MultiIndex I, const Expr& e);

    bool is_zero() const { return terms_.empty(); }
    Expr body() const { return coefficient(MultiIndex()); }
    SuperFunction soul() const;
    /// Parity if homogeneous; zero is homogeneous of both parities and
    /// reports even.
    std::optional<Parity> parity() const;
    bool is_homogeneous(Parity p) const;
    SuperFunction part(Parity p) const;

    SuperFunction& operator+=(const SuperFunction& o);
    SuperFunction& operator-=(const SuperFunction& o);
    friend SuperFunction operator+(SuperFunction a, const SuperFunction& b) { return a += b; }
    friend SuperFunction operator-(SuperFunction a, const SuperFunction& b) { return a -= b; }
    friend SuperFunction operator-(const SuperFunction& a);
    friend SuperFunction operator*(const Expr& s, const SuperFunction& f);

    /// `c0 + c1*theta1*theta2` style printout.
    std::string to_string() const;

private:
    DomainPtr domain_;
    std::map<MultiIndex, Expr> terms_;
};

/// Graded product with Koszul signs from the multi-index merge.
SuperFunction gr_mul(const SuperFunction& f, const SuperFunction& g);
SuperFunction operator*(const SuperFunction& f, const SuperFunction& g);

/// Left derivative ∂/∂θ_j.
SuperFunction odd_partial(const SuperFunction& f, int j);
/// ∂/∂x_i applied coefficientwise.
SuperFunction even_partial(const SuperFunction& f, int i);

/// Images of the source coordinates, all on one target domain. Source
/// coordinates without an entry map to the target coordinate of the same
/// name.
using Substitution = std::map<std::string, SuperFunction>;

/// Pullback f ↦ f(x ↦ x̃ + ν, θ ↦ η) by the terminating nilpotent Taylor
/// expansion around the bodies x̃. Throws ParityError when an image has the
/// wrong parity.
SuperFunction substitute(const SuperFunction& f, const Substitution& images, const DomainPtr& target);

/// g(images) for an expression in the named variables whose images are
/// even superfunctions on `target`.
SuperFunction compose_expr(const Expr& g, std::span<const std::string> vars,
                           std::span<const SuperFunction> images, const DomainPtr& target);

/// Reads an expression whose identifiers may be odd coordinates and expands
/// it in the superalgebra; division and function heads use the nilpotent
/// Taylor expansion about the body.
SuperFunction lift(const Expr& e, const DomainPtr& domain);
SuperFunction parse_superfunction(std::string_view text, const DomainPtr& domain);

/// Evaluates every coefficient at an even point.
GrassmannNumber eval_superfunction(const SuperFunction& f, std::span<const cplx> even_point);
GrassmannNumber eval_superfunction(const SuperFunction& f, const std::map<std::string, Scalar>& point);

/// Moves a superfunction onto a domain with extra odd coordinates placed
/// before (`odd_offset`) the original ones. Even names must agree.
SuperFunction embed(const SuperFunction& f, const DomainPtr& target, int odd_offset);

// Equality policy -----------------------------------------------------------

/// Deterministic quasi-random sample points (Halton sequence) on the even
/// part of a domain, in the box [-2, 2] per real direction.
std::vector<std::vector<cplx>> sample_points(const SuperDomain& domain, int count, std::uint64_t seed);

struct EqualityResult {
    bool equal = true;
    double residual = 0.0;
    /// Sample point of the largest deviation (empty for exact comparisons).
    std::vector<cplx> witness;
    bool exact = false;
};

struct EqualityPolicy {
    int samples = 100;
    double tolerance = 1e-9;
    std::uint64_t seed = 0;
};

/// Exact coefficient comparison when both sides are polynomial, otherwise
/// evaluation at sample points (points where evaluation fails are skipped).
EqualityResult compare(const SuperFunction& a, const SuperFunction& b, const EqualityPolicy& policy = {});

}  // namespace superflow
