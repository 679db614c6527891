#pragma once

// Truncated jets with Grassmann coefficients.
//
// A Jet is an element of C[δ_1..δ_m]/(degree > J) ⊗ Λ(generators): a
// polynomial in the displacements δ = x − p of total degree at most J whose
// coefficients are Grassmann numbers. A JetSuperMap collects one Jet per
// coordinate of a superdomain and stands for the germ at p of a pullback φ*.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "superflow/fields.hpp"
#include "superflow/grassmann.hpp"

namespace superflow {

/// Monomials δ^a with |a| ≤ order, ordered by degree then lexicographically,
/// so the table for a lower order is a prefix of the table for a higher one.
class MonomialTable {
public:
    static std::shared_ptr<const MonomialTable> get(int variables, int order);

    int variables() const { return m_; }
    int order() const { return order_; }
    int count() const { return static_cast<int>(exps_.size()); }
    const std::vector<int>& exponents(int mono) const { return exps_[static_cast<std::size_t>(mono)]; }
    int degree(int mono) const { return degree_[static_cast<std::size_t>(mono)]; }
    /// Index of δ^a, or −1 when |a| exceeds the order.
    int index_of(std::span<const int> exps) const;
    /// Index of δ^{a+b}, or −1 when it exceeds the order.
    int product(int a, int b) const { return product_[static_cast<std::size_t>(a * count() + b)]; }
    /// a! for the exponent vector of `mono`.
    double factorial(int mono) const { return factorial_[static_cast<std::size_t>(mono)]; }

    MonomialTable(int variables, int order);

private:
    int m_;
    int order_;
    std::vector<std::vector<int>> exps_;
    std::vector<int> degree_;
    std::vector<int> product_;
    std::vector<double> factorial_;
};

using MonomialTablePtr = std::shared_ptr<const MonomialTable>;

/// Shape of a jet: monomial table plus the number of Grassmann generators.
class JetLayout {
public:
    static std::shared_ptr<const JetLayout> get(int even_dim, int order, int generators);

    int even_dim() const { return monomials_->variables(); }
    int order() const { return monomials_->order(); }
    int generators() const { return generators_; }
    const MonomialTable& monomials() const { return *monomials_; }
    int monomial_count() const { return monomials_->count(); }
    std::size_t grassmann_size() const { return std::size_t{1} << generators_; }
    std::size_t size() const { return static_cast<std::size_t>(monomial_count()) * grassmann_size(); }

    JetLayout(int even_dim, int order, int generators);

private:
    MonomialTablePtr monomials_;
    int generators_;
};

using LayoutPtr = std::shared_ptr<const JetLayout>;

class Jet {
public:
    Jet() = default;
    explicit Jet(LayoutPtr layout);

    static Jet constant(LayoutPtr layout, cplx v);
    /// δ_i.
    static Jet displacement(LayoutPtr layout, int i);
    /// The k-th Grassmann generator.
    static Jet generator(LayoutPtr layout, int k);

    const LayoutPtr& layout() const { return layout_; }
    cplx at(int mono, MultiIndex I) const { return c_[index(mono, I)]; }
    cplx& at(int mono, MultiIndex I) { return c_[index(mono, I)]; }
    std::span<const cplx> coefficients() const { return c_; }
    std::span<cplx> coefficients() { return c_; }
    /// Coefficient of δ^0 θ^∅.
    cplx scalar_part() const { return c_.empty() ? cplx{} : c_[0]; }
    /// Largest coefficient modulus.
    double norm() const;
    bool is_finite() const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(cplx s);
    /// this += s·o.
    void axpy(cplx s, const Jet& o);
    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, cplx s) { return a *= s; }
    /// Graded product truncated at the layout order.
    friend Jet operator*(const Jet& a, const Jet& b);

    /// Same generators, monomials above `layout->order()` dropped.
    Jet truncated(const LayoutPtr& layout) const;
    /// Generator k becomes generator k + shift of `layout`; monomials above
    /// the target order are dropped.
    Jet embedded(const LayoutPtr& layout, int shift) const;
    /// ∂/∂δ_i; the top degree becomes zero.
    Jet even_derivative(int i) const;
    /// Left derivative with respect to generator k.
    Jet odd_derivative(int k) const;
    /// Coefficient of δ^0 as a Grassmann number.
    GrassmannNumber value() const;

    /// Polynomial in `dnames` with Grassmann monomials in `gnames`.
    std::string to_string(std::span<const std::string> dnames, std::span<const std::string> gnames) const;

private:
    std::size_t index(int mono, MultiIndex I) const {
        return (static_cast<std::size_t>(mono) << layout_->generators()) | I.bits();
    }

    LayoutPtr layout_;
    std::vector<cplx> c_;
};

/// Germ of a pullback φ* at a base point p of a superdomain 𝓜. Components
/// are φ*(c) for each coordinate c (even first), expanded in δ = x − p and in
/// the generators: odd parameters first, then the odd coordinates of 𝓜.
struct JetSuperMap {
    DomainPtr domain;
    std::vector<std::string> parameters;
    std::vector<cplx> base;
    std::vector<Jet> components;

    static JetSuperMap identity(DomainPtr domain, std::vector<cplx> base, int order,
                                std::vector<std::string> parameters = {});

    const LayoutPtr& layout() const { return components.front().layout(); }
    int order() const { return layout()->order(); }
    int parameter_count() const { return static_cast<int>(parameters.size()); }
    std::vector<std::string> generator_names() const;
    /// Scalar parts of the even components: φ̃(p).
    std::vector<cplx> image_point() const;
    JetSuperMap truncated(int order) const;
    /// Largest coefficient difference; layouts must agree.
    double distance(const JetSuperMap& o) const;
    /// Distance to the identity germ at the same base point.
    double distance_to_identity() const;
    /// One line per component, e.g. `z -> 1 + dz + 6.283i*theta1*theta2`,
    /// where `dz` stands for z − base.
    std::string to_string() const;
};

/// Substitution data for pulling functions back along a jet map: the image
/// point q, displacement images N_i = φ*(x_i) − q_i (no scalar part) and
/// images of the source odd coordinates. Powers N^a and products of odd
/// images are precomputed.
class JetPullback {
public:
    /// `power_order` bounds the Taylor order used for source functions.
    JetPullback(LayoutPtr layout, std::vector<cplx> point, std::vector<Jet> displacements,
                std::vector<Jet> odd_images, int power_order);
    /// Pullback along `map` of functions on map.domain. A negative
    /// `power_order` selects required_order(map.layout()).
    explicit JetPullback(const JetSuperMap& map, int power_order = -1);

    const LayoutPtr& layout() const { return layout_; }
    const std::vector<cplx>& point() const { return point_; }
    int power_order() const { return powers_table_->order(); }
    const MonomialTable& power_table() const { return *powers_table_; }
    const Jet& power(int mono) const { return powers_[static_cast<std::size_t>(mono)]; }
    int odd_count() const { return static_cast<int>(odd_images_.size()); }
    const Jet& odd_product(MultiIndex I) const { return odd_products_[I.bits()]; }

    /// Taylor order needed so that nilpotent parts of N contribute fully:
    /// J + ⌊generators/2⌋.
    static int required_order(const LayoutPtr& layout) { return layout->order() + layout->generators() / 2; }

private:
    LayoutPtr layout_;
    std::vector<cplx> point_;
    MonomialTablePtr powers_table_;
    std::vector<Jet> powers_;
    std::vector<Jet> odd_images_;
    std::vector<Jet> odd_products_;
};

/// A superfunction prepared for repeated pullbacks: Taylor coefficient
/// expressions ∂^a f_I / a! for |a| ≤ order.
class CompiledSuperFunction {
public:
    CompiledSuperFunction() = default;
    CompiledSuperFunction(const SuperFunction& f, int order);

    int order() const { return order_; }
    bool is_zero() const { return terms_.empty(); }
    int odd_count() const { return domain_ ? domain_->odd_dim() : 0; }
    /// f(q + N, η) expanded in the pullback layout. Throws DomainError when a
    /// coefficient cannot be evaluated at q.
    Jet pullback(const JetPullback& ctx) const;

private:
    struct Term {
        MultiIndex index;
        std::vector<std::pair<int, Expr>> taylor;
    };
    DomainPtr domain_;
    int order_ = 0;
    std::vector<Term> terms_;
};

/// Jet polynomial pulled back along `ctx` (the polynomial's generators map to
/// the odd images of the context).
Jet pullback(const Jet& f, const JetPullback& ctx);

/// Pullback germ of outer∘inner. `outer` must be expanded at the image point
/// of `inner`; generators of the result are outer parameters, inner
/// parameters, then the odd coordinates. The order is min(J_inner,
/// J_outer − ⌊g_inner/2⌋) with g_inner the inner generator count.
JetSuperMap compose(const JetSuperMap& outer, const JetSuperMap& inner);

/// Replaces the parameters of `map` by odd jets on `layout` (whose generators
/// are new parameters followed by the odd coordinates of the domain).
JetSuperMap substitute_parameters(const JetSuperMap& map, std::vector<std::string> new_parameters,
                                  const std::vector<Jet>& images, const LayoutPtr& layout);

/// Taylor jet at `base` of a superfunction whose odd coordinates become the
/// trailing generators of `layout`.
Jet taylor_jet(const CompiledSuperFunction& f, std::span<const cplx> base, const LayoutPtr& layout);

/// A vector field with coefficients prepared for pullbacks.
struct CompiledField {
    CompiledField() = default;
    CompiledField(const SuperVectorField& X, int order);
    std::vector<CompiledSuperFunction> coefficients;
};

}  // namespace superflow
