#pragma once

// Super vector fields with their graded bracket, and homomorphisms from a
// Lie superalgebra given by structure constants into them.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "superflow/grassmann.hpp"
#include "superflow/report.hpp"

namespace superflow {

/// X = Σ a_i ∂/∂x_i + Σ b_j ∂/∂θ_j.
class SuperVectorField {
public:
    SuperVectorField() = default;
    explicit SuperVectorField(DomainPtr domain);
    SuperVectorField(DomainPtr domain, std::vector<SuperFunction> even_coeffs, std::vector<SuperFunction> odd_coeffs);

    /// ∂/∂c for a coordinate c of the domain.
    static SuperVectorField coordinate(DomainPtr domain, std::string_view name);

    const DomainPtr& domain() const { return domain_; }
    const SuperFunction& even_coeff(int i) const { return even_[static_cast<std::size_t>(i)]; }
    const SuperFunction& odd_coeff(int j) const { return odd_[static_cast<std::size_t>(j)]; }
    /// Coefficient on the k-th coordinate, even coordinates first. Equals
    /// the field applied to that coordinate function.
    const SuperFunction& coeff(int k) const;
    const SuperFunction& coeff(std::string_view name) const;
    void set_coeff(std::string_view name, SuperFunction f);
    int coordinate_count() const { return static_cast<int>(even_.size() + odd_.size()); }

    /// Parity when homogeneous, nullopt for mixed fields. The zero field
    /// reports even.
    std::optional<Parity> parity() const;
    bool is_homogeneous(Parity p) const;
    SuperVectorField part(Parity p) const;
    bool is_zero() const;

    SuperVectorField& operator+=(const SuperVectorField& o);
    SuperVectorField& operator-=(const SuperVectorField& o);
    friend SuperVectorField operator+(SuperVectorField a, const SuperVectorField& b) { return a += b; }
    friend SuperVectorField operator-(SuperVectorField a, const SuperVectorField& b) { return a -= b; }
    /// Left multiplication f·X.
    friend SuperVectorField operator*(const SuperFunction& f, const SuperVectorField& X);
    friend SuperVectorField operator*(cplx s, const SuperVectorField& X);

    /// `(coef) d/dx + ...`; readable back by parse_vector_field.
    std::string to_string() const;

private:
    DomainPtr domain_;
    std::vector<SuperFunction> even_;
    std::vector<SuperFunction> odd_;
};

/// X(f) = Σ a_i ∂f/∂x_i + Σ b_j ∂f/∂θ_j, coefficients multiplied from the left.
SuperFunction apply(const SuperVectorField& X, const SuperFunction& f);

/// [X,Y] = XY − (−1)^{|X||Y|} YX, computed on homogeneous parts.
SuperVectorField bracket(const SuperVectorField& X, const SuperVectorField& Y);

/// Underlying classical field on the purely even domain; odd fields reduce to 0.
SuperVectorField reduced_field(const SuperVectorField& X);

/// Reads `Σ <superfunction> d/d<coord>` (a lone `0` is the zero field).
SuperVectorField parse_vector_field(std::string_view text, const DomainPtr& domain);

/// Coefficientwise comparison under the superfunction equality policy.
EqualityResult compare(const SuperVectorField& X, const SuperVectorField& Y, const EqualityPolicy& policy = {});

// Lie superalgebras --------------------------------------------------------------

struct BasisElement {
    std::string name;
    Parity parity = Parity::even;
};

class LieSuperAlgebra {
public:
    LieSuperAlgebra() = default;
    explicit LieSuperAlgebra(std::vector<BasisElement> basis, Field field = Field::real);

    int dim() const { return static_cast<int>(basis_.size()); }
    const std::vector<BasisElement>& basis() const { return basis_; }
    const BasisElement& element(int i) const { return basis_[static_cast<std::size_t>(i)]; }
    std::optional<int> index_of(std::string_view name) const;
    Field field() const { return field_; }
    /// Indices of the even basis elements, in order.
    std::vector<int> even_indices() const;
    std::vector<int> odd_indices() const;

    /// c_{ij}^k with [e_i, e_j] = Σ_k c_{ij}^k e_k.
    cplx structure_constant(int i, int j, int k) const;
    /// Sets [e_i, e_j] only.
    void set_bracket(int i, int j, const std::vector<cplx>& coeffs);
    /// Sets [e_i, e_j] and [e_j, e_i] = −(−1)^{|i||j|}[e_i, e_j].
    void set_bracket_graded(int i, int j, const std::vector<cplx>& coeffs);

private:
    std::size_t idx(int i, int j, int k) const;

    std::vector<BasisElement> basis_;
    std::vector<cplx> constants_;
    Field field_ = Field::real;
};

/// Lie superalgebra axioms over all basis pairs and triples.
CheckReport check_algebra(const LieSuperAlgebra& g, double tolerance = 1e-12);

/// λ: 𝔤 → Vec(𝓜) given on basis elements.
struct InfinitesimalAction {
    LieSuperAlgebra algebra;
    DomainPtr domain;
    std::vector<SuperVectorField> images;

    /// Throws ParityError if some image parity differs from its basis element.
    void validate() const;
    /// λ(Σ c_k e_k).
    SuperVectorField image_of(const std::vector<cplx>& coeffs) const;
};

/// Compares λ([e_i,e_j]) with [λ(e_i), λ(e_j)] for all basis pairs.
CheckReport check_homomorphism(const InfinitesimalAction& lambda, const EqualityPolicy& policy = {});

/// Grid points where some reduced λ(e), e an even basis element, is nonzero.
std::vector<std::vector<cplx>> support_sample(const InfinitesimalAction& lambda,
                                              const std::vector<std::vector<cplx>>& grid, double threshold = 1e-12);

}  // namespace superflow
