#pragma once

// Distributions spanned by super vector fields and a pointwise involutivity
// test.

#include <string>
#include <vector>

#include "superflow/fields.hpp"
#include "superflow/report.hpp"

namespace superflow {

/// Generators of a distribution. For `from_action` the generators are
/// e_k + λ(e_k) on G×𝓜 and the G-directions are carried as constant frame
/// coordinates with brackets given by the structure constants.
struct DistributionSpec {
    enum class Origin { raw, action };

    Origin origin = Origin::raw;
    std::vector<SuperVectorField> generators;
    std::vector<std::string> names;
    /// Set for Origin::action.
    LieSuperAlgebra algebra;

    /// Raw list; inhomogeneous fields are split into their even and odd
    /// parts (named `X.even`, `X.odd`).
    static DistributionSpec raw(const std::vector<SuperVectorField>& fields, std::vector<std::string> names = {});
    static DistributionSpec from_action(const InfinitesimalAction& lambda);

    const DomainPtr& domain() const { return generators.front().domain(); }
};

struct InvolutivityOptions {
    int samples = 100;
    std::uint64_t seed = 0;
    double tolerance = 1e-8;
};

/// For each pair of generators (and each odd generator with itself), tests
/// whether the bracket lies pointwise in the left span of the generators
/// with Grassmann-number coefficients, by least squares over the flattened
/// coefficients. One check per bracket; the worst residual is reported with
/// the bracket and the point as witness.
CheckReport involutivity_check(const DistributionSpec& spec, const InvolutivityOptions& options = {});

/// Rank at `point` of the body matrix (θ-free coefficients, frame
/// coordinates included) of the generators.
int pointwise_rank(const DistributionSpec& spec, std::span<const cplx> point);

}  // namespace superflow
