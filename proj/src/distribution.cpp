#include "superflow/distribution.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace superflow {

namespace {

using Matrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

/// Values of a field at a point: frame coordinates then one Grassmann
/// number per coordinate of the domain.
struct PointValue {
    std::vector<GrassmannNumber> entries;
};

GrassmannNumber constant_number(int n, cplx v) {
    GrassmannNumber g(n);
    g[MultiIndex()] = v;
    return g;
}

PointValue value_at(const SuperVectorField& X, std::span<const cplx> p, const std::vector<cplx>& frame) {
    const int n = X.domain()->odd_dim();
    PointValue out;
    for (cplx f : frame) out.entries.push_back(constant_number(n, f));
    for (int k = 0; k < X.coordinate_count(); ++k) out.entries.push_back(eval_superfunction(X.coeff(k), p));
    return out;
}

std::vector<cplx> unit(int dim, int k) {
    std::vector<cplx> e(static_cast<std::size_t>(dim));
    if (dim) e[static_cast<std::size_t>(k)] = 1.0;
    return e;
}

int frame_dim(const DistributionSpec& spec) {
    return spec.origin == DistributionSpec::Origin::action ? spec.algebra.dim() : 0;
}

std::vector<PointValue> generator_values(const DistributionSpec& spec, std::span<const cplx> p) {
    std::vector<PointValue> out;
    const int d = frame_dim(spec);
    for (std::size_t k = 0; k < spec.generators.size(); ++k)
        out.push_back(value_at(spec.generators[k], p, d ? unit(d, static_cast<int>(k)) : std::vector<cplx>{}));
    return out;
}

/// Least-squares residual of target ∈ Σ_k Λ·generator_k, relative to 1 + |target|.
double membership_residual(const std::vector<PointValue>& gens, const PointValue& target, int n) {
    const std::size_t G = std::size_t{1} << n;
    const std::size_t rows = target.entries.size() * G;
    const std::size_t cols = gens.size() * G;
    Matrix A = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    Vector b(static_cast<Eigen::Index>(rows));
    double scale = 0.0;
    for (std::size_t c = 0; c < target.entries.size(); ++c)
        for (std::size_t I = 0; I < G; ++I) {
            const cplx v = target.entries[c][MultiIndex(static_cast<std::uint32_t>(I))];
            b(static_cast<Eigen::Index>(c * G + I)) = v;
            scale = std::max(scale, std::abs(v));
        }
    for (std::size_t k = 0; k < gens.size(); ++k)
        for (std::size_t J = 0; J < G; ++J) {
            GrassmannNumber e(n);
            e[MultiIndex(static_cast<std::uint32_t>(J))] = 1.0;
            for (std::size_t c = 0; c < target.entries.size(); ++c) {
                const GrassmannNumber col = e * gens[k].entries[c];
                for (std::size_t I = 0; I < G; ++I)
                    A(static_cast<Eigen::Index>(c * G + I), static_cast<Eigen::Index>(k * G + J)) =
                        col[MultiIndex(static_cast<std::uint32_t>(I))];
            }
        }
    if (cols == 0) return b.cwiseAbs().maxCoeff() / (1.0 + scale);
    const Vector x = A.completeOrthogonalDecomposition().solve(b);
    return (A * x - b).cwiseAbs().maxCoeff() / (1.0 + scale);
}

std::string point_string(std::span<const cplx> p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + format_cplx(p[i]);
    return s + ")";
}

}  // namespace

DistributionSpec DistributionSpec::raw(const std::vector<SuperVectorField>& fields, std::vector<std::string> names) {
    if (fields.empty()) throw Error("a distribution needs at least one generator");
    if (names.empty())
        for (std::size_t k = 0; k < fields.size(); ++k) names.push_back("X" + std::to_string(k + 1));
    if (names.size() != fields.size()) throw Error("one name per generator is required");
    DistributionSpec spec;
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (!(*fields[k].domain() == *fields.front().domain()))
            throw DomainMismatch("distribution generators live on different domains");
        if (fields[k].parity()) {
            spec.generators.push_back(fields[k]);
            spec.names.push_back(names[k]);
            continue;
        }
        spec.generators.push_back(fields[k].part(Parity::even));
        spec.names.push_back(names[k] + ".even");
        spec.generators.push_back(fields[k].part(Parity::odd));
        spec.names.push_back(names[k] + ".odd");
    }
    return spec;
}

DistributionSpec DistributionSpec::from_action(const InfinitesimalAction& lambda) {
    lambda.validate();
    DistributionSpec spec;
    spec.origin = Origin::action;
    spec.algebra = lambda.algebra;
    spec.generators = lambda.images;
    for (const auto& e : lambda.algebra.basis()) spec.names.push_back(e.name);
    return spec;
}

CheckReport involutivity_check(const DistributionSpec& spec, const InvolutivityOptions& opt) {
    const DomainPtr& d = spec.domain();
    const int n = d->odd_dim();
    const bool action = spec.origin == DistributionSpec::Origin::action;
    const int dim = frame_dim(spec);
    const std::size_t K = spec.generators.size();

    struct Pair {
        std::size_t i, j;
        SuperVectorField bracket;
        std::vector<cplx> frame;
        std::string label;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = i; j < K; ++j) {
            const Parity pi = action ? spec.algebra.element(static_cast<int>(i)).parity
                                     : spec.generators[i].parity().value_or(Parity::even);
            if (i == j && pi == Parity::even) continue;
            std::vector<cplx> frame(static_cast<std::size_t>(dim));
            for (int k = 0; k < dim; ++k)
                frame[static_cast<std::size_t>(k)] =
                    spec.algebra.structure_constant(static_cast<int>(i), static_cast<int>(j), k);
            pairs.push_back({i, j, bracket(spec.generators[i], spec.generators[j]), std::move(frame),
                             "[" + spec.names[i] + "," + spec.names[j] + "]"});
        }

    std::vector<double> worst(pairs.size(), 0.0);
    std::vector<std::string> witness(pairs.size());
    int used = 0;
    for (const auto& p : sample_points(*d, opt.samples, opt.seed)) {
        if (d->distance_to_excluded(p) < 1e-3) continue;
        try {
            const std::vector<PointValue> gens = generator_values(spec, p);
            std::vector<PointValue> targets;
            for (const Pair& pr : pairs) targets.push_back(value_at(pr.bracket, p, pr.frame));
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                const double r = membership_residual(gens, targets[k], n);
                if (r > worst[k] || (std::isnan(r) && witness[k].empty())) {
                    worst[k] = r;
                    witness[k] = pairs[k].label + " = " + pairs[k].bracket.to_string() + " at " + point_string(p);
                }
            }
            ++used;
        } catch (const DomainError&) {
        }
    }
    CheckReport report;
    if (used == 0) {
        report.add("admissible samples", false, 0.0, "no sample point admits evaluation");
        return report;
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const bool ok = worst[k] <= opt.tolerance;
        report.add(pairs[k].label + " in span", ok, worst[k], ok ? "" : witness[k]);
    }
    return report;
}

int pointwise_rank(const DistributionSpec& spec, std::span<const cplx> point) {
    const std::vector<PointValue> gens = generator_values(spec, point);
    if (gens.empty()) return 0;
    Matrix A(static_cast<Eigen::Index>(gens.front().entries.size()), static_cast<Eigen::Index>(gens.size()));
    for (std::size_t k = 0; k < gens.size(); ++k)
        for (std::size_t c = 0; c < gens[k].entries.size(); ++c)
            A(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = gens[k].entries[c].body();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
    cod.setThreshold(1e-10);
    return static_cast<int>(cod.rank());
}

}  // namespace superflow
