#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "waxman/errors.hpp"
#include "waxman/format.hpp"
#include "waxman/linalg.hpp"
#include "waxman/model.hpp"

namespace waxman {

enum class Branch { highest, lowest };

// Per-run accumulator for operator-times-vector evaluations, the cost unit
// used to compare iteration schemes. Owned by the caller, never by the
// shared operator.
struct ApplyCounter {
    long long count = 0;
};

// G_eps = (T - eps)^-1 for diagonal T, with eps strictly below the spectrum
// so T - eps is positive definite. Holds the precomputed diagonals of
// G_eps and G_eps^(1/2); the referenced problem must outlive the operator.
class GreenOperator {
public:
    GreenOperator(const ModelProblem& problem, double epsilon, double gap_floor)
        : problem_(&problem), epsilon_(epsilon) {
        const std::size_t n = problem.dim();
        inv_diag_.resize(n);
        sqrt_inv_diag_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double shifted = problem.t_diag[i] - epsilon;
            if (!(shifted >= gap_floor)) {
                throw EpsilonInSpectrumError(
                    "epsilon=" + fmt_shortest(epsilon) + " must lie below min(t)=" +
                        fmt_shortest(problem.min_t()) + " by at least gap_floor=" +
                        fmt_shortest(gap_floor),
                    problem.min_t());
            }
            inv_diag_[i] = 1.0 / shifted;
            sqrt_inv_diag_[i] = 1.0 / std::sqrt(shifted);
        }
    }

    const ModelProblem& problem() const noexcept { return *problem_; }
    double epsilon() const noexcept { return epsilon_; }
    std::size_t dim() const noexcept { return inv_diag_.size(); }
    const std::vector<double>& inv_diag() const noexcept { return inv_diag_; }
    const std::vector<double>& sqrt_inv_diag() const noexcept { return sqrt_inv_diag_; }

private:
    const ModelProblem* problem_;
    double epsilon_;
    std::vector<double> inv_diag_;
    std::vector<double> sqrt_inv_diag_;
};

inline GreenOperator make_green(const ModelProblem& problem, double epsilon,
                                double gap_floor = 1e-8) {
    if (!std::isfinite(epsilon)) throw UsageError("epsilon must be finite");
    if (!(gap_floor > 0.0)) throw UsageError("gap_floor must be positive");
    return GreenOperator(problem, epsilon, gap_floor);
}

// y = G_eps (V x): one operator application.
inline Vector apply_gv(const GreenOperator& g, const Vector& x, ApplyCounter* counter = nullptr) {
    if (x.dim() != g.dim()) throw UsageError("apply_gv dimension mismatch");
    Vector y = g.problem().v.mult(x);
    for (std::size_t i = 0; i < y.dim(); ++i) y[i] *= g.inv_diag()[i];
    if (counter) ++counter->count;
    return y;
}

// y = A x with A = G^(1/2) V G^(1/2): the exactly symmetric operator similar
// to G_eps V that every iteration scheme runs on. One operator application.
inline Vector apply_sym(const GreenOperator& g, const Vector& y, ApplyCounter* counter = nullptr) {
    if (y.dim() != g.dim()) throw UsageError("apply_sym dimension mismatch");
    const auto& s = g.sqrt_inv_diag();
    Vector t = y;
    for (std::size_t i = 0; i < t.dim(); ++i) t[i] *= s[i];
    Vector out = g.problem().v.mult(t);
    for (std::size_t i = 0; i < out.dim(); ++i) out[i] *= s[i];
    if (counter) ++counter->count;
    return out;
}

// Dense assembly of A, for the brute-force oracle and small-scale checks.
inline SymMatrix dense_sym_operator(const GreenOperator& g) {
    const std::size_t n = g.dim();
    const auto& s = g.sqrt_inv_diag();
    SymMatrix a(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            a.set(i, j, s[i] * g.problem().v.at(i, j) * s[j]);
        }
    }
    return a;
}

// Maps the symmetrized eigenvector y of A back to original coordinates:
// u = G^(1/2) y, normalized.
inline Vector unsymmetrize(const GreenOperator& g, const Vector& y) {
    Vector u = y;
    for (std::size_t i = 0; i < u.dim(); ++i) u[i] *= g.sqrt_inv_diag()[i];
    return normalize(u);
}

// Brute-force lambda for the requested branch: lambda = 1/mu with mu the
// largest (highest) or smallest (lowest) eigenvalue of A.
inline double lambda_exact(const GreenOperator& g, Branch branch) {
    if (g.dim() > 512) throw UsageError("lambda_exact supports dim <= 512");
    const DenseEig eig = eig_sym_dense(dense_sym_operator(g));
    const double mu =
        branch == Branch::highest ? eig.eigenvalues.back() : eig.eigenvalues.front();
    if (std::abs(mu) <= 1e-12) {
        throw DegenerateBranchError("selected eigenvalue of G_eps V is numerically zero; "
                                    "lambda is unbounded on this branch");
    }
    return 1.0 / mu;
}

}  // namespace waxman
