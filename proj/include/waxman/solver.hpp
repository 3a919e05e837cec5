#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "waxman/errors.hpp"
#include "waxman/format.hpp"
#include "waxman/green.hpp"
#include "waxman/linalg.hpp"

namespace waxman {

enum class StartKind { uniform, basis, given };

struct StartVector {
    StartKind kind = StartKind::uniform;
    std::size_t basis_index = 0;
    std::optional<Vector> given;

    static StartVector uniform() { return {}; }
    static StartVector basis(std::size_t k) { return {StartKind::basis, k, std::nullopt}; }
    static StartVector vector(Vector v) { return {StartKind::given, 0, std::move(v)}; }
};

struct SolverConfig {
    double tol = 1e-10;          // relative change in lambda between steps
    long max_iter = 10000;
    Branch branch = Branch::highest;
    StartVector start;
    double breakdown_tol = 1e-13;  // ||r|| / ||w|| below which the iterate is an eigenvector

    void validate() const {
        if (!(tol > 0.0 && tol < 1.0)) throw UsageError("SolverConfig: tol must be in (0,1)");
        if (max_iter < 1) throw UsageError("SolverConfig: max_iter must be >= 1");
        if (!(breakdown_tol > 0.0)) throw UsageError("SolverConfig: breakdown_tol must be > 0");
    }
};

struct TraceStep {
    long n = 0;
    double lambda_n = 0.0;
    double eps_n = 0.0;  // Rayleigh quotient of A at this iterate, = 1/lambda_n
    double residual = 0.0;
    long long op_applications = 0;  // cumulative
};

// One 2x2 projection step: v_n off-diagonal plus the stably computed
// distances from eps_n to the two Ritz values. Positive margins mean the
// Ritz values bracket eps_n strictly.
struct BracketSample {
    long n = 0;
    double v_n = 0.0;
    double margin_low = 0.0;   // eps_n - eigenvalue_low
    double margin_high = 0.0;  // eigenvalue_high - eps_n
};

struct IterationTrace {
    std::vector<TraceStep> steps;
    double shift = 0.0;  // spectral shift used for branch=lowest power runs
    std::vector<BracketSample> brackets;  // modified scheme only
};

enum class SolveStatus { converged, max_iterations };

struct ConvergenceReport {
    SolveStatus status = SolveStatus::max_iterations;
    double lambda_final = 0.0;
    Vector eigenvector;  // original (unsymmetrized) coordinates, normalized
    long iterations = 0;
    long long op_applications = 0;
    IterationTrace trace;
};

inline long long count_applications(const ConvergenceReport& report) {
    return report.op_applications;
}

namespace detail {

inline Vector resolve_start(const StartVector& start, std::size_t dim) {
    Vector x = Vector::zeros(dim);
    switch (start.kind) {
        case StartKind::uniform:
            for (std::size_t i = 0; i < dim; ++i) x[i] = 1.0;
            break;
        case StartKind::basis:
            if (start.basis_index >= dim) throw UsageError("start basis index out of range");
            x[start.basis_index] = 1.0;
            break;
        case StartKind::given:
            if (!start.given) throw UsageError("start vector not provided");
            if (start.given->dim() != dim) throw UsageError("start vector dimension mismatch");
            x = *start.given;
            break;
    }
    const double n = norm2(x);
    if (n <= 1e-14) throw StartVectorDegenerateError("start vector has norm <= 1e-14");
    for (std::size_t i = 0; i < dim; ++i) x[i] /= n;
    return x;
}

// Upper Gershgorin bound of A = G^(1/2) V G^(1/2), computed row-wise
// without assembling A.
inline double gershgorin_upper(const GreenOperator& g) {
    const std::size_t n = g.dim();
    const auto& s = g.sqrt_inv_diag();
    double bound = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double row = s[i] * s[i] * g.problem().v.at(i, i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) row += std::abs(s[i] * g.problem().v.at(i, j) * s[j]);
        }
        bound = std::max(bound, row);
    }
    return bound;
}

// Distances from a to the two eigenvalues of [[a, v], [v, c]], each computed
// through the cancellation-free branch so both are strictly positive in
// floating point whenever v != 0.
inline std::pair<double, double> ritz_offsets(double a, double v, double c) {
    const double hg = 0.5 * (a - c);
    const double disc = std::hypot(hg, v);
    const double up = hg > 0.0 ? (v * v) / (disc + hg) : disc - hg;   // high - a
    const double down = hg < 0.0 ? (v * v) / (disc - hg) : disc + hg; // a - low
    return {up, down};
}

inline ConvergenceReport finish(const GreenOperator& g, SolveStatus status, double lambda,
                                const Vector& iterate_sym, long iterations,
                                ApplyCounter counter, IterationTrace trace) {
    ConvergenceReport report{status, lambda, unsymmetrize(g, iterate_sym),
                             iterations, counter.count, std::move(trace)};
    return report;
}

}  // namespace detail

// Original power scheme: w = A|n>, eps_n = <n|w>, lambda_n = 1/eps_n,
// |n+1> = w/||w||. Stops on relative lambda change <= tol. branch=lowest
// iterates on (sigma I - A) with sigma the upper Gershgorin bound, so the
// algebraically lowest eigenvalue becomes the dominant one; recorded
// eps_n/lambda_n always refer to A itself.
inline ConvergenceReport power_solve(const GreenOperator& g, const SolverConfig& cfg = {}) {
    cfg.validate();
    const std::size_t n = g.dim();
    Vector x = detail::resolve_start(cfg.start, n);

    IterationTrace trace;
    if (cfg.branch == Branch::lowest) trace.shift = detail::gershgorin_upper(g);
    ApplyCounter counter;

    double lambda = 0.0;
    double lambda_prev = 0.0;
    SolveStatus status = SolveStatus::max_iterations;
    long iter = 0;
    Vector w = x;

    while (iter < cfg.max_iter) {
        ++iter;
        w = apply_sym(g, x, &counter);
        if (cfg.branch == Branch::lowest) {
            for (std::size_t i = 0; i < n; ++i) w[i] = trace.shift * x[i] - w[i];
        }
        const double eps_iter = dot(x, w);
        const double eps_a = cfg.branch == Branch::lowest ? trace.shift - eps_iter : eps_iter;
        if (std::abs(eps_a) <= 1e-14) {
            throw RayleighZeroError("Rayleigh quotient vanished at iteration " +
                                    std::to_string(iter));
        }
        lambda = 1.0 / eps_a;

        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = w[i] - eps_iter * x[i];
            res += d * d;
        }
        res = std::sqrt(res);
        trace.steps.push_back({iter, lambda, eps_a, res, counter.count});

        if (iter >= 2 && std::abs(lambda - lambda_prev) <= cfg.tol * std::abs(lambda)) {
            status = SolveStatus::converged;
            break;
        }
        const double wn = norm2(w);
        if (wn <= 1e-300) {
            // x is an exact eigenvector of the iterated operator
            status = SolveStatus::converged;
            break;
        }
        if (iter == cfg.max_iter) break;
        for (std::size_t i = 0; i < n; ++i) x[i] = w[i] / wn;
        lambda_prev = lambda;
    }

    // w holds the freshest direction (one application ahead of x);
    // unsymmetrize() renormalizes, so scale does not matter.
    const Vector& dir = norm2(w) > 0.0 ? w : x;
    return detail::finish(g, status, lambda, dir, iter, counter, std::move(trace));
}

// Reference-vector scheme: |n+1> = G_eps V|n> / <ref|G_eps V|n>, with
// lambda_n the reciprocal of that normalization. Runs on G_eps V in
// original coordinates; same fixed points as power_solve.
inline ConvergenceReport power_solve_ref(const GreenOperator& g, const Vector& ref,
                                         const SolverConfig& cfg = {}) {
    cfg.validate();
    const std::size_t n = g.dim();
    if (ref.dim() != n) throw UsageError("reference vector dimension mismatch");
    Vector x = detail::resolve_start(cfg.start, n);

    const double d0 = dot(ref, x);
    if (std::abs(d0) <= 1e-14) {
        throw RefOrthogonalError("<ref|start> is numerically zero");
    }
    for (std::size_t i = 0; i < n; ++i) x[i] /= d0;

    IterationTrace trace;
    if (cfg.branch == Branch::lowest) trace.shift = detail::gershgorin_upper(g);
    ApplyCounter counter;

    double lambda = 0.0;
    double lambda_prev = 0.0;
    SolveStatus status = SolveStatus::max_iterations;
    long iter = 0;

    while (iter < cfg.max_iter) {
        ++iter;
        Vector w = apply_gv(g, x, &counter);
        if (cfg.branch == Branch::lowest) {
            for (std::size_t i = 0; i < n; ++i) w[i] = trace.shift * x[i] - w[i];
        }
        const double d = dot(ref, w);
        if (std::abs(d) <= 1e-14) {
            throw RefOrthogonalError("<ref|G_eps V|n> is numerically zero at iteration " +
                                     std::to_string(iter));
        }
        const double eps_a = cfg.branch == Branch::lowest ? trace.shift - d : d;
        if (std::abs(eps_a) <= 1e-14) {
            throw RayleighZeroError("normalization maps to a vanishing eigenvalue estimate");
        }
        lambda = 1.0 / eps_a;

        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double next = w[i] / d;
            const double diff = next - x[i];
            res += diff * diff;
            x[i] = next;
        }
        res = std::sqrt(res);
        trace.steps.push_back({iter, lambda, eps_a, res, counter.count});

        if (iter >= 2 && std::abs(lambda - lambda_prev) <= cfg.tol * std::abs(lambda)) {
            status = SolveStatus::converged;
            break;
        }
        lambda_prev = lambda;
    }

    ConvergenceReport report{status, lambda, normalize(x), iter, counter.count,
                             std::move(trace)};
    return report;
}

// Modified scheme: project A onto span{|n>, |n_perp>} where |n_perp> is the
// normalized residual of the power step, diagonalize the 2x2 projection,
// and take the extreme eigenvector as the next iterate. The next iterate's
// image under A is the same linear combination of the two stored images, so
// each 2x2 step costs exactly one new operator application and the whole
// run costs iterations + 1.
inline ConvergenceReport modified_solve(const GreenOperator& g, const SolverConfig& cfg = {}) {
    cfg.validate();
    const std::size_t n = g.dim();
    Vector x = detail::resolve_start(cfg.start, n);

    IterationTrace trace;
    ApplyCounter counter;
    Vector w = apply_sym(g, x, &counter);

    double lambda = 0.0;
    double lambda_prev = 0.0;
    SolveStatus status = SolveStatus::max_iterations;
    long entry = 0;
    long updates = 0;

    for (;;) {
        ++entry;
        const double eps_n = dot(x, w);
        if (std::abs(eps_n) <= 1e-14) {
            throw RayleighZeroError("Rayleigh quotient vanished at step " +
                                    std::to_string(entry));
        }
        lambda = 1.0 / eps_n;

        Vector r = w;
        for (std::size_t i = 0; i < n; ++i) r[i] -= eps_n * x[i];
        const double rn = norm2(r);
        trace.steps.push_back({entry, lambda, eps_n, rn, counter.count});

        if (entry >= 2 && std::abs(lambda - lambda_prev) <= cfg.tol * std::abs(lambda)) {
            status = SolveStatus::converged;
            break;
        }
        if (rn <= cfg.breakdown_tol * norm2(w)) {
            // c_n_perp = 0: the iterate is already an eigenvector
            status = SolveStatus::converged;
            break;
        }
        if (updates == cfg.max_iter) break;

        for (std::size_t i = 0; i < n; ++i) r[i] /= rn;  // |n_perp>
        Vector z = apply_sym(g, r, &counter);

        const double v_check = dot(x, z);  // <n|A|n_perp>, equals ||r|| by symmetry
        if (std::abs(v_check - rn) > 1e-12 * std::max(1.0, norm2(w))) {
            throw Error("Internal", "2x2 projection symmetry check failed: <n|A|n_perp>=" +
                                        fmt_g17(v_check) + " vs ||r||=" + fmt_g17(rn));
        }
        const double v_n = rn;
        const double alpha_n = dot(r, z);

        const auto [up, down] = detail::ritz_offsets(eps_n, v_n, alpha_n);
        trace.brackets.push_back({entry, v_n, down, up});

        const Eigenpair2x2 pair = eig_sym_2x2(eps_n, v_n, alpha_n);
        const auto& c = cfg.branch == Branch::highest ? pair.eigvec_high : pair.eigvec_low;
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = c[0] * x[i] + c[1] * r[i];
            const double wi = c[0] * w[i] + c[1] * z[i];
            x[i] = xi;
            w[i] = wi;
        }
        ++updates;
        lambda_prev = lambda;
    }

    return detail::finish(g, status, lambda, x, updates, counter, std::move(trace));
}

// Per-step trace export: full precision, one row per step.
inline void write_trace_csv(const IterationTrace& trace, std::ostream& os) {
    os << "n,lambda,eps_n,residual,op_apps\n";
    for (const TraceStep& s : trace.steps) {
        os << s.n << ',' << fmt_g17(s.lambda_n) << ',' << fmt_g17(s.eps_n) << ','
           << fmt_g17(s.residual) << ',' << s.op_applications << "\n";
    }
}

}  // namespace waxman
