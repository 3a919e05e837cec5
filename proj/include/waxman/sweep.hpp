#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "waxman/errors.hpp"
#include "waxman/format.hpp"
#include "waxman/green.hpp"
#include "waxman/model.hpp"
#include "waxman/solver.hpp"

namespace waxman {

enum class Scheme { power, modified };

inline const char* scheme_name(Scheme s) { return s == Scheme::power ? "power" : "2x2"; }

enum class PointStatus { converged, max_iterations, failed };

struct SweepPoint {
    double epsilon = 0.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    long iterations = 0;
    long long op_applications = 0;
    PointStatus status = PointStatus::failed;
    std::string error;  // error kind when status == failed
};

struct SweepResult {
    std::vector<SweepPoint> points;  // grid order, epsilon strictly increasing
    Scheme scheme = Scheme::power;
    std::string problem_label;
};

struct SweepOptions {
    Scheme scheme = Scheme::power;
    SolverConfig cfg;
    bool warm_start = false;  // reuse previous point's eigenvector as the start
    int jobs = 1;
    double gap_floor = 1e-8;
};

namespace detail {

inline SweepPoint solve_point(const ModelProblem& problem, double eps,
                              const SweepOptions& opt, const StartVector& start) {
    SweepPoint pt;
    pt.epsilon = eps;
    try {
        GreenOperator g = make_green(problem, eps, opt.gap_floor);
        SolverConfig cfg = opt.cfg;
        cfg.start = start;
        ConvergenceReport report =
            opt.scheme == Scheme::power ? power_solve(g, cfg) : modified_solve(g, cfg);
        pt.lambda = report.lambda_final;
        pt.iterations = report.iterations;
        pt.op_applications = report.op_applications;
        pt.status = report.status == SolveStatus::converged ? PointStatus::converged
                                                            : PointStatus::max_iterations;
    } catch (const Error& e) {
        pt.status = PointStatus::failed;
        pt.error = e.kind();
    }
    return pt;
}

// warm-start variant also needs the eigenvector back
inline std::pair<SweepPoint, std::optional<Vector>> solve_point_with_vec(
    const ModelProblem& problem, double eps, const SweepOptions& opt,
    const StartVector& start) {
    SweepPoint pt;
    pt.epsilon = eps;
    std::optional<Vector> vec;
    try {
        GreenOperator g = make_green(problem, eps, opt.gap_floor);
        SolverConfig cfg = opt.cfg;
        cfg.start = start;
        ConvergenceReport report =
            opt.scheme == Scheme::power ? power_solve(g, cfg) : modified_solve(g, cfg);
        pt.lambda = report.lambda_final;
        pt.iterations = report.iterations;
        pt.op_applications = report.op_applications;
        pt.status = report.status == SolveStatus::converged ? PointStatus::converged
                                                            : PointStatus::max_iterations;
        // map back into iteration coordinates at the next epsilon
        vec = report.eigenvector;
    } catch (const Error& e) {
        pt.status = PointStatus::failed;
        pt.error = e.kind();
    }
    return {pt, vec};
}

inline void validate_grid(const ModelProblem& problem, const std::vector<double>& grid,
                          double gap_floor) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw UsageError("grid contains a non-finite epsilon");
        if (i > 0 && !(grid[i - 1] < grid[i])) {
            throw UsageError("grid must be strictly increasing");
        }
        if (!(grid[i] < problem.min_t() - gap_floor)) {
            throw EpsilonInSpectrumError(
                "grid epsilon=" + fmt_shortest(grid[i]) + " must lie below min(t)=" +
                    fmt_shortest(problem.min_t()) + " by at least gap_floor=" +
                    fmt_shortest(gap_floor),
                problem.min_t());
        }
    }
}

}  // namespace detail

// One solver run per grid point. Points are independent by default and may
// run concurrently (jobs > 1); warm starting forces sequential execution.
// Per-point solver errors become per-point statuses, never aborting the
// whole sweep.
inline SweepResult run_sweep(const ModelProblem& problem, const std::vector<double>& grid,
                             const SweepOptions& opt = {}) {
    detail::validate_grid(problem, grid, opt.gap_floor);
    SweepResult result;
    result.scheme = opt.scheme;
    result.problem_label = problem.spec.label;
    result.points.resize(grid.size());

    if (grid.empty()) return result;

    if (opt.warm_start) {
        StartVector start = opt.cfg.start;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            auto [pt, vec] = detail::solve_point_with_vec(problem, grid[i], opt, start);
            result.points[i] = pt;
            if (vec) {
                // original-coordinate eigenvector -> iteration coordinates of
                // the next operator happens inside the solver start handling;
                // the original-coordinate vector is an equally good direction.
                start = StartVector::vector(*vec);
            }
        }
        return result;
    }

    const int jobs = std::max(1, opt.jobs);
    if (jobs == 1 || grid.size() <= 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            result.points[i] = detail::solve_point(problem, grid[i], opt, opt.cfg.start);
        }
        return result;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= grid.size()) return;
            result.points[i] = detail::solve_point(problem, grid[i], opt, opt.cfg.start);
        }
    };
    std::vector<std::thread> pool;
    const std::size_t nthreads = std::min<std::size_t>(jobs, grid.size());
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return result;
}

// Piecewise-linear inversion of the lambda(eps) curve over converged points.
inline double interpolate_eps_of_lambda(const SweepResult& sweep, double lambda_target) {
    if (!std::isfinite(lambda_target)) throw UsageError("lambda target must be finite");
    std::vector<std::pair<double, double>> pts;  // (lambda, epsilon), grid order
    for (const SweepPoint& p : sweep.points) {
        if (p.status == PointStatus::converged) pts.emplace_back(p.lambda, p.epsilon);
    }
    if (pts.size() < 2) {
        throw OutOfRangeError("need at least two converged points to interpolate");
    }
    const bool increasing = pts[1].first > pts[0].first;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const bool step_up = pts[i + 1].first > pts[i].first;
        if (pts[i + 1].first == pts[i].first || step_up != increasing) {
            throw NonMonotoneError(
                "lambda values are not strictly monotone over converged points");
        }
    }
    double lo = pts.front().first, hi = pts.back().first;
    if (!increasing) std::swap(lo, hi);
    if (lambda_target < lo || lambda_target > hi) {
        throw OutOfRangeError("lambda=" + fmt_shortest(lambda_target) +
                              " outside converged range [" + fmt_shortest(lo) + ", " +
                              fmt_shortest(hi) + "]");
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i].first, b = pts[i + 1].first;
        if (lambda_target == a) return pts[i].second;
        if (lambda_target == b) return pts[i + 1].second;
        const bool inside = increasing ? (lambda_target > a && lambda_target < b)
                                       : (lambda_target < a && lambda_target > b);
        if (inside) {
            const double t = (lambda_target - a) / (b - a);
            return pts[i].second + t * (pts[i + 1].second - pts[i].second);
        }
    }
    throw OutOfRangeError("lambda target not bracketed");  // unreachable
}

struct SmoothnessFlag {
    std::size_t index = 0;
    double epsilon = 0.0;
    double lambda_observed = 0.0;
    double lambda_fit = 0.0;
    double relative_deviation = 0.0;
};

struct SmoothnessReport {
    std::vector<SmoothnessFlag> flags;
    double threshold = 0.0;

    bool is_flagged(std::size_t index) const {
        for (const auto& f : flags) {
            if (f.index == index) return true;
        }
        return false;
    }
};

namespace detail {

// Least-squares polynomial through (eps, lambda) pairs, degree 2 when three
// or more points are available, degree 1 for two. Centered and scaled for
// conditioning.
inline std::optional<double> local_fit_eval(const std::vector<std::pair<double, double>>& pts,
                                            double eps_at) {
    const std::size_t m = pts.size();
    if (m < 2) return std::nullopt;
    double center = 0.0;
    for (const auto& p : pts) center += p.first;
    center /= static_cast<double>(m);
    double spread = 0.0;
    for (const auto& p : pts) spread = std::max(spread, std::abs(p.first - center));
    if (spread == 0.0) return std::nullopt;

    const std::size_t deg = m >= 3 ? 2 : 1;
    const std::size_t k = deg + 1;
    double ata[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double atb[3] = {0, 0, 0};
    for (const auto& p : pts) {
        const double u = (p.first - center) / spread;
        double phi[3] = {1.0, u, u * u};
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = 0; c < k; ++c) ata[r][c] += phi[r] * phi[c];
            atb[r] += phi[r] * p.second;
        }
    }
    // Gaussian elimination with partial pivoting on the k x k system
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < k; ++r) {
            if (std::abs(ata[r][col]) > std::abs(ata[piv][col])) piv = r;
        }
        if (ata[piv][col] == 0.0) return std::nullopt;
        if (piv != col) {
            for (std::size_t c = 0; c < k; ++c) std::swap(ata[piv][c], ata[col][c]);
            std::swap(atb[piv], atb[col]);
        }
        for (std::size_t r = col + 1; r < k; ++r) {
            const double f = ata[r][col] / ata[col][col];
            for (std::size_t c = col; c < k; ++c) ata[r][c] -= f * ata[col][c];
            atb[r] -= f * atb[col];
        }
    }
    double coef[3] = {0, 0, 0};
    for (std::size_t r = k; r-- > 0;) {
        double acc = atb[r];
        for (std::size_t c = r + 1; c < k; ++c) acc -= ata[r][c] * coef[c];
        coef[r] = acc / ata[r][r];
    }
    const double u = (eps_at - center) / spread;
    double val = coef[0];
    if (k > 1) val += coef[1] * u;
    if (k > 2) val += coef[2] * u * u;
    return val;
}

// Nearest pool members around index i: up to two below and two above in grid
// order, topped up with the nearest remaining when one side runs short.
inline std::vector<std::size_t> pick_neighbors(const std::vector<std::size_t>& pool,
                                               std::size_t i, double eps_i,
                                               const SweepResult& sweep) {
    std::vector<std::size_t> left, right;
    for (std::size_t idx : pool) {
        if (idx < i) left.push_back(idx);
        if (idx > i) right.push_back(idx);
    }
    std::vector<std::size_t> chosen;
    const std::size_t nl = std::min<std::size_t>(2, left.size());
    for (std::size_t k = 0; k < nl; ++k) chosen.push_back(left[left.size() - 1 - k]);
    for (std::size_t k = 0; k < right.size() && k < 2; ++k) chosen.push_back(right[k]);

    if (chosen.size() < 4) {
        // top up to at least 3 with the nearest unused pool members
        std::vector<std::size_t> rest;
        for (std::size_t idx : pool) {
            if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end() && idx != i) {
                rest.push_back(idx);
            }
        }
        std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
            const double da = std::abs(sweep.points[a].epsilon - eps_i);
            const double db = std::abs(sweep.points[b].epsilon - eps_i);
            return da < db || (da == db && a < b);
        });
        for (std::size_t idx : rest) {
            if (chosen.size() >= 3) break;
            chosen.push_back(idx);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

inline std::optional<double> fit_from_pool(const SweepResult& sweep,
                                           const std::vector<std::size_t>& pool,
                                           std::size_t i) {
    const double eps_i = sweep.points[i].epsilon;
    std::vector<std::size_t> nb = pick_neighbors(pool, i, eps_i, sweep);
    if (nb.size() < 2) return std::nullopt;
    std::vector<std::pair<double, double>> pts;
    pts.reserve(nb.size());
    for (std::size_t idx : nb) {
        pts.emplace_back(sweep.points[idx].epsilon, sweep.points[idx].lambda);
    }
    return local_fit_eval(pts, eps_i);
}

}  // namespace detail

// Flags sweep points whose lambda deviates from the smooth local behavior of
// the curve. Two passes: a leave-one-out local quadratic fit nominates
// candidates, then each candidate is confirmed against neighbors drawn only
// from converged non-candidate points, so a single corrupted point cannot
// drag its neighbors over the threshold. Deterministic given the sweep.
inline SmoothnessReport detect_pseudoconvergence(const SweepResult& sweep,
                                                 double threshold = 1e-3) {
    if (!(threshold > 0.0)) throw UsageError("threshold must be positive");
    constexpr double kFloor = 1e-12;

    std::vector<std::size_t> converged;
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
        if (sweep.points[i].status == PointStatus::converged) converged.push_back(i);
    }
    if (converged.size() < 4) {
        throw TooFewPointsError("smoothness check needs >= 4 converged points, have " +
                                std::to_string(converged.size()));
    }

    auto deviation = [&](std::size_t i, const std::vector<std::size_t>& pool)
        -> std::optional<std::pair<double, double>> {  // (fit, relative deviation)
        std::vector<std::size_t> p;
        p.reserve(pool.size());
        for (std::size_t idx : pool) {
            if (idx != i) p.push_back(idx);
        }
        auto fit = detail::fit_from_pool(sweep, p, i);
        if (!fit) return std::nullopt;
        const double dev = std::abs(sweep.points[i].lambda - *fit) /
                           std::max(std::abs(*fit), kFloor);
        return std::make_pair(*fit, dev);
    };

    // A point is testable when converged neighbors exist on both sides.
    auto interior = [&](std::size_t i) {
        return converged.front() < i && i < converged.back();
    };

    struct Candidate {
        std::size_t index;
        double fit;
        double dev;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
        if (!interior(i)) continue;
        if (!std::isfinite(sweep.points[i].lambda)) continue;
        auto d = deviation(i, converged);
        if (d && d->second > threshold) candidates.push_back({i, d->first, d->second});
    }

    std::vector<std::size_t> clean;
    for (std::size_t idx : converged) {
        bool is_candidate = false;
        for (const auto& c : candidates) {
            if (c.index == idx) is_candidate = true;
        }
        if (!is_candidate) clean.push_back(idx);
    }

    SmoothnessReport report;
    report.threshold = threshold;
    for (const auto& c : candidates) {
        auto d = deviation(c.index, clean);
        double fit = c.fit, dev = c.dev;
        if (d) {
            fit = d->first;
            dev = d->second;
            if (dev <= threshold) continue;  // explained by a corrupt neighbor
        }
        report.flags.push_back(
            {c.index, sweep.points[c.index].epsilon, sweep.points[c.index].lambda, fit, dev});
    }
    return report;
}

struct ComparePoint {
    double epsilon = 0.0;
    std::optional<ConvergenceReport> power;
    std::optional<ConvergenceReport> modified;
    std::string power_error;
    std::string modified_error;
    bool lambda_agree = false;  // both converged and lambdas match to 1e-8 relative
};

struct CompareSummary {
    std::vector<ComparePoint> points;
    std::string problem_label;
    double median_iter_ratio = std::numeric_limits<double>::quiet_NaN();
    double median_apps_ratio = std::numeric_limits<double>::quiet_NaN();
};

// Paired runs of both schemes on the same grid with identical configs.
inline CompareSummary compare_schemes(const ModelProblem& problem,
                                      const std::vector<double>& grid,
                                      const SolverConfig& cfg = {}, double gap_floor = 1e-8) {
    detail::validate_grid(problem, grid, gap_floor);
    CompareSummary summary;
    summary.problem_label = problem.spec.label;
    std::vector<double> iter_ratios, apps_ratios;

    for (double eps : grid) {
        ComparePoint pt;
        pt.epsilon = eps;
        try {
            GreenOperator g = make_green(problem, eps, gap_floor);
            pt.power = power_solve(g, cfg);
        } catch (const Error& e) {
            pt.power_error = e.kind();
        }
        try {
            GreenOperator g = make_green(problem, eps, gap_floor);
            pt.modified = modified_solve(g, cfg);
        } catch (const Error& e) {
            pt.modified_error = e.kind();
        }
        if (pt.power && pt.modified) {
            if (pt.power->status == SolveStatus::converged &&
                pt.modified->status == SolveStatus::converged) {
                const double lp = pt.power->lambda_final;
                const double lm = pt.modified->lambda_final;
                pt.lambda_agree = std::abs(lp - lm) <= 1e-8 * std::max(std::abs(lp), 1e-300);
            }
            if (pt.power->iterations > 0) {
                iter_ratios.push_back(static_cast<double>(pt.modified->iterations) /
                                      static_cast<double>(pt.power->iterations));
            }
            if (pt.power->op_applications > 0) {
                apps_ratios.push_back(static_cast<double>(pt.modified->op_applications) /
                                      static_cast<double>(pt.power->op_applications));
            }
        }
        summary.points.push_back(std::move(pt));
    }

    auto median = [](std::vector<double> v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size() / 2;
        return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    };
    summary.median_iter_ratio = median(std::move(iter_ratios));
    summary.median_apps_ratio = median(std::move(apps_ratios));
    return summary;
}

inline const char* point_status_name(PointStatus s) {
    switch (s) {
        case PointStatus::converged: return "converged";
        case PointStatus::max_iterations: return "max_iterations";
        case PointStatus::failed: return "failed";
    }
    return "failed";
}

// CSV export: epsilon,lambda,iterations,op_apps,status[,flagged]. The
// flagged column appears when a smoothness report is supplied.
inline void write_sweep_csv(const SweepResult& sweep, std::ostream& os,
                            const SmoothnessReport* smoothness = nullptr) {
    os << "epsilon,lambda,iterations,op_apps,status";
    if (smoothness) os << ",flagged";
    os << "\n";
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
        const SweepPoint& p = sweep.points[i];
        std::string status = point_status_name(p.status);
        if (p.status == PointStatus::failed && !p.error.empty()) status += ":" + p.error;
        os << fmt_g17(p.epsilon) << ',' << fmt_g17(p.lambda) << ',' << p.iterations << ','
           << p.op_applications << ',' << status;
        if (smoothness) os << ',' << (smoothness->is_flagged(i) ? 1 : 0);
        os << "\n";
    }
}

// Two-column "epsilon lambda" file of converged points, for plotting tools.
inline void write_plot_file(const SweepResult& sweep, std::ostream& os) {
    for (const SweepPoint& p : sweep.points) {
        if (p.status != PointStatus::converged) continue;
        os << fmt_g17(p.epsilon) << ' ' << fmt_g17(p.lambda) << "\n";
    }
}

struct LoadedSweep {
    SweepResult sweep;
    std::vector<char> flagged;  // parallel to points; empty when column absent
};

inline LoadedSweep read_sweep_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw UsageError("sweep CSV: missing header");
    const bool has_flag = line.find(",flagged") != std::string::npos;
    if (line.rfind("epsilon,lambda,iterations,op_apps,status", 0) != 0) {
        throw UsageError("sweep CSV: unrecognized header '" + line + "'");
    }
    LoadedSweep out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() < 5 + (has_flag ? 1 : 0)) {
            throw UsageError("sweep CSV: short row '" + line + "'");
        }
        SweepPoint p;
        p.epsilon = parse_double(cells[0]);
        // lambda may legitimately be nan for failed points
        p.lambda = cells[1] == "nan" || cells[1] == "-nan"
                       ? std::numeric_limits<double>::quiet_NaN()
                       : parse_double(cells[1]);
        p.iterations = static_cast<long>(parse_int(cells[2]));
        p.op_applications = parse_int(cells[3]);
        const std::string& st = cells[4];
        if (st == "converged") {
            p.status = PointStatus::converged;
        } else if (st == "max_iterations") {
            p.status = PointStatus::max_iterations;
        } else {
            p.status = PointStatus::failed;
            auto colon = st.find(':');
            if (colon != std::string::npos) p.error = st.substr(colon + 1);
        }
        out.sweep.points.push_back(p);
        if (has_flag) out.flagged.push_back(cells[5] == "1" ? 1 : 0);
    }
    return out;
}

}  // namespace waxman
