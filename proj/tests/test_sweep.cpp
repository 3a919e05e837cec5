#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "waxman/sweep.hpp"

using namespace waxman;

namespace {

SweepResult synthetic(std::initializer_list<std::pair<double, double>> pts) {
    SweepResult s;
    s.scheme = Scheme::power;
    s.problem_label = "synthetic";
    for (const auto& [eps, lam] : pts) {
        SweepPoint p;
        p.epsilon = eps;
        p.lambda = lam;
        p.iterations = 1;
        p.op_applications = 1;
        p.status = PointStatus::converged;
        s.points.push_back(p);
    }
    return s;
}

SweepOptions tight_options(Scheme scheme) {
    SweepOptions opt;
    opt.scheme = scheme;
    opt.cfg.tol = 1e-14;
    return opt;
}

}  // namespace

TEST_CASE("identityV sweep reproduces the analytic line") {
    const ModelProblem p = fixture("identityV", 6);  // t_min = 2
    const std::vector<double> grid{0.0, 0.5, 1.0, 1.5};
    const SweepResult sweep = run_sweep(p, grid, tight_options(Scheme::modified));
    REQUIRE(sweep.points.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(sweep.points[i].status == PointStatus::converged);
        CHECK(std::abs(sweep.points[i].lambda - (2.0 - grid[i])) <= 1e-12);
    }
}

TEST_CASE("empty grid yields an empty sweep") {
    const ModelProblem p = fixture("identityV", 4);
    const SweepResult sweep = run_sweep(p, {});
    CHECK(sweep.points.empty());
}

TEST_CASE("sweep grid validation") {
    const ModelProblem p = fixture("identityV", 4);
    CHECK_THROWS_AS(run_sweep(p, {1.0, 0.5}), UsageError);
    CHECK_THROWS_AS(run_sweep(p, {0.0, 2.5}), EpsilonInSpectrumError);
}

TEST_CASE("per-point solver failures become point statuses") {
    ModelSpec s;
    s.dim = 2;
    s.t_spectrum = {2.0, 3.0};
    s.v_scale = 1.0;
    s.seed = 0;
    s.label = "offdiag";
    SymMatrix v(2);
    v.set(0, 1, 1.0);
    const ModelProblem p{Vector(s.t_spectrum), std::move(v), s};
    SweepOptions opt;
    opt.cfg.start = StartVector::basis(0);  // Rayleigh quotient is exactly zero
    const SweepResult sweep = run_sweep(p, {0.5, 1.0}, opt);
    REQUIRE(sweep.points.size() == 2);
    for (const auto& pt : sweep.points) {
        CHECK(pt.status == PointStatus::failed);
        CHECK(pt.error == "RayleighZero");
    }
}

TEST_CASE("easy20 sweep matches the oracle pointwise") {
    const ModelProblem p = fixture("easy20");
    std::vector<double> grid;
    for (int k = 0; k < 8; ++k) grid.push_back(2.0 + k);
    const SweepResult sweep = run_sweep(p, grid, tight_options(Scheme::modified));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        REQUIRE(sweep.points[i].status == PointStatus::converged);
        const double exact = lambda_exact(make_green(p, grid[i]), Branch::highest);
        CHECK(std::abs(sweep.points[i].lambda - exact) <= 1e-8 * std::abs(exact));
    }
}

TEST_CASE("parallel sweep matches the sequential one exactly") {
    const ModelProblem p = fixture("easy20");
    std::vector<double> grid;
    for (int k = 0; k < 6; ++k) grid.push_back(3.0 + k);
    SweepOptions seq;
    SweepOptions par;
    par.jobs = 4;
    const SweepResult a = run_sweep(p, grid, seq);
    const SweepResult b = run_sweep(p, grid, par);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].lambda == b.points[i].lambda);
        CHECK(a.points[i].iterations == b.points[i].iterations);
        CHECK(a.points[i].status == b.points[i].status);
    }
}

TEST_CASE("warm started sweep still agrees with independent runs") {
    const ModelProblem p = fixture("easy20");
    std::vector<double> grid{4.0, 5.0, 6.0, 7.0};
    SweepOptions cold;
    SweepOptions warm;
    warm.warm_start = true;
    const SweepResult a = run_sweep(p, grid, cold);
    const SweepResult b = run_sweep(p, grid, warm);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        REQUIRE(a.points[i].status == PointStatus::converged);
        REQUIRE(b.points[i].status == PointStatus::converged);
        CHECK(std::abs(a.points[i].lambda - b.points[i].lambda) <=
              1e-8 * std::abs(a.points[i].lambda));
    }
}

TEST_CASE("interpolation on an exactly linear synthetic sweep") {
    const SweepResult s =
        synthetic({{0.0, 2.0}, {0.5, 1.5}, {1.0, 1.0}, {1.5, 0.5}});
    CHECK(interpolate_eps_of_lambda(s, 1.25) == 0.75);
    CHECK(interpolate_eps_of_lambda(s, 2.0) == 0.0);   // endpoint hit
    CHECK(interpolate_eps_of_lambda(s, 0.5) == 1.5);   // other endpoint
    CHECK_THROWS_AS(interpolate_eps_of_lambda(s, 99.0), OutOfRangeError);
    CHECK_THROWS_AS(interpolate_eps_of_lambda(s, 0.1), OutOfRangeError);
}

TEST_CASE("interpolation rejects non-monotone sweeps") {
    const SweepResult s =
        synthetic({{0.0, 2.0}, {0.5, 2.5}, {1.0, 1.0}, {1.5, 0.5}});
    CHECK_THROWS_AS(interpolate_eps_of_lambda(s, 1.5), NonMonotoneError);
}

TEST_CASE("interpolation round-trips through a re-solve on easy20") {
    const ModelProblem p = fixture("easy20");
    std::vector<double> grid;
    for (int k = 0; k < 8; ++k) grid.push_back(2.0 + k);
    const SweepResult sweep = run_sweep(p, grid, tight_options(Scheme::modified));
    const double lo = std::min(sweep.points.front().lambda, sweep.points.back().lambda);
    const double hi = std::max(sweep.points.front().lambda, sweep.points.back().lambda);
    const double target = 0.5 * (lo + hi);
    const double eps = interpolate_eps_of_lambda(sweep, target);
    const ConvergenceReport r = modified_solve(make_green(p, eps));
    REQUIRE(r.status == SolveStatus::converged);
    CHECK(std::abs(r.lambda_final - target) <= 1e-3 * std::abs(target));
}

TEST_CASE("identityV inversion round-trip is exact to 1e-12") {
    const ModelProblem p = fixture("identityV", 6);
    std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
    const SweepResult sweep = run_sweep(p, grid, tight_options(Scheme::modified));
    for (double target : {1.9, 1.3, 0.8, 0.6}) {
        const double eps = interpolate_eps_of_lambda(sweep, target);
        CHECK(std::abs((2.0 - eps) - target) <= 1e-12);
    }
}

TEST_CASE("detector on the corrupted synthetic line") {
    // all points sit on lambda = 2 - eps except index 2
    const SweepResult s = synthetic(
        {{0.0, 2.0}, {0.5, 1.5}, {1.0, 0.9}, {1.5, 0.5}, {2.0, 0.0}});
    const SmoothnessReport rep = detect_pseudoconvergence(s, 1e-3);
    REQUIRE(rep.flags.size() == 1);
    CHECK(rep.flags[0].index == 2);
    CHECK(rep.flags[0].lambda_observed == 0.9);
    CHECK(rep.flags[0].lambda_fit == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(rep.flags[0].relative_deviation == Catch::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("detector is silent on smooth data") {
    SECTION("identityV analytic sweep at any threshold") {
        const ModelProblem p = fixture("identityV", 6);
        std::vector<double> grid{0.0, 0.3, 0.6, 0.9, 1.2, 1.5};
        const SweepResult sweep = run_sweep(p, grid, tight_options(Scheme::modified));
        for (double threshold : {1e-10, 1e-6, 1e-3, 0.1}) {
            CHECK(detect_pseudoconvergence(sweep, threshold).flags.empty());
        }
    }
    SECTION("globally quadratic synthetic data") {
        SweepResult s = synthetic({});
        for (int k = 0; k < 9; ++k) {
            const double eps = 0.25 * k;
            SweepPoint p;
            p.epsilon = eps;
            p.lambda = 3.0 - 0.75 * eps + 0.125 * eps * eps;
            p.status = PointStatus::converged;
            s.points.push_back(p);
        }
        CHECK(detect_pseudoconvergence(s, 1e-10).flags.empty());
    }
}

TEST_CASE("detector requires four converged points") {
    const SweepResult s = synthetic({{0.0, 2.0}, {0.5, 1.5}, {1.0, 1.0}});
    CHECK_THROWS_AS(detect_pseudoconvergence(s), TooFewPointsError);
}

TEST_CASE("detector is deterministic") {
    const SweepResult s = synthetic(
        {{0.0, 2.0}, {0.5, 1.5}, {1.0, 0.9}, {1.5, 0.5}, {2.0, 0.0}});
    const SmoothnessReport a = detect_pseudoconvergence(s, 1e-3);
    const SmoothnessReport b = detect_pseudoconvergence(s, 1e-3);
    REQUIRE(a.flags.size() == b.flags.size());
    for (std::size_t i = 0; i < a.flags.size(); ++i) {
        CHECK(a.flags[i].index == b.flags[i].index);
        CHECK(a.flags[i].lambda_fit == b.flags[i].lambda_fit);
        CHECK(a.flags[i].relative_deviation == b.flags[i].relative_deviation);
    }
}

TEST_CASE("a truncated sweep point is flagged, a fully converged sweep is not") {
    const ModelProblem p = fixture("hard20");
    std::vector<double> grid;
    for (int k = 0; k < 8; ++k) grid.push_back(2.0 + k);
    SweepOptions opt;
    const SweepResult full = run_sweep(p, grid, opt);
    for (const auto& pt : full.points) REQUIRE(pt.status == PointStatus::converged);
    CHECK(detect_pseudoconvergence(full, 1e-3).flags.empty());

    // truncate the interior point that needed the most iterations
    std::size_t slow = 1;
    for (std::size_t i = 1; i + 1 < full.points.size(); ++i) {
        if (full.points[i].iterations > full.points[slow].iterations) slow = i;
    }
    SweepResult truncated = full;
    SweepOptions capped = opt;
    capped.cfg.max_iter = 20;
    const SweepResult redo = run_sweep(p, {grid[slow]}, capped);
    truncated.points[slow] = redo.points[0];
    REQUIRE(truncated.points[slow].status == PointStatus::max_iterations);

    const SmoothnessReport rep = detect_pseudoconvergence(truncated, 1e-3);
    REQUIRE(rep.flags.size() == 1);
    CHECK(rep.flags[0].index == slow);
}

TEST_CASE("scheme comparison on the diagonal operator") {
    const ModelProblem p = fixture("identityV", 5);
    SolverConfig cfg;
    cfg.start = StartVector::basis(0);  // eigenbasis start: both schemes are immediate
    const CompareSummary cmp = compare_schemes(p, {0.0, 0.5, 1.0, 1.5}, cfg);
    for (const auto& pt : cmp.points) {
        REQUIRE(pt.power);
        REQUIRE(pt.modified);
        CHECK(pt.power->iterations <= 2);
        CHECK(pt.modified->iterations <= 2);
        CHECK(pt.lambda_agree);
        CHECK(std::abs(pt.power->lambda_final - pt.modified->lambda_final) <=
              1e-12 * std::abs(pt.power->lambda_final));
    }
}

TEST_CASE("scheme comparison on easy20 shows the expected acceleration") {
    const ModelProblem p = fixture("easy20");
    std::vector<double> grid;
    for (int k = 0; k < 8; ++k) grid.push_back(2.0 + k);
    const CompareSummary cmp = compare_schemes(p, grid);
    CHECK(cmp.median_iter_ratio <= 0.7);
    for (const auto& pt : cmp.points) {
        REQUIRE(pt.power);
        REQUIRE(pt.modified);
        CHECK(pt.modified->op_applications == pt.modified->iterations + 1);
    }
}

TEST_CASE("hard20 comparison: the 2x2 scheme wins every slow point") {
    const ModelProblem p = fixture("hard20");
    std::vector<double> grid;
    for (int k = 0; k < 8; ++k) grid.push_back(2.0 + k);
    const CompareSummary cmp = compare_schemes(p, grid);
    for (const auto& pt : cmp.points) {
        REQUIRE(pt.power);
        REQUIRE(pt.modified);
        if (pt.power->status == SolveStatus::converged &&
            pt.modified->status == SolveStatus::converged) {
            CHECK(pt.lambda_agree);
        }
        if (pt.power->iterations > 100) {
            CHECK(pt.modified->iterations < pt.power->iterations);
        }
    }
}

TEST_CASE("sweep CSV round trip") {
    const ModelProblem p = fixture("identityV", 5);
    const SweepResult sweep = run_sweep(p, {0.0, 0.5, 1.0, 1.5}, tight_options(Scheme::power));
    const SmoothnessReport rep = detect_pseudoconvergence(sweep, 1e-3);

    std::ostringstream os;
    write_sweep_csv(sweep, os, &rep);
    std::istringstream is(os.str());
    const LoadedSweep loaded = read_sweep_csv(is);
    REQUIRE(loaded.sweep.points.size() == sweep.points.size());
    REQUIRE(loaded.flagged.size() == sweep.points.size());
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
        CHECK(loaded.sweep.points[i].epsilon == sweep.points[i].epsilon);
        CHECK(loaded.sweep.points[i].lambda == sweep.points[i].lambda);
        CHECK(loaded.sweep.points[i].status == sweep.points[i].status);
        CHECK(loaded.flagged[i] == 0);
    }

    std::ostringstream plot;
    write_plot_file(sweep, plot);
    std::size_t rows = 0;
    std::istringstream pis(plot.str());
    std::string line;
    while (std::getline(pis, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 4);
}
