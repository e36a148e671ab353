#include <catch_amalgamated.hpp>

#include <random>

#include "laplearn/eval.hpp"
#include "laplearn/procgen.hpp"
#include "laplearn/whittle.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace laplearn;
using Catch::Approx;

namespace {

WhittleProblem random_problem(Index p, std::mt19937_64& rng, double lambda,
                              bool complex_parts = true) {
    ComplexMatrix pm = complex_parts ? testutil::random_hermitian_pd(p, rng, 1.0)
                                     : testutil::random_spd(p, rng, 1.0).cast<Complex>();
    ComplexMatrix dm = complex_parts ? testutil::random_hermitian_pd(p, rng, 1.0)
                                     : testutil::random_spd(p, rng, 1.0).cast<Complex>();
    return make_problem(HermitianMatrix(pm, 1e-9),
                        hermitian_sqrt(HermitianMatrix(dm, 1e-9)), lambda);
}

WhittleProblem chain_data_problem(Index p, Index n, std::uint64_t seed, double lambda) {
    const LaplacianSpec lap = chain_graph(p);
    const RealMatrix a = 0.7 * RealMatrix::Identity(p, p);
    const auto x = simulate_injections(ProcessModel::var1(a), n, p, seed);
    const auto y = observe_potentials(lap, x);
    const Index m = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(n))));
    const auto est = averaged_periodogram(y, 0, m);
    const auto theta = hermitian_inverse(var1_psd(a, SymmetricMatrix::identity(p), 0.0));
    return make_problem(est, theta, lambda);
}

}  // namespace

TEST_CASE("objective analytic cases", "[whittle]") {
    const Index p = 4;
    WhittleProblem prob = make_problem(
        HermitianMatrix(ComplexMatrix::Identity(p, p) / kTwoPi), HermitianMatrix::identity(p),
        0.0);
    CHECK(objective(SymmetricMatrix::identity(p), prob) ==
          Approx(static_cast<double>(p) / kTwoPi).margin(1e-12));

    // lambda enters linearly through the off-diagonal l1 term.
    std::mt19937_64 rng(17);
    WhittleProblem base = random_problem(p, rng, 0.0);
    WhittleProblem two = base;
    two.lambda = 2.0;
    RealMatrix l = testutil::random_spd(p, rng, 1.0);
    const SymmetricMatrix ls(l);
    CHECK(objective(ls, two) - objective(ls, base) ==
          Approx(2.0 * l1_offdiag(l)).margin(1e-10));
}

TEST_CASE("objective matches the complex-arithmetic oracle", "[whittle]") {
    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 10; ++rep) {
        WhittleProblem prob = random_problem(4, rng, 0.3);
        RealMatrix l = testutil::random_spd(4, rng, 1.0);
        CHECK(objective(SymmetricMatrix(l), prob) ==
              Approx(oracles::objective_complex(prob, l)).margin(1e-10));
    }
}

TEST_CASE("gradient vanishes at a constructed stationary point", "[whittle]") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 5; ++rep) {
        const Index p = 5;
        RealMatrix l0 = testutil::random_spd(p, rng, 1.0);
        ComplexMatrix d2 = testutil::random_hermitian_pd(p, rng, 1.0);
        // P = (L0 D^2 L0)^{-1} makes L0 the unregularized stationary point.
        ComplexMatrix pm = (l0.cast<Complex>() * d2 * l0.cast<Complex>()).inverse();
        pm = 0.5 * (pm + pm.adjoint().eval());
        WhittleProblem prob = make_problem(HermitianMatrix(pm, 1e-9),
                                           hermitian_sqrt(HermitianMatrix(d2, 1e-9)), 0.0);
        const SymmetricMatrix g = smooth_gradient(SymmetricMatrix(l0), prob);
        CHECK(max_abs(g.matrix()) < 1e-8);
        CHECK(kkt_residual(SymmetricMatrix(l0), prob) < 1e-8);
    }
}

TEST_CASE("gradient for diagonal data is 2P - 2I at the identity", "[whittle]") {
    const Index p = 4;
    RealMatrix diag = RealMatrix::Zero(p, p);
    diag.diagonal() << 0.5, 1.0, 2.0, 4.0;
    WhittleProblem prob = make_problem(HermitianMatrix::from_real(diag),
                                       HermitianMatrix::identity(p), 0.0);
    const SymmetricMatrix g = smooth_gradient(SymmetricMatrix::identity(p), prob);
    CHECK(max_abs(RealMatrix(g.matrix() - (2.0 * diag - 2.0 * RealMatrix::Identity(p, p)))) <
          1e-12);
}

TEST_CASE("gradient agrees with central finite differences", "[whittle]") {
    std::mt19937_64 rng(2025);
    int checked = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const Index p = 2 + static_cast<Index>(rng() % 5);
        WhittleProblem prob = random_problem(p, rng, 0.0);
        RealMatrix l = testutil::random_spd(p, rng, 1.2);
        const SymmetricMatrix ls(l);
        const RealMatrix g = smooth_gradient(ls, prob).matrix();
        for (int dir = 0; dir < 3; ++dir) {
            RealMatrix v = testutil::random_symmetric(p, rng);
            v /= v.norm();
            const double h = 1e-6 * std::max(1.0, max_abs(l));
            const double fp = objective(SymmetricMatrix(RealMatrix(l + h * v)), prob);
            const double fm = objective(SymmetricMatrix(RealMatrix(l - h * v)), prob);
            const double fd = (fp - fm) / (2.0 * h);
            const double gd = g.cwiseProduct(v).sum();
            const double rel = std::abs(fd - gd) / std::max({std::abs(fd), std::abs(gd), 1e-8});
            CHECK(rel <= 1e-5);
            ++checked;
        }
    }
    CHECK(checked == 150);
}

TEST_CASE("soft-threshold step matches a scalar prox oracle", "[whittle]") {
    // prox_{tau |.|}(c) minimizes (z - c)^2 / 2 + tau |z|; refine a grid.
    auto prox_oracle = [](double c, double tau) {
        double lo = c - 2.0 * tau - 1.0, hi = c + 2.0 * tau + 1.0;
        double best = lo;
        for (int round = 0; round < 4; ++round) {
            double bestval = 1e300;
            const double step = (hi - lo) / 2000.0;
            for (int k = 0; k <= 2000; ++k) {
                const double z = lo + step * k;
                const double val = 0.5 * (z - c) * (z - c) + tau * std::abs(z);
                if (val < bestval) {
                    bestval = val;
                    best = z;
                }
            }
            lo = best - step;
            hi = best + step;
        }
        return best;
    };
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 40; ++rep) {
        const double c = 4.0 * (testutil::uniform(rng) - 0.5);
        const double tau = 1.5 * testutil::uniform(rng);
        const double soft = std::abs(c) <= tau ? 0.0 : (c > 0 ? c - tau : c + tau);
        CHECK(soft == Approx(prox_oracle(c, tau)).margin(1e-6));
    }
}

TEST_CASE("solve with lambda=0 and D=I returns P^{-1/2}", "[whittle]") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        const Index p = 3 + static_cast<Index>(rng() % 6);
        RealMatrix pm = testutil::random_spd(p, rng, 0.7);
        WhittleProblem prob =
            make_problem(HermitianMatrix::from_real(pm), HermitianMatrix::identity(p), 0.0);
        const SolveReport rep_out = solve(prob);
        REQUIRE(rep_out.converged);
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(pm);
        const RealMatrix truth = es.eigenvectors() *
                                 es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                                 es.eigenvectors().transpose();
        CHECK((rep_out.L_hat.matrix() - truth).norm() <= 1e-6);
    }
}

TEST_CASE("large lambda empties the support", "[whittle]") {
    std::mt19937_64 rng(77);
    WhittleProblem prob = random_problem(5, rng, 0.0);
    prob.lambda = 1e6;
    const SolveReport rep = solve(prob);
    REQUIRE(rep.converged);
    CHECK(rep.support.empty());
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j)
            if (i != j) CHECK(rep.L_hat.matrix()(i, j) == 0.0);
}

TEST_CASE("solve matches the long-run subgradient oracle on chain data", "[whittle]") {
    WhittleProblem prob = chain_data_problem(6, 4000, 5, 0.12);
    SolverOptions opts;
    opts.max_iters = 100000;
    const SolveReport rep = solve(prob, opts);
    REQUIRE(rep.converged);
    const RealMatrix oracle = oracles::subgradient_descent(prob, 400000);
    CHECK((rep.L_hat.matrix() - oracle).norm() <= 1e-4);
}

TEST_CASE("monotone descent and KKT certificate", "[whittle]") {
    WhittleProblem prob = chain_data_problem(8, 2000, 9, 0.2);
    SolverOptions opts;
    opts.max_iters = 100000;
    const SolveReport rep = solve(prob, opts);
    REQUIRE(rep.converged);
    CHECK(rep.kkt_residual <= opts.grad_tol);
    for (std::size_t k = 1; k < rep.objective_trace.size(); ++k)
        CHECK(rep.objective_trace[k] <= rep.objective_trace[k - 1]);
    // Residual trace trends down (10% jitter allowance on the running best).
    double best = rep.kkt_trace.front();
    std::size_t violations = 0;
    for (double r : rep.kkt_trace) {
        if (r > 1.10 * best && r > opts.grad_tol * 10) ++violations;
        best = std::min(best, r);
    }
    CHECK(violations <= rep.kkt_trace.size() / 10);
}

TEST_CASE("kkt residual is positive away from the optimum", "[whittle]") {
    std::mt19937_64 rng(4);
    WhittleProblem prob = random_problem(4, rng, 0.1);
    CHECK(kkt_residual(SymmetricMatrix::identity(4), prob) > 1e-3);
}

TEST_CASE("two initializations agree (uniqueness)", "[whittle]") {
    for (std::uint64_t seed : {3ULL, 11ULL}) {
        for (Index p : {4, 8, 12}) {
            WhittleProblem prob = chain_data_problem(p, 1500, seed, 0.15);
            SolverOptions a;
            a.init = SolverOptions::Init::Identity;
            a.max_iters = 100000;
            a.grad_tol = 1e-8 * gradient_scale(prob);
            SolverOptions b = a;
            b.init = SolverOptions::Init::DiagScaled;
            const SolveReport ra = solve(prob, a);
            const SolveReport rb = solve(prob, b);
            REQUIRE(ra.converged);
            REQUIRE(rb.converged);
            CHECK((ra.L_hat.matrix() - rb.L_hat.matrix()).norm() <= 1e-5);
        }
    }
}

TEST_CASE("restricted solve: full support reduces to the free problem", "[whittle]") {
    WhittleProblem prob = chain_data_problem(5, 1000, 2, 0.1);
    EdgeSet full;
    for (Index i = 0; i < 5; ++i)
        for (Index j = i + 1; j < 5; ++j) full.emplace_back(i, j);
    SolverOptions opts;
    opts.max_iters = 100000;
    opts.grad_tol = 1e-9 * gradient_scale(prob);
    const SolveReport a = solve(prob, opts);
    const SolveReport b = solve_restricted(prob, full, opts);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK((a.L_hat.matrix() - b.L_hat.matrix()).norm() <= 1e-8);
}

TEST_CASE("restricted solve with empty support solves p scalar problems", "[whittle]") {
    const Index p = 5;
    RealMatrix diag = RealMatrix::Zero(p, p);
    diag.diagonal() << 0.3, 0.8, 1.5, 2.0, 5.0;
    WhittleProblem prob =
        make_problem(HermitianMatrix::from_real(diag), HermitianMatrix::identity(p), 0.2);
    const SolveReport rep = solve_restricted(prob, {}, {});
    REQUIRE(rep.converged);
    for (Index i = 0; i < p; ++i) {
        // scalar stationarity: 2 l p - 2 / l = 0 -> l = 1/sqrt(p_i)
        CHECK(rep.L_hat.matrix()(i, i) == Approx(1.0 / std::sqrt(diag(i, i))).margin(1e-7));
        for (Index j = 0; j < p; ++j)
            if (i != j) CHECK(rep.L_hat.matrix()(i, j) == 0.0);
    }
}

TEST_CASE("restricted solve keeps the iterate inside the support", "[whittle]") {
    WhittleProblem prob = chain_data_problem(8, 1500, 6, 0.05);
    const LaplacianSpec lap = chain_graph(8);
    const SolveReport rep = solve_restricted(prob, lap.edge_set, {});
    REQUIRE(rep.converged);
    std::set<Edge> allowed(lap.edge_set.begin(), lap.edge_set.end());
    for (const Edge& e : rep.support) CHECK(allowed.count(e) == 1);
}

TEST_CASE("ebic: denser penalty never selects a denser model", "[whittle]") {
    WhittleProblem prob = chain_data_problem(10, 1200, 21, 0.0);
    SolverOptions opts;
    opts.grad_tol = 1e-7 * gradient_scale(prob);
    const double lmax = lambda_max_estimate(prob, opts);
    const auto grid = log_spaced_grid(lmax, 1e-2 * lmax, 12);
    const EbicSelection g0 = ebic_select(prob, grid, 0.0, 1200, opts);
    const EbicSelection g1 = ebic_select(prob, grid, 1.0, 1200, opts);
    CHECK(g1.rows[g1.best_index].edge_count <= g0.rows[g0.best_index].edge_count);

    const EbicSelection single = ebic_select(prob, {0.3}, 0.4, 1200, opts);
    CHECK(single.lambda_star == 0.3);
}

TEST_CASE("ebic at the reference setting lands near the known good lambda", "[whittle]") {
    const Index p = 30, n = 1000;
    const LaplacianSpec lap = erdos_renyi_target_degree(p, 4, 7);
    const RealMatrix a = 0.7 * RealMatrix::Identity(p, p);
    const auto theta = hermitian_inverse(var1_psd(a, SymmetricMatrix::identity(p), 0.0));
    const auto x = simulate_injections(ProcessModel::var1(a), n, p, 100);
    const auto y = observe_potentials(lap, x);
    const auto est = averaged_periodogram(y, 0, 31);
    WhittleProblem prob = make_problem(est, theta, 0.0);
    SolverOptions opts;
    opts.grad_tol = 1e-7 * gradient_scale(prob);
    const double lmax = lambda_max_estimate(prob, opts);
    const EbicSelection sel =
        ebic_select(prob, log_spaced_grid(lmax, 5e-3 * lmax, 20), 0.4, n, opts);
    // Loose contract: log(lambda*) within +-1 of -2.
    CHECK(std::log(sel.lambda_star) >= -3.0);
    CHECK(std::log(sel.lambda_star) <= -1.0);
}

TEST_CASE("baseline recovers L* from the exact spectrum", "[whittle]") {
    const Index p = 8;
    const LaplacianSpec lap = chain_graph(p);
    const double k_const = kTwoPi * 0.09;  // Theta_X(0) for the 0.7 I VAR(1)
    const HermitianMatrix theta_x(ComplexMatrix::Identity(p, p) * k_const);
    const RealMatrix linv = lap.matrix.matrix().inverse();
    const ComplexMatrix f_y =
        linv.cast<Complex>() * (ComplexMatrix::Identity(p, p) / k_const) * linv.cast<Complex>();
    const SolveReport rep =
        two_step_baseline(HermitianMatrix(f_y, 1e-9), theta_x, 1e-12);
    CHECK(max_abs(RealMatrix(rep.L_hat.matrix() - lap.matrix.matrix())) <= 1e-8);
    CHECK(rep.support == lap.edge_set);
}

TEST_CASE("baseline scalar case is sqrt(theta_y / theta_x)", "[whittle]") {
    ComplexMatrix pm(1, 1), tx(1, 1);
    pm(0, 0) = 0.4;  // periodogram value
    tx(0, 0) = 2.5;
    const SolveReport rep = two_step_baseline(HermitianMatrix(pm), HermitianMatrix(tx), 0.0);
    const double theta_y_hat = 1.0 / 0.4;
    CHECK(rep.L_hat.matrix()(0, 0) == Approx(std::sqrt(theta_y_hat / 2.5)).margin(1e-12));
}

TEST_CASE("regularization path: extremes and warm starts", "[whittle]") {
    WhittleProblem prob = chain_data_problem(8, 1200, 3, 0.0);
    SolverOptions opts;
    opts.grad_tol = 1e-7 * gradient_scale(prob);
    const double lmax = lambda_max_estimate(prob, opts);
    const auto grid = log_spaced_grid(lmax * 1.05, 1e-2 * lmax, 10);
    const auto path = regularization_path(prob, grid, opts);
    REQUIRE(path.size() == 10);
    CHECK(path.front().ok);
    CHECK(path.front().report.support.empty());  // lambda above lambda_max
    Index densest = 0;
    for (const auto& pt : path) {
        REQUIRE(pt.ok);
        densest = std::max(densest, static_cast<Index>(pt.report.support.size()));
    }
    CHECK(static_cast<Index>(path.back().report.support.size()) == densest);

    CHECK_THROWS_AS(regularization_path(prob, {0.1, 0.5}, opts), ParameterOutOfRange);
}

TEST_CASE("problem validation errors", "[whittle]") {
    // Nonpositive periodogram diagonal.
    ComplexMatrix bad = ComplexMatrix::Identity(3, 3);
    bad(1, 1) = 0.0;
    CHECK_THROWS_AS(make_problem(HermitianMatrix(bad), HermitianMatrix::identity(3), 0.1),
                    BadProblem);
    // Indefinite D.
    ComplexMatrix nd = -ComplexMatrix::Identity(3, 3);
    CHECK_THROWS_AS(
        make_problem(HermitianMatrix::identity(3), HermitianMatrix(nd), 0.1),
        NotPositiveDefinite);
    // Negative lambda.
    CHECK_THROWS_AS(
        make_problem(HermitianMatrix::identity(3), HermitianMatrix::identity(3), -1.0),
        ParameterOutOfRange);
}
