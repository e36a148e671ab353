#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "laplearn/graphs.hpp"
#include "laplearn/procgen.hpp"
#include "laplearn/spectra.hpp"
#include "laplearn/whittle.hpp"
#include "testutil.hpp"

using namespace laplearn;
using Catch::Approx;

namespace {
const std::filesystem::path kDataDir = LAPLEARN_DATA_DIR;
}

TEST_CASE("path Laplacian before perturbation matches the textbook matrix", "[graphs]") {
    const LaplacianSpec spec = gen_graph(SmallWorld{3, 1, 0.0, 0}, 1);
    RealMatrix expected(3, 3);
    expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    expected.diagonal().array() += 0.1;
    CHECK(max_abs(RealMatrix(spec.matrix.matrix() - expected)) < 1e-15);
    CHECK(spec.max_degree == 2);
    CHECK(spec.edge_set == EdgeSet{{0, 1}, {1, 2}});
}

TEST_CASE("Erdos-Renyi generator hits the degree target and stays PD", "[graphs]") {
    const LaplacianSpec spec = erdos_renyi_target_degree(30, 4, 7);
    CHECK(spec.p == 30);
    CHECK(spec.max_degree >= 3);
    CHECK(spec.max_degree <= 5);
    CHECK(detail::is_spd(spec.matrix.matrix()));
    // Determinism.
    const LaplacianSpec again = erdos_renyi_target_degree(30, 4, 7);
    CHECK(spec.matrix.matrix() == again.matrix.matrix());
}

TEST_CASE("grid_chain has maximum degree four", "[graphs]") {
    const LaplacianSpec spec = gen_graph(GridChain{30}, 0);
    CHECK(spec.max_degree == 4);
    CHECK(detail::is_spd(spec.matrix.matrix()));
}

TEST_CASE("small-world and scale-free generators hit their degree bands", "[graphs]") {
    const LaplacianSpec sw = gen_graph(SmallWorld{30, 1, 0.2, 3}, 11);
    CHECK(sw.max_degree >= 2);
    CHECK(sw.max_degree <= 4);
    const LaplacianSpec sf = gen_graph(ScaleFree{30, 2, 9}, 13);
    CHECK(sf.max_degree >= 8);
    CHECK(sf.max_degree <= 10);
}

TEST_CASE("combinatorial synthetics have row sums equal to the perturbation", "[graphs]") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const LaplacianSpec spec = erdos_renyi_target_degree(20, 4, seed);
        const RealMatrix& l = spec.matrix.matrix();
        for (Index i = 0; i < spec.p; ++i) {
            // Integer degree terms cancel exactly; the 0.1 shift itself rounds
            // once when added to the degree, hence the 1e-14 slack.
            CHECK(std::abs(l.row(i).sum() - 0.1) < 1e-14);
            for (Index j = 0; j < spec.p; ++j)
                if (i != j) CHECK((l(i, j) == 0.0 || l(i, j) == -1.0));
        }
    }
}

TEST_CASE("benchmark_laplacian is adjacency plus shift", "[graphs]") {
    // Empty graph: L* = I.
    const LaplacianSpec empty =
        benchmark_laplacian(SymmetricMatrix(RealMatrix::Zero(4, 4)), 1.0, "empty");
    CHECK(max_abs(RealMatrix(empty.matrix.matrix() - RealMatrix::Identity(4, 4))) == 0.0);
    CHECK(empty.edge_set.empty());

    RealMatrix a = RealMatrix::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1.0;
    a(1, 2) = a(2, 1) = 1.0;
    CHECK_THROWS_AS(benchmark_laplacian(SymmetricMatrix(a), 0.5, "path"), NotPositiveDefinite);
    const LaplacianSpec ok = benchmark_laplacian(SymmetricMatrix(a), 2.0, "path");
    CHECK(ok.max_degree == 2);
    CHECK(ok.matrix.matrix()(0, 0) == 2.0);
    CHECK(ok.matrix.matrix()(0, 1) == 1.0);
}

TEST_CASE("benchmark files reproduce the published (p, |E|, d) triples", "[graphs]") {
    struct Row {
        const char* file;
        double epsilon;
        Index p, edges, degree;
    };
    const Row rows[] = {{"power_ieee33.csv", 2.0, 33, 32, 3},
                        {"water_bellingham.csv", 2.0, 121, 162, 6},
                        {"brain_aal90.csv", 3.0, 90, 141, 7}};
    for (const Row& r : rows) {
        const AdjacencyLoadResult loaded = load_adjacency_csv(kDataDir / r.file);
        const LaplacianSpec spec = benchmark_laplacian(loaded.adjacency, r.epsilon, r.file);
        CHECK(spec.p == r.p);
        CHECK(static_cast<Index>(spec.edge_set.size()) == r.edges);
        CHECK(spec.max_degree == r.degree);
        CHECK(detail::is_spd(spec.matrix.matrix()));
    }
}

TEST_CASE("load_adjacency_csv reads edge lists and matrices", "[graphs]") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "laplearn_graphs_test";
    fs::create_directories(dir);

    {
        std::ofstream f(dir / "edges.csv");
        f << "0,1\n1,2\n";
    }
    const AdjacencyLoadResult el = load_adjacency_csv(dir / "edges.csv");
    CHECK(el.adjacency.dim() == 3);
    CHECK(el.adjacency.matrix()(0, 1) == 1.0);
    CHECK(el.adjacency.matrix()(1, 2) == 1.0);
    CHECK(el.adjacency.matrix()(0, 2) == 0.0);

    {
        std::ofstream f(dir / "asym.csv");
        // 6x6 binary matrix with (5,3)=1 but (3,5)=0: symmetrized by OR.
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) {
                f << ((i == 5 && j == 3) ? 1 : 0);
                if (j < 5) f << ',';
            }
            f << '\n';
        }
    }
    const AdjacencyLoadResult am = load_adjacency_csv(dir / "asym.csv");
    CHECK(am.symmetrized_entries == 1);
    CHECK(am.adjacency.matrix()(3, 5) == 1.0);

    {
        std::ofstream f(dir / "bad.csv");
        f << "0,1\n1,x\n";
    }
    try {
        load_adjacency_csv(dir / "bad.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("support_of analytic cases", "[graphs]") {
    CHECK(support_of(SymmetricMatrix::identity(4)).empty());
    const LaplacianSpec path = chain_graph(3);
    CHECK(support_of(path.matrix) == EdgeSet{{0, 1}, {1, 2}});
}

TEST_CASE("support of a converged estimate is stable across thresholds", "[graphs]") {
    const Index p = 10, n = 4000;
    const LaplacianSpec lap = chain_graph(p);
    const TimeSeriesPanel x =
        simulate_injections(ProcessModel::var1(0.7 * RealMatrix::Identity(p, p)), n, p, 42);
    const TimeSeriesPanel y = observe_potentials(lap, x);
    const auto est = averaged_periodogram(y, 0, 63);
    const auto theta_x = hermitian_inverse(var1_psd(0.7 * RealMatrix::Identity(p, p),
                                                    SymmetricMatrix::identity(p), 0.0));
    WhittleProblem prob = make_problem(est, theta_x, 0.0);
    const double lmax = lambda_max_estimate(prob);
    const EbicSelection sel =
        ebic_select(prob, log_spaced_grid(lmax, 5e-3 * lmax, 15), 0.4, n);
    const SolveReport rep = sel.fits[sel.best_index].report;
    REQUIRE(rep.converged);
    const double scale = max_abs(rep.L_hat.matrix());
    const EdgeSet lo = support_of(rep.L_hat, 1e-6 * scale);
    const EdgeSet hi = support_of(rep.L_hat, 1e-4 * scale);
    CHECK(lo == hi);
}
