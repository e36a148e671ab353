// Metrics (F-score, sign consistency, error norms) and the experiment
// harness: rescaled-sample-size sweeps with trial averaging, lambda policies
// (EBIC / Theorem-1 recipe / fixed), the optional two-step baseline
// comparison, and group common-network extraction.
#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "laplearn/graphs.hpp"
#include "laplearn/matcore.hpp"
#include "laplearn/panel.hpp"
#include "laplearn/procgen.hpp"
#include "laplearn/spectra.hpp"
#include "laplearn/theory.hpp"
#include "laplearn/whittle.hpp"

namespace laplearn {

struct RecoveryMetrics {
    Index tp = 0, fp = 0, fn = 0;
    double f_score = 1.0;
    bool sign_consistent = true;
    double err_max_abs = 0.0;
    double err_frobenius = 0.0;
    double err_operator2 = 0.0;
};

// Supports are compared off-diagonally; norms cover the full difference; sign
// consistency is checked on the true edges only.
inline RecoveryMetrics recovery_metrics(const SymmetricMatrix& l_hat,
                                        const SymmetricMatrix& l_star,
                                        double support_tol_rel = kSupportTolRel) {
    if (l_hat.dim() != l_star.dim())
        throw DimensionMismatch("recovery_metrics dimension mismatch");
    const EdgeSet est = support_of(l_hat, support_tol_rel * max_abs(l_hat.matrix()));
    const EdgeSet truth = support_of(l_star, support_tol_rel * max_abs(l_star.matrix()));
    RecoveryMetrics out;
    std::size_t a = 0, b = 0;
    while (a < est.size() || b < truth.size()) {
        if (a < est.size() && b < truth.size() && est[a] == truth[b]) {
            ++out.tp;
            ++a;
            ++b;
        } else if (b >= truth.size() || (a < est.size() && est[a] < truth[b])) {
            ++out.fp;
            ++a;
        } else {
            ++out.fn;
            ++b;
        }
    }
    const Index denom = 2 * out.tp + out.fp + out.fn;
    out.f_score = denom > 0 ? 2.0 * static_cast<double>(out.tp) / static_cast<double>(denom) : 1.0;
    out.sign_consistent = true;
    for (const auto& [i, j] : truth) {
        const double a_hat = l_hat.matrix()(i, j);
        const double a_star = l_star.matrix()(i, j);
        if (a_hat == 0.0 || (a_hat > 0.0) != (a_star > 0.0)) {
            out.sign_consistent = false;
            break;
        }
    }
    const RealMatrix diff = l_hat.matrix() - l_star.matrix();
    const MatrixNorms nm = norms(diff);
    out.err_max_abs = nm.max_abs;
    out.err_frobenius = nm.frobenius;
    out.err_operator2 = nm.operator2;
    return out;
}

// Edges present in strictly more than threshold_frac of the estimates.
inline EdgeSet common_network(const std::vector<EdgeSet>& estimates, double threshold_frac) {
    if (estimates.empty()) throw EmptyInput("common_network needs at least one estimate");
    if (threshold_frac <= 0.0 || threshold_frac > 1.0)
        throw ParameterOutOfRange("threshold_frac must be in (0,1]");
    std::map<Edge, Index> counts;
    for (const auto& est : estimates)
        for (const auto& e : est) ++counts[e];
    const double cut = threshold_frac * static_cast<double>(estimates.size()) + 1e-9;
    EdgeSet out;
    for (const auto& [edge, count] : counts)
        if (static_cast<double>(count) > cut) out.push_back(edge);
    return out;
}

// ---------------------------------------------------------------------------
// Shared process / graph configuration (also consumed by the CLI).
// ---------------------------------------------------------------------------

struct ProcessSpec {
    enum class Kind { IID, VAR1, VARMA22, AR1Diag };

    Kind kind = Kind::VAR1;
    double var1_coeff = 0.7;  // A = coeff I
    double rho = 0.1;         // AR1Diag: Phi_X(l) = rho^{|l|} I
    NoiseFamily noise = NoiseFamily::gaussian();
    Index burn_in = 500;

    ProcessModel model(Index p) const {
        ProcessModel m;
        switch (kind) {
            case Kind::IID:
                m = ProcessModel::iid(noise);
                break;
            case Kind::VAR1:
                m = ProcessModel::var1(var1_coeff * RealMatrix::Identity(p, p), noise);
                break;
            case Kind::VARMA22:
                m = ProcessModel::varma22_reference(p, noise);
                break;
            case Kind::AR1Diag:
                m = ProcessModel::ar1_diag(p, rho, noise);
                break;
        }
        m.burn_in = burn_in;
        return m;
    }

    HermitianMatrix f_x(Index p, double omega) const {
        switch (kind) {
            case Kind::IID:
                return HermitianMatrix(ComplexMatrix::Identity(p, p) / kTwoPi);
            case Kind::VAR1:
                return var1_psd(var1_coeff * RealMatrix::Identity(p, p),
                                SymmetricMatrix::identity(p), omega);
            case Kind::VARMA22: {
                const ProcessModel m = ProcessModel::varma22_reference(p);
                return varma22_psd(m.a1, m.a2, m.b1, m.b2, omega);
            }
            case Kind::AR1Diag:
                return var1_psd(rho * RealMatrix::Identity(p, p),
                                SymmetricMatrix(RealMatrix::Identity(p, p) * (1.0 - rho * rho)),
                                omega);
        }
        throw ConfigError("unknown process kind");
    }

    HermitianMatrix theta_x(Index p, double omega) const { return hermitian_inverse(f_x(p, omega)); }

    // Autocovariance of the observed process Y = L^{-1} X, exact for the
    // AR-type kinds, quadrature-based for VARMA.
    AutocovSequence observed_autocov(const LaplacianSpec& l_star, Index min_lags) const {
        const Index p = l_star.p;
        switch (kind) {
            case Kind::IID: {
                Eigen::LLT<RealMatrix> llt(l_star.matrix.matrix());
                const RealMatrix linv = llt.solve(RealMatrix::Identity(p, p));
                std::vector<RealMatrix> lags{linv * linv};
                return AutocovSequence(std::move(lags));
            }
            case Kind::VAR1:
                return observed_autocov_var1(var1_coeff * RealMatrix::Identity(p, p),
                                             SymmetricMatrix::identity(p), l_star.matrix,
                                             min_lags);
            case Kind::AR1Diag:
                return observed_autocov_var1(
                    rho * RealMatrix::Identity(p, p),
                    SymmetricMatrix(RealMatrix::Identity(p, p) * (1.0 - rho * rho)),
                    l_star.matrix, min_lags);
            case Kind::VARMA22: {
                // Phi_X(l) = integral of f_X(w) e^{ilw}; trapezoid over a dense grid.
                const Index grid = 4096;
                Eigen::LLT<RealMatrix> llt(l_star.matrix.matrix());
                const RealMatrix linv = llt.solve(RealMatrix::Identity(p, p));
                std::vector<ComplexMatrix> fs;
                fs.reserve(static_cast<std::size_t>(grid));
                const ProcessModel m = ProcessModel::varma22_reference(p);
                for (Index k = 0; k < grid; ++k) {
                    const double w = kTwoPi * static_cast<double>(k) / static_cast<double>(grid);
                    fs.push_back(varma22_psd(m.a1, m.a2, m.b1, m.b2, w).matrix());
                }
                std::vector<RealMatrix> lags;
                const Index lmax = std::min<Index>(min_lags, grid / 4);
                lags.reserve(static_cast<std::size_t>(lmax) + 1);
                for (Index l = 0; l <= lmax; ++l) {
                    ComplexMatrix acc = ComplexMatrix::Zero(p, p);
                    for (Index k = 0; k < grid; ++k) {
                        const double w = kTwoPi * static_cast<double>(k) / static_cast<double>(grid);
                        acc += fs[static_cast<std::size_t>(k)] *
                               std::polar(1.0, w * static_cast<double>(l));
                    }
                    acc *= kTwoPi / static_cast<double>(grid);
                    RealMatrix phi = linv * acc.real() * linv;
                    if (l == 0) phi = 0.5 * (phi + phi.transpose()).eval();
                    lags.push_back(std::move(phi));
                }
                return AutocovSequence(std::move(lags));
            }
        }
        throw ConfigError("unknown process kind");
    }

    TailFamily tail_family() const {
        switch (noise.kind) {
            case NoiseFamily::Kind::Gaussian: return TailFamily::Gaussian;
            case NoiseFamily::Kind::Laplace: return TailFamily::SubGaussian;
            case NoiseFamily::Kind::SymmetrizedWeibull: return TailFamily::SubExponential;
            case NoiseFamily::Kind::StudentT: return TailFamily::FiniteFourth;
        }
        return TailFamily::Gaussian;
    }

    std::string tag() const {
        switch (kind) {
            case Kind::IID: return "iid";
            case Kind::VAR1: return "var1(" + format_double(var1_coeff) + ")";
            case Kind::VARMA22: return "varma22";
            case Kind::AR1Diag: return "ar1diag(" + format_double(rho) + ")";
        }
        return "unknown";
    }
};

struct GraphSpec {
    enum class Kind { ErdosRenyi, SmallWorld, ScaleFree, GridChain, Chain, File };

    Kind kind = Kind::ErdosRenyi;
    Index p = 30;
    double prob = -1.0;         // ER edge probability; <0 derives d_target/(p-1)
    Index degree_target = 4;    // 0 disables resampling
    Index k = 1;                // small-world lattice neighbors per side
    double beta = 0.2;          // small-world rewire probability
    Index m_attach = 2;         // scale-free attachment
    std::uint64_t seed = 7;
    std::string file;           // adjacency or edge-list path
    double epsilon = 2.0;       // benchmark diagonal shift

    LaplacianSpec build() const {
        switch (kind) {
            case Kind::ErdosRenyi: {
                ErdosRenyi er;
                er.p = p;
                er.prob = prob > 0.0 ? prob
                                     : static_cast<double>(degree_target) /
                                           static_cast<double>(p - 1);
                er.degree_target = degree_target;
                return gen_graph(er, seed);
            }
            case Kind::SmallWorld: {
                SmallWorld sw;
                sw.p = p;
                sw.k = k;
                sw.beta = beta;
                sw.degree_target = degree_target;
                return gen_graph(sw, seed);
            }
            case Kind::ScaleFree: {
                ScaleFree sf;
                sf.p = p;
                sf.m_attach = m_attach;
                sf.degree_target = degree_target;
                return gen_graph(sf, seed);
            }
            case Kind::GridChain:
                return gen_graph(GridChain{p}, seed);
            case Kind::Chain:
                return chain_graph(p);
            case Kind::File: {
                const AdjacencyLoadResult loaded = load_adjacency_csv(file);
                return benchmark_laplacian(loaded.adjacency, epsilon,
                                           std::filesystem::path(file).filename().string());
            }
        }
        throw ConfigError("unknown graph kind");
    }
};

// ---------------------------------------------------------------------------
// Sweep harness.
// ---------------------------------------------------------------------------

enum class LambdaPolicy { Ebic, Theorem1, Fixed };

struct SweepConfig {
    GraphSpec graph;
    ProcessSpec process;
    std::vector<Index> n_grid;
    int trials = 50;
    LambdaPolicy lambda_policy = LambdaPolicy::Ebic;
    double ebic_gamma = 0.4;
    double fixed_lambda = 0.1;
    std::size_t lambda_count = 15;
    double lambda_min_ratio = 5e-3;
    Index m_fixed = 0;  // 0: m = floor(sqrt(n))
    Index omega_index = 0;
    std::uint64_t base_seed = 1;
    bool resample_graph = false;
    double support_tol_rel = kSupportTolRel;
    double tau = 3.0;
    int threads = 0;  // 0: hardware concurrency
    bool compare_baseline = false;
    double ridge_eps = -1.0;
    SolverOptions solver;
};

struct SweepCell {
    Index n = 0;
    int trial = 0;
    bool ok = false;
    std::string error;
    double f_score = 0.0;
    double frob = 0.0;
    double maxabs = 0.0;
    double op2 = 0.0;
    double lambda_used = 0.0;
    Index m_used = 0;
    bool converged = false;
    bool sign_consistent = false;
    double baseline_f = std::numeric_limits<double>::quiet_NaN();
    double baseline_frob = std::numeric_limits<double>::quiet_NaN();
};

struct SweepAggregate {
    Index n = 0;
    double rescaled_d3logp = 0.0;
    double rescaled_logp = 0.0;
    int successes = 0;
    double mean_f = 0.0, std_f = 0.0;
    double mean_frob = 0.0, std_frob = 0.0;
    double mean_maxabs = 0.0;
    double mean_op2 = 0.0;
    double mean_baseline_f = std::numeric_limits<double>::quiet_NaN();
    double mean_baseline_frob = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
    std::vector<SweepCell> cells;          // keyed by (n, trial), sorted
    std::vector<SweepAggregate> aggregates;
    LaplacianSpec graph;                   // the fixed graph (first trial's when resampled)
};

namespace detail {

inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(count)));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    std::atomic<bool> failed{false};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) break;
                try {
                    fn(i);
                } catch (...) {
                    failed.store(true);
                    throw;  // no recovery story for non-cell exceptions
                }
            }
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

inline SweepResult run_sweep(const SweepConfig& cfg) {
    if (cfg.n_grid.empty()) throw ConfigError("n_grid is empty");
    for (std::size_t k = 1; k < cfg.n_grid.size(); ++k)
        if (cfg.n_grid[k] <= cfg.n_grid[k - 1]) throw ConfigError("n_grid must be increasing");
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");

    SweepResult result;
    result.graph = cfg.graph.build();
    const Index p = result.graph.p;
    const double d = static_cast<double>(result.graph.max_degree);
    const double logp = std::log(static_cast<double>(p));

    // Per-trial graphs when resampling is requested.
    std::vector<LaplacianSpec> graphs;
    graphs.reserve(static_cast<std::size_t>(cfg.trials));
    for (int t = 0; t < cfg.trials; ++t) {
        if (cfg.resample_graph && t > 0) {
            GraphSpec g = cfg.graph;
            g.seed = cfg.graph.seed + static_cast<std::uint64_t>(t);
            graphs.push_back(g.build());
        } else {
            graphs.push_back(result.graph);
        }
    }

    // omega_j = 2 pi j / n varies with n for j != 0, so Theta_X is per-n.
    std::vector<HermitianMatrix> theta_per_n(cfg.n_grid.size());
    std::vector<double> theorem1_lambda_per_n(cfg.n_grid.size(), 0.0);
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
        const Index n = cfg.n_grid[ni];
        const double omega = kTwoPi * static_cast<double>(cfg.omega_index) / static_cast<double>(n);
        theta_per_n[ni] = cfg.process.theta_x(p, omega);
        if (cfg.lambda_policy == LambdaPolicy::Theorem1) {
            const Index m = cfg.m_fixed > 0
                                ? cfg.m_fixed
                                : static_cast<Index>(std::floor(std::sqrt(static_cast<double>(n))));
            const AutocovSequence acov = cfg.process.observed_autocov(result.graph, n + 1);
            const TheoryReport tr = theory_report(result.graph, theta_per_n[ni], acov, n, m,
                                                  cfg.tau, cfg.process.tail_family());
            if (tr.alpha <= 0.0)
                throw BadProblem("theorem1 lambda policy needs alpha > 0");
            theorem1_lambda_per_n[ni] = tr.lambda_theorem1;
        }
    }

    const std::size_t n_cells = cfg.n_grid.size() * static_cast<std::size_t>(cfg.trials);
    result.cells.resize(n_cells);

    detail::parallel_for(n_cells, cfg.threads, [&](std::size_t ci) {
        const std::size_t ni = ci / static_cast<std::size_t>(cfg.trials);
        const int trial = static_cast<int>(ci % static_cast<std::size_t>(cfg.trials));
        const Index n = cfg.n_grid[ni];
        SweepCell& cell = result.cells[ci];
        cell.n = n;
        cell.trial = trial;
        try {
            const LaplacianSpec& lap = graphs[static_cast<std::size_t>(trial)];
            const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
            const TimeSeriesPanel x = simulate_injections(cfg.process.model(p), n, p, seed);
            const TimeSeriesPanel y = observe_potentials(lap, x);
            const Index m = cfg.m_fixed > 0
                                ? cfg.m_fixed
                                : static_cast<Index>(std::floor(std::sqrt(static_cast<double>(n))));
            cell.m_used = m;
            const PeriodogramEstimate est = averaged_periodogram(y, cfg.omega_index, m);
            WhittleProblem prob = make_problem(est, theta_per_n[ni], 0.0);
            SolverOptions solver = cfg.solver;
            solver.grad_tol = cfg.solver.grad_tol * gradient_scale(prob);

            SolveReport fit;
            switch (cfg.lambda_policy) {
                case LambdaPolicy::Ebic: {
                    const double lmax = lambda_max_estimate(prob, solver);
                    const auto grid = log_spaced_grid(lmax * 1.02, lmax * cfg.lambda_min_ratio,
                                                      cfg.lambda_count);
                    const EbicSelection sel = ebic_select(prob, grid, cfg.ebic_gamma, n, solver);
                    fit = sel.fits[sel.best_index].report;
                    break;
                }
                case LambdaPolicy::Theorem1: {
                    prob.lambda = theorem1_lambda_per_n[ni];
                    fit = solve(prob, solver);
                    break;
                }
                case LambdaPolicy::Fixed: {
                    prob.lambda = cfg.fixed_lambda;
                    fit = solve(prob, solver);
                    break;
                }
            }
            cell.lambda_used = fit.lambda;
            cell.converged = fit.converged;
            const RecoveryMetrics mrec =
                recovery_metrics(fit.L_hat, lap.matrix, cfg.support_tol_rel);
            cell.f_score = mrec.f_score;
            cell.frob = mrec.err_frobenius;
            cell.maxabs = mrec.err_max_abs;
            cell.op2 = mrec.err_operator2;
            cell.sign_consistent = mrec.sign_consistent;
            if (cfg.compare_baseline) {
                const SolveReport base =
                    two_step_baseline(est.matrix, theta_per_n[ni], cfg.ridge_eps,
                                      cfg.support_tol_rel);
                const RecoveryMetrics mb =
                    recovery_metrics(base.L_hat, lap.matrix, cfg.support_tol_rel);
                cell.baseline_f = mb.f_score;
                cell.baseline_frob = mb.err_frobenius;
            }
            cell.ok = fit.converged;
            if (!cell.ok) cell.error = "solver did not converge";
        } catch (const Error& e) {
            cell.ok = false;
            cell.error = e.what();
        }
    });

    // Aggregates over successful cells only, with the success count reported.
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
        SweepAggregate agg;
        agg.n = cfg.n_grid[ni];
        agg.rescaled_d3logp = static_cast<double>(agg.n) / (d * d * d * logp);
        agg.rescaled_logp = static_cast<double>(agg.n) / logp;
        std::vector<const SweepCell*> ok_cells;
        for (int t = 0; t < cfg.trials; ++t) {
            const SweepCell& c =
                result.cells[ni * static_cast<std::size_t>(cfg.trials) + static_cast<std::size_t>(t)];
            if (c.ok) ok_cells.push_back(&c);
        }
        agg.successes = static_cast<int>(ok_cells.size());
        if (!ok_cells.empty()) {
            double sf = 0, sfrob = 0, smax = 0, sop = 0, sbf = 0, sbfr = 0;
            int nb = 0;
            for (const auto* c : ok_cells) {
                sf += c->f_score;
                sfrob += c->frob;
                smax += c->maxabs;
                sop += c->op2;
                if (!std::isnan(c->baseline_f)) {
                    sbf += c->baseline_f;
                    sbfr += c->baseline_frob;
                    ++nb;
                }
            }
            const double cnt = static_cast<double>(ok_cells.size());
            agg.mean_f = sf / cnt;
            agg.mean_frob = sfrob / cnt;
            agg.mean_maxabs = smax / cnt;
            agg.mean_op2 = sop / cnt;
            double vf = 0, vfrob = 0;
            for (const auto* c : ok_cells) {
                vf += (c->f_score - agg.mean_f) * (c->f_score - agg.mean_f);
                vfrob += (c->frob - agg.mean_frob) * (c->frob - agg.mean_frob);
            }
            agg.std_f = std::sqrt(vf / cnt);
            agg.std_frob = std::sqrt(vfrob / cnt);
            if (nb > 0) {
                agg.mean_baseline_f = sbf / nb;
                agg.mean_baseline_frob = sbfr / nb;
            }
        }
        result.aggregates.push_back(agg);
    }
    return result;
}

// Per-cell CSV with the rescaled abscissas attached.
inline void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    const double d = static_cast<double>(result.graph.max_degree);
    const double logp = std::log(static_cast<double>(result.graph.p));
    f << "n,rescaled_d3logp,rescaled_logp,trial,f_score,frob,maxabs,op2,lambda_used,m_used,"
         "converged,ok,baseline_f,baseline_frob\n";
    for (const auto& c : result.cells) {
        f << c.n << ',' << format_double(static_cast<double>(c.n) / (d * d * d * logp)) << ','
          << format_double(static_cast<double>(c.n) / logp) << ',' << c.trial << ','
          << format_double(c.f_score) << ',' << format_double(c.frob) << ','
          << format_double(c.maxabs) << ',' << format_double(c.op2) << ','
          << format_double(c.lambda_used) << ',' << c.m_used << ',' << (c.converged ? 1 : 0)
          << ',' << (c.ok ? 1 : 0) << ',' << format_double(c.baseline_f) << ','
          << format_double(c.baseline_frob) << '\n';
    }
}

inline void write_aggregate_csv(const std::filesystem::path& path, const SweepResult& result) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << "n,rescaled_d3logp,rescaled_logp,successes,mean_f,std_f,mean_frob,std_frob,"
         "mean_maxabs,mean_op2,mean_baseline_f,mean_baseline_frob\n";
    for (const auto& a : result.aggregates) {
        f << a.n << ',' << format_double(a.rescaled_d3logp) << ','
          << format_double(a.rescaled_logp) << ',' << a.successes << ','
          << format_double(a.mean_f) << ',' << format_double(a.std_f) << ','
          << format_double(a.mean_frob) << ',' << format_double(a.std_frob) << ','
          << format_double(a.mean_maxabs) << ',' << format_double(a.mean_op2) << ','
          << format_double(a.mean_baseline_f) << ',' << format_double(a.mean_baseline_frob)
          << '\n';
    }
}

}  // namespace laplearn
