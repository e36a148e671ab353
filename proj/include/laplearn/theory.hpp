// Computable diagnostics for the estimator's assumptions and proof
// quantities: the log-det Hessian Gamma* = L*^{-1} (x) L*^{-1}, mutual
// incoherence, the condition-number bound, dependence measures Omega_n / L_n,
// deviation thresholds, and the primal-dual witness feasibility check.
//
// vec convention is column-major: entry (i,j) of a p x p matrix sits at
// position i + p*j.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "laplearn/graphs.hpp"
#include "laplearn/matcore.hpp"
#include "laplearn/spectra.hpp"
#include "laplearn/whittle.hpp"

namespace laplearn {

inline constexpr Index kHessianDimCap = 64;  // Gamma* is p^2 x p^2

inline double c_alpha(double alpha) {
    if (alpha <= 0.0) throw ParameterOutOfRange("C_alpha requires alpha > 0");
    return 1.0 + 24.0 / alpha;
}

// Gamma* = L^{-1} (x) L^{-1}, the Hessian of log det at L.
inline RealMatrix hessian_gamma(const SymmetricMatrix& l_star, Index dim_cap = kHessianDimCap) {
    const Index p = l_star.dim();
    if (p > dim_cap)
        throw DimensionOverflow("hessian_gamma capped at p=" + std::to_string(dim_cap));
    Eigen::LLT<RealMatrix> llt(l_star.matrix());
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("L* is not PD");
    const RealMatrix linv = llt.solve(RealMatrix::Identity(p, p));
    return kron(linv, linv, dim_cap * dim_cap);
}

namespace detail {

inline Index vec_pos(Index i, Index j, Index p) { return i + p * j; }

// Augmented edge set in vec positions: both orderings of every off-diagonal
// edge plus the full diagonal.
inline std::vector<Index> augmented_positions(const EdgeSet& edges, Index p) {
    std::vector<Index> pos;
    pos.reserve(2 * edges.size() + static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) pos.push_back(vec_pos(i, i, p));
    for (const auto& [i, j] : edges) {
        pos.push_back(vec_pos(i, j, p));
        pos.push_back(vec_pos(j, i, p));
    }
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    return pos;
}

}  // namespace detail

// alpha = 1 - |||Gamma*_{E^c E} (Gamma*_{EE})^{-1}|||_inf over the augmented
// edge set. alpha > 0 is the mutual incoherence condition; values <= 0 are
// reported, not errors.
inline double incoherence_alpha(const SymmetricMatrix& l_star, const EdgeSet& edges,
                                Index dim_cap = kHessianDimCap) {
    const Index p = l_star.dim();
    const RealMatrix gamma = hessian_gamma(l_star, dim_cap);
    const auto e_pos = detail::augmented_positions(edges, p);
    std::vector<std::uint8_t> in_e(static_cast<std::size_t>(p * p), 0);
    for (Index q : e_pos) in_e[static_cast<std::size_t>(q)] = 1;
    std::vector<Index> ec_pos;
    for (Index q = 0; q < p * p; ++q)
        if (!in_e[static_cast<std::size_t>(q)]) ec_pos.push_back(q);
    if (ec_pos.empty()) return 1.0;  // fully dense support: nothing to couple into

    const auto ne = static_cast<Index>(e_pos.size());
    const auto nc = static_cast<Index>(ec_pos.size());
    RealMatrix gee(ne, ne), gce(nc, ne);
    for (Index a = 0; a < ne; ++a) {
        for (Index b = 0; b < ne; ++b) gee(a, b) = gamma(e_pos[a], e_pos[b]);
        for (Index c = 0; c < nc; ++c) gce(c, a) = gamma(ec_pos[c], e_pos[a]);
    }
    Eigen::FullPivLU<RealMatrix> lu(gee);
    if (!lu.isInvertible()) throw SingularSubHessian("Gamma*_{EE} is singular");
    // M = Gamma_{E^c E} Gamma_{EE}^{-1}; Gamma_{EE} is symmetric.
    const RealMatrix m = lu.solve(gce.transpose()).transpose();
    return 1.0 - nu_norm(m);
}

inline double incoherence_alpha(const LaplacianSpec& spec, Index dim_cap = kHessianDimCap) {
    return incoherence_alpha(spec.matrix, spec.edge_set, dim_cap);
}

struct KappaCheck {
    double kappa = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// [A3]: kappa(Gamma*) <= 1 / (4 d nu_{D^2} ||Theta_Y^{-1}||_inf C_alpha).
// The row-sum norm of a Kronecker product factorizes, so
// kappa = nu(L^{-1})^2 nu(L)^2 without forming Gamma*.
inline KappaCheck kappa_check(const SymmetricMatrix& l_star, const HermitianMatrix& d_sqrt,
                              const HermitianMatrix& theta_y, Index max_degree, double alpha) {
    const Index p = l_star.dim();
    Eigen::LLT<RealMatrix> llt(l_star.matrix());
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("L* is not PD");
    const RealMatrix linv = llt.solve(RealMatrix::Identity(p, p));
    KappaCheck out;
    const double nu_l = nu_norm(l_star.matrix());
    const double nu_linv = nu_norm(linv);
    out.kappa = nu_l * nu_l * nu_linv * nu_linv;
    ComplexMatrix dsq = d_sqrt.matrix() * d_sqrt.matrix();
    const double nu_d2 = nu_norm(dsq);
    const double f_y_maxabs = max_abs(hermitian_inverse(theta_y).matrix());
    const double denom = 4.0 * static_cast<double>(max_degree) * nu_d2 * f_y_maxabs * c_alpha(alpha);
    out.rhs = denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
    out.holds = out.kappa <= out.rhs;
    return out;
}

struct DependenceMeasures {
    double omega_n = 0.0;  // max_{r,s} sum_{|l|<n} |l| |Phi_{rs}(l)|
    double l_n = 0.0;      // max_{r,s} sum_{|l|>n} |Phi_{rs}(l)|
    bool omega_exact = false;
    bool l_n_lower_bound_only = false;  // tail beyond L_max not negligible
    double tail_magnitude = 0.0;        // max |Phi(L_max)| entry
};

inline DependenceMeasures dependence_measures(const AutocovSequence& acov_y, Index n) {
    if (n < 1) throw ParameterOutOfRange("n must be >= 1");
    const Index p = acov_y.dim();
    const Index lmax = acov_y.max_lag();
    RealMatrix omega_acc = RealMatrix::Zero(p, p);
    RealMatrix tail_acc = RealMatrix::Zero(p, p);
    for (Index l = 1; l <= lmax; ++l) {
        const RealMatrix abs_l = acov_y.phi(l).cwiseAbs();
        // |Phi_{rs}(l)| + |Phi_{rs}(-l)| entrywise.
        const RealMatrix both = abs_l + abs_l.transpose();
        if (l < n) omega_acc += static_cast<double>(l) * both;
        if (l > n) tail_acc += both;
    }
    DependenceMeasures out;
    out.omega_n = max_abs(omega_acc);
    out.l_n = max_abs(tail_acc);
    out.omega_exact = lmax >= n - 1;
    out.tail_magnitude = max_abs(acov_y.phi(lmax));
    const double scale = std::max(max_abs(acov_y.phi(0)), 1e-300);
    out.l_n_lower_bound_only = out.tail_magnitude > 1e-14 * scale;
    return out;
}

// Closed-form route for VAR(1) injections observed through L*: the Y
// autocovariance is L*^{-1} A^l Phi_X(0) L*^{-1}, summed until the geometric
// tail drops below machine precision.
inline AutocovSequence observed_autocov_var1(const RealMatrix& a, const SymmetricMatrix& sigma,
                                             const SymmetricMatrix& l_star, Index min_lags) {
    const double radius = detail::spectral_radius(a);
    if (radius >= 1.0 - 1e-8) throw UnstableProcess("VAR(1) spectral radius >= 1");
    Index lmax = min_lags;
    const double needed = std::log(1e-18) / std::log(std::max(radius, 1e-6));
    lmax = std::max(lmax, static_cast<Index>(needed) + 2);
    AutocovSequence acov_x = var1_autocov(a, sigma, lmax);
    Eigen::LLT<RealMatrix> llt(l_star.matrix());
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("L* is not PD");
    const Index p = l_star.dim();
    const RealMatrix linv = llt.solve(RealMatrix::Identity(p, p));
    std::vector<RealMatrix> lags;
    lags.reserve(static_cast<std::size_t>(lmax) + 1);
    for (Index l = 0; l <= lmax; ++l) lags.push_back(linv * acov_x.phi(l) * linv);
    lags[0] = 0.5 * (lags[0] + lags[0].transpose()).eval();
    return AutocovSequence(std::move(lags));
}

enum class TailFamily { Gaussian, SubGaussian, SubExponential, FiniteFourth };

// Deviation threshold delta_{Theta_Y^{-1}}(m,n,p): the family-specific
// concentration term plus the bias term
// ((m + 1/2pi)/n) Omega_n + (1/2pi) L_n. The Gaussian form carries no
// ||| . |||_inf prefactor; the linear-process forms do.
inline double delta_threshold(double nu_theta_y_inv, Index m, Index n, Index p, double tau,
                              TailFamily family, const DependenceMeasures& deps,
                              double rho = 1.0) {
    if (tau <= 2.0) throw ParameterOutOfRange("tau must exceed 2");
    if (m < 1 || n < 1 || p < 1) throw ParameterOutOfRange("m, n, p must be >= 1");
    const double logp = std::log(static_cast<double>(p));
    const double sqrt_m = std::sqrt(static_cast<double>(m));
    double lead = 0.0;
    switch (family) {
        case TailFamily::Gaussian:
            lead = std::sqrt(tau * logp / static_cast<double>(m));
            break;
        case TailFamily::SubGaussian:
            lead = nu_theta_y_inv * std::sqrt(tau * logp) / sqrt_m;
            break;
        case TailFamily::SubExponential:
            lead = nu_theta_y_inv * std::pow(tau * logp, 2.0 + 2.0 * rho) / sqrt_m;
            break;
        case TailFamily::FiniteFourth:
            lead = nu_theta_y_inv * std::pow(static_cast<double>(p), 1.0 + tau) / sqrt_m;
            break;
    }
    const double bias = (static_cast<double>(m) + 1.0 / kTwoPi) / static_cast<double>(n) * deps.omega_n +
                        deps.l_n / kTwoPi;
    return lead + bias;
}

// lambda_n = 96 nu_{D^2} nu_{L*} delta / alpha (Theorem-1 recipe).
inline double theorem1_lambda(double nu_d2, double nu_lstar, double delta, double alpha) {
    if (nu_d2 <= 0.0 || nu_lstar <= 0.0 || delta <= 0.0 || alpha <= 0.0)
        throw ParameterOutOfRange("theorem1_lambda inputs must be positive");
    return 96.0 * nu_d2 * nu_lstar * delta / alpha;
}

struct NuConstants {
    double nu_lstar = 0.0;
    double nu_lstar_inv = 0.0;
    double nu_d2 = 0.0;
    double nu_gamma_inv = 0.0;
};

inline NuConstants nu_constants(const SymmetricMatrix& l_star, const HermitianMatrix& d_sqrt) {
    const Index p = l_star.dim();
    Eigen::LLT<RealMatrix> llt(l_star.matrix());
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("L* is not PD");
    const RealMatrix linv = llt.solve(RealMatrix::Identity(p, p));
    NuConstants out;
    out.nu_lstar = nu_norm(l_star.matrix());
    out.nu_lstar_inv = nu_norm(linv);
    ComplexMatrix dsq = d_sqrt.matrix() * d_sqrt.matrix();
    out.nu_d2 = nu_norm(dsq);
    // Gamma*^{-1} = L* (x) L*, and the row-sum norm factorizes.
    out.nu_gamma_inv = out.nu_lstar * out.nu_lstar;
    return out;
}

inline double zeta_constant(const NuConstants& nu, double alpha) {
    const double c2 = c_alpha(alpha) * c_alpha(alpha);
    const double z1 = nu.nu_gamma_inv * nu.nu_lstar_inv * nu.nu_lstar * nu.nu_d2 * c2;
    const double z2 = nu.nu_gamma_inv * nu.nu_gamma_inv * std::pow(nu.nu_lstar_inv, 3) *
                      nu.nu_lstar * nu.nu_d2 * c2;
    return std::max(z1, z2);
}

struct WitnessQuantities {
    ComplexMatrix w;        // P - Theta_Y^{-1}
    RealMatrix delta;       // L_tilde - L*
    RealMatrix r_delta;     // quadratic remainder of the log-det gradient
    double w_max_abs = 0.0;
    double delta_max_abs = 0.0;
    double r_delta_max_abs = 0.0;
    double identity_residual = 0.0;  // two evaluation routes of R(Delta)
};

struct WitnessCheck {
    WitnessQuantities q;
    double dual_max = 0.0;
    bool strict_feasible = false;
    double suff_bound = 0.0;  // alpha lambda / 24
    double q1 = 0.0, q2 = 0.0, q3 = 0.0;
    bool suff_conditions_hold = false;
    bool lemma3_applicable = false;
    bool lemma3_bound_holds = false;
    double alpha = 0.0;
    SolveReport restricted;
};

// Primal-dual witness: solve the support-restricted problem at the true edge
// set, then check strict dual feasibility max |Z_tilde_{E^c}| < 1 with
// lambda Z_ij = -2[Psi1 L~ P1]_ij + 2[Psi2 L~ P2]_ij + 2[L~^{-1}]_ij.
inline WitnessCheck witness_check(const LaplacianSpec& l_star, const WhittleProblem& prob,
                                  double lambda, const SolverOptions& opts = {}) {
    if (lambda <= 0.0) throw ParameterOutOfRange("witness check needs lambda > 0");
    const Index p = l_star.p;
    if (p != prob.dim()) throw DimensionMismatch("L* and problem disagree");
    WhittleProblem rprob = prob;
    rprob.lambda = lambda;
    WitnessCheck out;
    out.restricted = solve_restricted(rprob, l_star.edge_set, opts);
    const RealMatrix& lt = out.restricted.L_hat.matrix();

    Eigen::LLT<RealMatrix> llt_t(lt);
    if (llt_t.info() != Eigen::Success) throw NotPositiveDefinite("restricted solution not PD");
    const RealMatrix lt_inv = llt_t.solve(RealMatrix::Identity(p, p));
    Eigen::LLT<RealMatrix> llt_s(l_star.matrix.matrix());
    if (llt_s.info() != Eigen::Success) throw NotPositiveDefinite("L* is not PD");
    const RealMatrix ls_inv = llt_s.solve(RealMatrix::Identity(p, p));

    // Theta_Y^{-1} = L*^{-1} Theta_X^{-1} L*^{-1} with Theta_X = D^2.
    ComplexMatrix dsq = prob.Psi1.cast<Complex>() + Complex(0, 1) * prob.Psi2.cast<Complex>();
    const ComplexMatrix theta_x_inv = hermitian_inverse(HermitianMatrix(dsq, 1e-9)).matrix();
    const ComplexMatrix f_y = ls_inv.cast<Complex>() * theta_x_inv * ls_inv.cast<Complex>();

    out.q.w = prob.P.matrix() - f_y;
    out.q.delta = lt - l_star.matrix.matrix();
    out.q.r_delta = lt_inv - ls_inv + ls_inv * out.q.delta * ls_inv;
    const RealMatrix r_route2 = lt_inv * out.q.delta * ls_inv * out.q.delta * ls_inv;
    out.q.identity_residual = max_abs(RealMatrix(out.q.r_delta - r_route2));
    out.q.w_max_abs = max_abs(out.q.w);
    out.q.delta_max_abs = max_abs(out.q.delta);
    out.q.r_delta_max_abs = max_abs(out.q.r_delta);

    // Dual variable on the complement of the augmented support.
    RealMatrix zmat = -2.0 * (prob.Psi1 * lt * prob.P1);
    if (prob.has_imag) zmat += 2.0 * (prob.Psi2 * lt * prob.P2);
    zmat += 2.0 * lt_inv;
    zmat /= lambda;
    std::vector<std::uint8_t> on_support(static_cast<std::size_t>(p * p), 0);
    for (const auto& [i, j] : l_star.edge_set) {
        on_support[static_cast<std::size_t>(i * p + j)] = 1;
        on_support[static_cast<std::size_t>(j * p + i)] = 1;
    }
    out.dual_max = 0.0;
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j)
            if (i != j && !on_support[static_cast<std::size_t>(i * p + j)])
                out.dual_max = std::max(out.dual_max, std::abs(zmat(i, j)));
    out.strict_feasible = out.dual_max < 1.0;

    // Lemma-2 sufficient conditions against alpha lambda / 24.
    out.alpha = incoherence_alpha(l_star.matrix, l_star.edge_set);
    const NuConstants nu = nu_constants(l_star.matrix, prob.D);
    const double d = static_cast<double>(l_star.max_degree);
    const double theta_y_inv_maxabs = max_abs(f_y);
    out.q1 = 2.0 * nu.nu_d2 * (d * out.q.delta_max_abs + nu.nu_lstar) * out.q.w_max_abs;
    out.q2 = out.q.r_delta_max_abs;
    out.q3 = 2.0 * nu.nu_d2 * d * out.q.delta_max_abs * theta_y_inv_maxabs;
    out.suff_bound = out.alpha > 0.0 ? out.alpha * lambda / 24.0 : 0.0;
    out.suff_conditions_hold = out.alpha > 0.0 && out.q1 <= out.suff_bound &&
                               out.q2 <= out.suff_bound && out.q3 <= out.suff_bound;

    // Lemma-3 remainder bound when ||Delta||_inf is small enough.
    const double delta_cap = 1.0 / (3.0 * nu.nu_lstar_inv * std::max(d, 1.0));
    out.lemma3_applicable = out.q.delta_max_abs <= delta_cap;
    if (out.lemma3_applicable) {
        const double bound = 1.5 * d * out.q.delta_max_abs * out.q.delta_max_abs *
                             std::pow(nu.nu_lstar_inv, 3);
        out.lemma3_bound_holds = out.q.r_delta_max_abs <= bound + 1e-12;
    }
    return out;
}

// Everything the theory sections make computable for one (L*, process, n, m)
// configuration.
struct TheoryReport {
    Index p = 0, d = 0, n = 0, m = 0;
    double tau = 3.0;
    double alpha = 0.0;
    double c_alpha_value = 0.0;
    double kappa = 0.0;
    double kappa_bound_rhs = 0.0;
    bool kappa_holds = false;
    double omega_n = 0.0;
    double l_n = 0.0;
    double delta = 0.0;
    double lambda_theorem1 = 0.0;
    double radius_r = 0.0;
    double zeta = 0.0;
    double beta_min = 0.0;
    NuConstants nu;
    double nu_theta_y_inv = 0.0;
    // Theorem-1 side conditions, reported as both sides (constants unknown).
    double bandwidth_requirement = 0.0;  // ||Theta_Y^{-1}||^2 zeta^2 d^2 log p
    double sample_requirement = 0.0;     // Omega_n zeta m d
    double dual_max = -1.0;              // -1 when no data problem was supplied
    bool dual_strict_feasible = false;
};

inline TheoryReport theory_report(const LaplacianSpec& l_star, const HermitianMatrix& theta_x,
                                  const AutocovSequence& acov_y, Index n, Index m, double tau,
                                  TailFamily family, const WhittleProblem* data_prob = nullptr,
                                  const SolverOptions& opts = {}) {
    TheoryReport rep;
    rep.p = l_star.p;
    rep.d = l_star.max_degree;
    rep.n = n;
    rep.m = m;
    rep.tau = tau;
    rep.alpha = incoherence_alpha(l_star.matrix, l_star.edge_set);
    const HermitianMatrix d_sqrt = hermitian_sqrt(theta_x);
    rep.nu = nu_constants(l_star.matrix, d_sqrt);
    const HermitianMatrix theta_y = theta_y_true(l_star.matrix, theta_x);
    const DependenceMeasures deps = dependence_measures(acov_y, n);
    rep.omega_n = deps.omega_n;
    rep.l_n = deps.l_n;
    rep.nu_theta_y_inv = nu_norm(hermitian_inverse(theta_y).matrix());
    rep.delta = delta_threshold(rep.nu_theta_y_inv, m, n, rep.p, tau, family, deps);
    if (rep.alpha > 0.0) {
        rep.c_alpha_value = c_alpha(rep.alpha);
        const KappaCheck kc = kappa_check(l_star.matrix, d_sqrt, theta_y, rep.d, rep.alpha);
        rep.kappa = kc.kappa;
        rep.kappa_bound_rhs = kc.rhs;
        rep.kappa_holds = kc.holds;
        rep.lambda_theorem1 = theorem1_lambda(rep.nu.nu_d2, rep.nu.nu_lstar, rep.delta, rep.alpha);
        rep.radius_r = 8.0 * rep.nu.nu_gamma_inv *
                       (rep.nu.nu_d2 * rep.nu.nu_lstar * rep.delta + rep.lambda_theorem1 / 4.0);
        rep.zeta = zeta_constant(rep.nu, rep.alpha);
        rep.bandwidth_requirement = rep.nu_theta_y_inv * rep.nu_theta_y_inv * rep.zeta * rep.zeta *
                                    static_cast<double>(rep.d) * static_cast<double>(rep.d) *
                                    std::log(static_cast<double>(rep.p));
        rep.sample_requirement =
            rep.omega_n * rep.zeta * static_cast<double>(m) * static_cast<double>(rep.d);
    }
    double beta = std::numeric_limits<double>::infinity();
    const RealMatrix& ls = l_star.matrix.matrix();
    for (Index i = 0; i < rep.p; ++i) beta = std::min(beta, std::abs(ls(i, i)));
    for (const auto& [i, j] : l_star.edge_set) beta = std::min(beta, std::abs(ls(i, j)));
    rep.beta_min = beta;
    if (data_prob && rep.alpha > 0.0) {
        const WitnessCheck wc = witness_check(l_star, *data_prob, rep.lambda_theorem1, opts);
        rep.dual_max = wc.dual_max;
        rep.dual_strict_feasible = wc.strict_feasible;
    }
    return rep;
}

}  // namespace laplearn
