// Spectral densities and empirical spectral estimation: closed-form PSDs for
// VAR/VARMA processes, autocovariance-to-PSD transforms, the DFT with the
// paper-style t = 1..n phase convention, and the averaged periodogram.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "laplearn/matcore.hpp"
#include "laplearn/panel.hpp"

namespace laplearn {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct FrequencyGrid {
    Index n = 0;

    double omega(Index j) const {
        if (j < 0 || j >= n)
            throw IndexOutOfRange("frequency index " + std::to_string(j) +
                                  " outside [0," + std::to_string(n) + ")");
        return kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    }
};

// Autocovariance sequence Phi(l) for l = 0..L_max; negative lags follow from
// stationarity as Phi(-l) = Phi(l)^T.
class AutocovSequence {
public:
    AutocovSequence() = default;

    explicit AutocovSequence(std::vector<RealMatrix> nonneg_lags) : lags_(std::move(nonneg_lags)) {
        if (lags_.empty()) throw EmptyInput("autocovariance needs at least lag 0");
        const Index p = lags_[0].rows();
        for (const auto& m : lags_)
            if (m.rows() != p || m.cols() != p)
                throw DimensionMismatch("autocovariance lags disagree on dimension");
        const RealMatrix& phi0 = lags_[0];
        if (max_abs(RealMatrix(phi0 - phi0.transpose())) > 1e-12 * std::max(max_abs(phi0), 1e-300))
            throw AsymmetricBeyondTolerance("Phi(0) is not symmetric");
        if (!detail::is_spd(0.5 * (phi0 + phi0.transpose())))
            throw NotPositiveDefinite("Phi(0) is not PD");
    }

    Index dim() const { return lags_.empty() ? 0 : lags_[0].rows(); }
    Index max_lag() const { return static_cast<Index>(lags_.size()) - 1; }

    RealMatrix phi(Index l) const {
        const Index a = std::abs(l);
        if (a > max_lag())
            throw IndexOutOfRange("lag " + std::to_string(l) + " beyond L_max " +
                                  std::to_string(max_lag()));
        if (l >= 0) return lags_[static_cast<std::size_t>(a)];
        return lags_[static_cast<std::size_t>(a)].transpose();
    }

private:
    std::vector<RealMatrix> lags_;
};

// Bandwidth-m smoothed spectral estimate at Fourier frequency index j.
struct PeriodogramEstimate {
    Index omega_index = 0;
    Index bandwidth = 0;
    HermitianMatrix matrix;
    Index n_used = 0;
};

namespace detail {

inline double spectral_radius(const RealMatrix& a) {
    Eigen::EigenSolver<RealMatrix> es(a, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// In-place iterative radix-2 FFT (forward, e^{-i 2 pi s j / n} kernel).
inline void fft_pow2(std::vector<Complex>& x) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, rev = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; rev & bit; bit >>= 1) rev ^= bit;
        rev ^= bit;
        if (i < rev) std::swap(x[i], x[rev]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -kTwoPi / static_cast<double>(len);
        const Complex wl = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const Complex u = x[i + k];
                const Complex v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline bool is_pow2(Index n) { return n > 0 && (n & (n - 1)) == 0; }

// All n DFT coefficients of every column: row j holds d_j^T.
inline ComplexMatrix dft_full_pow2(const RealMatrix& data) {
    const Index n = data.rows();
    const Index p = data.cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    ComplexMatrix out(n, p);
    std::vector<Complex> buf(static_cast<std::size_t>(n));
    for (Index c = 0; c < p; ++c) {
        for (Index t = 0; t < n; ++t) buf[static_cast<std::size_t>(t)] = Complex(data(t, c), 0.0);
        fft_pow2(buf);
        for (Index j = 0; j < n; ++j) {
            // The paper indexes time from 1, contributing one extra twiddle.
            const Complex tw = std::polar(1.0, -kTwoPi * static_cast<double>(j) / static_cast<double>(n));
            out(j, c) = scale * tw * buf[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

inline ComplexVector dft_single(const RealMatrix& data, Index j) {
    const Index n = data.rows();
    const Index p = data.cols();
    const double omega = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    ComplexVector acc = ComplexVector::Zero(p);
    const Complex step = std::polar(1.0, -omega);
    Complex rot = step;  // e^{-i t omega} starting at t = 1
    for (Index t = 0; t < n; ++t) {
        if ((t & 0xfff) == 0xfff) rot = std::polar(1.0, -omega * static_cast<double>(t + 1));
        acc += rot * data.row(t).transpose().cast<Complex>();
        rot *= step;
    }
    return acc / std::sqrt(static_cast<double>(n));
}

}  // namespace detail

// d_j = n^{-1/2} sum_{t=1..n} Y_t e^{-i t omega_j}.
inline ComplexVector dft_coeff(const TimeSeriesPanel& panel, Index j) {
    if (j < 0 || j >= panel.n())
        throw IndexOutOfRange("frequency index " + std::to_string(j) + " outside [0," +
                              std::to_string(panel.n()) + ")");
    return detail::dft_single(panel.data, j);
}

// P_j = (2 pi (2m+1))^{-1} sum_{|k| <= m} d_{j+k} d_{j+k}^dagger, indices mod n.
inline PeriodogramEstimate averaged_periodogram(const TimeSeriesPanel& panel, Index j, Index m) {
    const Index n = panel.n();
    const Index p = panel.p();
    if (j < 0 || j >= n)
        throw IndexOutOfRange("frequency index " + std::to_string(j));
    if (m < 0 || 2 * m + 1 > n)
        throw BandwidthTooLarge("bandwidth m=" + std::to_string(m) + " needs 2m+1 <= n=" +
                                std::to_string(n));
    ComplexMatrix acc = ComplexMatrix::Zero(p, p);
    if (detail::is_pow2(n)) {
        const ComplexMatrix all = detail::dft_full_pow2(panel.data);
        for (Index k = -m; k <= m; ++k) {
            const Index idx = ((j + k) % n + n) % n;
            const ComplexVector d = all.row(idx).transpose();
            acc.noalias() += d * d.adjoint();
        }
    } else {
        for (Index k = -m; k <= m; ++k) {
            const Index idx = ((j + k) % n + n) % n;
            const ComplexVector d = detail::dft_single(panel.data, idx);
            acc.noalias() += d * d.adjoint();
        }
    }
    acc /= kTwoPi * static_cast<double>(2 * m + 1);
    PeriodogramEstimate est;
    est.omega_index = j;
    est.bandwidth = m;
    est.matrix = HermitianMatrix(std::move(acc), 1e-9);
    est.n_used = n;
    return est;
}

// f(omega) = (2 pi)^{-1} sum_{|l| <= L_max} Phi(l) e^{-i l omega}.
inline HermitianMatrix psd_from_autocov(const AutocovSequence& acov, double omega) {
    const Index p = acov.dim();
    ComplexMatrix f = acov.phi(0).cast<Complex>();
    for (Index l = 1; l <= acov.max_lag(); ++l) {
        const Complex e = std::polar(1.0, -omega * static_cast<double>(l));
        const RealMatrix phl = acov.phi(l);
        f += e * phl.cast<Complex>() + std::conj(e) * phl.transpose().cast<Complex>();
    }
    f /= kTwoPi;
    (void)p;
    return HermitianMatrix(std::move(f), 1e-9);
}

// VAR(1) spectral density (1/2pi) H Sigma H^dagger with H = (I - A e^{-i omega})^{-1}.
inline HermitianMatrix var1_psd(const RealMatrix& a, const SymmetricMatrix& sigma,
                                double omega) {
    if (a.rows() != a.cols() || a.rows() != sigma.dim())
        throw DimensionMismatch("var1_psd dimension mismatch");
    if (detail::spectral_radius(a) >= 1.0 - 1e-8)
        throw UnstableProcess("VAR(1) spectral radius >= 1");
    const Index p = a.rows();
    const Complex z = std::polar(1.0, -omega);
    ComplexMatrix m = ComplexMatrix::Identity(p, p) - z * a.cast<Complex>();
    ComplexMatrix h = m.partialPivLu().solve(ComplexMatrix::Identity(p, p));
    ComplexMatrix f = h * sigma.matrix().cast<Complex>() * h.adjoint() / kTwoPi;
    return HermitianMatrix(std::move(f), 1e-9);
}

// VARMA(2,2) spectral density with AR polynomial I - A1 z - A2 z^2 and MA
// polynomial I + B1 z + B2 z^2 applied to unit-variance noise.
inline HermitianMatrix varma22_psd(const RealMatrix& a1, const RealMatrix& a2,
                                   const RealMatrix& b1, const RealMatrix& b2,
                                   double omega) {
    const Index p = a1.rows();
    if (a1.cols() != p || a2.rows() != p || a2.cols() != p || b1.rows() != p ||
        b1.cols() != p || b2.rows() != p || b2.cols() != p)
        throw DimensionMismatch("varma22_psd dimension mismatch");
    const Complex z = std::polar(1.0, -omega);
    ComplexMatrix ar = ComplexMatrix::Identity(p, p) - z * a1.cast<Complex>() -
                       (z * z) * a2.cast<Complex>();
    ComplexMatrix ma = ComplexMatrix::Identity(p, p) + z * b1.cast<Complex>() +
                       (z * z) * b2.cast<Complex>();
    Eigen::FullPivLU<ComplexMatrix> lu(ar);
    if (!lu.isInvertible())
        throw SingularARPolynomial("AR polynomial singular at omega=" + format_double(omega));
    ComplexMatrix g = lu.solve(ma);
    ComplexMatrix f = g * g.adjoint() / kTwoPi;
    return HermitianMatrix(std::move(f), 1e-9);
}

// Theta_Y(omega) = L Theta_X(omega) L for a real symmetric PD L.
inline HermitianMatrix theta_y_true(const SymmetricMatrix& laplacian,
                                    const HermitianMatrix& theta_x) {
    if (laplacian.dim() != theta_x.dim())
        throw DimensionMismatch("theta_y_true dimension mismatch");
    if (!detail::is_spd(laplacian.matrix()))
        throw NotPositiveDefinite("Laplacian is not PD");
    Eigen::LLT<ComplexMatrix> llt(theta_x.matrix());
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("Theta_X is not PD");
    const ComplexMatrix lc = laplacian.matrix().cast<Complex>();
    ComplexMatrix out = lc * theta_x.matrix() * lc;
    return HermitianMatrix(std::move(out), 1e-9);
}

// Closed-form VAR(1) autocovariance: Phi(0) solves the Lyapunov fixed point
// Phi = A Phi A^T + Sigma, and Phi(l) = A Phi(l-1).
inline AutocovSequence var1_autocov(const RealMatrix& a, const SymmetricMatrix& sigma,
                                    Index max_lag) {
    if (detail::spectral_radius(a) >= 1.0 - 1e-8)
        throw UnstableProcess("VAR(1) spectral radius >= 1");
    RealMatrix phi0 = sigma.matrix();
    for (int it = 0; it < 100000; ++it) {
        RealMatrix next = sigma.matrix() + a * phi0 * a.transpose();
        const double diff = max_abs(RealMatrix(next - phi0));
        phi0 = std::move(next);
        if (diff <= 1e-16 * std::max(1.0, max_abs(phi0))) break;
    }
    std::vector<RealMatrix> lags;
    lags.reserve(static_cast<std::size_t>(max_lag) + 1);
    lags.push_back(0.5 * (phi0 + phi0.transpose()));
    for (Index l = 1; l <= max_lag; ++l) lags.push_back(a * lags.back());
    return AutocovSequence(std::move(lags));
}

// Sample autocovariance (mean-subtracted) up to max_lag.
inline AutocovSequence empirical_autocov(const TimeSeriesPanel& panel, Index max_lag) {
    const Index n = panel.n();
    const Index p = panel.p();
    if (max_lag >= n) throw ParameterOutOfRange("max_lag must be < n");
    const RealVector mean = panel.data.colwise().mean();
    RealMatrix centered = panel.data.rowwise() - mean.transpose();
    std::vector<RealMatrix> lags;
    lags.reserve(static_cast<std::size_t>(max_lag) + 1);
    for (Index l = 0; l <= max_lag; ++l) {
        RealMatrix acc = RealMatrix::Zero(p, p);
        for (Index t = l; t < n; ++t)
            acc.noalias() += centered.row(t).transpose() * centered.row(t - l);
        acc /= static_cast<double>(n);
        if (l == 0) acc = 0.5 * (acc + acc.transpose()).eval();
        lags.push_back(std::move(acc));
    }
    return AutocovSequence(std::move(lags));
}

}  // namespace laplearn
