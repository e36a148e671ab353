// Simulation of injection processes X_t (linear WSS dynamics driven by three
// noise families) and the observation model Y_t = L^{-1} X_t.
//
// All samplers draw from an explicit mt19937_64 stream with hand-rolled
// transforms, so a fixed seed reproduces panels bit for bit across toolchains.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "laplearn/graphs.hpp"
#include "laplearn/matcore.hpp"
#include "laplearn/panel.hpp"
#include "laplearn/spectra.hpp"

namespace laplearn {

// Concrete samplers standing in for the abstract tail families: Gaussian for
// sub-Gaussian, Laplace likewise, symmetrized Weibull with shape 1/(1+rho)
// for generalized sub-exponential, and student-t (df >= 5) for finite fourth
// moment. Every sampler is standardized to zero mean and unit variance.
struct NoiseFamily {
    enum class Kind { Gaussian, Laplace, SymmetrizedWeibull, StudentT };

    Kind kind = Kind::Gaussian;
    double rho = 1.0;   // sub-exponential parameter; Weibull shape = 1/(1+rho)
    double df = 5.0;    // student-t degrees of freedom

    static NoiseFamily gaussian() { return {}; }
    static NoiseFamily laplace() { return {Kind::Laplace, 1.0, 5.0}; }
    static NoiseFamily sub_exponential(double rho) {
        if (rho <= 0.0) throw ParameterOutOfRange("sub-exponential rho must be > 0");
        return {Kind::SymmetrizedWeibull, rho, 5.0};
    }
    static NoiseFamily finite_fourth(double df = 5.0) {
        if (df < 5.0) throw ParameterOutOfRange("student-t df must be >= 5 for finite fourth moments");
        return {Kind::StudentT, 1.0, df};
    }

    std::string tag() const {
        switch (kind) {
            case Kind::Gaussian: return "gaussian";
            case Kind::Laplace: return "laplace";
            case Kind::SymmetrizedWeibull: return "weibull(shape=" + format_double(1.0 / (1.0 + rho)) + ")";
            case Kind::StudentT: return "student_t(df=" + format_double(df) + ")";
        }
        return "unknown";
    }
};

namespace detail {

class NoiseSampler {
public:
    NoiseSampler(NoiseFamily family, std::uint64_t seed) : family_(family), rng_(seed) {
        if (family_.kind == NoiseFamily::Kind::SymmetrizedWeibull) {
            const double shape = 1.0 / (1.0 + family_.rho);
            weibull_shape_ = shape;
            weibull_scale_ = 1.0 / std::sqrt(std::tgamma(1.0 + 2.0 / shape));
        } else if (family_.kind == NoiseFamily::Kind::StudentT) {
            t_scale_ = std::sqrt((family_.df - 2.0) / family_.df);
        }
    }

    double draw() {
        switch (family_.kind) {
            case NoiseFamily::Kind::Gaussian:
                return next_gaussian();
            case NoiseFamily::Kind::Laplace: {
                const double u = uniform_open() - 0.5;
                const double mag = -std::log(1.0 - 2.0 * std::abs(u));
                const double sgn = u < 0.0 ? -1.0 : 1.0;
                return sgn * mag / std::sqrt(2.0);
            }
            case NoiseFamily::Kind::SymmetrizedWeibull: {
                const double u = uniform_open();
                const double w = std::pow(-std::log(u), 1.0 / weibull_shape_);
                const double sgn = (rng_() & 1u) ? 1.0 : -1.0;
                return sgn * w * weibull_scale_;
            }
            case NoiseFamily::Kind::StudentT: {
                const double z = next_gaussian();
                double v = 0.0;
                const int df = static_cast<int>(family_.df);
                for (int i = 0; i < df; ++i) {
                    const double g = next_gaussian();
                    v += g * g;
                }
                return t_scale_ * z / std::sqrt(v / family_.df);
            }
        }
        return 0.0;
    }

private:
    double uniform_open() {
        double u;
        do {
            u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        } while (u <= 0.0 || u >= 1.0);
        return u;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(kTwoPi * u2);
        have_spare_ = true;
        return r * std::cos(kTwoPi * u2);
    }

    NoiseFamily family_;
    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
    double weibull_shape_ = 1.0;
    double weibull_scale_ = 1.0;
    double t_scale_ = 1.0;
};

}  // namespace detail

inline RealVector sample_noise(const NoiseFamily& family, Index count, std::uint64_t seed) {
    detail::NoiseSampler sampler(family, seed);
    RealVector out(count);
    for (Index i = 0; i < count; ++i) out(i) = sampler.draw();
    return out;
}

// Linear WSS injection models. Coefficient matrices are p x p; IID takes none.
struct ProcessModel {
    enum class Kind { IID, VAR1, VARMA22, LinearMA };

    Kind kind = Kind::IID;
    RealMatrix a;            // VAR1
    RealMatrix a1, a2, b1, b2;  // VARMA22
    std::vector<RealMatrix> ma_coeffs;  // LinearMA: A_0..A_K
    NoiseFamily noise;
    double noise_scale = 1.0;
    Index burn_in = 500;

    static ProcessModel iid(NoiseFamily n = NoiseFamily::gaussian()) {
        ProcessModel m;
        m.kind = Kind::IID;
        m.noise = n;
        return m;
    }

    static ProcessModel var1(RealMatrix a, NoiseFamily n = NoiseFamily::gaussian(),
                             double noise_scale = 1.0) {
        ProcessModel m;
        m.kind = Kind::VAR1;
        m.a = std::move(a);
        m.noise = n;
        m.noise_scale = noise_scale;
        return m;
    }

    // VAR(1) with A = rho I and noise variance 1 - rho^2, so that
    // Phi_X(l) = rho^{|l|} I exactly.
    static ProcessModel ar1_diag(Index p, double rho, NoiseFamily n = NoiseFamily::gaussian()) {
        if (rho <= -1.0 || rho >= 1.0) throw ParameterOutOfRange("ar1 rho must be in (-1,1)");
        return var1(rho * RealMatrix::Identity(p, p), n, std::sqrt(1.0 - rho * rho));
    }

    static ProcessModel varma22(RealMatrix a1, RealMatrix a2, RealMatrix b1, RealMatrix b2,
                                NoiseFamily n = NoiseFamily::gaussian()) {
        ProcessModel m;
        m.kind = Kind::VARMA22;
        m.a1 = std::move(a1);
        m.a2 = std::move(a2);
        m.b1 = std::move(b1);
        m.b2 = std::move(b2);
        m.noise = n;
        return m;
    }

    // The VARMA(2,2) configuration used throughout the experiments:
    // A1 = 0.4 I, A2 = 0.2 I, B1 = 1.5 (I + J), B2 = 0.75 (I + J).
    static ProcessModel varma22_reference(Index p, NoiseFamily n = NoiseFamily::gaussian()) {
        const RealMatrix ones = RealMatrix::Ones(p, p);
        const RealMatrix eye = RealMatrix::Identity(p, p);
        return varma22(0.4 * eye, 0.2 * eye, 1.5 * (eye + ones), 0.75 * (eye + ones), n);
    }

    static ProcessModel linear_ma(std::vector<RealMatrix> coeffs,
                                  NoiseFamily n = NoiseFamily::gaussian()) {
        ProcessModel m;
        m.kind = Kind::LinearMA;
        m.ma_coeffs = std::move(coeffs);
        m.noise = n;
        return m;
    }

    // Sum over lags of |A_l(i,j)|, the absolute-summability diagnostic.
    double coefficient_abs_sum() const {
        if (kind != Kind::LinearMA) return 0.0;
        double s = 0.0;
        for (const auto& c : ma_coeffs) s = std::max(s, max_abs(c));
        return s;
    }

    std::string tag() const {
        switch (kind) {
            case Kind::IID: return "iid/" + noise.tag();
            case Kind::VAR1: return "var1/" + noise.tag();
            case Kind::VARMA22: return "varma22/" + noise.tag();
            case Kind::LinearMA: return "linear_ma/" + noise.tag();
        }
        return "unknown";
    }
};

namespace detail {

inline void check_stable(const ProcessModel& model, Index p) {
    if (model.kind == ProcessModel::Kind::VAR1) {
        if (model.a.rows() != p || model.a.cols() != p)
            throw DimensionMismatch("VAR(1) coefficient must be p x p");
        if (spectral_radius(model.a) >= 1.0 - 1e-8)
            throw UnstableProcess("VAR(1) spectral radius >= 1");
    } else if (model.kind == ProcessModel::Kind::VARMA22) {
        if (model.a1.rows() != p || model.a2.rows() != p || model.b1.rows() != p ||
            model.b2.rows() != p)
            throw DimensionMismatch("VARMA(2,2) coefficients must be p x p");
        RealMatrix companion = RealMatrix::Zero(2 * p, 2 * p);
        companion.topLeftCorner(p, p) = model.a1;
        companion.topRightCorner(p, p) = model.a2;
        companion.bottomLeftCorner(p, p) = RealMatrix::Identity(p, p);
        if (spectral_radius(companion) >= 1.0 - 1e-8)
            throw UnstableProcess("VARMA AR polynomial unstable");
    }
}

}  // namespace detail

// Simulates X_1..X_n, discarding burn_in initial samples from a zero state.
inline TimeSeriesPanel simulate_injections(const ProcessModel& model, Index n, Index p,
                                           std::uint64_t seed) {
    if (n < 1 || p < 1) throw ParameterOutOfRange("simulate_injections needs n >= 1, p >= 1");
    detail::check_stable(model, p);
    detail::NoiseSampler sampler(model.noise, seed);
    auto draw_eps = [&]() {
        RealVector e(p);
        for (Index i = 0; i < p; ++i) e(i) = model.noise_scale * sampler.draw();
        return e;
    };

    const Index total = n + model.burn_in;
    RealMatrix data(n, p);
    switch (model.kind) {
        case ProcessModel::Kind::IID: {
            for (Index t = 0; t < total; ++t) {
                RealVector e = draw_eps();
                if (t >= model.burn_in) data.row(t - model.burn_in) = e.transpose();
            }
            break;
        }
        case ProcessModel::Kind::VAR1: {
            RealVector x = RealVector::Zero(p);
            for (Index t = 0; t < total; ++t) {
                x = model.a * x + draw_eps();
                if (t >= model.burn_in) data.row(t - model.burn_in) = x.transpose();
            }
            break;
        }
        case ProcessModel::Kind::VARMA22: {
            RealVector x1 = RealVector::Zero(p), x2 = RealVector::Zero(p);
            RealVector e1 = RealVector::Zero(p), e2 = RealVector::Zero(p);
            for (Index t = 0; t < total; ++t) {
                RealVector e = draw_eps();
                RealVector x = model.a1 * x1 + model.a2 * x2 + e + model.b1 * e1 + model.b2 * e2;
                x2 = x1;
                x1 = x;
                e2 = e1;
                e1 = e;
                if (t >= model.burn_in) data.row(t - model.burn_in) = x.transpose();
            }
            break;
        }
        case ProcessModel::Kind::LinearMA: {
            if (model.ma_coeffs.empty()) throw ParameterOutOfRange("linear_ma needs coefficients");
            const auto K = static_cast<Index>(model.ma_coeffs.size()) - 1;
            std::vector<RealVector> history(static_cast<std::size_t>(K) + 1, RealVector::Zero(p));
            for (Index t = 0; t < total; ++t) {
                for (std::size_t k = history.size() - 1; k > 0; --k) history[k] = history[k - 1];
                history[0] = draw_eps();
                RealVector x = RealVector::Zero(p);
                for (Index l = 0; l <= K; ++l) x += model.ma_coeffs[static_cast<std::size_t>(l)] * history[static_cast<std::size_t>(l)];
                if (t >= model.burn_in) data.row(t - model.burn_in) = x.transpose();
            }
            break;
        }
    }
    return make_panel(std::move(data), seed, model.tag());
}

// Y_t = L^{-1} X_t, with one factorization of L reused across all t.
inline TimeSeriesPanel observe_potentials(const LaplacianSpec& laplacian,
                                          const TimeSeriesPanel& injections) {
    if (laplacian.p != injections.p())
        throw DimensionMismatch("Laplacian dimension does not match panel");
    Eigen::LLT<RealMatrix> llt(laplacian.matrix.matrix());
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("Laplacian is not PD");
    RealMatrix y = llt.solve(injections.data.transpose()).transpose();
    return make_panel(std::move(y), injections.seed,
                      injections.process_tag + "|observed(" + laplacian.provenance + ")");
}

}  // namespace laplearn
