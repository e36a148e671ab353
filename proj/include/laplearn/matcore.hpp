// Dense real/complex matrix kernel: validated Hermitian/symmetric carriers,
// Hermitian PD square roots, log-determinants via triangular factorization,
// Kronecker products, the matrix norms used throughout, and the golden-file
// CSV format (complex entries as re+imj literals).
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "laplearn/errors.hpp"

namespace laplearn {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

// Unordered edge (i, j) stored with i < j.
using Edge = std::pair<Index, Index>;
using EdgeSet = std::vector<Edge>;

inline double max_abs(const RealMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Shortest round-trip decimal form; used everywhere a double is serialized so
// that re-running a config reproduces files byte for byte.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// p x p complex matrix with conjugate symmetry enforced on construction.
// Storage is exactly Hermitian: the input is validated against a relative
// tolerance, then averaged with its adjoint and the diagonal made real.
class HermitianMatrix {
public:
    HermitianMatrix() = default;

    explicit HermitianMatrix(ComplexMatrix m, double rel_tol = 1e-12) {
        if (m.rows() != m.cols())
            throw NotHermitian("matrix is " + std::to_string(m.rows()) + "x" +
                               std::to_string(m.cols()));
        const double scale = std::max(max_abs(m), 1e-300);
        const double bound = rel_tol * scale;
        for (Index j = 0; j < m.cols(); ++j) {
            for (Index i = 0; i <= j; ++i) {
                if (std::abs(m(i, j) - std::conj(m(j, i))) > bound)
                    throw NotHermitian("entry (" + std::to_string(i) + "," +
                                       std::to_string(j) + ") violates conjugate symmetry");
            }
        }
        m_ = 0.5 * (m + m.adjoint().eval());
        for (Index i = 0; i < m_.rows(); ++i) m_(i, i) = Complex(m_(i, i).real(), 0.0);
    }

    static HermitianMatrix identity(Index p) {
        return HermitianMatrix(ComplexMatrix::Identity(p, p));
    }

    static HermitianMatrix from_real(const RealMatrix& m, double rel_tol = 1e-12) {
        return HermitianMatrix(m.cast<Complex>(), rel_tol);
    }

    Index dim() const { return m_.rows(); }
    const ComplexMatrix& matrix() const { return m_; }
    RealMatrix real_part() const { return m_.real(); }
    RealMatrix imag_part() const { return m_.imag(); }

private:
    ComplexMatrix m_;
};

// p x p real matrix with exact symmetry enforced on construction.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;

    explicit SymmetricMatrix(RealMatrix m, double rel_tol = 1e-9) {
        if (m.rows() != m.cols())
            throw NonSquare("matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
        const double bound = rel_tol * std::max(max_abs(m), 1e-300);
        if (max_abs(RealMatrix(m - m.transpose())) > bound)
            throw AsymmetricBeyondTolerance("max |M - M^T| exceeds " +
                                            format_double(bound));
        m_ = 0.5 * (m + m.transpose().eval());
    }

    static SymmetricMatrix identity(Index p) {
        return SymmetricMatrix(RealMatrix::Identity(p, p));
    }

    Index dim() const { return m_.rows(); }
    const RealMatrix& matrix() const { return m_; }

private:
    RealMatrix m_;
};

// Unique Hermitian PD square root via a self-adjoint eigendecomposition.
// pd_tol_rel is relative to the largest eigenvalue.
inline HermitianMatrix hermitian_sqrt(const HermitianMatrix& h, double pd_tol_rel = 1e-10) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h.matrix());
    if (es.info() != Eigen::Success)
        throw NotPositiveDefinite("eigendecomposition failed");
    const auto& evals = es.eigenvalues();
    const double lam_max = evals(evals.size() - 1);
    const double floor = pd_tol_rel * std::max(lam_max, 0.0);
    if (evals(0) <= floor)
        throw NotPositiveDefinite("smallest eigenvalue " + format_double(evals(0)) +
                                  " <= tolerance " + format_double(floor));
    RealVector roots = evals.array().sqrt();
    ComplexMatrix d = es.eigenvectors() * roots.asDiagonal() *
                      es.eigenvectors().adjoint();
    return HermitianMatrix(std::move(d), 1e-10);
}

// Inverse of a Hermitian PD matrix via Cholesky.
inline HermitianMatrix hermitian_inverse(const HermitianMatrix& h) {
    Eigen::LLT<ComplexMatrix> llt(h.matrix());
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("Hermitian matrix is not PD");
    ComplexMatrix inv = llt.solve(ComplexMatrix::Identity(h.dim(), h.dim()));
    return HermitianMatrix(std::move(inv), 1e-9);
}

namespace detail {

// Log-determinant of an SPD matrix from Cholesky pivots.
inline double logdet_spd_raw(const RealMatrix& m) {
    Eigen::LLT<RealMatrix> llt(m);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("Cholesky factorization hit a non-positive pivot");
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline bool is_spd(const RealMatrix& m) {
    Eigen::LLT<RealMatrix> llt(m);
    return llt.info() == Eigen::Success;
}

}  // namespace detail

inline double logdet_spd(const SymmetricMatrix& m) {
    return detail::logdet_spd_raw(m.matrix());
}

// Kronecker product with a dimension cap: a p^2 x p^2 Hessian explodes fast,
// so callers opt in to anything past the cap explicitly.
inline RealMatrix kron(const RealMatrix& a, const RealMatrix& b, Index dim_cap = 4096) {
    const Index rows = a.rows() * b.rows();
    const Index cols = a.cols() * b.cols();
    if (rows > dim_cap || cols > dim_cap)
        throw DimensionOverflow("kron result " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " exceeds cap " +
                                std::to_string(dim_cap));
    RealMatrix out(rows, cols);
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline SymmetricMatrix kron(const SymmetricMatrix& a, const SymmetricMatrix& b,
                            Index dim_cap = 4096) {
    return SymmetricMatrix(kron(a.matrix(), b.matrix(), dim_cap), 1e-9);
}

// The norm bundle used throughout: element-wise max, the matrix l-inf
// (max absolute row sum, the nu of a matrix), Frobenius, spectral, and the
// off-diagonal l1 sum.
struct MatrixNorms {
    double max_abs = 0.0;
    double row_sum = 0.0;
    double frobenius = 0.0;
    double operator2 = 0.0;
    double l1_offdiag = 0.0;
};

namespace detail {

template <typename Mat>
MatrixNorms norms_impl(const Mat& m) {
    MatrixNorms out;
    RealMatrix a = m.cwiseAbs();
    out.max_abs = a.size() == 0 ? 0.0 : a.maxCoeff();
    out.row_sum = a.rows() == 0 ? 0.0 : a.rowwise().sum().maxCoeff();
    out.frobenius = m.norm();
    if (m.rows() > 0 && m.cols() > 0) {
        Eigen::JacobiSVD<Mat> svd(m);
        out.operator2 = svd.singularValues()(0);
    }
    double diag_abs = 0.0;
    for (Index i = 0; i < std::min(m.rows(), m.cols()); ++i) diag_abs += a(i, i);
    out.l1_offdiag = a.sum() - diag_abs;
    return out;
}

}  // namespace detail

inline MatrixNorms norms(const RealMatrix& m) { return detail::norms_impl(m); }
inline MatrixNorms norms(const ComplexMatrix& m) { return detail::norms_impl(m); }
inline MatrixNorms norms(const SymmetricMatrix& m) { return norms(m.matrix()); }
inline MatrixNorms norms(const HermitianMatrix& m) { return norms(m.matrix()); }

// nu_A = max absolute row sum.
inline double nu_norm(const RealMatrix& m) {
    return m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}
inline double nu_norm(const ComplexMatrix& m) {
    return m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double l1_offdiag(const RealMatrix& m) {
    double s = 0.0;
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (i != j) s += std::abs(m(i, j));
    return s;
}

// ---------------------------------------------------------------------------
// Golden-file CSV format. Header "# rows,cols,complex={0,1}", one CSV row per
// matrix row, complex entries serialized as re+imj literals.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_complex(Complex v) {
    std::string s = format_double(v.real());
    const double im = v.imag();
    if (!(im < 0.0) && !std::signbit(im)) s += '+';
    s += format_double(im);
    s += 'j';
    return s;
}

inline double parse_double_token(const std::string& tok, int line_no) {
    double v = 0.0;
    const char* begin = tok.data();
    const char* end = tok.data() + tok.size();
    if (begin != end && *begin == '+') ++begin;  // from_chars rejects leading '+'
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end || begin == end)
        throw ParseError("line " + std::to_string(line_no) + ": bad numeric token '" +
                         tok + "'");
    return v;
}

inline Complex parse_complex_token(std::string tok, int line_no) {
    if (tok.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty token");
    if (tok.back() != 'j') return Complex(parse_double_token(tok, line_no), 0.0);
    tok.pop_back();
    // Split at the last sign that is not an exponent sign and not leading.
    std::size_t split = std::string::npos;
    for (std::size_t k = 1; k < tok.size(); ++k) {
        if ((tok[k] == '+' || tok[k] == '-') && tok[k - 1] != 'e' && tok[k - 1] != 'E')
            split = k;
    }
    if (split == std::string::npos)
        return Complex(0.0, parse_double_token(tok, line_no));
    const std::string re = tok.substr(0, split);
    std::string im = tok.substr(split);
    if (im == "+") im = "1"; else if (im == "-") im = "-1";
    return Complex(parse_double_token(re, line_no), parse_double_token(im, line_no));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline void write_matrix_csv_impl(const std::filesystem::path& path,
                                  const ComplexMatrix& m, bool is_complex) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << "# " << m.rows() << ',' << m.cols() << ",complex=" << (is_complex ? 1 : 0) << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) f << ',';
            if (is_complex)
                f << format_complex(m(i, j));
            else
                f << format_double(m(i, j).real());
        }
        f << '\n';
    }
}

}  // namespace detail

inline void write_matrix_csv(const std::filesystem::path& path, const RealMatrix& m) {
    detail::write_matrix_csv_impl(path, m.cast<Complex>(), false);
}

inline void write_matrix_csv(const std::filesystem::path& path, const ComplexMatrix& m) {
    detail::write_matrix_csv_impl(path, m, true);
}

struct LoadedMatrix {
    bool is_complex = false;
    ComplexMatrix values;

    RealMatrix real() const { return values.real(); }
};

inline LoadedMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw ParseError("line 1: empty file " + path.string());
    Index rows = 0, cols = 0;
    int complex_flag = -1;
    {
        if (line.empty() || line[0] != '#')
            throw ParseError("line 1: expected '# rows,cols,complex={0,1}' header");
        std::string body = line.substr(1);
        std::replace(body.begin(), body.end(), ',', ' ');
        std::istringstream ss(body);
        std::string cflag;
        if (!(ss >> rows >> cols >> cflag) || cflag.rfind("complex=", 0) != 0)
            throw ParseError("line 1: malformed golden-file header '" + line + "'");
        complex_flag = cflag.back() == '1' ? 1 : 0;
    }
    LoadedMatrix out;
    out.is_complex = complex_flag == 1;
    out.values.resize(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (!std::getline(f, line))
            throw ParseError("line " + std::to_string(i + 2) + ": unexpected end of file");
        auto toks = detail::split_csv_line(line);
        if (static_cast<Index>(toks.size()) != cols)
            throw ParseError("line " + std::to_string(i + 2) + ": expected " +
                             std::to_string(cols) + " columns, got " +
                             std::to_string(toks.size()));
        for (Index j = 0; j < cols; ++j)
            out.values(i, j) = detail::parse_complex_token(toks[j], static_cast<int>(i) + 2);
    }
    return out;
}

}  // namespace laplearn
