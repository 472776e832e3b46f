#pragma once

#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "qcrelax/types.hpp"

namespace qcrelax {

using Rng = std::mt19937_64;

// Row-major multi-index helpers for tensor-product spaces.
inline std::vector<int> unravel(int index, const std::vector<int>& dims) {
    std::vector<int> digits(dims.size());
    for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
        digits[k] = index % dims[k];
        index /= dims[k];
    }
    return digits;
}

inline int ravel(const std::vector<int>& digits, const std::vector<int>& dims) {
    int index = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) index = index * dims[k] + digits[k];
    return index;
}

inline int product(const std::vector<int>& dims) {
    return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
}

template <typename Derived1, typename Derived2>
auto kron(const Eigen::MatrixBase<Derived1>& a, const Eigen::MatrixBase<Derived2>& b) {
    using Scalar = typename Derived1::Scalar;
    MatrixX<Scalar> out = Eigen::kroneckerProduct(a.derived(), b.derived()).eval();
    return out;
}

// Transpose the subsystems flagged in `mask` of an operator on ⊗ dims.
template <typename Derived>
MatrixX<typename Derived::Scalar> partial_transpose(const Eigen::MatrixBase<Derived>& m,
                                                    const std::vector<int>& dims,
                                                    const std::vector<bool>& mask) {
    const int n = product(dims);
    if (m.rows() != n || m.cols() != n) throw Error(ErrorCode::InvalidArgument, "partial_transpose: dimension mismatch");
    MatrixX<typename Derived::Scalar> out(n, n);
    for (int r = 0; r < n; ++r) {
        auto rd = unravel(r, dims);
        for (int c = 0; c < n; ++c) {
            auto cd = unravel(c, dims);
            auto r2 = rd;
            auto c2 = cd;
            for (std::size_t k = 0; k < dims.size(); ++k)
                if (mask[k]) std::swap(r2[k], c2[k]);
            out(ravel(r2, dims), ravel(c2, dims)) = m(r, c);
        }
    }
    return out;
}

// Trace out every subsystem not flagged in `keep`.
template <typename Derived>
MatrixX<typename Derived::Scalar> partial_trace(const Eigen::MatrixBase<Derived>& m, const std::vector<int>& dims,
                                                const std::vector<bool>& keep) {
    const int n = product(dims);
    std::vector<int> kept_dims;
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (keep[k]) kept_dims.push_back(dims[k]);
    const int nk = product(kept_dims);
    MatrixX<typename Derived::Scalar> out = MatrixX<typename Derived::Scalar>::Zero(nk, nk);
    auto reduced = [&](const std::vector<int>& d) {
        std::vector<int> kd;
        for (std::size_t k = 0; k < dims.size(); ++k)
            if (keep[k]) kd.push_back(d[k]);
        return ravel(kd, kept_dims);
    };
    for (int r = 0; r < n; ++r) {
        auto rd = unravel(r, dims);
        for (int c = 0; c < n; ++c) {
            auto cd = unravel(c, dims);
            bool traced_equal = true;
            for (std::size_t k = 0; k < dims.size(); ++k)
                if (!keep[k] && rd[k] != cd[k]) { traced_equal = false; break; }
            if (traced_equal) out(reduced(rd), reduced(cd)) += m(r, c);
        }
    }
    return out;
}

// Real symmetric image [[Re, -Im], [Im, Re]] of a Hermitian matrix; PSD-equivalent.
inline Matrix realify(const CMatrix& h) {
    const auto n = h.rows();
    Matrix out(2 * n, 2 * n);
    out.topLeftCorner(n, n) = h.real();
    out.bottomRightCorner(n, n) = h.real();
    out.topRightCorner(n, n) = -h.imag();
    out.bottomLeftCorner(n, n) = h.imag();
    return out;
}

template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    MatrixX<Scalar> sym = (m + m.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

template <typename Derived>
double trace_norm(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    MatrixX<Scalar> sym = (m + m.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

// Projector onto the eigenspace with strictly positive eigenvalues.
CMatrix positive_part_projector(const CMatrix& h);

// Eigenvector for the largest eigenvalue of a Hermitian matrix.
CVector top_eigenvector(const CMatrix& h);

CMatrix haar_unitary(int d, Rng& rng);
CVector random_pure_state(int d, Rng& rng);
CMatrix random_density_matrix(int d, int rank, Rng& rng);

// Projective measurement with `ranks[b]` basis vectors assigned to outcome b.
std::vector<CMatrix> random_projective_measurement(int d, const std::vector<int>& ranks, Rng& rng);

// Projective measurement whose outcome ranks are drawn uniformly.
std::vector<CMatrix> random_projective_measurement(int d, int outcomes, Rng& rng);

} // namespace qcrelax
