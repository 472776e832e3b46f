#include "qcrelax/linalg.hpp"

namespace qcrelax {

CMatrix positive_part_projector(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es((h + h.adjoint()) / 2.0);
    const auto n = h.rows();
    CMatrix p = CMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
        if (es.eigenvalues()(k) > 0) p += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    return p;
}

CVector top_eigenvector(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es((h + h.adjoint()) / 2.0);
    return es.eigenvectors().col(h.rows() - 1);
}

static CMatrix ginibre(int rows, int cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    CMatrix g(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) g(i, j) = cplx(normal(rng), normal(rng));
    return g;
}

CMatrix haar_unitary(int d, Rng& rng) {
    CMatrix g = ginibre(d, d, rng);
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix column phases so the distribution is exactly Haar.
    for (int j = 0; j < d; ++j) {
        cplx diag = r(j, j);
        if (std::abs(diag) > 0) q.col(j) *= diag / std::abs(diag);
    }
    return q;
}

CVector random_pure_state(int d, Rng& rng) {
    CVector v = ginibre(d, 1, rng).col(0);
    return v / v.norm();
}

CMatrix random_density_matrix(int d, int rank, Rng& rng) {
    CMatrix g = ginibre(d, rank, rng);
    CMatrix rho = g * g.adjoint();
    return rho / rho.trace().real();
}

std::vector<CMatrix> random_projective_measurement(int d, const std::vector<int>& ranks, Rng& rng) {
    CMatrix u = haar_unitary(d, rng);
    std::vector<CMatrix> out;
    int col = 0;
    for (int r : ranks) {
        CMatrix p = CMatrix::Zero(d, d);
        for (int k = 0; k < r; ++k, ++col) p += u.col(col) * u.col(col).adjoint();
        out.push_back(p);
    }
    if (col != d) throw Error(ErrorCode::InvalidArgument, "measurement ranks must sum to the dimension");
    return out;
}

std::vector<CMatrix> random_projective_measurement(int d, int outcomes, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, outcomes - 1);
    std::vector<int> ranks(outcomes, 0);
    for (int k = 0; k < d; ++k) ++ranks[pick(rng)];
    return random_projective_measurement(d, ranks, rng);
}

} // namespace qcrelax
