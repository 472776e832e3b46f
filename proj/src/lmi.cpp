#include "qcrelax/lmi.hpp"

#include <Eigen/QR>

namespace qcrelax {

int LmiBuilder::add_variable() { return nvars_++; }

int LmiBuilder::add_variables(int count) {
    const int first = nvars_;
    nvars_ += count;
    return first;
}

int LmiBuilder::add_block(int n, bool complex) {
    if (n <= 0) throw Error(ErrorCode::InvalidArgument, "LMI block size must be positive");
    blocks_.push_back({n, complex});
    return static_cast<int>(blocks_.size()) - 1;
}

void LmiBuilder::add_entry(int block, int i, int j, int var, cplx coeff) {
    if (block < 0 || block >= static_cast<int>(blocks_.size())) throw Error(ErrorCode::InvalidArgument, "unknown LMI block");
    const auto [n, complex] = blocks_[block];
    if (i < 0 || j < 0 || i >= n || j >= n) throw Error(ErrorCode::InvalidArgument, "LMI entry outside block");
    if (var < -1 || var >= nvars_) throw Error(ErrorCode::InvalidArgument, "unknown LMI variable");
    if (coeff == cplx(0)) return;
    if (i > j) {
        std::swap(i, j);
        coeff = std::conj(coeff);
    }
    if (i == j && std::abs(coeff.imag()) > 1e-12 * (1 + std::abs(coeff.real())))
        throw Error(ErrorCode::InvalidArgument, "diagonal LMI entry must be real");
    if (!complex && coeff.imag() != 0 && std::abs(coeff.imag()) > 1e-12 * (1 + std::abs(coeff.real())))
        throw Error(ErrorCode::InvalidArgument, "complex coefficient in a real LMI block");
    terms_.push_back({block, i, j, var, coeff});
}

int LmiBuilder::add_inequality(const std::vector<std::pair<int, double>>& terms, double constant) {
    for (const auto& [v, c] : terms)
        if (v < 0 || v >= nvars_) throw Error(ErrorCode::InvalidArgument, "unknown LMI variable");
    rows_.push_back({terms, constant});
    return static_cast<int>(rows_.size()) - 1;
}

int LmiBuilder::add_equality(const std::vector<std::pair<int, double>>& terms, double rhs) {
    for (const auto& [v, c] : terms)
        if (v < 0 || v >= nvars_) throw Error(ErrorCode::InvalidArgument, "unknown LMI variable");
    equalities_.push_back({terms, rhs});
    return static_cast<int>(equalities_.size()) - 1;
}

void LmiBuilder::add_objective(int var, double coeff) {
    if (var < 0 || var >= nvars_) throw Error(ErrorCode::InvalidArgument, "unknown LMI variable");
    objective_[var] += coeff;
}

LmiModel LmiBuilder::build() const {
    LmiModel M;
    M.sense_ = sense_;
    M.objective_constant_ = objective_constant_;
    M.objective_ = Vector::Zero(nvars_);
    for (const auto& [v, c] : objective_) M.objective_(v) = c;

    std::vector<int> sizes;
    for (const auto& [n, complex] : blocks_) {
        M.blocks_.push_back({static_cast<int>(sizes.size()), n, complex});
        sizes.push_back(complex ? 2 * n : n);
    }
    if (!rows_.empty()) {
        M.lp_block_ = static_cast<int>(sizes.size());
        sizes.push_back(-static_cast<int>(rows_.size()));
    }
    if (sizes.empty()) throw Error(ErrorCode::InvalidArgument, "LMI problem has no constraints");

    M.F_.assign(nvars_ + 1, SparseBlockMatrix());
    for (const auto& t : terms_) {
        auto& F = M.F_[t.var + 1];
        const auto& info = M.blocks_[t.block];
        if (!info.complex) {
            F.add(info.sdp_block, t.i, t.j, t.coeff.real());
            continue;
        }
        const int n = info.n;
        F.add(info.sdp_block, t.i, t.j, t.coeff.real());
        F.add(info.sdp_block, n + t.i, n + t.j, t.coeff.real());
        if (t.i != t.j && t.coeff.imag() != 0) {
            F.add(info.sdp_block, t.j, n + t.i, t.coeff.imag());
            F.add(info.sdp_block, t.i, n + t.j, -t.coeff.imag());
        }
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        for (const auto& [v, c] : rows_[r].first) M.F_[v + 1].add(M.lp_block_, static_cast<int>(r), static_cast<int>(r), c);
        if (rows_[r].second != 0) M.F_[0].add(M.lp_block_, static_cast<int>(r), static_cast<int>(r), rows_[r].second);
    }
    for (auto& F : M.F_) F.normalize();

    const Vector g = M.max_objective();
    M.sdp.block_sizes = sizes;
    M.sdp.sense = Sense::Maximize;

    if (equalities_.empty()) {
        M.v0_ = Vector::Zero(nvars_);
        M.sdp.A.assign(M.F_.begin() + 1, M.F_.end());
        M.sdp.b = -g;
        M.sdp.C = M.F_[0].scaled(-1);
        return M;
    }

    const int ne = static_cast<int>(equalities_.size());
    Matrix E = Matrix::Zero(ne, nvars_);
    Vector f(ne);
    for (int r = 0; r < ne; ++r) {
        for (const auto& [v, c] : equalities_[r].first) E(r, v) += c;
        f(r) = equalities_[r].second;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(E.transpose());
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(E);
    cod.setThreshold(1e-10);
    M.v0_ = cod.solve(f);
    if ((E * M.v0_ - f).norm() > 1e-8 * (1 + f.norm()))
        throw Error(ErrorCode::Infeasible, "linear equalities are inconsistent");
    const Matrix Q = qr.householderQ();
    M.N_ = Q.rightCols(nvars_ - rank);
    M.E_ = E;
    M.reduced_ = true;

    SparseBlockMatrix C = M.F_[0];
    for (int k = 0; k < nvars_; ++k)
        if (M.v0_(k) != 0)
            for (const auto& e : M.F_[k + 1].entries()) C.add(e.block, e.row, e.col, M.v0_(k) * e.value);
    C.normalize();
    M.sdp.C = C.scaled(-1);
    for (int j = 0; j < M.N_.cols(); ++j) {
        SparseBlockMatrix A;
        for (int k = 0; k < nvars_; ++k) {
            const double w = M.N_(k, j);
            if (std::abs(w) < 1e-15) continue;
            for (const auto& e : M.F_[k + 1].entries()) A.add(e.block, e.row, e.col, w * e.value);
        }
        A.normalize();
        M.sdp.A.push_back(std::move(A));
    }
    M.sdp.b = -(M.N_.transpose() * g);
    return M;
}

Vector LmiModel::variables(const Solution& s) const {
    if (!reduced_) return s.y;
    return v0_ + N_ * s.y;
}

double LmiModel::value(const Solution& s) const { return objective_.dot(variables(s)) + objective_constant_; }

double LmiModel::bound(const Solution& s) const { return bound_from_value(s.primal_value); }

double LmiModel::bound_from_value(double sdp_value) const {
    const double sgn = sense_ == Sense::Maximize ? 1.0 : -1.0;
    const double bmax = -sdp_value + max_objective().dot(v0_) + sgn * objective_constant_;
    return sgn * bmax;
}

CMatrix LmiModel::block_dual(const Solution& s, int block) const {
    const auto& info = blocks_.at(block);
    const Matrix& X = s.X[info.sdp_block];
    if (!info.complex) return X.cast<cplx>();
    const int n = info.n;
    // ⟨X, realify(M)⟩ = tr(W M) with this W.
    CMatrix W(n, n);
    W.real() = X.topLeftCorner(n, n) + X.bottomRightCorner(n, n);
    W.imag() = X.bottomLeftCorner(n, n) - X.topRightCorner(n, n);
    return W;
}

CMatrix LmiModel::block_value(const Solution& s, int block) const {
    const auto& info = blocks_.at(block);
    const Vector v = variables(s);
    const int size = info.complex ? 2 * info.n : info.n;
    Matrix R = dense_block(F_[0], info.sdp_block, size);
    for (int k = 0; k < v.size(); ++k)
        if (v(k) != 0) R += v(k) * dense_block(F_[k + 1], info.sdp_block, size);
    if (!info.complex) return R.cast<cplx>();
    const int n = info.n;
    CMatrix H(n, n);
    H.real() = R.topLeftCorner(n, n);
    H.imag() = R.bottomLeftCorner(n, n);
    return H;
}

double LmiModel::inequality_dual(const Solution& s, int row) const {
    if (lp_block_ < 0) throw Error(ErrorCode::InvalidArgument, "model has no inequality rows");
    return s.X[lp_block_](row, 0);
}

double LmiModel::inequality_value(const Solution& s, int row) const {
    if (lp_block_ < 0) throw Error(ErrorCode::InvalidArgument, "model has no inequality rows");
    const Vector v = variables(s);
    auto pick = [&](const SparseBlockMatrix& F) {
        for (const auto& e : F.entries())
            if (e.block == lp_block_ && e.row == row) return e.value;
        return 0.0;
    };
    double r = pick(F_[0]);
    for (int k = 0; k < v.size(); ++k) r += v(k) * pick(F_[k + 1]);
    return r;
}

Vector LmiModel::equality_multipliers(const Solution& s) const {
    if (!reduced_) return {};
    const int n = num_variables();
    Vector rhs = max_objective();
    for (int k = 0; k < n; ++k) rhs(k) += inner(F_[k + 1], s.X, sdp.block_sizes);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(E_.transpose());
    return cod.solve(rhs);
}

HermitianVariable HermitianVariable::add(LmiBuilder& B, int d, bool complex) {
    HermitianVariable H;
    H.d = d;
    H.complex = complex;
    H.first = B.add_variables(H.count());
    return H;
}

CMatrix HermitianVariable::basis(int k) const {
    CMatrix E = CMatrix::Zero(d, d);
    if (k < d) {
        E(k, k) = 1;
        return E;
    }
    const int pairs = d * (d - 1) / 2;
    int p = k - d;
    const bool imag = p >= pairs;
    if (imag) p -= pairs;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j, --p)
            if (p == 0) {
                E(i, j) = imag ? cplx(0, 1) : cplx(1, 0);
                E(j, i) = std::conj(E(i, j));
                return E;
            }
    throw Error(ErrorCode::InvalidArgument, "Hermitian basis index out of range");
}

CMatrix HermitianVariable::value(const Vector& v) const {
    CMatrix X = CMatrix::Zero(d, d);
    for (int k = 0; k < count(); ++k) X += v(first + k) * basis(k);
    return X;
}

void add_hermitian(LmiBuilder& B, int block, int var, const CMatrix& M, int offset) {
    for (int i = 0; i < M.rows(); ++i)
        for (int j = i; j < M.cols(); ++j)
            if (std::abs(M(i, j)) > 1e-14) B.add_entry(block, offset + i, offset + j, var, M(i, j));
}

void add_hermitian(LmiBuilder& B, int block, const HermitianVariable& H, double scale, int offset) {
    for (int k = 0; k < H.count(); ++k) add_hermitian(B, block, H.first + k, scale * H.basis(k), offset);
}

std::vector<int> add_hermitian_equality(LmiBuilder& B, const std::vector<std::pair<int, CMatrix>>& terms, const CMatrix& rhs) {
    std::vector<int> rows;
    const int n = static_cast<int>(rhs.rows());
    for (const bool imag : {false, true})
        for (int i = 0; i < n; ++i)
            for (int j = imag ? i + 1 : i; j < n; ++j) {
                auto part = [imag](cplx z) { return imag ? z.imag() : z.real(); };
                std::vector<std::pair<int, double>> row;
                for (const auto& [v, M] : terms) {
                    const double c = part(M(i, j));
                    if (std::abs(c) > 1e-14) row.emplace_back(v, c);
                }
                const double r = part(rhs(i, j));
                if (row.empty() && std::abs(r) <= 1e-14) rows.push_back(-1);
                else rows.push_back(B.add_equality(row, r));
            }
    return rows;
}

} // namespace qcrelax
