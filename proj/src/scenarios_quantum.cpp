#include <cmath>
#include <map>

#include "qcrelax/scenarios.hpp"

namespace qcrelax {

namespace {

void check_hermitian_psd(const CMatrix& m, double tol, const std::string& what) {
    if (m.rows() != m.cols()) throw Error(ErrorCode::SchemaViolation, what + " is not square");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) throw Error(ErrorCode::SchemaViolation, what + " is not Hermitian");
    if (min_eigenvalue(m) < -tol) throw Error(ErrorCode::SchemaViolation, what + " is not positive semidefinite");
}

// Witness entries from the multipliers of add_hermitian_equality rows.
CMatrix hermitian_from_multipliers(const Vector& nu, const std::vector<int>& rows, int d) {
    CMatrix W = CMatrix::Zero(d, d);
    auto value = [&](std::size_t k) { return rows[k] < 0 ? 0.0 : nu(rows[k]); };
    std::size_t k = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j, ++k) {
            if (i == j) W(i, i) = value(k);
            else W(i, j) += value(k) / 2.0;
        }
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j, ++k) W(i, j) += cplx(0, value(k) / 2.0);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) W(j, i) = std::conj(W(i, j));
    return W;
}

std::pair<int, int> bipartite_dims(const DensityMatrix& rho) {
    rho.validate();
    if (rho.dims.size() != 2) throw Error(ErrorCode::SchemaViolation, "expected a bipartite state");
    return {rho.dims[0], rho.dims[1]};
}

} // namespace

void Assemblage::validate(double tol) const {
    if (X < 1 || N < 1 || d < 1) throw Error(ErrorCode::SchemaViolation, "assemblage dimensions must be positive");
    if (static_cast<int>(sigma.size()) != X) throw Error(ErrorCode::SchemaViolation, "assemblage input count mismatch");
    for (int x = 0; x < X; ++x) {
        if (static_cast<int>(sigma[x].size()) != N) throw Error(ErrorCode::SchemaViolation, "assemblage outcome count mismatch");
        for (int a = 0; a < N; ++a) {
            if (sigma[x][a].rows() != d) throw Error(ErrorCode::SchemaViolation, "assemblage element has the wrong dimension");
            check_hermitian_psd(sigma[x][a], tol, "assemblage element");
        }
    }
    const CMatrix red = reduced();
    for (int x = 1; x < X; ++x) {
        CMatrix s = CMatrix::Zero(d, d);
        for (const auto& m : sigma[x]) s += m;
        if ((s - red).cwiseAbs().maxCoeff() > tol)
            throw Error(ErrorCode::SchemaViolation, "inconsistent reduced states across inputs");
    }
    if (std::abs(red.trace() - cplx(1, 0)) > tol) throw Error(ErrorCode::SchemaViolation, "reduced state must have unit trace");
}

CMatrix Assemblage::reduced() const {
    CMatrix s = CMatrix::Zero(d, d);
    for (const auto& m : sigma.at(0)) s += m;
    return s;
}

Assemblage assemblage_from_state(const CMatrix& rho, int dA, int dB, const std::vector<std::vector<CMatrix>>& A) {
    Assemblage s;
    s.X = static_cast<int>(A.size());
    s.N = s.X ? static_cast<int>(A[0].size()) : 0;
    s.d = dB;
    for (const auto& meas : A) {
        std::vector<CMatrix> row;
        for (const auto& Ea : meas)
            row.push_back(partial_trace((kron(Ea, CMatrix::Identity(dB, dB)) * rho).eval(), {dA, dB}, {false, true}));
        s.sigma.push_back(std::move(row));
    }
    return s;
}

SteeringResult steering_test(const Assemblage& as) {
    as.validate();
    std::size_t count = 1;
    for (int x = 0; x < as.X; ++x) {
        count *= static_cast<std::size_t>(as.N);
        if (count > (1u << 14)) throw Error(ErrorCode::CapExceeded, "too many deterministic strategies for the steering test");
    }
    const int d = as.d;
    LmiBuilder B(Sense::Maximize);
    std::vector<HermitianVariable> H;
    const int t = B.add_variable();
    B.add_objective(t, 1.0);
    for (std::size_t l = 0; l < count; ++l) {
        H.push_back(HermitianVariable::add(B, d));
        const int blk = B.add_block(d, true);
        add_hermitian(B, blk, H.back());
        add_hermitian(B, blk, t, -CMatrix::Identity(d, d));
    }
    std::vector<std::vector<std::vector<int>>> rows(as.X);
    for (int x = 0; x < as.X; ++x)
        for (int a = 0; a < as.N; ++a) {
            std::vector<std::pair<int, CMatrix>> terms;
            for (std::size_t l = 0; l < count; ++l)
                if (deterministic_outcome(l, x, as.N) == a)
                    for (int k = 0; k < H[l].count(); ++k) terms.emplace_back(H[l].first + k, H[l].basis(k));
            rows[x].push_back(add_hermitian_equality(B, terms, as.sigma[x][a]));
        }
    LmiModel model = B.build();

    SteeringResult r;
    r.sdp = model.sdp;
    r.solution = solve(model.sdp);
    const Vector v = model.variables(r.solution);
    r.t = v(t);
    for (const auto& h : H) r.hidden_states.push_back(h.value(v));
    const Vector nu = model.equality_multipliers(r.solution);
    r.witness.assign(as.X, {});
    for (int x = 0; x < as.X; ++x)
        for (int a = 0; a < as.N; ++a) r.witness[x].push_back(hermitian_from_multipliers(nu, rows[x][a], d));
    return r;
}

void DensityMatrix::validate(double tol) const {
    if (dims.empty()) throw Error(ErrorCode::SchemaViolation, "density matrix needs subsystem dimensions");
    for (int d : dims)
        if (d < 1) throw Error(ErrorCode::SchemaViolation, "subsystem dimensions must be positive");
    if (rho.rows() != product(dims)) throw Error(ErrorCode::SchemaViolation, "density matrix size does not match its dimensions");
    check_hermitian_psd(rho, tol, "density matrix");
    if (std::abs(rho.trace() - cplx(1, 0)) > tol) throw Error(ErrorCode::SchemaViolation, "density matrix must have unit trace");
}

DensityMatrix werner_state(double v) {
    CVector psi = CVector::Zero(4);
    psi(1) = 1 / std::sqrt(2.0);
    psi(2) = -1 / std::sqrt(2.0);
    return {{2, 2}, v * psi * psi.adjoint() + (1 - v) * CMatrix::Identity(4, 4) / 4.0};
}

DensityMatrix phi_plus(int d) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "phi_plus needs d ≥ 1");
    CVector psi = CVector::Zero(d * d);
    for (int i = 0; i < d; ++i) psi(i * d + i) = 1 / std::sqrt(static_cast<double>(d));
    return {{d, d}, psi * psi.adjoint()};
}

DensityMatrix product_state(const CMatrix& a, const CMatrix& b) {
    return {{static_cast<int>(a.rows()), static_cast<int>(b.rows())}, kron(a, b)};
}

DensityMatrix random_two_qudit_state(int dA, int dB, int rank, Rng& rng) {
    return {{dA, dB}, random_density_matrix(dA * dB, rank, rng)};
}

PptResult ppt_random_robustness(const DensityMatrix& rho) {
    const auto [dA, dB] = bipartite_dims(rho);
    if (dA != dB) throw Error(ErrorCode::SchemaViolation, "random robustness needs equal factor dimensions");
    const int D = dA * dB;
    const CMatrix pt = partial_transpose(rho.rho, {dA, dB}, {true, false});
    LmiBuilder B(Sense::Maximize);
    const int t = B.add_variable();
    B.add_objective(t, 1.0);
    const int blk = B.add_block(D, true);
    add_hermitian(B, blk, -1, pt);
    add_hermitian(B, blk, t, -CMatrix::Identity(D, D));
    LmiModel model = B.build();

    PptResult r;
    r.sdp = model.sdp;
    r.solution = solve(model.sdp);
    r.t = model.variables(r.solution)(t);
    r.robustness = -r.t * dA * dA;
    r.witness = partial_transpose(model.block_dual(r.solution, blk), {dA, dB}, {true, false});
    return r;
}

CMatrix symmetric_isometry(int d, int n) {
    if (d < 1 || n < 1) throw Error(ErrorCode::InvalidArgument, "symmetric isometry needs d, n ≥ 1");
    const std::vector<int> dims(n, d);
    const int full = product(dims);
    std::map<std::vector<int>, int> column;
    for (int k = 0; k < full; ++k) {
        auto digits = unravel(k, dims);
        std::sort(digits.begin(), digits.end());
        column.emplace(digits, 0);
    }
    int next = 0;
    for (auto& [key, c] : column) c = next++;
    CMatrix V = CMatrix::Zero(full, next);
    for (int k = 0; k < full; ++k) {
        auto digits = unravel(k, dims);
        std::sort(digits.begin(), digits.end());
        V(k, column[digits]) = 1;
    }
    for (int c = 0; c < next; ++c) V.col(c).normalize();
    return V;
}

DpsResult dps_feasible(const DensityMatrix& rho, const DpsOptions& opt) {
    const auto [dA, dB] = bipartite_dims(rho);
    if (opt.n < 1) throw Error(ErrorCode::InvalidArgument, "DPS extension count must be at least 1");
    std::vector<int> dims{dA};
    long long full = dA;
    for (int k = 0; k < opt.n; ++k) {
        dims.push_back(dB);
        full *= dB;
        if (full > opt.max_extension_dim) throw Error(ErrorCode::CapExceeded, "DPS extension exceeds the dimension cap");
    }
    const CMatrix V = symmetric_isometry(dB, opt.n);
    const int sn = static_cast<int>(V.cols());
    const int D = dA * sn;
    const CMatrix IV = kron(CMatrix::Identity(dA, dA), V);

    std::vector<bool> keep(dims.size(), false);
    keep[0] = keep[1] = true;
    // Transposing B_1…B_k keeps the support inside A ⊗ Sym^k ⊗ Sym^{n−k}; compress onto it.
    std::vector<std::vector<bool>> masks;
    std::vector<CMatrix> supports;
    if (opt.ppt)
        for (int k = 1; k <= opt.n; ++k) {
            std::vector<bool> m(dims.size(), false);
            for (int j = 1; j <= k; ++j) m[j] = true;
            masks.push_back(m);
            CMatrix W = kron(CMatrix::Identity(dA, dA), symmetric_isometry(dB, k));
            if (k < opt.n) W = kron(W, symmetric_isometry(dB, opt.n - k));
            supports.push_back(W);
        }

    LmiBuilder B(Sense::Maximize);
    const int t = B.add_variable();
    B.add_objective(t, 1.0);
    const auto sigma = HermitianVariable::add(B, D);
    const int main = B.add_block(D, true);
    add_hermitian(B, main, sigma);
    add_hermitian(B, main, t, -CMatrix::Identity(D, D));

    std::vector<int> pt_blocks;
    for (std::size_t m = 0; m < masks.size(); ++m) {
        const int m_dim = static_cast<int>(supports[m].cols());
        pt_blocks.push_back(B.add_block(m_dim, true));
        add_hermitian(B, pt_blocks.back(), t, -CMatrix::Identity(m_dim, m_dim));
    }
    std::vector<std::pair<int, double>> trace_row;
    std::vector<std::pair<int, CMatrix>> marginal;
    for (int k = 0; k < sigma.count(); ++k) {
        const CMatrix E = sigma.basis(k);
        const CMatrix ext = IV * E * IV.adjoint();
        const double tr = E.trace().real();
        if (tr != 0) trace_row.emplace_back(sigma.first + k, tr);
        marginal.emplace_back(sigma.first + k, partial_trace(ext, dims, keep));
        for (std::size_t m = 0; m < masks.size(); ++m)
            add_hermitian(B, pt_blocks[m], sigma.first + k,
                          supports[m].adjoint() * partial_transpose(ext, dims, masks[m]) * supports[m]);
    }
    B.add_equality(trace_row, 1.0);
    add_hermitian_equality(B, marginal, rho.rho);
    LmiModel model = B.build();

    DpsResult r;
    r.sdp = model.sdp;
    r.symmetric_dim = sn;
    r.solution = solve(model.sdp);
    r.t = model.variables(r.solution)(t);
    r.passes = r.t >= -opt.feasibility_tol;
    return r;
}

NegativityResult negativity_trace_norm(const DensityMatrix& rho) {
    const auto [dA, dB] = bipartite_dims(rho);
    const int D = dA * dB;
    const CMatrix pt = partial_transpose(rho.rho, {dA, dB}, {false, true});
    // σ− = σ+ − ρ^{T_B}, so only σ+ is a variable.
    LmiBuilder B(Sense::Minimize);
    const auto plus = HermitianVariable::add(B, D);
    const int b0 = B.add_block(D, true);
    add_hermitian(B, b0, plus);
    const int b1 = B.add_block(D, true);
    add_hermitian(B, b1, plus);
    add_hermitian(B, b1, -1, -pt);
    for (int i = 0; i < D; ++i) B.add_objective(plus.first + i, 2.0);
    B.add_objective_constant(-pt.trace().real());
    LmiModel model = B.build();

    NegativityResult r;
    r.sdp = model.sdp;
    r.solution = solve(model.sdp);
    r.trace_norm = model.value(r.solution);
    r.log_negativity = std::log2(r.trace_norm);
    return r;
}

} // namespace qcrelax
