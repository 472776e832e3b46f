#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Sparse>

#include "qcrelax/linalg.hpp"
#include "qcrelax/sdp.hpp"

namespace qcrelax {

void SparseBlockMatrix::add(int block, int row, int col, double value) {
    if (row > col) std::swap(row, col);
    entries_.push_back({block, row, col, value});
}

void SparseBlockMatrix::normalize() {
    std::sort(entries_.begin(), entries_.end(), [](const SymEntry& a, const SymEntry& b) {
        return std::tie(a.block, a.row, a.col) < std::tie(b.block, b.row, b.col);
    });
    std::vector<SymEntry> out;
    for (const auto& e : entries_) {
        if (!out.empty() && out.back().block == e.block && out.back().row == e.row && out.back().col == e.col)
            out.back().value += e.value;
        else
            out.push_back(e);
    }
    std::erase_if(out, [](const SymEntry& e) { return e.value == 0.0; });
    entries_ = std::move(out);
}

SparseBlockMatrix SparseBlockMatrix::scaled(double s) const {
    SparseBlockMatrix out = *this;
    for (auto& e : out.entries_) e.value *= s;
    return out;
}

int StandardFormSDP::total_dimension() const {
    int n = 0;
    for (int s : block_sizes) n += std::abs(s);
    return n;
}

void StandardFormSDP::validate() const {
    if (block_sizes.empty()) throw Error(ErrorCode::InvalidArgument, "SDP has no blocks");
    for (int s : block_sizes)
        if (s == 0) throw Error(ErrorCode::InvalidArgument, "SDP block of size 0");
    if (b.size() != num_constraints()) throw Error(ErrorCode::InvalidArgument, "rhs length differs from constraint count");
    if (!b.allFinite()) throw Error(ErrorCode::InvalidArgument, "rhs not finite");
    auto check = [&](const SparseBlockMatrix& m) {
        for (const auto& e : m.entries()) {
            if (e.block < 0 || e.block >= static_cast<int>(block_sizes.size()))
                throw Error(ErrorCode::InvalidArgument, "entry refers to missing block");
            const int s = block_sizes[e.block];
            if (e.row < 0 || e.col >= std::abs(s) || e.row > e.col)
                throw Error(ErrorCode::InvalidArgument, "entry outside block");
            if (s < 0 && e.row != e.col) throw Error(ErrorCode::InvalidArgument, "off-diagonal entry in diagonal block");
            if (!std::isfinite(e.value)) throw Error(ErrorCode::InvalidArgument, "non-finite entry");
        }
    };
    check(C);
    for (const auto& a : A) check(a);
}

const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal-infeasible-certificate";
    case SolveStatus::DualInfeasible: return "dual-infeasible-certificate";
    case SolveStatus::SlowProgress: return "slow-progress";
    case SolveStatus::IterationCap: return "iteration-cap";
    }
    return "unknown";
}

Matrix dense_block(const SparseBlockMatrix& m, int block, int size) {
    const bool diag = size < 0;
    const int n = std::abs(size);
    Matrix out = diag ? Matrix::Zero(n, 1) : Matrix::Zero(n, n);
    for (const auto& e : m.entries()) {
        if (e.block != block) continue;
        if (diag) out(e.row, 0) += e.value;
        else {
            out(e.row, e.col) += e.value;
            if (e.row != e.col) out(e.col, e.row) += e.value;
        }
    }
    return out;
}

double inner(const SparseBlockMatrix& m, const BlockPoint& X, const std::vector<int>& sizes) {
    double s = 0;
    for (const auto& e : m.entries()) {
        if (sizes[e.block] < 0) s += e.value * X[e.block](e.row, 0);
        else s += e.value * (e.row == e.col ? X[e.block](e.row, e.col) : X[e.block](e.row, e.col) + X[e.block](e.col, e.row));
    }
    return s;
}

namespace {

struct Entry {
    int r, c;
    double v;
};

struct ConstraintBlock {
    int block;
    std::vector<Entry> entries;
    std::vector<int> rows; // distinct indices touched
};

struct Work {
    int m = 0;
    std::vector<int> n;
    std::vector<bool> diag;
    std::vector<std::vector<ConstraintBlock>> A;
    std::vector<std::vector<std::pair<int, int>>> by_block; // (constraint, slot)
    BlockPoint C;
    Vector b;
    int N = 0;
};

Work make_work(const std::vector<int>& sizes, const SparseBlockMatrix& C, const std::vector<const SparseBlockMatrix*>& A,
               const Vector& b, double c_sign) {
    Work w;
    w.m = static_cast<int>(A.size());
    for (int s : sizes) {
        w.n.push_back(std::abs(s));
        w.diag.push_back(s < 0);
        w.N += std::abs(s);
    }
    const int nb = static_cast<int>(sizes.size());
    w.by_block.resize(nb);
    w.A.resize(w.m);
    for (int i = 0; i < w.m; ++i) {
        std::map<int, ConstraintBlock> blocks;
        for (const auto& e : A[i]->entries()) {
            auto& cb = blocks[e.block];
            cb.block = e.block;
            cb.entries.push_back({e.row, e.col, e.value});
        }
        for (auto& [k, cb] : blocks) {
            std::vector<int> rows;
            for (const auto& e : cb.entries) {
                rows.push_back(e.r);
                rows.push_back(e.c);
            }
            std::sort(rows.begin(), rows.end());
            rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
            cb.rows = std::move(rows);
            w.by_block[k].push_back({i, static_cast<int>(w.A[i].size())});
            w.A[i].push_back(std::move(cb));
        }
    }
    for (int k = 0; k < nb; ++k) w.C.push_back(dense_block(C, k, sizes[k]) * c_sign);
    w.b = b;
    return w;
}

BlockPoint zeros_like(const Work& w) {
    BlockPoint out;
    for (std::size_t k = 0; k < w.n.size(); ++k)
        out.push_back(w.diag[k] ? Matrix::Zero(w.n[k], 1) : Matrix::Zero(w.n[k], w.n[k]));
    return out;
}

double block_inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

double inner(const BlockPoint& a, const BlockPoint& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += block_inner(a[k], b[k]);
    return s;
}

double norm(const BlockPoint& a) { return std::sqrt(inner(a, a)); }

double entry_inner(const ConstraintBlock& cb, const Matrix& X, bool diag) {
    double s = 0;
    if (diag)
        for (const auto& e : cb.entries) s += e.v * X(e.r, 0);
    else
        for (const auto& e : cb.entries) s += e.r == e.c ? e.v * X(e.r, e.r) : e.v * (X(e.r, e.c) + X(e.c, e.r));
    return s;
}

Vector apply_A(const Work& w, const BlockPoint& X) {
    Vector out = Vector::Zero(w.m);
    for (int i = 0; i < w.m; ++i)
        for (const auto& cb : w.A[i]) out(i) += entry_inner(cb, X[cb.block], w.diag[cb.block]);
    return out;
}

BlockPoint apply_At(const Work& w, const Vector& y) {
    BlockPoint out = zeros_like(w);
    for (int i = 0; i < w.m; ++i) {
        if (y(i) == 0) continue;
        for (const auto& cb : w.A[i]) {
            auto& M = out[cb.block];
            if (w.diag[cb.block])
                for (const auto& e : cb.entries) M(e.r, 0) += y(i) * e.v;
            else
                for (const auto& e : cb.entries) {
                    M(e.r, e.c) += y(i) * e.v;
                    if (e.r != e.c) M(e.c, e.r) += y(i) * e.v;
                }
        }
    }
    return out;
}

Matrix sym(const Matrix& a) { return (a + a.transpose()) / 2.0; }

// Largest step in (0, cap] keeping X + α dX positive semidefinite.
double max_step(const Work& w, const BlockPoint& X, const BlockPoint& dX) {
    double alpha = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < X.size(); ++k) {
        if (w.diag[k]) {
            for (int j = 0; j < w.n[k]; ++j)
                if (dX[k](j, 0) < 0) alpha = std::min(alpha, -X[k](j, 0) / dX[k](j, 0));
            continue;
        }
        Eigen::LLT<Matrix> llt(X[k]);
        if (llt.info() != Eigen::Success) return 0;
        Matrix L = llt.matrixL();
        Matrix tmp = L.triangularView<Eigen::Lower>().solve(dX[k]);
        Matrix S = L.triangularView<Eigen::Lower>().solve(tmp.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(sym(S), Eigen::EigenvaluesOnly);
        double lmin = es.eigenvalues()(0);
        if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
    }
    return alpha;
}

struct Merit {
    double pinf, dinf, gap;
    double value() const { return std::max({pinf, dinf, gap}); }
};

struct Outcome {
    BlockPoint X, Z;
    Vector y;
    int iterations = 0;
    SolveStatus status = SolveStatus::IterationCap;
    bool weak = true;
    std::vector<double> gaps;
};

double rel_gap(double p, double d) { return std::abs(p - d) / (1.0 + std::abs(p) + std::abs(d)); }

Outcome interior_point(const Work& w, const SolverParams& params, const BlockPoint* X0, const Vector* y0,
                       const BlockPoint* Z0) {
    const double normb = w.b.norm();
    const double normC = norm(w.C);
    Outcome out;

    BlockPoint X = zeros_like(w), Z = zeros_like(w);
    Vector y = Vector::Zero(w.m);
    for (std::size_t k = 0; k < w.n.size(); ++k) {
        const double nk = w.n[k];
        double xi = std::max(10.0, std::sqrt(nk)), eta = std::max(10.0, std::sqrt(nk));
        for (const auto& [i, slot] : w.by_block[k]) {
            double an = 0;
            for (const auto& e : w.A[i][slot].entries) an += (e.r == e.c ? 1 : 2) * e.v * e.v;
            an = std::sqrt(an);
            xi = std::max(xi, std::sqrt(nk) * (1 + std::abs(w.b(i))) / (1 + an));
            eta = std::max(eta, an);
        }
        eta = std::max(eta, w.C[k].norm());
        if (w.diag[k]) {
            X[k].setConstant(xi);
            Z[k].setConstant(eta);
        } else {
            X[k] = xi * Matrix::Identity(w.n[k], w.n[k]);
            Z[k] = eta * Matrix::Identity(w.n[k], w.n[k]);
        }
    }
    if (X0 && y0 && Z0) {
        X = *X0;
        y = *y0;
        Z = *Z0;
        // Push a supplied point into the interior.
        for (std::size_t k = 0; k < X.size(); ++k) {
            if (w.diag[k]) {
                X[k] = X[k].cwiseMax(1e-3);
                Z[k] = Z[k].cwiseMax(1e-3);
            } else {
                X[k] += 1e-3 * Matrix::Identity(w.n[k], w.n[k]);
                Z[k] += 1e-3 * Matrix::Identity(w.n[k], w.n[k]);
            }
        }
    }

    Merit best_merit{1e300, 1e300, 1e300};
    BlockPoint bestX = X, bestZ = Z;
    Vector besty = y;
    int since_improve = 0;

    for (int iter = 0; iter < params.max_iter; ++iter) {
        out.iterations = iter;
        const Vector AX = apply_A(w, X);
        const Vector rp = w.b - AX;
        BlockPoint Aty = apply_At(w, y);
        BlockPoint Rd = zeros_like(w);
        for (std::size_t k = 0; k < X.size(); ++k) Rd[k] = w.C[k] + Z[k] - Aty[k];

        const double pobj = inner(w.C, X);
        const double dobj = w.b.dot(y);
        const double xz = inner(X, Z);
        const double mu = xz / w.N;
        Merit merit{rp.norm() / (1 + normb), norm(Rd) / (1 + normC), rel_gap(pobj, dobj)};
        out.gaps.push_back(merit.gap);

        // Weak duality: b·y − <C,X> = <X,Z> + y·rp − <Rd,X>, with <X,Z> ≥ 0.
        const double slack = dobj - pobj;
        const double infeas_terms = std::abs(y.dot(rp)) + std::abs(inner(Rd, X));
        if (slack < -infeas_terms - 1e-9 * (1 + std::abs(pobj) + std::abs(dobj))) out.weak = false;

        if (merit.value() < best_merit.value() * 0.999) {
            best_merit = merit;
            bestX = X;
            besty = y;
            bestZ = Z;
            since_improve = 0;
        } else {
            ++since_improve;
        }

        if (merit.pinf <= params.tol && merit.dinf <= params.tol && merit.gap <= params.tol) {
            out.status = SolveStatus::Optimal;
            out.X = X;
            out.y = y;
            out.Z = Z;
            return out;
        }
        // Infeasibility certificates from divergent iterates.
        if (dobj < 0) {
            BlockPoint diff = zeros_like(w);
            for (std::size_t k = 0; k < X.size(); ++k) diff[k] = Aty[k] - Z[k];
            if (norm(diff) / -dobj < params.tol && -dobj > 1e6) {
                out.status = SolveStatus::PrimalInfeasible;
                out.X = X;
                out.y = y / -dobj;
                out.Z = Z;
                for (auto& z : out.Z) z /= -dobj;
                return out;
            }
        }
        if (pobj > 0 && AX.norm() / pobj < params.tol && pobj > 1e6) {
            out.status = SolveStatus::DualInfeasible;
            out.X = X;
            for (auto& x : out.X) x /= pobj;
            out.y = y;
            out.Z = Z;
            return out;
        }
        if (since_improve >= params.stall_iterations) {
            out.status = SolveStatus::SlowProgress;
            break;
        }

        // Schur complement M_ij = tr(A_i X A_j Z^{-1}).
        BlockPoint Zinv = zeros_like(w);
        bool ok = true;
        for (std::size_t k = 0; k < X.size(); ++k) {
            if (w.diag[k]) {
                Zinv[k] = Z[k].cwiseInverse();
                continue;
            }
            Eigen::LLT<Matrix> llt(Z[k]);
            if (llt.info() != Eigen::Success) { ok = false; break; }
            Zinv[k] = llt.solve(Matrix::Identity(w.n[k], w.n[k]));
            Zinv[k] = sym(Zinv[k]);
        }
        if (!ok) {
            out.status = SolveStatus::SlowProgress;
            break;
        }

        Matrix M = Matrix::Zero(w.m, w.m);
        for (std::size_t k = 0; k < X.size(); ++k) {
            const auto& users = w.by_block[k];
            if (w.diag[k]) {
                Vector d = X[k].col(0).cwiseProduct(Zinv[k].col(0));
                std::vector<std::vector<std::pair<int, double>>> rowlists(w.n[k]);
                for (const auto& [i, slot] : users)
                    for (const auto& e : w.A[i][slot].entries) rowlists[e.r].push_back({i, e.v});
                for (int r = 0; r < w.n[k]; ++r)
                    for (const auto& [i, a] : rowlists[r])
                        for (const auto& [j, c] : rowlists[r]) M(i, j) += a * c * d(r);
                continue;
            }
            const int n = w.n[k];
            const Matrix& Xk = X[k];
            const Matrix& Zi = Zinv[k];
            for (std::size_t u = 0; u < users.size(); ++u) {
                const auto& [i, slot] = users[u];
                const auto& cb = w.A[i][slot];
                const int nr = static_cast<int>(cb.rows.size());
                // (A_i X) restricted to touched rows, then H = Z^{-1} A_i X.
                Matrix AXr = Matrix::Zero(nr, n);
                auto pos = [&](int r) {
                    return static_cast<int>(std::lower_bound(cb.rows.begin(), cb.rows.end(), r) - cb.rows.begin());
                };
                for (const auto& e : cb.entries) {
                    AXr.row(pos(e.r)) += e.v * Xk.row(e.c);
                    if (e.r != e.c) AXr.row(pos(e.c)) += e.v * Xk.row(e.r);
                }
                Matrix Zc(n, nr);
                for (int q = 0; q < nr; ++q) Zc.col(q) = Zi.col(cb.rows[q]);
                Matrix H = Zc * AXr;
                for (std::size_t v = u; v < users.size(); ++v) {
                    const auto& [j, slot2] = users[v];
                    double s = 0;
                    for (const auto& e : w.A[j][slot2].entries)
                        s += e.r == e.c ? e.v * H(e.r, e.r) : e.v * (H(e.r, e.c) + H(e.c, e.r));
                    M(i, j) += s;
                    if (i != j) M(j, i) += s;
                }
            }
        }
        M = sym(M);

        Eigen::LLT<Matrix> chol(M);
        if (chol.info() != Eigen::Success) {
            double reg = 1e-13 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
            for (int attempt = 0; attempt < 6 && chol.info() != Eigen::Success; ++attempt, reg *= 100)
                chol.compute(M + reg * Matrix::Identity(w.m, w.m));
            if (chol.info() != Eigen::Success) {
                out.status = SolveStatus::SlowProgress;
                break;
            }
        }

        auto direction = [&](double sigma_mu, const BlockPoint* dXa, const BlockPoint* dZa, BlockPoint& dX, Vector& dy,
                             BlockPoint& dZ) {
            BlockPoint K = zeros_like(w);
            for (std::size_t k = 0; k < X.size(); ++k) {
                if (w.diag[k]) {
                    Vector kk = sigma_mu * Zinv[k].col(0) + X[k].col(0).cwiseProduct(Rd[k].col(0)).cwiseProduct(Zinv[k].col(0));
                    if (dXa) kk -= (*dXa)[k].col(0).cwiseProduct((*dZa)[k].col(0)).cwiseProduct(Zinv[k].col(0));
                    K[k].col(0) = kk;
                } else {
                    Matrix kk = sigma_mu * Zinv[k] + X[k] * Rd[k] * Zinv[k];
                    if (dXa) kk -= (*dXa)[k] * (*dZa)[k] * Zinv[k];
                    K[k] = sym(kk);
                }
            }
            Vector rhs = apply_A(w, K) - w.b;
            dy = chol.solve(rhs);
            BlockPoint Atdy = apply_At(w, dy);
            dZ = zeros_like(w);
            dX = zeros_like(w);
            for (std::size_t k = 0; k < X.size(); ++k) {
                dZ[k] = Atdy[k] - Rd[k];
                if (w.diag[k]) {
                    Vector dx = sigma_mu * Zinv[k].col(0) - X[k].col(0) -
                                X[k].col(0).cwiseProduct(dZ[k].col(0)).cwiseProduct(Zinv[k].col(0));
                    if (dXa) dx -= (*dXa)[k].col(0).cwiseProduct((*dZa)[k].col(0)).cwiseProduct(Zinv[k].col(0));
                    dX[k].col(0) = dx;
                } else {
                    Matrix dx = sigma_mu * Zinv[k] - X[k] - X[k] * dZ[k] * Zinv[k];
                    if (dXa) dx -= (*dXa)[k] * (*dZa)[k] * Zinv[k];
                    dX[k] = sym(dx);
                }
            }
        };

        BlockPoint dXa, dZa;
        Vector dya;
        direction(0.0, nullptr, nullptr, dXa, dya, dZa);
        double ap = std::min(1.0, max_step(w, X, dXa));
        double ad = std::min(1.0, max_step(w, Z, dZa));
        double mu_aff = 0;
        for (std::size_t k = 0; k < X.size(); ++k)
            mu_aff += block_inner(X[k] + ap * dXa[k], Z[k] + ad * dZa[k]);
        mu_aff /= w.N;
        const double expo = std::max(1.0, 3.0 * std::pow(std::min(ap, ad), 2));
        double sigma = std::min(1.0, std::pow(std::max(mu_aff, 0.0) / mu, expo));

        BlockPoint dX, dZ;
        Vector dy;
        direction(sigma * mu, &dXa, &dZa, dX, dy, dZ);
        const double gamma = 0.9 + 0.09 * std::min(ap, ad);
        double step_p = std::min(1.0, gamma * max_step(w, X, dX));
        double step_d = std::min(1.0, gamma * max_step(w, Z, dZ));
        if (step_p < 1e-12 && step_d < 1e-12) {
            out.status = SolveStatus::SlowProgress;
            break;
        }
        for (std::size_t k = 0; k < X.size(); ++k) {
            X[k] += step_p * dX[k];
            Z[k] += step_d * dZ[k];
            if (!w.diag[k]) {
                X[k] = sym(X[k]);
                Z[k] = sym(Z[k]);
            }
        }
        y += step_d * dy;
        out.iterations = iter + 1;
    }

    out.X = bestX;
    out.y = besty;
    out.Z = bestZ;
    if (out.status == SolveStatus::IterationCap && out.iterations < params.max_iter) out.status = SolveStatus::SlowProgress;
    return out;
}

// Pivoted Cholesky on the constraint Gram matrix: picks an independent subset of constraints.
struct Dependency {
    std::vector<int> independent;
    std::vector<int> dependent;
    Matrix alpha; // dependent = alpha^T * independent (columns per dependent constraint)
};

Dependency find_dependencies(const StandardFormSDP& P) {
    const int m = P.num_constraints();
    std::map<std::tuple<int, int, int>, int> key;
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < m; ++i)
        for (const auto& e : P.A[i].entries()) {
            auto [it, ins] = key.try_emplace({e.block, e.row, e.col}, static_cast<int>(key.size()));
            double wgt = e.row == e.col ? 1.0 : std::sqrt(2.0);
            trips.emplace_back(i, it->second, wgt * e.value);
        }
    Eigen::SparseMatrix<double> V(m, std::max<int>(1, static_cast<int>(key.size())));
    V.setFromTriplets(trips.begin(), trips.end());
    Matrix G = Matrix(V * V.transpose());

    Dependency dep;
    Vector d = G.diagonal();
    const Vector d0 = d;
    Matrix L = Matrix::Zero(m, m);
    std::vector<bool> used(m, false);
    int r = 0;
    while (r < m) {
        int p = -1;
        double best = 0;
        for (int j = 0; j < m; ++j) {
            if (used[j]) continue;
            if (d(j) > 1e-14 * std::max(d0(j), 1e-300) && d0(j) > 0) {
                double score = d(j) / d0(j);
                if (score > best) { best = score; p = j; }
            }
        }
        if (p < 0) break;
        used[p] = true;
        const double piv = std::sqrt(d(p));
        Vector col = G.col(p);
        if (r > 0) col -= L.leftCols(r) * L.row(p).head(r).transpose();
        col /= piv;
        L.col(r) = col;
        for (int j = 0; j < m; ++j)
            if (!used[j]) d(j) -= col(j) * col(j);
        dep.independent.push_back(p);
        ++r;
    }
    std::sort(dep.independent.begin(), dep.independent.end());
    for (int j = 0; j < m; ++j)
        if (!std::binary_search(dep.independent.begin(), dep.independent.end(), j)) dep.dependent.push_back(j);
    if (!dep.dependent.empty()) {
        const int ni = static_cast<int>(dep.independent.size());
        Matrix GII(ni, ni), GID(ni, dep.dependent.size());
        for (int a = 0; a < ni; ++a) {
            for (int c = 0; c < ni; ++c) GII(a, c) = G(dep.independent[a], dep.independent[c]);
            for (std::size_t c = 0; c < dep.dependent.size(); ++c) GID(a, c) = G(dep.independent[a], dep.dependent[c]);
        }
        dep.alpha = ni > 0 ? Matrix(GII.ldlt().solve(GID)) : Matrix::Zero(0, dep.dependent.size());
    }
    return dep;
}

Solution finish(const StandardFormSDP& P, const Work& w, Outcome&& o, double c_sign, const std::vector<int>& keep) {
    Solution s;
    s.iterations = o.iterations;
    s.status = o.status;
    s.weak_duality_every_iterate = o.weak;
    s.gap_history = std::move(o.gaps);
    s.X = std::move(o.X);
    s.Z = std::move(o.Z);
    s.y = Vector::Zero(P.num_constraints());
    for (std::size_t a = 0; a < keep.size(); ++a) s.y(keep[a]) = o.y(a);
    // Report in the problem's sense: for minimization y flips sign, Z = C − Σ y A.
    if (c_sign < 0) s.y = -s.y;
    const double pobj = inner(w.C, s.X) * c_sign;
    const double dobj = P.b.dot(s.y);
    s.primal_value = pobj;
    s.dual_value = dobj;
    s.gap = rel_gap(pobj, dobj);
    Vector AX = apply_A(w, s.X);
    s.primal_residual = (w.b - AX).norm() / (1 + w.b.norm());
    Vector yint = c_sign < 0 ? Vector(-s.y) : s.y;
    Vector yk(keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a) yk(a) = yint(keep[a]);
    BlockPoint Aty = apply_At(w, yk);
    double rd = 0;
    for (std::size_t k = 0; k < s.X.size(); ++k) rd += (w.C[k] + s.Z[k] - Aty[k]).squaredNorm();
    s.dual_residual = std::sqrt(rd) / (1 + norm(w.C));
    return s;
}

} // namespace

Solution solve(const StandardFormSDP& P, const SolverParams& params) {
    P.validate();
    const double c_sign = P.sense == Sense::Maximize ? 1.0 : -1.0;

    Dependency dep = find_dependencies(P);
    std::vector<const SparseBlockMatrix*> rows;
    Vector b(dep.independent.size());
    for (std::size_t a = 0; a < dep.independent.size(); ++a) {
        rows.push_back(&P.A[dep.independent[a]]);
        b(a) = P.b(dep.independent[a]);
    }
    Work w = make_work(P.block_sizes, P.C, rows, b, c_sign);

    // Inconsistent dependent equalities: y = e_j − α gives Σ y A = 0 with b·y ≠ 0.
    for (std::size_t c = 0; c < dep.dependent.size(); ++c) {
        const int j = dep.dependent[c];
        double predicted = 0;
        for (std::size_t a = 0; a < dep.independent.size(); ++a) predicted += dep.alpha(a, c) * P.b(dep.independent[a]);
        const double scale = 1 + std::abs(P.b(j)) + std::abs(predicted);
        if (std::abs(P.b(j) - predicted) > 1e-9 * scale) {
            Solution s;
            s.status = SolveStatus::PrimalInfeasible;
            s.y = Vector::Zero(P.num_constraints());
            s.y(j) = 1;
            for (std::size_t a = 0; a < dep.independent.size(); ++a) s.y(dep.independent[a]) = -dep.alpha(a, c);
            double by = P.b.dot(s.y);
            if (by > 0) s.y = -s.y;
            s.y /= std::abs(by);
            s.X = zeros_like(w);
            s.Z = zeros_like(w);
            s.dual_value = P.b.dot(s.y);
            return s;
        }
    }

    const BlockPoint* X0 = nullptr;
    const BlockPoint* Z0 = nullptr;
    Vector y0;
    if (params.initial_point && params.initial_point->y.size() == P.num_constraints()) {
        X0 = &params.initial_point->X;
        Z0 = &params.initial_point->Z;
        y0.resize(dep.independent.size());
        for (std::size_t a = 0; a < dep.independent.size(); ++a) y0(a) = params.initial_point->y(dep.independent[a]) * c_sign;
    }
    Outcome o = interior_point(w, params, X0, X0 ? &y0 : nullptr, Z0);
    return finish(P, w, std::move(o), c_sign, dep.independent);
}

} // namespace qcrelax
