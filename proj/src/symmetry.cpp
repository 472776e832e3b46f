#include "qcrelax/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "parallel.hpp"

namespace qcrelax {

namespace {

using Eigen::Index;

BlockPoint identity_point(const std::vector<int>& sizes) {
    BlockPoint out;
    for (int s : sizes) out.push_back(Matrix::Identity(std::abs(s), std::abs(s)));
    return out;
}

BlockPoint product(const BlockPoint& a, const BlockPoint& b) {
    BlockPoint out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
    return out;
}

// ρ X ρᵀ on a block; diagonal blocks are vectors and ρ a signed permutation.
Matrix act(const Matrix& rho, const Matrix& X, bool diag) {
    if (diag) return rho.cwiseAbs2() * X;
    return rho * X * rho.transpose();
}

std::vector<long long> element_key(const BlockPoint& g) {
    std::vector<long long> key;
    for (const auto& m : g)
        for (Index k = 0; k < m.size(); ++k) key.push_back(std::llround(m.data()[k] * 1e8));
    return key;
}

BlockPoint to_point(const SparseBlockMatrix& m, const std::vector<int>& sizes) {
    BlockPoint out;
    for (std::size_t k = 0; k < sizes.size(); ++k) out.push_back(dense_block(m, static_cast<int>(k), sizes[k]));
    return out;
}

SparseBlockMatrix from_point(const BlockPoint& X, const std::vector<int>& sizes) {
    double scale = 0;
    for (const auto& m : X) scale = std::max(scale, m.cwiseAbs().maxCoeff());
    const double cut = 1e-14 * std::max(scale, 1.0);
    SparseBlockMatrix out;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        const auto& m = X[k];
        if (sizes[k] < 0) {
            for (Index i = 0; i < m.rows(); ++i)
                if (std::abs(m(i, 0)) > cut) out.add(static_cast<int>(k), static_cast<int>(i), static_cast<int>(i), m(i, 0));
        } else {
            for (Index i = 0; i < m.rows(); ++i)
                for (Index j = i; j < m.cols(); ++j) {
                    const double v = 0.5 * (m(i, j) + m(j, i));
                    if (std::abs(v) > cut) out.add(static_cast<int>(k), static_cast<int>(i), static_cast<int>(j), v);
                }
        }
    }
    out.normalize();
    return out;
}

double point_inner(const BlockPoint& a, const BlockPoint& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k].array() * b[k].array()).sum();
    return s;
}

double point_norm(const BlockPoint& a) { return std::sqrt(point_inner(a, a)); }

// Vector whose dot products reproduce the trace inner product.
Vector flatten(const SparseBlockMatrix& m, const std::vector<int>& sizes, const std::vector<Index>& offsets) {
    Vector v = Vector::Zero(offsets.back());
    for (const auto& e : m.entries()) {
        const int n = std::abs(sizes[e.block]);
        Index pos;
        if (sizes[e.block] < 0) pos = offsets[e.block] + e.row;
        else pos = offsets[e.block] + e.row * n - e.row * (e.row - 1) / 2 + (e.col - e.row);
        v(pos) += e.row == e.col ? e.value : std::sqrt(2.0) * e.value;
    }
    return v;
}

std::vector<Index> flat_offsets(const std::vector<int>& sizes) {
    std::vector<Index> off{0};
    for (int s : sizes) off.push_back(off.back() + (s < 0 ? -s : s * (s + 1) / 2));
    return off;
}

// Merges identical rows (summing A and b), drops zero and dependent rows after checking consistency.
void reduce_rows(StandardFormSDP& P, Matrix* row_map) {
    const int m = P.num_constraints();
    const auto off = flat_offsets(P.block_sizes);
    std::vector<Vector> vecs;
    double smax = 0, bmax = 0;
    for (const auto& a : P.A) {
        vecs.push_back(flatten(a, P.block_sizes, off));
        smax = std::max(smax, vecs.back().norm());
    }
    if (m > 0) bmax = P.b.cwiseAbs().maxCoeff();
    const double btol = 1e-9 * (1 + bmax);

    std::vector<std::vector<int>> classes;
    for (int i = 0; i < m; ++i) {
        if (vecs[i].norm() <= 1e-12 * smax || smax == 0) {
            if (std::abs(P.b(i)) > btol)
                throw Error(ErrorCode::Infeasible, "constraint " + std::to_string(i) + " reduces to 0 = " + std::to_string(P.b(i)));
            continue;
        }
        bool placed = false;
        for (auto& c : classes) {
            if ((vecs[i] - vecs[c[0]]).norm() <= 1e-10 * smax) {
                if (std::abs(P.b(i) - P.b(c[0])) > btol)
                    throw Error(ErrorCode::Infeasible, "identical constraints with different right-hand sides");
                c.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) classes.push_back({i});
    }

    const int k = static_cast<int>(classes.size());
    Matrix W(off.back(), k);
    Vector bw(k);
    for (int c = 0; c < k; ++c) {
        W.col(c).setZero();
        bw(c) = 0;
        for (int i : classes[c]) {
            W.col(c) += vecs[i];
            bw(c) += P.b(i);
        }
    }
    std::vector<int> keep;
    if (k > 0) {
        Eigen::ColPivHouseholderQR<Matrix> qr(W);
        qr.setThreshold(1e-10);
        const Index r = qr.rank();
        for (Index j = 0; j < r; ++j) keep.push_back(static_cast<int>(qr.colsPermutation().indices()(j)));
        std::sort(keep.begin(), keep.end());
        if (r < k) {
            Matrix Wk(W.rows(), r);
            Vector bk(r);
            for (Index j = 0; j < r; ++j) {
                Wk.col(j) = W.col(keep[j]);
                bk(j) = bw(keep[j]);
            }
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Wk);
            for (int c = 0; c < k; ++c) {
                if (std::binary_search(keep.begin(), keep.end(), c)) continue;
                Vector coef = cod.solve(W.col(c));
                if (std::abs(coef.dot(bk) - bw(c)) > btol * (1 + coef.cwiseAbs().sum()))
                    throw Error(ErrorCode::Infeasible, "dependent constraints have inconsistent right-hand sides");
            }
        }
    }

    std::vector<SparseBlockMatrix> A;
    Vector b(static_cast<Index>(keep.size()));
    if (row_map) *row_map = Matrix::Zero(static_cast<Index>(keep.size()), m);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        SparseBlockMatrix a;
        for (int i : classes[keep[r]]) {
            for (const auto& e : P.A[i].entries()) a.add(e.block, e.row, e.col, e.value);
            if (row_map) (*row_map)(static_cast<Index>(r), i) = 1;
        }
        a.normalize();
        A.push_back(std::move(a));
        b(static_cast<Index>(r)) = bw(keep[r]);
    }
    P.A = std::move(A);
    P.b = std::move(b);
}

Matrix random_symmetric(int n, Rng& rng) {
    std::normal_distribution<double> N01;
    Matrix h(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) h(i, j) = h(j, i) = N01(rng);
    return h;
}

Matrix random_block(int size, Rng& rng) {
    std::normal_distribution<double> N01;
    if (size < 0) {
        Matrix v(-size, 1);
        for (Index i = 0; i < v.rows(); ++i) v(i, 0) = N01(rng);
        return v;
    }
    return random_symmetric(size, rng);
}

void check_sizes(const StandardFormSDP& P, const GroupRepresentation& rep) {
    if (rep.block_sizes != P.block_sizes)
        throw Error(ErrorCode::SchemaViolation, "representation block sizes differ from the SDP");
}

bool acts_trivially(const GroupRepresentation& rep, int block) {
    for (const auto& g : rep.generators) {
        const auto& m = g[static_cast<std::size_t>(block)];
        if (!m.isIdentity(1e-12)) return false;
    }
    return true;
}

} // namespace

Matrix permutation_matrix(const std::vector<int>& perm) {
    const int n = static_cast<int>(perm.size());
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    Matrix P = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const int j = perm[static_cast<std::size_t>(i)];
        if (j < 0 || j >= n || seen[static_cast<std::size_t>(j)])
            throw Error(ErrorCode::SchemaViolation, "not a permutation of 0.." + std::to_string(n - 1));
        seen[static_cast<std::size_t>(j)] = true;
        P(j, i) = 1;
    }
    return P;
}

GroupRepresentation GroupRepresentation::on_block(const std::vector<int>& block_sizes, int block,
                                                  const std::vector<Matrix>& gens) {
    if (block < 0 || block >= static_cast<int>(block_sizes.size()))
        throw Error(ErrorCode::InvalidArgument, "representation block out of range");
    GroupRepresentation rep;
    rep.block_sizes = block_sizes;
    for (const auto& g : gens) {
        BlockPoint p = identity_point(block_sizes);
        p[static_cast<std::size_t>(block)] = g;
        rep.generators.push_back(std::move(p));
    }
    rep.validate();
    return rep;
}

GroupRepresentation GroupRepresentation::from_permutations(int n, const std::vector<std::vector<int>>& perms) {
    std::vector<Matrix> gens;
    for (const auto& p : perms) {
        if (static_cast<int>(p.size()) != n) throw Error(ErrorCode::SchemaViolation, "permutation length differs from block size");
        gens.push_back(permutation_matrix(p));
    }
    return on_block({n}, 0, gens);
}

GroupRepresentation GroupRepresentation::trivial(const std::vector<int>& block_sizes) {
    GroupRepresentation rep;
    rep.block_sizes = block_sizes;
    rep.validate();
    return rep;
}

void GroupRepresentation::validate() const {
    for (int s : block_sizes)
        if (s == 0) throw Error(ErrorCode::SchemaViolation, "representation block of size 0");
    for (const auto& g : generators) {
        if (g.size() != block_sizes.size()) throw Error(ErrorCode::SchemaViolation, "generator has the wrong number of blocks");
        for (std::size_t k = 0; k < g.size(); ++k) {
            const int n = std::abs(block_sizes[k]);
            const auto& m = g[k];
            if (m.rows() != n || m.cols() != n) throw Error(ErrorCode::SchemaViolation, "generator block has the wrong size");
            if (!m.allFinite() || !(m * m.transpose()).isIdentity(1e-10))
                throw Error(ErrorCode::SchemaViolation, "generator is not orthogonal");
            if (block_sizes[k] < 0) {
                for (Index i = 0; i < n; ++i) {
                    int nz = 0;
                    for (Index j = 0; j < n; ++j) {
                        if (std::abs(m(i, j)) < 1e-12) continue;
                        if (std::abs(std::abs(m(i, j)) - 1) > 1e-12) nz += 2;
                        ++nz;
                    }
                    if (nz != 1) throw Error(ErrorCode::SchemaViolation, "diagonal blocks need signed permutation generators");
                }
            }
        }
    }
}

bool GroupRepresentation::enumerate(std::size_t cap) {
    elements.clear();
    enumerated = false;
    std::vector<BlockPoint> found{identity_point(block_sizes)};
    std::map<std::vector<long long>, std::size_t> index{{element_key(found[0]), 0}};
    for (std::size_t head = 0; head < found.size(); ++head) {
        for (const auto& s : generators) {
            BlockPoint g = product(s, found[head]);
            auto key = element_key(g);
            if (index.count(key)) continue;
            if (found.size() >= cap) return false;
            index.emplace(std::move(key), found.size());
            found.push_back(std::move(g));
        }
    }
    elements = std::move(found);
    enumerated = true;
    return true;
}

Matrix average_block(const GroupRepresentation& rep, int block, const Matrix& X) {
    const bool diag = rep.block_sizes[static_cast<std::size_t>(block)] < 0;
    const auto k = static_cast<std::size_t>(block);
    if (rep.enumerated) {
        constexpr int kChunk = 256;
        const int count = static_cast<int>(rep.elements.size());
        Matrix total = Matrix::Zero(X.rows(), X.cols());
        for (int start = 0; start < count; start += kChunk) {
            const int len = std::min(kChunk, count - start);
            std::vector<Matrix> terms(static_cast<std::size_t>(len));
            detail::parallel_for(len, [&](int i) {
                terms[static_cast<std::size_t>(i)] = act(rep.elements[static_cast<std::size_t>(start + i)][k], X, diag);
            });
            for (std::size_t width = 1; width < terms.size(); width *= 2)
                for (std::size_t i = 0; i + width < terms.size(); i += 2 * width) terms[i] += terms[i + width];
            total += terms[0];
        }
        return total / static_cast<double>(count);
    }
    std::vector<Matrix> gens;
    for (const auto& g : rep.generators) {
        gens.push_back(g[k]);
        gens.push_back(g[k].transpose());
    }
    Matrix cur = X;
    const double scale = std::max(1.0, X.norm());
    for (int it = 0; it < 1000000; ++it) {
        Matrix next = cur;
        for (const auto& g : gens) next += act(g, cur, diag);
        next /= static_cast<double>(gens.size() + 1);
        const double change = (next - cur).norm();
        cur = std::move(next);
        if (change <= 1e-12 * scale) return cur;
    }
    throw Error(ErrorCode::NonTermination, "Cesàro averaging did not reach its fixed point");
}

BlockPoint average_point(const GroupRepresentation& rep, const BlockPoint& X) {
    BlockPoint out;
    for (std::size_t k = 0; k < X.size(); ++k) out.push_back(average_block(rep, static_cast<int>(k), X[k]));
    return out;
}

void verify_invariance(const StandardFormSDP& P, GroupRepresentation& rep, Rng& rng, double tol) {
    P.validate();
    check_sizes(P, rep);
    rep.validate();
    const auto& sizes = P.block_sizes;
    const int m = P.num_constraints();
    std::vector<BlockPoint> A;
    for (const auto& a : P.A) A.push_back(to_point(a, sizes));
    const BlockPoint C = to_point(P.C, sizes);
    Matrix G(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) G(i, j) = G(j, i) = inner(P.A[static_cast<std::size_t>(j)], A[static_cast<std::size_t>(i)], sizes);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(G);
    double ascale = point_norm(C);
    for (const auto& a : A) ascale = std::max(ascale, point_norm(a));
    auto constraint_values = [&](const BlockPoint& X) {
        Vector v(m);
        for (int i = 0; i < m; ++i) v(i) = inner(P.A[static_cast<std::size_t>(i)], X, sizes);
        return v;
    };
    // X − Σ z_i A_i with G z = 𝒜X − rhs
    auto project = [&](BlockPoint X, const Vector& rhs) {
        if (m == 0) return X;
        Vector z = cod.solve(constraint_values(X) - rhs);
        for (int i = 0; i < m; ++i)
            for (std::size_t k = 0; k < X.size(); ++k) X[k] -= z(i) * A[static_cast<std::size_t>(i)][k];
        return X;
    };
    for (int trial = 0; trial < 2; ++trial) {
        BlockPoint R;
        for (int s : sizes) R.push_back(random_block(s, rng));
        BlockPoint X0 = project(R, P.b);
        BlockPoint R2;
        for (int s : sizes) R2.push_back(random_block(s, rng));
        BlockPoint N = project(R2, Vector::Zero(m));
        const double scale = std::max(1.0, ascale) * (1 + point_norm(X0) + point_norm(N));
        if (m > 0 && (constraint_values(X0) - P.b).cwiseAbs().maxCoeff() > tol * scale)
            throw Error(ErrorCode::NotInvariant, "constraints are inconsistent; invariance cannot be checked");
        for (std::size_t g = 0; g < rep.generators.size(); ++g) {
            BlockPoint X0g, Ng;
            for (std::size_t k = 0; k < sizes.size(); ++k) {
                X0g.push_back(act(rep.generators[g][k], X0[k], sizes[k] < 0));
                Ng.push_back(act(rep.generators[g][k], N[k], sizes[k] < 0));
            }
            if (m > 0) {
                if ((constraint_values(X0g) - P.b).cwiseAbs().maxCoeff() > tol * scale ||
                    constraint_values(Ng).cwiseAbs().maxCoeff() > tol * scale)
                    throw Error(ErrorCode::NotInvariant, "generator " + std::to_string(g) + " does not preserve the constraints");
            }
            if (std::abs(point_inner(C, X0g) - point_inner(C, X0)) > tol * scale ||
                std::abs(point_inner(C, Ng) - point_inner(C, N)) > tol * scale)
                throw Error(ErrorCode::NotInvariant, "generator " + std::to_string(g) + " changes the objective");
        }
    }
    rep.verified_invariance = true;
}

StandardFormSDP group_average(const StandardFormSDP& P, GroupRepresentation& rep, Matrix* row_map, std::uint64_t seed) {
    if (!rep.verified_invariance) {
        Rng rng(seed);
        verify_invariance(P, rep, rng);
    }
    if (!rep.enumerated && !rep.enumerate() && rep.generators.empty())
        throw Error(ErrorCode::CapExceeded, "group enumeration failed");
    StandardFormSDP out;
    out.block_sizes = P.block_sizes;
    out.sense = P.sense;
    out.C = from_point(average_point(rep, to_point(P.C, P.block_sizes)), P.block_sizes);
    out.A.resize(P.A.size());
    for (std::size_t i = 0; i < P.A.size(); ++i)
        out.A[i] = from_point(average_point(rep, to_point(P.A[i], P.block_sizes)), P.block_sizes);
    out.b = P.b;
    reduce_rows(out, row_map);
    out.validate();
    return out;
}

void BlockDecomposition::verify(const std::vector<Matrix>& generators, double orth_tol, double block_tol) const {
    const Index n = V.rows();
    if (V.cols() != n) throw Error(ErrorCode::InvalidArgument, "block basis is not square");
    Index total = 0;
    for (const auto& b : blocks) {
        if (b.multiplicity < 1 || b.dimension < 1) throw Error(ErrorCode::InvalidArgument, "empty irrep block");
        total += b.multiplicity * b.dimension;
    }
    if (total != n) throw Error(ErrorCode::InvalidArgument, "Σ n_i d_i differs from the block size");
    if (((V * V.transpose()) - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > orth_tol)
        throw Error(ErrorCode::InvalidArgument, "block basis is not orthogonal");
    for (const auto& g : generators) {
        if (g.rows() != n) throw Error(ErrorCode::InvalidArgument, "generator size differs from the block basis");
        Matrix R = V * g * V.transpose();
        Matrix expect = Matrix::Zero(n, n);
        Index off = 0;
        for (const auto& b : blocks) {
            const int d = b.dimension;
            Matrix irrep = R.block(off, off, d, d);
            for (int a = 0; a < b.multiplicity; ++a) expect.block(off + a * d, off + a * d, d, d) = irrep;
            off += b.multiplicity * d;
        }
        if ((R - expect).cwiseAbs().maxCoeff() > block_tol)
            throw Error(ErrorCode::InvalidArgument, "block basis does not split the representation as ⊕ 1 ⊗ ρ^i");
    }
}

BlockDecomposition find_block_basis(const GroupRepresentation& rep, int block, double tol, std::uint64_t seed) {
    if (block < 0 || block >= static_cast<int>(rep.block_sizes.size()))
        throw Error(ErrorCode::InvalidArgument, "representation block out of range");
    const int n = rep.block_sizes[static_cast<std::size_t>(block)];
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "block bases are for matrix blocks");
    GroupRepresentation local = rep;
    if (!local.enumerated && !local.enumerate())
        throw Error(ErrorCode::CapExceeded, "group exceeds the enumeration cap");
    std::vector<Matrix> gens;
    for (const auto& g : rep.generators) gens.push_back(g[static_cast<std::size_t>(block)]);

    BlockDecomposition out;
    if (acts_trivially(rep, block)) {
        out.V = Matrix::Identity(n, n);
        out.blocks = {{n, 1}};
        return out;
    }
    Rng rng(seed);
    Matrix H = average_block(local, block, random_symmetric(n, rng));
    std::normal_distribution<double> N01;
    Matrix R(n, n);
    for (Index i = 0; i < R.size(); ++i) R.data()[i] = N01(rng);
    const Matrix Rbar = average_block(local, block, R);

    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    const Vector& ev = es.eigenvalues();
    const double spread = std::max(1.0, ev.cwiseAbs().maxCoeff());
    std::vector<Matrix> spaces;
    for (Index i = 0; i < n;) {
        Index j = i + 1;
        while (j < n && ev(j) - ev(j - 1) <= tol * spread) ++j;
        spaces.push_back(es.eigenvectors().middleCols(i, j - i));
        i = j;
    }
    for (const auto& B : spaces)
        for (const auto& g : gens)
            if (((g * B) - B * (B.transpose() * g * B)).norm() > 1e-8 * std::sqrt(static_cast<double>(n)))
                throw Error(ErrorCode::InvalidArgument, "eigenvalue clustering did not isolate invariant subspaces");

    // Isotypic classes: subspaces linked by a nonzero averaged intertwiner.
    std::vector<std::vector<int>> classes;
    const double rnorm = Rbar.norm();
    for (int s = 0; s < static_cast<int>(spaces.size()); ++s) {
        bool placed = false;
        for (auto& c : classes) {
            const Matrix& ref = spaces[static_cast<std::size_t>(c[0])];
            if (ref.cols() != spaces[static_cast<std::size_t>(s)].cols()) continue;
            if ((spaces[static_cast<std::size_t>(s)].transpose() * Rbar * ref).norm() > 1e-6 * rnorm) {
                c.push_back(s);
                placed = true;
                break;
            }
        }
        if (!placed) classes.push_back({s});
    }
    std::stable_sort(classes.begin(), classes.end(), [&](const auto& a, const auto& b) {
        const Index da = spaces[static_cast<std::size_t>(a[0])].cols(), db = spaces[static_cast<std::size_t>(b[0])].cols();
        if (da != db) return da < db;
        return a.size() > b.size();
    });

    out.V = Matrix::Zero(n, n);
    Index row = 0;
    for (const auto& c : classes) {
        const Matrix& ref = spaces[static_cast<std::size_t>(c[0])];
        const int d = static_cast<int>(ref.cols());
        for (int s : c) {
            Matrix B = spaces[static_cast<std::size_t>(s)];
            if (s != c[0]) {
                Eigen::JacobiSVD<Matrix> svd(B.transpose() * Rbar * ref, Eigen::ComputeFullU | Eigen::ComputeFullV);
                B = B * (svd.matrixU() * svd.matrixV().transpose());
            }
            out.V.middleRows(row, d) = B.transpose();
            row += d;
        }
        out.blocks.push_back({static_cast<int>(c.size()), d});
    }
    out.verify(gens);
    return out;
}

StandardFormSDP block_diagonalize(const StandardFormSDP& P, GroupRepresentation& rep,
                                  const std::vector<BlockDecomposition>* supplied, std::vector<BlockDecomposition>* used,
                                  std::uint64_t seed) {
    if (!rep.verified_invariance) {
        Rng rng(seed);
        verify_invariance(P, rep, rng);
    }
    const auto& sizes = P.block_sizes;
    const std::size_t nb = sizes.size();
    if (supplied && supplied->size() != nb)
        throw Error(ErrorCode::InvalidArgument, "need one supplied block decomposition per SDP block");

    std::vector<BlockDecomposition> decomp(nb);
    std::vector<bool> split(nb, false);
    for (std::size_t k = 0; k < nb; ++k) {
        const int s = sizes[k];
        if (s < 0 || acts_trivially(rep, static_cast<int>(k))) {
            decomp[k].V = Matrix::Identity(std::abs(s), std::abs(s));
            decomp[k].blocks = {{std::abs(s), 1}};
            continue;
        }
        split[k] = true;
        if (supplied) {
            decomp[k] = (*supplied)[k];
            std::vector<Matrix> gens;
            for (const auto& g : rep.generators) gens.push_back(g[k]);
            decomp[k].verify(gens);
        } else {
            decomp[k] = find_block_basis(rep, static_cast<int>(k), 1e-7, seed);
        }
        // Every commutant element must look like ⊕ X^i ⊗ 1_{d_i}; irreps of complex or quaternionic type do not.
        Rng rng(seed + 7919 * (k + 1));
        if (!rep.enumerated) rep.enumerate();
        Matrix Hb = decomp[k].V * average_block(rep, static_cast<int>(k), random_symmetric(s, rng)) * decomp[k].V.transpose();
        Matrix expect = Matrix::Zero(s, s);
        Index off = 0;
        for (const auto& b : decomp[k].blocks) {
            for (int a = 0; a < b.multiplicity; ++a)
                for (int c = 0; c < b.multiplicity; ++c) {
                    const double v = Hb(off + a * b.dimension, off + c * b.dimension);
                    for (int t = 0; t < b.dimension; ++t) expect(off + a * b.dimension + t, off + c * b.dimension + t) = v;
                }
            off += b.multiplicity * b.dimension;
        }
        if ((Hb - expect).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, Hb.norm()))
            throw Error(ErrorCode::InvalidArgument, "representation has irreps that are not of real type");
    }

    // Reduced blocks: new index list per original block.
    std::vector<int> new_sizes;
    std::vector<std::vector<int>> target(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        if (!split[k]) {
            target[k].push_back(static_cast<int>(new_sizes.size()));
            new_sizes.push_back(sizes[k]);
            continue;
        }
        for (const auto& b : decomp[k].blocks) {
            target[k].push_back(static_cast<int>(new_sizes.size()));
            new_sizes.push_back(b.multiplicity);
        }
    }
    auto reduce = [&](const SparseBlockMatrix& M) {
        SparseBlockMatrix out;
        for (std::size_t k = 0; k < nb; ++k) {
            if (!split[k]) {
                for (const auto& e : M.entries())
                    if (e.block == static_cast<int>(k)) out.add(target[k][0], e.row, e.col, e.value);
                continue;
            }
            Matrix D = dense_block(M, static_cast<int>(k), sizes[k]);
            if (D.isZero(0)) continue;
            Matrix T = decomp[k].V * D * decomp[k].V.transpose();
            Index off = 0;
            for (std::size_t i = 0; i < decomp[k].blocks.size(); ++i) {
                const auto& b = decomp[k].blocks[i];
                for (int a = 0; a < b.multiplicity; ++a)
                    for (int c = a; c < b.multiplicity; ++c) {
                        double v = 0;
                        for (int t = 0; t < b.dimension; ++t) v += T(off + a * b.dimension + t, off + c * b.dimension + t);
                        if (std::abs(v) > 1e-14 * std::max(1.0, T.cwiseAbs().maxCoeff())) out.add(target[k][i], a, c, v);
                    }
                off += b.multiplicity * b.dimension;
            }
        }
        out.normalize();
        return out;
    };

    StandardFormSDP red;
    red.sense = P.sense;
    red.block_sizes = new_sizes;
    red.C = reduce(P.C);
    for (const auto& a : P.A) red.A.push_back(reduce(a));
    red.b = P.b;

    // Drop blocks nothing refers to.
    std::vector<bool> touched(new_sizes.size(), false);
    for (const auto& e : red.C.entries()) touched[static_cast<std::size_t>(e.block)] = true;
    for (const auto& a : red.A)
        for (const auto& e : a.entries()) touched[static_cast<std::size_t>(e.block)] = true;
    std::vector<int> remap(new_sizes.size(), -1);
    std::vector<int> kept_sizes;
    for (std::size_t j = 0; j < new_sizes.size(); ++j)
        if (touched[j]) {
            remap[j] = static_cast<int>(kept_sizes.size());
            kept_sizes.push_back(new_sizes[j]);
        }
    if (kept_sizes.empty()) throw Error(ErrorCode::InvalidArgument, "reduced SDP has no blocks");
    auto renumber = [&](const SparseBlockMatrix& M) {
        SparseBlockMatrix out;
        for (const auto& e : M.entries()) out.add(remap[static_cast<std::size_t>(e.block)], e.row, e.col, e.value);
        out.normalize();
        return out;
    };
    red.C = renumber(red.C);
    for (auto& a : red.A) a = renumber(a);
    red.block_sizes = kept_sizes;
    reduce_rows(red, nullptr);
    red.validate();
    if (used) *used = decomp;
    return red;
}

} // namespace qcrelax
