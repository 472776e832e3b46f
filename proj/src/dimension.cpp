#include "qcrelax/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <tuple>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "parallel.hpp"

namespace qcrelax {

AlgebraPtr pm_algebra(int X, int Y, int N, bool completeness) {
    if (X < 1 || Y < 1 || N < 2) throw Error(ErrorCode::SchemaViolation, "prepare-and-measure needs X, Y >= 1 and N >= 2");
    std::vector<SymbolSpec> specs;
    for (int x = 0; x < X; ++x) specs.push_back({"R" + std::to_string(x), SymbolKind::State});
    for (int y = 0; y < Y; ++y)
        for (int b = 0; b < N; ++b)
            specs.push_back({"M" + std::to_string(b) + "|" + std::to_string(y), SymbolKind::Projector, y, b});
    return Algebra::declare(specs, {false, completeness});
}

std::vector<std::vector<std::vector<int>>> rank_profiles(int dim, int Y, int N, std::size_t cap) {
    std::vector<std::vector<int>> comps;
    std::vector<int> cur(static_cast<std::size_t>(N), 0);
    auto rec = [&](auto&& self, int pos, int left) -> void {
        if (pos == N - 1) {
            cur[static_cast<std::size_t>(pos)] = left;
            comps.push_back(cur);
            return;
        }
        for (int r = 0; r <= left; ++r) {
            cur[static_cast<std::size_t>(pos)] = r;
            self(self, pos + 1, left - r);
        }
    };
    rec(rec, 0, dim);
    double total = std::pow(static_cast<double>(comps.size()), Y);
    if (total > static_cast<double>(cap))
        throw Error(ErrorCode::CapExceeded, "rank profile count " + std::to_string(static_cast<long long>(total)) +
                                                " exceeds the cap; pass a single profile");
    std::vector<std::vector<std::vector<int>>> out;
    for (std::size_t n = 0; n < static_cast<std::size_t>(total); ++n) {
        std::vector<std::vector<int>> p;
        std::size_t k = n;
        for (int y = 0; y < Y; ++y) {
            p.push_back(comps[k % comps.size()]);
            k /= comps.size();
        }
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

struct NumericModel {
    std::vector<CMatrix> states;
    std::vector<std::vector<CMatrix>> M;
};

CMatrix letter_matrix(const Algebra& A, const Letter& l, const NumericModel& m) {
    const auto& s = A.symbol(l.id);
    if (s.kind == SymbolKind::State) {
        const int x = std::stoi(s.label.substr(1));
        return m.states[static_cast<std::size_t>(x)];
    }
    return m.M[static_cast<std::size_t>(s.measurement)][static_cast<std::size_t>(s.outcome)];
}

Matrix gram(const SampledBasis& B, const NumericModel& m) {
    const int D = B.hilbert_dim();
    std::vector<CMatrix> ops;
    ops.reserve(B.S.size());
    for (const auto& u : B.S.members) {
        CMatrix U = CMatrix::Identity(D, D);
        for (const auto& l : u.word()) {
            CMatrix L = letter_matrix(*B.algebra, l, m);
            U = U * (l.adjoint ? CMatrix(L.adjoint()) : L);
        }
        ops.push_back(std::move(U));
    }
    const int n = static_cast<int>(ops.size());
    Matrix G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            // tr(u† v) = Σ conj(u) ∘ v
            const double v = (ops[static_cast<std::size_t>(i)].conjugate().cwiseProduct(ops[static_cast<std::size_t>(j)])).sum().real();
            G(i, j) = v;
            G(j, i) = v;
        }
    return G;
}

NumericModel draw_model(const SampledBasis& B, Rng& rng) {
    const int D = B.hilbert_dim();
    NumericModel m;
    for (int x = 0; x < B.dims.X; ++x) {
        CVector psi = CVector::Zero(D);
        psi.head(B.d) = random_pure_state(B.d, rng);
        m.states.push_back(psi * psi.adjoint());
    }
    for (int y = 0; y < B.dims.Y; ++y)
        m.M.push_back(random_projective_measurement(D, B.ranks[static_cast<std::size_t>(y)], rng));
    return m;
}

Vector vectorize(const Matrix& G) {
    const int n = static_cast<int>(G.rows());
    Vector v(n * (n + 1) / 2);
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) v(k++) = i == j ? G(i, j) : std::sqrt(2.0) * G(i, j);
    return v;
}

int numeric_rank(const std::vector<Matrix>& samples, double tol) {
    if (samples.empty()) return 0;
    const Eigen::Index len = vectorize(samples[0]).size();
    Matrix V(len, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t k = 0; k < samples.size(); ++k) V.col(static_cast<Eigen::Index>(k)) = vectorize(samples[k]);
    Eigen::BDCSVD<Matrix> svd(V);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0) return 0;
    int r = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s(k) > tol * s(0)) ++r;
    return r;
}

void validate_ranks(const SampledBasis& B) {
    if (static_cast<int>(B.ranks.size()) != B.dims.Y)
        throw Error(ErrorCode::SchemaViolation, "rank profile needs one entry per measurement");
    for (const auto& r : B.ranks) {
        int sum = 0;
        for (int v : r) {
            if (v < 0) throw Error(ErrorCode::SchemaViolation, "projector ranks must be nonnegative");
            sum += v;
        }
        if (static_cast<int>(r.size()) != B.dims.N || sum != B.hilbert_dim())
            throw Error(ErrorCode::SchemaViolation, "projector ranks of a measurement must sum to the Hilbert dimension");
    }
}

} // namespace

SampledBasis sample_basis(PmDims dims, int d, const MonomialSet& S, const std::vector<std::vector<int>>& ranks,
                          const NvSampleOptions& opt) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
    if (S.members.empty()) throw Error(ErrorCode::InvalidArgument, "monomial set is empty");
    if (opt.rank_margin < 1 || opt.sample_cap < 1 || opt.batch < 1)
        throw Error(ErrorCode::InvalidArgument, "rank margin, sample cap and batch must be positive");
    SampledBasis B;
    B.dims = dims;
    B.d = d;
    B.algebra = pm_algebra(dims.X, dims.Y, dims.N);
    B.S = S;
    B.ranks = ranks;
    B.dilated = opt.dilate;
    validate_ranks(B);
    for (const auto& u : S.members)
        for (const auto& l : u.word())
            if (l.id >= B.algebra->symbols().size())
                throw Error(ErrorCode::AlgebraMismatch, "monomial set is not over the prepare-and-measure algebra");

    std::vector<Vector> ortho; // orthonormal basis of the vectorized span
    double max_norm = 0;
    int stalled = 0;
    while (B.draws < opt.sample_cap && stalled < opt.rank_margin) {
        const int count = std::min(opt.batch, opt.sample_cap - B.draws);
        std::vector<Matrix> batch(static_cast<std::size_t>(count));
        const int base = B.draws;
        detail::parallel_for(count, [&](int k) {
            Rng rng = detail::restart_rng(opt.seed, base + k);
            batch[static_cast<std::size_t>(k)] = gram(B, draw_model(B, rng));
        });
        for (auto& G : batch) {
            if (stalled >= opt.rank_margin) break;
            ++B.draws;
            Vector v = vectorize(G);
            max_norm = std::max(max_norm, v.norm());
            Vector r = v;
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& q : ortho) r -= q.dot(r) * q;
            if (r.norm() <= opt.rank_tol * max_norm) {
                ++stalled;
                continue;
            }
            stalled = 0;
            ortho.push_back(r / r.norm());
            B.samples.push_back(std::move(G));
        }
    }
    B.safe = stalled >= opt.rank_margin;
    if (!B.safe)
        throw Error(ErrorCode::CapExceeded, "span rank did not stall within " + std::to_string(opt.sample_cap) + " samples");
    B.span_rank = numeric_rank(B.samples, opt.rank_tol);
    return B;
}

Matrix nv_moment_matrix(const SampledBasis& basis, const std::vector<CMatrix>& states,
                        const std::vector<std::vector<CMatrix>>& M) {
    if (static_cast<int>(states.size()) != basis.dims.X || static_cast<int>(M.size()) != basis.dims.Y)
        throw Error(ErrorCode::SchemaViolation, "model does not match the scenario");
    return gram(basis, NumericModel{states, M});
}

SampledBasis truncate_basis(const SampledBasis& basis, int k) {
    if (k < 0 || k > static_cast<int>(basis.samples.size()))
        throw Error(ErrorCode::InvalidArgument, "truncation beyond the basis size");
    SampledBasis out = basis;
    out.samples.resize(static_cast<std::size_t>(k));
    out.span_rank = k;
    out.safe = basis.safe && k == static_cast<int>(basis.samples.size());
    return out;
}

namespace {

// Linear functional on Γ giving p(b|x,y): list of (i, j, coefficient) with i ≤ j.
using EntryFunctional = std::vector<std::tuple<int, int, double>>;

EntryFunctional probability_functional(const SampledBasis& B, int b, int x, int y) {
    const auto& A = *B.algebra;
    std::map<Monomial, std::pair<int, int>> entry;
    const int n = static_cast<int>(B.S.size());
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            auto w = A.cyclic_canonical(A.adjoint(B.S.members[static_cast<std::size_t>(i)]) * B.S.members[static_cast<std::size_t>(j)]);
            if (w) entry.emplace(*w, std::make_pair(i, j));
        }
    auto find = [&](const std::string& word) {
        auto w = A.cyclic_canonical(*A.parse_monomial(word));
        auto it = w ? entry.find(*w) : entry.end();
        if (it == entry.end())
            throw Error(ErrorCode::InvalidArgument, "moment tr(" + word + ") is not an entry of the monomial set");
        return it->second;
    };
    const std::string rho = "R" + std::to_string(x);
    auto label = [&](int o) { return "M" + std::to_string(o) + "|" + std::to_string(y); };
    EntryFunctional f;
    if (A.find(label(b))) {
        auto [i, j] = find(rho + "*" + label(b));
        f.emplace_back(i, j, 1.0);
        return f;
    }
    auto [i0, j0] = find(rho);
    f.emplace_back(i0, j0, 1.0);
    for (int o = 0; o < B.dims.N; ++o) {
        if (o == b || !A.find(label(o))) continue;
        auto [i, j] = find(rho + "*" + label(o));
        f.emplace_back(i, j, -1.0);
    }
    return f;
}

} // namespace

NvResult nv_bound(const SampledBasis& basis, const PMArray& c, const SolverParams& params, bool allow_unsafe) {
    if (basis.samples.empty()) throw Error(ErrorCode::InvalidArgument, "empty basis");
    if (!basis.safe && !allow_unsafe)
        throw Error(ErrorCode::InvalidArgument, "basis is undersampled (UNSAFE); its value is not a bound");
    if (c.X != basis.dims.X || c.Y != basis.dims.Y || c.N != basis.dims.N)
        throw Error(ErrorCode::SchemaViolation, "objective does not match the scenario");
    const int m = static_cast<int>(basis.samples.size());
    const int n = static_cast<int>(basis.S.size());

    Vector obj = Vector::Zero(m);
    for (int x = 0; x < c.X; ++x)
        for (int y = 0; y < c.Y; ++y)
            for (int b = 0; b < c.N; ++b) {
                const double w = c(b, x, y);
                if (w == 0) continue;
                for (const auto& [i, j, s] : probability_functional(basis, b, x, y))
                    for (int k = 0; k < m; ++k) obj(k) += w * s * basis.samples[static_cast<std::size_t>(k)](i, j);
            }

    // Every Γ in the span vanishes on the common kernel of the samples, so the PSD block lives on their joint range.
    Matrix sum = Matrix::Zero(n, n);
    for (const auto& G : basis.samples) sum += G / std::max(1.0, G.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sum);
    const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < n; ++k)
        if (es.eigenvalues()(k) > 1e-9 * top) keep.push_back(k);
    Matrix P(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) P.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]);
    const int r = static_cast<int>(P.cols());

    LmiBuilder Bld(Sense::Maximize);
    const int first = Bld.add_variables(m);
    const int block = Bld.add_block(r);
    for (int k = 0; k < m; ++k) {
        Matrix G = P.transpose() * basis.samples[static_cast<std::size_t>(k)] * P;
        for (int i = 0; i < r; ++i)
            for (int j = i; j < r; ++j)
                if (G(i, j) != 0) Bld.add_entry(block, i, j, first + k, G(i, j));
        if (obj(k) != 0) Bld.add_objective(first + k, obj(k));
    }
    std::vector<std::pair<int, double>> ones;
    for (int k = 0; k < m; ++k) ones.emplace_back(first + k, 1.0);
    Bld.add_equality(ones, 1.0);
    LmiModel model = Bld.build();

    NvResult out;
    out.sdp = model.sdp;
    out.solution = solve(model.sdp, params);
    if (out.solution.status != SolveStatus::Optimal)
        throw Error(ErrorCode::SolverFailure, std::string("NV relaxation ended with status ") + to_string(out.solution.status));
    out.value = model.bound(out.solution);
    out.gamma = model.variables(out.solution).segment(first, m);
    out.safe = basis.safe;
    out.span_rank = basis.span_rank;
    out.block_size = r;
    out.label = "level-" + basis.S.tag + " upper bound";
    return out;
}

NvProfileResult nv_bound_all_profiles(PmDims dims, int d, const MonomialSet& S, const PMArray& c,
                                      const NvSampleOptions& opt, const SolverParams& params, std::size_t profile_cap) {
    const int D = opt.dilate ? d * dims.N : d;
    auto profiles = rank_profiles(D, dims.Y, dims.N, profile_cap);
    NvProfileResult out;
    out.value = -std::numeric_limits<double>::infinity();
    for (const auto& p : profiles) {
        NvResult r = nv_bound(sample_basis(dims, d, S, p, opt), c, params);
        out.profile_values.push_back(r.value);
        out.label = r.label;
        if (r.value > out.value) {
            out.value = r.value;
            out.best_ranks = p;
        }
    }
    return out;
}

namespace {

constexpr char kMagic[8] = {'Q', 'C', 'N', 'V', 'B', 'A', 'S', '1'};

template <typename T> void put(std::ofstream& f, T v) { f.write(reinterpret_cast<const char*>(&v), sizeof(T)); }
template <typename T> T get(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw Error(ErrorCode::ParseError, "basis cache is truncated");
    return v;
}

} // namespace

void save_basis(const SampledBasis& basis, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
    f.write(kMagic, sizeof kMagic);
    for (int v : {basis.dims.X, basis.dims.Y, basis.dims.N, basis.d, basis.dilated ? 1 : 0, basis.safe ? 1 : 0,
                  basis.span_rank, basis.draws})
        put<std::int32_t>(f, v);
    for (const auto& r : basis.ranks)
        for (int v : r) put<std::int32_t>(f, v);
    put<std::int32_t>(f, static_cast<std::int32_t>(basis.S.tag.size()));
    f.write(basis.S.tag.data(), static_cast<std::streamsize>(basis.S.tag.size()));
    put<std::int32_t>(f, static_cast<std::int32_t>(basis.S.size()));
    for (const auto& u : basis.S.members) {
        const std::string s = basis.algebra->format(u);
        put<std::int32_t>(f, static_cast<std::int32_t>(s.size()));
        f.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    put<std::int32_t>(f, static_cast<std::int32_t>(basis.samples.size()));
    for (const auto& G : basis.samples)
        f.write(reinterpret_cast<const char*>(G.data()), static_cast<std::streamsize>(sizeof(double) * G.size()));
    if (!f) throw Error(ErrorCode::InvalidArgument, "failed writing '" + path + "'");
}

SampledBasis load_basis(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot read '" + path + "'");
    char magic[sizeof kMagic];
    f.read(magic, sizeof magic);
    if (!f || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw Error(ErrorCode::ParseError, "'" + path + "' is not a version-1 basis cache");
    SampledBasis B;
    B.dims.X = get<std::int32_t>(f);
    B.dims.Y = get<std::int32_t>(f);
    B.dims.N = get<std::int32_t>(f);
    B.d = get<std::int32_t>(f);
    B.dilated = get<std::int32_t>(f) != 0;
    B.safe = get<std::int32_t>(f) != 0;
    B.span_rank = get<std::int32_t>(f);
    B.draws = get<std::int32_t>(f);
    B.algebra = pm_algebra(B.dims.X, B.dims.Y, B.dims.N);
    B.ranks.assign(static_cast<std::size_t>(B.dims.Y), std::vector<int>(static_cast<std::size_t>(B.dims.N)));
    for (auto& r : B.ranks)
        for (int& v : r) v = get<std::int32_t>(f);
    validate_ranks(B);
    auto read_string = [&] {
        const auto len = get<std::int32_t>(f);
        if (len < 0 || len > (1 << 20)) throw Error(ErrorCode::ParseError, "corrupt string length in basis cache");
        std::string s(static_cast<std::size_t>(len), '\0');
        f.read(s.data(), len);
        if (!f) throw Error(ErrorCode::ParseError, "basis cache is truncated");
        return s;
    };
    B.S.tag = read_string();
    const auto count = get<std::int32_t>(f);
    if (count < 1) throw Error(ErrorCode::ParseError, "basis cache has no monomials");
    for (int k = 0; k < count; ++k) {
        auto w = B.algebra->parse_monomial(read_string());
        if (!w) throw Error(ErrorCode::ParseError, "basis cache holds a zero monomial");
        B.S.members.push_back(*w);
        B.S.degree = std::max(B.S.degree, static_cast<int>(w->length()));
    }
    const auto m = get<std::int32_t>(f);
    if (m < 0) throw Error(ErrorCode::ParseError, "negative sample count in basis cache");
    for (int k = 0; k < m; ++k) {
        Matrix G(count, count);
        f.read(reinterpret_cast<char*>(G.data()), static_cast<std::streamsize>(sizeof(double) * G.size()));
        if (!f) throw Error(ErrorCode::ParseError, "basis cache is truncated");
        B.samples.push_back(std::move(G));
    }
    return B;
}

} // namespace qcrelax
