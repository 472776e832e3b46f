#include "qcrelax/relaxation.hpp"

#include <cctype>
#include <cmath>
#include <set>

namespace qcrelax {

namespace {

void finish_set(MonomialSet& S) {
    S.degree = 0;
    for (const auto& m : S.members) S.degree = std::max(S.degree, static_cast<int>(m.length()));
}

void extend_level(const AlgebraPtr& A, int level, std::vector<Monomial>& members, std::set<Monomial>& seen) {
    const auto gens = A->generators();
    std::vector<Monomial> frontier{Monomial::identity()};
    for (int len = 1; len <= level; ++len) {
        std::vector<Monomial> next;
        for (const auto& w : frontier)
            for (const auto& g : gens) {
                auto c = A->canonicalize(w * Monomial({g}));
                if (c && seen.insert(*c).second) {
                    members.push_back(*c);
                    next.push_back(*c);
                }
            }
        frontier = std::move(next);
        if (frontier.empty()) break;
    }
}

} // namespace

MonomialSet monomial_set(const AlgebraPtr& A, int level) {
    if (level < 0) throw Error(ErrorCode::InvalidArgument, "level must be nonnegative");
    MonomialSet S;
    S.tag = "k=" + std::to_string(level);
    S.members.push_back(Monomial::identity());
    std::set<Monomial> seen{Monomial::identity()};
    extend_level(A, level, S.members, seen);
    finish_set(S);
    return S;
}

MonomialSet monomial_set(const AlgebraPtr& A, const std::string& named) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : named) {
        if (c == '+') {
            parts.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    parts.push_back(cur);
    if (parts.empty() || parts[0].empty() || !std::all_of(parts[0].begin(), parts[0].end(), ::isdigit))
        throw Error(ErrorCode::InvalidArgument, "unrecognized level '" + named + "'");
    const int base = std::stoi(parts[0]);
    MonomialSet S;
    S.tag = named;
    S.members.push_back(Monomial::identity());
    std::set<Monomial> seen{Monomial::identity()};
    extend_level(A, base, S.members, seen);
    const auto gens = A->generators();
    for (std::size_t p = 1; p < parts.size(); ++p) {
        const auto& tok = parts[p];
        if (tok.empty()) throw Error(ErrorCode::InvalidArgument, "unrecognized level '" + named + "'");
        std::vector<std::vector<Letter>> pools;
        for (char c : tok) {
            if (c < 'A' || c > 'Z') throw Error(ErrorCode::InvalidArgument, "unrecognized level '" + named + "'");
            const int cls = c - 'A';
            std::vector<Letter> pool;
            for (const auto& g : gens)
                if (A->symbol(g.id).commutation_class == cls) pool.push_back(g);
            if (pool.empty()) throw Error(ErrorCode::InvalidArgument, "level '" + named + "' names an empty party");
            pools.push_back(std::move(pool));
        }
        std::vector<std::size_t> idx(pools.size(), 0);
        for (bool done = false; !done;) {
            std::vector<Letter> w;
            for (std::size_t q = 0; q < pools.size(); ++q) w.push_back(pools[q][idx[q]]);
            auto c = A->canonicalize(Monomial(std::move(w)));
            if (c && seen.insert(*c).second) S.members.push_back(*c);
            std::size_t q = pools.size();
            while (true) {
                if (q == 0) { done = true; break; }
                --q;
                if (++idx[q] < pools[q].size()) break;
                idx[q] = 0;
            }
        }
    }
    finish_set(S);
    return S;
}

MonomialSet monomial_set(const AlgebraPtr& A, const std::vector<std::string>& explicit_list) {
    MonomialSet S;
    S.tag = "custom";
    S.members.push_back(Monomial::identity());
    std::set<Monomial> seen{Monomial::identity()};
    for (const auto& text : explicit_list) {
        auto m = A->parse_monomial(text);
        if (!m) throw Error(ErrorCode::InvalidArgument, "monomial '" + text + "' is zero");
        if (seen.insert(*m).second) S.members.push_back(*m);
    }
    finish_set(S);
    return S;
}

int MomentRelaxation::intern(const Monomial& w) {
    auto [key, adj] = problem_.algebra->adjoint_class(w);
    (void)adj;
    auto it = class_index_.find(key);
    if (it != class_index_.end()) return it->second;
    MomentClass c;
    c.rep = key;
    if (problem_.real) c.real_valued = true;
    else {
        auto a = problem_.algebra->canonicalize(problem_.algebra->adjoint(key));
        c.real_valued = a && *a == key;
    }
    classes_.push_back(c);
    const int id = static_cast<int>(classes_.size()) - 1;
    class_index_.emplace(key, id);
    return id;
}

std::optional<ClassRef> MomentRelaxation::lookup(const Monomial& w) const {
    auto [key, adj] = problem_.algebra->adjoint_class(w);
    auto it = class_index_.find(key);
    if (it == class_index_.end()) return std::nullopt;
    return ClassRef{it->second, adj && !classes_[it->second].real_valued};
}

std::vector<std::pair<ClassRef, cplx>> MomentRelaxation::entry(int block, int i, int j) const {
    const auto& B = blocks_[block];
    const auto& A = *problem_.algebra;
    const Monomial ua = A.adjoint(B.index[i]);
    std::vector<std::pair<ClassRef, cplx>> out;
    auto push = [&](const Monomial& word, cplx c) {
        auto m = A.canonicalize(word);
        if (!m) return;
        auto ref = lookup(*m);
        if (!ref) throw Error(ErrorCode::DegreeTooHigh, "moment " + A.format(*m) + " has no class");
        for (auto& [r, cc] : out)
            if (r.cls == ref->cls && r.adjoint == ref->adjoint) { cc += c; return; }
        out.push_back({*ref, c});
    };
    if (!B.g) push(ua * B.index[j], 1.0);
    else
        for (const auto& [w, c] : B.g->terms()) push(ua * w * B.index[j], c);
    return out;
}

std::vector<std::pair<ClassRef, cplx>> MomentRelaxation::expectation(const CPolynomial& p) const {
    std::vector<std::pair<ClassRef, cplx>> out;
    for (const auto& [w, c] : p.terms()) {
        auto ref = lookup(w);
        if (!ref)
            throw Error(ErrorCode::DegreeTooHigh,
                        "monomial " + problem_.algebra->format(w) + " is not expressible over the monomial set");
        out.push_back({*ref, c});
    }
    return out;
}

void MomentRelaxation::pin(const Monomial& w, cplx value) {
    auto ref = lookup(w);
    if (!ref) throw Error(ErrorCode::InvalidArgument, "no moment class for " + problem_.algebra->format(w));
    auto& cls = classes_[ref->cls];
    if (cls.real_valued && std::abs(value.imag()) > 1e-12) throw Error(ErrorCode::InvalidArgument, "complex pin on a real moment");
    cls.pinned = ref->adjoint ? std::conj(value) : value;
}

int MomentRelaxation::free_class_count() const {
    int n = 0;
    for (const auto& c : classes_)
        if (!c.pinned) ++n;
    return n;
}

MomentRelaxation build_moment(const PolyProblem& problem, const MonomialSet& S, const std::vector<int>& levels) {
    if (!problem.algebra) throw Error(ErrorCode::InvalidArgument, "problem has no algebra");
    if (S.members.empty() || !S.members[0].is_identity())
        throw Error(ErrorCode::InvalidArgument, "monomial set must start with the identity");
    auto check_alg = [&](const CPolynomial& p) {
        if (p.algebra() && p.algebra() != problem.algebra) throw Error(ErrorCode::AlgebraMismatch, "polynomial over a different algebra");
    };
    check_alg(problem.objective);
    MomentRelaxation M;
    M.problem_ = problem;
    if (!M.problem_.objective.algebra()) M.problem_.objective = CPolynomial(problem.algebra);
    M.set_ = S;
    M.blocks_.push_back({"moment", S.members, std::nullopt, false});
    for (std::size_t j = 0; j < problem.operator_constraints.size(); ++j) {
        const auto& oc = problem.operator_constraints[j];
        check_alg(oc.g);
        int level = j < levels.size() && levels[j] >= 0 ? levels[j] : oc.level;
        if (level < 0) level = static_cast<int>(std::floor((2.0 * S.degree - static_cast<double>(oc.g.degree())) / 2.0));
        if (level < 0) throw Error(ErrorCode::DegreeTooHigh, "localizing index set empty for constraint " + std::to_string(j));
        auto idx = monomial_set(problem.algebra, level);
        RelaxBlock B{"localizing-" + std::to_string(j), idx.members, oc.g, idx.members.size() == 1};
        M.blocks_.push_back(std::move(B));
    }
    const auto& A = *problem.algebra;
    for (const auto& B : M.blocks_) {
        const int n = static_cast<int>(B.index.size());
        for (int i = 0; i < n; ++i) {
            const Monomial ua = A.adjoint(B.index[i]);
            for (int j = i; j < n; ++j) {
                if (!B.g) {
                    if (auto m = A.canonicalize(ua * B.index[j])) M.intern(*m);
                } else {
                    for (const auto& [w, c] : B.g->terms())
                        if (auto m = A.canonicalize(ua * w * B.index[j])) M.intern(*m);
                }
            }
        }
    }
    M.pin(Monomial::identity(), 1.0);
    // Objective and scalar constraints must be expressible over the existing classes.
    (void)M.expectation(M.problem_.objective);
    for (const auto& sc : problem.scalar_constraints) {
        check_alg(sc.h);
        (void)M.expectation(sc.h);
    }
    return M;
}

namespace {

struct Affine {
    std::vector<std::pair<int, cplx>> terms;
    cplx constant = 0;
};

} // namespace

LoweredRelaxation MomentRelaxation::lower(bool feasibility) const {
    LoweredRelaxation L;
    LmiBuilder B(feasibility ? Sense::Maximize : problem_.sense);
    L.var_re.assign(classes_.size(), -1);
    L.var_im.assign(classes_.size(), -1);
    for (std::size_t c = 0; c < classes_.size(); ++c) {
        if (classes_[c].pinned) continue;
        L.var_re[c] = B.add_variable();
        if (!classes_[c].real_valued) L.var_im[c] = B.add_variable();
    }
    auto affine = [&](const std::vector<std::pair<ClassRef, cplx>>& expr) {
        Affine a;
        for (const auto& [ref, c] : expr) {
            const auto& cls = classes_[ref.cls];
            if (cls.pinned) {
                a.constant += c * (ref.adjoint ? std::conj(*cls.pinned) : *cls.pinned);
                continue;
            }
            a.terms.push_back({L.var_re[ref.cls], c});
            if (L.var_im[ref.cls] >= 0) a.terms.push_back({L.var_im[ref.cls], c * cplx(0, ref.adjoint ? -1 : 1)});
        }
        return a;
    };
    auto real_terms = [](const Affine& a) {
        std::vector<std::pair<int, double>> out;
        for (const auto& [v, c] : a.terms)
            if (c.real() != 0) out.push_back({v, c.real()});
        return out;
    };

    if (feasibility) {
        L.margin_var = B.add_variable();
        B.add_objective(L.margin_var, 1.0);
    }

    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto& blk = blocks_[b];
        const int n = static_cast<int>(blk.index.size());
        if (blk.scalar) {
            Affine a = affine(entry(static_cast<int>(b), 0, 0));
            L.block_of.push_back(-1);
            L.row_of.push_back(B.add_inequality(real_terms(a), a.constant.real()));
            continue;
        }
        const int lb = B.add_block(n, !problem_.real);
        L.block_of.push_back(lb);
        L.row_of.push_back(-1);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Affine a = affine(entry(static_cast<int>(b), i, j));
                for (const auto& [v, c] : a.terms) B.add_entry(lb, i, j, v, problem_.real ? cplx(c.real(), 0) : c);
                if (a.constant != cplx(0))
                    B.add_entry(lb, i, j, -1, problem_.real || i == j ? cplx(a.constant.real(), 0) : a.constant);
                if (feasibility && b == 0 && i == j) B.add_entry(lb, i, i, L.margin_var, -1.0);
            }
    }

    Affine obj = affine(expectation(problem_.objective));
    if (!feasibility) {
        for (const auto& [v, c] : obj.terms) B.add_objective(v, c.real());
        B.add_objective_constant(obj.constant.real());
    }
    for (const auto& sc : problem_.scalar_constraints) {
        Affine a = affine(expectation(sc.h));
        if (sc.equality) {
            B.add_equality(real_terms(a), -a.constant.real());
            L.scalar_row.push_back(-1);
        } else {
            L.scalar_row.push_back(B.add_inequality(real_terms(a), a.constant.real()));
        }
    }
    L.model = B.build();
    return L;
}

std::vector<cplx> MomentRelaxation::class_values(const LoweredRelaxation& L, const Solution& s) const {
    const Vector v = L.model.variables(s);
    std::vector<cplx> out(classes_.size());
    for (std::size_t c = 0; c < classes_.size(); ++c) {
        if (classes_[c].pinned) out[c] = *classes_[c].pinned;
        else out[c] = cplx(v(L.var_re[c]), L.var_im[c] >= 0 ? v(L.var_im[c]) : 0.0);
    }
    return out;
}

CMatrix MomentRelaxation::block_matrix(int block, const std::vector<cplx>& values) const {
    const int n = block_size(block);
    CMatrix G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            cplx s = 0;
            for (const auto& [ref, c] : entry(block, i, j)) s += c * (ref.adjoint ? std::conj(values[ref.cls]) : values[ref.cls]);
            G(i, j) = s;
            G(j, i) = std::conj(s);
        }
    return G;
}

double structure_violation(const MomentRelaxation& M, int block, const CMatrix& gamma) {
    const int n = M.block_size(block);
    if (gamma.rows() != n || gamma.cols() != n) throw Error(ErrorCode::InvalidArgument, "matrix size differs from block");
    if (M.blocks()[block].g) throw Error(ErrorCode::InvalidArgument, "structure check applies to moment blocks");
    std::vector<std::optional<cplx>> seen(M.classes().size());
    for (std::size_t c = 0; c < M.classes().size(); ++c) seen[c] = M.classes()[c].pinned;
    double worst = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto e = M.entry(block, i, j);
            if (e.empty()) {
                worst = std::max(worst, std::abs(gamma(i, j)));
                continue;
            }
            const auto& [ref, c] = e.front();
            cplx val = gamma(i, j) / c;
            if (ref.adjoint) val = std::conj(val);
            if (M.problem().real) {
                worst = std::max(worst, std::abs(gamma(i, j).imag()));
                val = val.real();
            }
            if (!seen[ref.cls]) seen[ref.cls] = val;
            else worst = std::max(worst, std::abs(*seen[ref.cls] - val));
        }
    return worst;
}

void ProbabilityTable::validate(bool no_signaling, double tol) const {
    if (X <= 0 || Y <= 0 || N < 2 || M < 2) throw Error(ErrorCode::SchemaViolation, "probability table dimensions");
    if (static_cast<int>(p.size()) != X) throw Error(ErrorCode::SchemaViolation, "probability table shape");
    for (int x = 0; x < X; ++x) {
        if (static_cast<int>(p[x].size()) != Y) throw Error(ErrorCode::SchemaViolation, "probability table shape");
        for (int y = 0; y < Y; ++y) {
            const auto& t = p[x][y];
            if (t.rows() != N || t.cols() != M) throw Error(ErrorCode::SchemaViolation, "probability table shape");
            if (t.minCoeff() < -tol) throw Error(ErrorCode::SchemaViolation, "negative probability");
            if (std::abs(t.sum() - 1) > tol) throw Error(ErrorCode::SchemaViolation, "probabilities do not sum to 1");
        }
    }
    if (!no_signaling) return;
    for (int x = 0; x < X; ++x)
        for (int y = 1; y < Y; ++y)
            if ((p[x][y].rowwise().sum() - p[x][0].rowwise().sum()).cwiseAbs().maxCoeff() > tol)
                throw Error(ErrorCode::SchemaViolation, "distribution signals from Bob to Alice");
    for (int y = 0; y < Y; ++y)
        for (int x = 1; x < X; ++x)
            if ((p[x][y].colwise().sum() - p[0][y].colwise().sum()).cwiseAbs().maxCoeff() > tol)
                throw Error(ErrorCode::SchemaViolation, "distribution signals from Alice to Bob");
}

MomentRelaxation attach_distribution(const MomentRelaxation& M, const ProbabilityTable& p, bool no_signaling_check) {
    p.validate(no_signaling_check);
    const auto& A = *M.problem().algebra;
    auto sym = [&](char party, int o, int in) -> int {
        auto id = A.find(std::string(1, party) + std::to_string(o) + "|" + std::to_string(in));
        if (!id) throw Error(ErrorCode::SchemaViolation, "algebra lacks projector for the distribution");
        return *id;
    };
    auto letter = [](int id) { return Letter{static_cast<std::uint16_t>(id), false}; };
    MomentRelaxation out = M;
    auto pin = [&](const Monomial& w, double v) {
        auto c = A.canonicalize(w);
        if (!c || !out.lookup(*c)) throw Error(ErrorCode::InvalidArgument, "missing class for " + A.format(w));
        out.pin(*c, v);
    };
    for (int x = 0; x < p.X; ++x)
        for (int a = 0; a + 1 < p.N; ++a) pin(Monomial({letter(sym('A', a, x))}), p.p[x][0].row(a).sum());
    for (int y = 0; y < p.Y; ++y)
        for (int b = 0; b + 1 < p.M; ++b) pin(Monomial({letter(sym('B', b, y))}), p.p[0][y].col(b).sum());
    for (int x = 0; x < p.X; ++x)
        for (int y = 0; y < p.Y; ++y)
            for (int a = 0; a + 1 < p.N; ++a)
                for (int b = 0; b + 1 < p.M; ++b)
                    pin(Monomial({letter(sym('A', a, x)), letter(sym('B', b, y))}), p.p[x][y](a, b));
    return out;
}

RelaxationResult solve_relaxation(const MomentRelaxation& M, const SolverParams& params) {
    RelaxationResult r;
    const auto& obj = M.problem().objective;
    if (obj.degree() == 0 && M.problem().scalar_constraints.empty()) {
        r.value = r.primal = obj.coefficient(Monomial::identity()).real();
        r.solution.status = SolveStatus::Optimal;
        return r;
    }
    r.lowered = M.lower(false);
    r.solution = solve(r.lowered.model.sdp, params);
    r.value = r.lowered.model.bound(r.solution);
    r.primal = r.lowered.model.value(r.solution);
    return r;
}

double feasibility_margin(const MomentRelaxation& M, const SolverParams& params, Solution* out) {
    auto L = M.lower(true);
    Solution s = solve(L.model.sdp, params);
    const double t = L.model.variables(s)(L.margin_var);
    if (out) *out = s;
    return t;
}

} // namespace qcrelax
