#include <bit>
#include <cmath>
#include <limits>
#include <set>

#include "parallel.hpp"
#include "qcrelax/scenarios.hpp"

namespace qcrelax {

double PMArray::dot(const PMArray& o) const {
    if (X != o.X || Y != o.Y || N != o.N) throw Error(ErrorCode::SchemaViolation, "prepare-and-measure arrays differ in shape");
    double s = 0;
    for (std::size_t k = 0; k < v.size(); ++k) s += v[k] * o.v[k];
    return s;
}

PMArray rac21_functional() {
    PMArray c(4, 2, 2);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 2; ++y) c((x >> y) & 1, x, y) = 1.0 / 8.0;
    return c;
}

PMArray pm_table(const PMModel& m) {
    const int X = static_cast<int>(m.states.size()), Y = static_cast<int>(m.M.size());
    if (X == 0 || Y == 0) throw Error(ErrorCode::SchemaViolation, "prepare-and-measure model is empty");
    PMArray p(X, Y, static_cast<int>(m.M[0].size()));
    for (int x = 0; x < X; ++x)
        for (int y = 0; y < Y; ++y)
            for (int b = 0; b < p.N; ++b) p(b, x, y) = (m.states[x] * m.M[y][b]).trace().real();
    return p;
}

double pm_value(const PMArray& c, const PMModel& m) { return c.dot(pm_table(m)); }

PMModel rac21_qubit_model() {
    CMatrix I = CMatrix::Identity(2, 2), Z(2, 2), Xm(2, 2);
    Z << 1, 0, 0, -1;
    Xm << 0, 1, 1, 0;
    PMModel m;
    m.d = 2;
    const double s = 1 / std::sqrt(2.0);
    for (int x = 0; x < 4; ++x) {
        const double r0 = (x & 1) ? -s : s, r1 = (x & 2) ? -s : s;
        m.states.push_back((I + r0 * Xm + r1 * Z) / 2.0);
    }
    m.M.push_back({(I + Xm) / 2.0, (I - Xm) / 2.0});
    m.M.push_back({(I + Z) / 2.0, (I - Z) / 2.0});
    return m;
}

namespace {

// Encoders e(x) ∈ [d] (d^X of them) and decoders g(y, m) ∈ [N] (N^{Yd}), both little-endian;
// the decoder digit for (y, m) sits at position y·d + m, and λ = e + (#encoders)·g.
struct PmStrategies {
    int X, Y, N, d;
    std::size_t encoders = 1, decoders = 1;

    PmStrategies(int X_, int Y_, int N_, int d_, std::size_t cap) : X(X_), Y(Y_), N(N_), d(d_) {
        if (d < 1) throw Error(ErrorCode::InvalidArgument, "message dimension must be positive");
        for (int x = 0; x < X; ++x) {
            encoders *= static_cast<std::size_t>(d);
            if (encoders > cap) throw Error(ErrorCode::CapExceeded, "classical strategy count exceeds the configured cap");
        }
        for (int k = 0; k < Y * d; ++k) {
            decoders *= static_cast<std::size_t>(N);
            if (decoders > cap) throw Error(ErrorCode::CapExceeded, "classical strategy count exceeds the configured cap");
        }
        if (encoders * decoders > cap) throw Error(ErrorCode::CapExceeded, "classical strategy count exceeds the configured cap");
    }
    std::size_t count() const { return encoders * decoders; }
    int outcome(std::size_t lambda, int x, int y) const {
        const std::size_t e = lambda % encoders, g = lambda / encoders;
        const int m = deterministic_outcome(e, x, d);
        return deterministic_outcome(g, y * d + m, N);
    }
};

template <typename T> T strategy_score(const PmStrategies& S, std::size_t l, const std::vector<T>& c, const PMArray& shape) {
    T s = 0;
    for (int x = 0; x < S.X; ++x)
        for (int y = 0; y < S.Y; ++y) s += c[shape.index(S.outcome(l, x, y), x, y)];
    return s;
}

} // namespace

PmClassicalResult pm_classical_membership(const PMArray& p, int d, std::size_t cap) {
    for (int x = 0; x < p.X; ++x)
        for (int y = 0; y < p.Y; ++y) {
            double s = 0;
            for (int b = 0; b < p.N; ++b) {
                if (p(b, x, y) < -1e-9) throw Error(ErrorCode::SchemaViolation, "negative probability");
                s += p(b, x, y);
            }
            if (std::abs(s - 1) > 1e-9) throw Error(ErrorCode::SchemaViolation, "p(·|x,y) is not normalized");
        }
    PmStrategies S(p.X, p.Y, p.N, d, cap);
    const int count = static_cast<int>(S.count());
    LmiBuilder B(Sense::Maximize);
    const int first = B.add_variables(count);
    const int t = B.add_variable();
    B.add_objective(t, 1.0);
    std::vector<std::vector<std::pair<int, double>>> terms(p.v.size());
    for (int l = 0; l < count; ++l)
        for (int x = 0; x < p.X; ++x)
            for (int y = 0; y < p.Y; ++y) terms[p.index(S.outcome(l, x, y), x, y)].emplace_back(first + l, 1.0);
    std::vector<int> row(p.v.size());
    for (std::size_t k = 0; k < p.v.size(); ++k) row[k] = B.add_equality(terms[k], p.v[k]);
    for (int l = 0; l < count; ++l) B.add_inequality({{first + l, 1.0}, {t, -1.0}}, 0.0);
    LmiModel model = B.build();

    PmClassicalResult r;
    r.sdp = model.sdp;
    r.solution = solve(model.sdp);
    const Vector v = model.variables(r.solution);
    r.t = v(t);
    r.weights.assign(v.data() + first, v.data() + first + count);
    const Vector nu = model.equality_multipliers(r.solution);
    r.dual = PMArray(p.X, p.Y, p.N);
    for (std::size_t k = 0; k < row.size(); ++k) r.dual.v[k] = nu(row[k]);
    return r;
}

double pm_classical_bound(const PMArray& c, int d, const SolverParams& params, std::size_t cap) {
    PmStrategies S(c.X, c.Y, c.N, d, cap);
    // Distinct strategy scores are the only data the LP over the polytope needs.
    std::set<double> scores;
    for (std::size_t l = 0; l < S.count(); ++l) scores.insert(strategy_score(S, l, c.v, c));
    LmiBuilder B(Sense::Maximize);
    std::vector<std::pair<int, double>> norm;
    for (double s : scores) {
        const int w = B.add_variable();
        B.add_objective(w, s);
        B.add_inequality({{w, 1.0}}, 0.0);
        norm.emplace_back(w, 1.0);
    }
    B.add_equality(norm, 1.0);
    LmiModel model = B.build();
    Solution sol = solve(model.sdp, params);
    if (sol.status != SolveStatus::Optimal)
        throw Error(ErrorCode::SolverFailure, std::string("classical LP ended with status ") + to_string(sol.status));
    return model.bound(sol);
}

Rational pm_classical_bound_exact(const PMArray& c, int d, long long max_den, std::size_t cap) {
    PmStrategies S(c.X, c.Y, c.N, d, cap);
    std::vector<Rational> q(c.v.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = round_rational(c.v[k], max_den);
    Rational best = strategy_score(S, 0, q, c);
    for (std::size_t l = 1; l < S.count(); ++l) best = std::max(best, strategy_score(S, l, q, c));
    return best;
}

namespace {

struct PMRun {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<double> history;
    PMModel model;
};

PMRun pm_restart(const PMArray& c, int d, const SeesawOptions& opt, Rng& rng) {
    PMModel m;
    m.d = d;
    for (int x = 0; x < c.X; ++x) {
        CVector psi = random_pure_state(d, rng);
        m.states.push_back(psi * psi.adjoint());
    }
    for (int y = 0; y < c.Y; ++y) m.M.push_back(random_projective_measurement(d, c.N, rng));
    PMRun run;
    double prev = pm_value(c, m);
    for (int it = 0; it < opt.max_iter; ++it) {
        for (int y = 0; y < c.Y; ++y) {
            std::vector<CMatrix> K(c.N, CMatrix::Zero(d, d));
            for (int x = 0; x < c.X; ++x)
                for (int b = 0; b < c.N; ++b) K[b] += c(b, x, y) * m.states[x];
            m.M[y] = optimal_povm(K);
        }
        for (int x = 0; x < c.X; ++x) {
            CMatrix S = CMatrix::Zero(d, d);
            for (int y = 0; y < c.Y; ++y)
                for (int b = 0; b < c.N; ++b) S += c(b, x, y) * m.M[y][b];
            CVector top = top_eigenvector(S);
            m.states[x] = top * top.adjoint();
        }
        const double value = pm_value(c, m);
        run.history.push_back(value);
        if (value - prev < opt.tol) break;
        prev = value;
    }
    run.value = run.history.back();
    run.model = std::move(m);
    return run;
}

} // namespace

SeesawPMResult seesaw_pm(const PMArray& c, int d, const SeesawOptions& opt) {
    if (d < 2) throw Error(ErrorCode::InvalidArgument, "seesaw needs dimension ≥ 2");
    auto runs = detail::run_restarts<PMRun>(opt, [&](Rng& rng) { return pm_restart(c, d, opt, rng); });
    SeesawPMResult out;
    std::size_t best = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        out.restart_values.push_back(runs[r].value);
        if (runs[r].value > runs[best].value) best = r;
    }
    out.value = runs[best].value;
    out.history = runs[best].history;
    out.iterations = static_cast<int>(runs[best].history.size());
    out.model = std::move(runs[best].model);
    return out;
}

void Graph::validate() const {
    if (n < 0) throw Error(ErrorCode::SchemaViolation, "graph vertex count must be nonnegative");
    std::set<std::pair<int, int>> seen;
    for (auto [i, j] : edges) {
        if (i < 0 || j < 0 || i >= n || j >= n) throw Error(ErrorCode::SchemaViolation, "edge endpoint out of range");
        if (i == j) throw Error(ErrorCode::SchemaViolation, "graph must not have self-loops");
        if (!seen.insert(std::minmax(i, j)).second) throw Error(ErrorCode::SchemaViolation, "graph has a repeated edge");
    }
}

bool Graph::adjacent(int i, int j) const {
    for (auto [a, b] : edges)
        if ((a == i && b == j) || (a == j && b == i)) return true;
    return false;
}

Graph Graph::empty(int n) { return {n, {}}; }

Graph Graph::complete(int n) {
    Graph g{n, {}};
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
    return g;
}

Graph Graph::cycle(int n) {
    if (n < 3) throw Error(ErrorCode::InvalidArgument, "cycle graphs need at least 3 vertices");
    Graph g{n, {}};
    for (int i = 0; i < n; ++i) g.edges.emplace_back(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
    return g;
}

StandardFormSDP theta_sdp(const Graph& g) {
    g.validate();
    if (g.n < 1) throw Error(ErrorCode::InvalidArgument, "theta needs at least one vertex");
    StandardFormSDP P;
    P.block_sizes = {g.n};
    for (int i = 0; i < g.n; ++i)
        for (int j = i; j < g.n; ++j) P.C.add(0, i, j, 1.0);
    SparseBlockMatrix trace;
    for (int i = 0; i < g.n; ++i) trace.add(0, i, i, 1.0);
    P.A.push_back(trace);
    std::vector<double> b{1.0};
    for (auto [i, j] : g.edges) {
        SparseBlockMatrix e;
        e.add(0, std::min(i, j), std::max(i, j), 1.0);
        P.A.push_back(e);
        b.push_back(0.0);
    }
    P.b = Eigen::Map<Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
    P.C.normalize();
    for (auto& A : P.A) A.normalize();
    return P;
}

double lovasz_theta(const Graph& g, const SolverParams& params, Solution* out) {
    const auto P = theta_sdp(g);
    Solution s = solve(P, params);
    if (out) *out = s;
    if (s.status != SolveStatus::Optimal)
        throw Error(ErrorCode::SolverFailure, std::string("theta SDP ended with status ") + to_string(s.status));
    return s.dual_value;
}

int independence_number(const Graph& g) {
    g.validate();
    if (g.n > 24) throw Error(ErrorCode::CapExceeded, "brute-force independence number is limited to 24 vertices");
    std::vector<std::uint32_t> nbr(g.n, 0);
    for (auto [i, j] : g.edges) {
        nbr[i] |= 1u << j;
        nbr[j] |= 1u << i;
    }
    int best = 0;
    for (std::uint32_t s = 0; s < (1u << g.n); ++s) {
        bool ok = true;
        for (int i = 0; i < g.n && ok; ++i)
            if ((s >> i & 1u) && (nbr[i] & s)) ok = false;
        if (ok) best = std::max(best, std::popcount(s));
    }
    return best;
}

} // namespace qcrelax
