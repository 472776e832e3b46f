#include <cmath>
#include <cstdlib>
#include <limits>

#include "parallel.hpp"
#include "qcrelax/scenarios.hpp"

namespace qcrelax {

int thread_cap() {
    if (const char* env = std::getenv("QCRELAX_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void BellFunctional::validate() const {
    if (dims.X < 1 || dims.Y < 1 || dims.N < 1 || dims.M < 1)
        throw Error(ErrorCode::SchemaViolation, "Bell scenario dimensions must be positive");
    if (c.size() != static_cast<std::size_t>(dims.X * dims.Y * dims.N * dims.M))
        throw Error(ErrorCode::SchemaViolation, "Bell functional coefficient count does not match the scenario");
    for (double v : c)
        if (!std::isfinite(v)) throw Error(ErrorCode::SchemaViolation, "Bell functional coefficient is not finite");
}

double BellFunctional::evaluate(const ProbabilityTable& p) const {
    if (p.X != dims.X || p.Y != dims.Y || p.N != dims.N || p.M != dims.M)
        throw Error(ErrorCode::SchemaViolation, "probability table does not match the functional");
    double s = 0;
    for (int x = 0; x < dims.X; ++x)
        for (int y = 0; y < dims.Y; ++y)
            for (int a = 0; a < dims.N; ++a)
                for (int b = 0; b < dims.M; ++b) s += (*this)(a, b, x, y) * p(a, b, x, y);
    return s;
}

AlgebraPtr BellFunctional::algebra() const { return Algebra::bell({dims.X, dims.Y}, {dims.N, dims.M}); }

CPolynomial BellFunctional::polynomial(const AlgebraPtr& A) const {
    validate();
    CPolynomial f(A);
    for (int x = 0; x < dims.X; ++x)
        for (int y = 0; y < dims.Y; ++y)
            for (int a = 0; a < dims.N; ++a)
                for (int b = 0; b < dims.M; ++b) {
                    const double c = (*this)(a, b, x, y);
                    if (c != 0) f += (A->projector(x, a) * A->projector(dims.X + y, b)).scaled(cplx(c, 0));
                }
    return f;
}

BellFunctional chsh_functional() {
    BellFunctional f({2, 2, 2, 2});
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) f(a, b, x, y) = ((a + b + x * y) % 2) ? -1.0 : 1.0;
    return f;
}

BellFunctional i3322_functional() {
    BellFunctional f({3, 3, 2, 2});
    auto joint = [&](int x, int y, double c) { f(0, 0, x, y) += c; };
    joint(1, 2, 1);
    joint(2, 1, 1);
    for (auto [x, y] : {std::pair{0, 1}, {1, 0}, {0, 0}, {1, 1}, {0, 2}, {2, 0}}) joint(x, y, -1);
    // Marginals p_A(0|0) and p_B(0|0), written through the y = 0 and x = 0 columns.
    for (int b = 0; b < 2; ++b) f(0, b, 0, 0) += 1;
    for (int a = 0; a < 2; ++a) f(a, 0, 0, 0) += 1;
    return f;
}

ProbabilityTable quantum_table(const CMatrix& rho, int dA, int dB, const std::vector<std::vector<CMatrix>>& A,
                               const std::vector<std::vector<CMatrix>>& B) {
    if (A.empty() || B.empty()) throw Error(ErrorCode::SchemaViolation, "quantum table needs measurements");
    ProbabilityTable p;
    p.X = static_cast<int>(A.size());
    p.Y = static_cast<int>(B.size());
    p.N = static_cast<int>(A[0].size());
    p.M = static_cast<int>(B[0].size());
    if (rho.rows() != dA * dB) throw Error(ErrorCode::SchemaViolation, "state dimension does not match dA·dB");
    p.p.assign(p.X, std::vector<Matrix>(p.Y, Matrix::Zero(p.N, p.M)));
    for (int x = 0; x < p.X; ++x)
        for (int y = 0; y < p.Y; ++y)
            for (int a = 0; a < p.N; ++a)
                for (int b = 0; b < p.M; ++b) p.p[x][y](a, b) = (kron(A[x][a], B[y][b]) * rho).trace().real();
    return p;
}

ProbabilityTable pr_box() {
    ProbabilityTable p;
    p.X = p.Y = p.N = p.M = 2;
    p.p.assign(2, std::vector<Matrix>(2, Matrix::Zero(2, 2)));
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) p.p[x][y](a, b) = ((a ^ b) == (x & y)) ? 0.5 : 0.0;
    return p;
}

namespace {

std::vector<CMatrix> plane_observable(double theta) {
    CMatrix Z(2, 2), Xm(2, 2);
    Z << 1, 0, 0, -1;
    Xm << 0, 1, 1, 0;
    CMatrix O = std::cos(theta) * Z + std::sin(theta) * Xm;
    CMatrix I = CMatrix::Identity(2, 2);
    return {(I + O) / 2.0, (I - O) / 2.0};
}

} // namespace

ProbabilityTable chsh_optimal_table() {
    const double pi = std::acos(-1.0);
    CMatrix rho = phi_plus(2).rho;
    return quantum_table(rho, 2, 2, {plane_observable(0), plane_observable(pi / 2)},
                         {plane_observable(pi / 4), plane_observable(-pi / 4)});
}

int deterministic_outcome(std::size_t lambda, int x, int N) {
    for (int k = 0; k < x; ++k) lambda /= static_cast<std::size_t>(N);
    return static_cast<int>(lambda % static_cast<std::size_t>(N));
}

namespace {

std::size_t strategy_count(int outputs, int inputs, std::size_t cap) {
    std::size_t n = 1;
    for (int k = 0; k < inputs; ++k) {
        n *= static_cast<std::size_t>(outputs);
        if (n > cap) throw Error(ErrorCode::CapExceeded, "deterministic strategy count exceeds the configured cap");
    }
    return n;
}

} // namespace

LhvResult lhv_membership(const ProbabilityTable& p, std::size_t cap) {
    p.validate(false);
    const std::size_t nA = strategy_count(p.N, p.X, cap), nB = strategy_count(p.M, p.Y, cap);
    if (nA * nB > cap) throw Error(ErrorCode::CapExceeded, "deterministic strategy count exceeds the configured cap");
    const int count = static_cast<int>(nA * nB);

    LmiBuilder B(Sense::Maximize);
    const int first = B.add_variables(count);
    const int t = B.add_variable();
    B.add_objective(t, 1.0);
    BellFunctional layout({p.X, p.Y, p.N, p.M});
    std::vector<int> row(layout.c.size());
    for (int x = 0; x < p.X; ++x)
        for (int y = 0; y < p.Y; ++y)
            for (int a = 0; a < p.N; ++a)
                for (int b = 0; b < p.M; ++b) {
                    std::vector<std::pair<int, double>> terms;
                    for (std::size_t la = 0; la < nA; ++la) {
                        if (deterministic_outcome(la, x, p.N) != a) continue;
                        for (std::size_t lb = 0; lb < nB; ++lb)
                            if (deterministic_outcome(lb, y, p.M) == b)
                                terms.emplace_back(first + static_cast<int>(la + nA * lb), 1.0);
                    }
                    row[layout.index(a, b, x, y)] = B.add_equality(terms, p(a, b, x, y));
                }
    for (int l = 0; l < count; ++l) B.add_inequality({{first + l, 1.0}, {t, -1.0}}, 0.0);
    LmiModel model = B.build();

    LhvResult r;
    r.sdp = model.sdp;
    r.solution = solve(model.sdp);
    const Vector v = model.variables(r.solution);
    r.t = v(t);
    r.weights.assign(v.data() + first, v.data() + first + count);
    const Vector nu = model.equality_multipliers(r.solution);
    r.dual = layout;
    for (std::size_t k = 0; k < row.size(); ++k) r.dual.c[k] = nu(row[k]);
    return r;
}

Rational local_bound_exact(const BellFunctional& f, long long max_den) {
    f.validate();
    const auto& d = f.dims;
    const std::size_t nA = strategy_count(d.N, d.X, 1u << 24), nB = strategy_count(d.M, d.Y, 1u << 24);
    std::vector<Rational> c(f.c.size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = round_rational(f.c[k], max_den);
    std::optional<Rational> best;
    for (std::size_t la = 0; la < nA; ++la)
        for (std::size_t lb = 0; lb < nB; ++lb) {
            Rational s = 0;
            for (int x = 0; x < d.X; ++x)
                for (int y = 0; y < d.Y; ++y)
                    s += c[f.index(deterministic_outcome(la, x, d.N), deterministic_outcome(lb, y, d.M), x, y)];
            if (!best || s > *best) best = s;
        }
    return *best;
}

double local_bound(const BellFunctional& f) {
    f.validate();
    const auto& d = f.dims;
    const std::size_t nA = strategy_count(d.N, d.X, 1u << 24), nB = strategy_count(d.M, d.Y, 1u << 24);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t la = 0; la < nA; ++la)
        for (std::size_t lb = 0; lb < nB; ++lb) {
            double s = 0;
            for (int x = 0; x < d.X; ++x)
                for (int y = 0; y < d.Y; ++y)
                    s += f(deterministic_outcome(la, x, d.N), deterministic_outcome(lb, y, d.M), x, y);
            best = std::max(best, s);
        }
    return best;
}

NpaResult npa_bound(const BellFunctional& f, const std::string& level, const SolverParams& params) {
    auto A = f.algebra();
    PolyProblem problem;
    problem.algebra = A;
    problem.objective = f.polynomial(A);
    auto M = build_moment(problem, monomial_set(A, level));
    NpaResult r;
    r.level = level;
    r.size = static_cast<int>(M.monomials().size());
    r.result = solve_relaxation(M, params);
    if (r.result.solution.status != SolveStatus::Optimal)
        throw Error(ErrorCode::SolverFailure, std::string("NPA relaxation ended with status ") + to_string(r.result.solution.status));
    r.value = r.result.value;
    r.certificate = extract_sos(M, r.result);
    return r;
}

double bell_value(const BellFunctional& f, const BellModel& m) {
    return f.evaluate(quantum_table(m.rho, m.dA, m.dB, m.A, m.B));
}

std::vector<CMatrix> optimal_povm(const std::vector<CMatrix>& K) {
    const int n = static_cast<int>(K.size());
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "optimal_povm needs at least one outcome");
    const int d = static_cast<int>(K[0].rows());
    const CMatrix I = CMatrix::Identity(d, d);
    if (n == 1) return {I};
    if (n == 2) {
        CMatrix P = positive_part_projector(K[0] - K[1]);
        return {P, I - P};
    }
    LmiBuilder B(Sense::Maximize);
    std::vector<HermitianVariable> E;
    for (int b = 0; b + 1 < n; ++b) {
        E.push_back(HermitianVariable::add(B, d));
        const int blk = B.add_block(d, true);
        add_hermitian(B, blk, E.back());
        for (int k = 0; k < E.back().count(); ++k)
            B.add_objective(E.back().first + k, (E.back().basis(k) * (K[b] - K[n - 1])).trace().real());
    }
    const int last = B.add_block(d, true);
    add_hermitian(B, last, -1, I);
    for (const auto& e : E) add_hermitian(B, last, e, -1.0);
    LmiModel model = B.build();
    Solution s = solve(model.sdp);
    if (s.status != SolveStatus::Optimal)
        throw Error(ErrorCode::SolverFailure, std::string("POVM step ended with status ") + to_string(s.status));
    const Vector v = model.variables(s);
    std::vector<CMatrix> out;
    CMatrix rest = I;
    for (const auto& e : E) {
        CMatrix X = e.value(v);
        X = (X + X.adjoint()) / 2.0;
        rest -= X;
        out.push_back(X);
    }
    out.push_back(rest);
    return out;
}

namespace {

struct BellRun {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<double> history;
    BellModel model;
};

BellRun bell_restart(const BellFunctional& f, const SeesawOptions& opt, Rng& rng) {
    const auto& D = f.dims;
    const int dA = opt.dA, dB = opt.dB;
    BellModel m;
    m.dA = dA;
    m.dB = dB;
    CVector psi = random_pure_state(dA * dB, rng);
    m.rho = psi * psi.adjoint();
    for (int x = 0; x < D.X; ++x) m.A.push_back(random_projective_measurement(dA, D.N, rng));
    for (int y = 0; y < D.Y; ++y) m.B.push_back(random_projective_measurement(dB, D.M, rng));

    BellRun run;
    double prev = bell_value(f, m);
    for (int it = 0; it < opt.max_iter; ++it) {
        for (int x = 0; x < D.X; ++x) {
            std::vector<CMatrix> K(D.N, CMatrix::Zero(dA, dA));
            for (int y = 0; y < D.Y; ++y)
                for (int b = 0; b < D.M; ++b) {
                    CMatrix red = partial_trace((kron(CMatrix::Identity(dA, dA), m.B[y][b]) * m.rho).eval(), {dA, dB},
                                                {true, false});
                    for (int a = 0; a < D.N; ++a) K[a] += f(a, b, x, y) * red;
                }
            m.A[x] = optimal_povm(K);
        }
        for (int y = 0; y < D.Y; ++y) {
            std::vector<CMatrix> K(D.M, CMatrix::Zero(dB, dB));
            for (int x = 0; x < D.X; ++x)
                for (int a = 0; a < D.N; ++a) {
                    CMatrix red = partial_trace((kron(m.A[x][a], CMatrix::Identity(dB, dB)) * m.rho).eval(), {dA, dB},
                                                {false, true});
                    for (int b = 0; b < D.M; ++b) K[b] += f(a, b, x, y) * red;
                }
            m.B[y] = optimal_povm(K);
        }
        CMatrix S = CMatrix::Zero(dA * dB, dA * dB);
        for (int x = 0; x < D.X; ++x)
            for (int y = 0; y < D.Y; ++y)
                for (int a = 0; a < D.N; ++a)
                    for (int b = 0; b < D.M; ++b)
                        if (f(a, b, x, y) != 0) S += f(a, b, x, y) * kron(m.A[x][a], m.B[y][b]);
        CVector top = top_eigenvector(S);
        m.rho = top * top.adjoint();
        const double value = bell_value(f, m);
        run.history.push_back(value);
        if (value - prev < opt.tol) break;
        prev = value;
    }
    run.value = run.history.back();
    run.model = std::move(m);
    return run;
}

} // namespace

SeesawBellResult seesaw_bell(const BellFunctional& f, const SeesawOptions& opt) {
    f.validate();
    if (opt.dA < 2 || opt.dB < 2) throw Error(ErrorCode::InvalidArgument, "seesaw needs local dimensions ≥ 2");
    auto runs = detail::run_restarts<BellRun>(opt, [&](Rng& rng) { return bell_restart(f, opt, rng); });
    SeesawBellResult out;
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

} // namespace qcrelax
