#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcrelax/certificates.hpp"
#include "qcrelax/linalg.hpp"
#include "qcrelax/relaxation.hpp"

namespace qcrelax {

// Worker count for parallel restarts: QCRELAX_THREADS if set, else the hardware concurrency.
int thread_cap();

struct BellScenario {
    int X = 2, Y = 2, N = 2, M = 2;
    bool operator==(const BellScenario&) const = default;
};

// Σ c_{abxy} p(a,b|x,y).
struct BellFunctional {
    BellScenario dims;
    std::vector<double> c;

    BellFunctional() = default;
    explicit BellFunctional(BellScenario s) : dims(s), c(static_cast<std::size_t>(s.X * s.Y * s.N * s.M), 0.0) {}

    std::size_t index(int a, int b, int x, int y) const {
        return static_cast<std::size_t>(((x * dims.Y + y) * dims.N + a) * dims.M + b);
    }
    double& operator()(int a, int b, int x, int y) { return c[index(a, b, x, y)]; }
    double operator()(int a, int b, int x, int y) const { return c[index(a, b, x, y)]; }

    void validate() const;
    double evaluate(const ProbabilityTable& p) const;
    // Σ c ⟨A_{a|x} B_{b|y}⟩ over Algebra::bell({X,Y},{N,M}).
    CPolynomial polynomial(const AlgebraPtr& A) const;
    AlgebraPtr algebra() const;
};

// (-1)^{a+b+xy}: local bound 2, quantum bound 2√2.
BellFunctional chsh_functional();
// I3322 in the form whose local bound is 1 and quantum level-2 bound 1.2509…
BellFunctional i3322_functional();

ProbabilityTable quantum_table(const CMatrix& rho, int dA, int dB, const std::vector<std::vector<CMatrix>>& A,
                               const std::vector<std::vector<CMatrix>>& B);
ProbabilityTable pr_box();
// Maximally entangled qubits with the measurements reaching 2√2 on chsh_functional().
ProbabilityTable chsh_optimal_table();

// λ enumerates (N^X)·(M^Y) deterministic strategies, mixed-radix little-endian over inputs (Alice first).
struct LhvResult {
    double t = 0;
    BellFunctional dual;      // separating inequality Σ c p ≥ 0 when t < 0
    std::vector<double> weights; // p(λ)
    Solution solution;
    StandardFormSDP sdp; // the problem that was solved
};
LhvResult lhv_membership(const ProbabilityTable& p, std::size_t strategy_cap = 1u << 16);
// Deterministic outcome a = r_λ(x) for strategy index `lambda` over X inputs and N outputs.
int deterministic_outcome(std::size_t lambda, int x, int N);
// Local (classical) maximum of the functional, computed exactly over all deterministic points.
Rational local_bound_exact(const BellFunctional& f, long long max_denominator = 10000);
double local_bound(const BellFunctional& f);

struct NpaResult {
    double value = 0;
    int size = 0;
    std::string level;
    RelaxationResult result;
    SOSCertificate certificate;
};
NpaResult npa_bound(const BellFunctional& f, const std::string& level, const SolverParams& params = {});

// Quantum model: state on C^dA ⊗ C^dB, POVMs A[x][a], B[y][b].
struct BellModel {
    int dA = 2, dB = 2;
    CMatrix rho;
    std::vector<std::vector<CMatrix>> A, B;
};
double bell_value(const BellFunctional& f, const BellModel& m);

struct SeesawOptions {
    int dA = 2, dB = 2;
    int restarts = 20;
    int max_iter = 500;
    double tol = 1e-9;
    std::uint64_t seed = 1;
};
struct SeesawResult {
    double value = 0;
    std::vector<double> history; // best restart
    std::vector<double> restart_values;
    int iterations = 0;
};
struct SeesawBellResult : SeesawResult {
    BellModel model;
};
SeesawBellResult seesaw_bell(const BellFunctional& f, const SeesawOptions& opt = {});

// POVM {E_b} maximizing Σ_b tr(E_b K_b).
std::vector<CMatrix> optimal_povm(const std::vector<CMatrix>& K);

struct Assemblage {
    int X = 0, N = 0, d = 0;
    std::vector<std::vector<CMatrix>> sigma; // sigma[x][a]

    void validate(double tol = 1e-8) const;
    CMatrix reduced() const;
};
// σ_{a|x} = tr_A((A_{a|x} ⊗ 1) ρ).
Assemblage assemblage_from_state(const CMatrix& rho, int dA, int dB, const std::vector<std::vector<CMatrix>>& A);
struct SteeringResult {
    double t = 0;
    std::vector<std::vector<CMatrix>> witness; // W[x][a]
    std::vector<CMatrix> hidden_states;       // σ̃_λ
    Solution solution;
    StandardFormSDP sdp; // the problem that was solved
};
SteeringResult steering_test(const Assemblage& sigma);

struct DensityMatrix {
    std::vector<int> dims;
    CMatrix rho;

    void validate(double tol = 1e-8) const;
};
DensityMatrix werner_state(double v);        // v ψ⁻ + (1 − v) 1/4
DensityMatrix phi_plus(int d);               // maximally entangled |φ⁺⟩ on C^d ⊗ C^d
DensityMatrix product_state(const CMatrix& a, const CMatrix& b);
DensityMatrix random_two_qudit_state(int dA, int dB, int rank, Rng& rng);

struct PptResult {
    double t = 0;          // min eigenvalue of ρ^{T_A} via the SDP
    double robustness = 0; // −t·d²
    CMatrix witness;       // tr W = 1, W^{T_A} ⪰ 0, tr(W ρ) = t
    Solution solution;
    StandardFormSDP sdp; // the problem that was solved
};
PptResult ppt_random_robustness(const DensityMatrix& rho);

struct DpsOptions {
    int n = 1;
    bool ppt = true;
    int max_extension_dim = 256;
    double feasibility_tol = 1e-7;
};
struct DpsResult {
    double t = 0;
    bool passes = false;
    int symmetric_dim = 0;
    Solution solution;
    StandardFormSDP sdp; // the problem that was solved
};
DpsResult dps_feasible(const DensityMatrix& rho, const DpsOptions& opt);
// Isometry from C^{s_n} onto the symmetric subspace of (C^d)^{⊗n}.
CMatrix symmetric_isometry(int d, int n);

struct NegativityResult {
    double trace_norm = 0;
    double log_negativity = 0;
    Solution solution;
    StandardFormSDP sdp; // the problem that was solved
};
NegativityResult negativity_trace_norm(const DensityMatrix& rho);

// Prepare-and-measure arrays indexed (b, x, y): tables p(b|x,y) and functionals c_{bxy}.
struct PMArray {
    int X = 0, Y = 0, N = 0;
    std::vector<double> v;

    PMArray() = default;
    PMArray(int X_, int Y_, int N_) : X(X_), Y(Y_), N(N_), v(static_cast<std::size_t>(X_ * Y_ * N_), 0.0) {}
    std::size_t index(int b, int x, int y) const { return static_cast<std::size_t>((x * Y + y) * N + b); }
    double& operator()(int b, int x, int y) { return v[index(b, x, y)]; }
    double operator()(int b, int x, int y) const { return v[index(b, x, y)]; }
    double dot(const PMArray& o) const;
};

// Random access code 2→1: x = x0 + 2·x1, success averaged over the 8 (x, y) pairs.
PMArray rac21_functional();
struct PMModel {
    int d = 2;
    std::vector<CMatrix> states;          // rho_x
    std::vector<std::vector<CMatrix>> M;  // M[y][b]
};
PMArray pm_table(const PMModel& m);
double pm_value(const PMArray& c, const PMModel& m);
PMModel rac21_qubit_model();

// λ enumerates d^X encoders and N^{Yd} decoders.
struct PmClassicalResult {
    double t = 0;
    PMArray dual;
    std::vector<double> weights;
    Solution solution;
    StandardFormSDP sdp; // the problem that was solved
};
PmClassicalResult pm_classical_membership(const PMArray& p, int d, std::size_t strategy_cap = 1u << 16);
// max_λ Σ c p_λ as an LP over the classical polytope; also exact via vertex enumeration.
double pm_classical_bound(const PMArray& c, int d, const SolverParams& params = {}, std::size_t strategy_cap = 1u << 16);
Rational pm_classical_bound_exact(const PMArray& c, int d, long long max_denominator = 10000,
                                  std::size_t strategy_cap = 1u << 16);

struct SeesawPMResult : SeesawResult {
    PMModel model;
};
SeesawPMResult seesaw_pm(const PMArray& c, int d, const SeesawOptions& opt = {});

struct Graph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;

    void validate() const;
    bool adjacent(int i, int j) const;
    static Graph empty(int n);
    static Graph complete(int n);
    static Graph cycle(int n);
};
// max ⟨J, X⟩ s.t. tr X = 1, X_ij = 0 on edges, X ⪰ 0.
StandardFormSDP theta_sdp(const Graph& g);
double lovasz_theta(const Graph& g, const SolverParams& params = {}, Solution* out = nullptr);
int independence_number(const Graph& g);

} // namespace qcrelax
