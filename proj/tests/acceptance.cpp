// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qcrelax/certificates.hpp"
#include "qcrelax/dimension.hpp"
#include "qcrelax/linalg.hpp"
#include "qcrelax/relaxation.hpp"
#include "qcrelax/scenarios.hpp"
#include "qcrelax/symmetry.hpp"

using namespace qcrelax;

namespace {

struct Check {
    bool ok = true;
    std::vector<std::string> notes;

    void require(bool cond, const std::string& what) {
        if (!cond) ok = false;
        notes.push_back((cond ? "ok: " : "failed: ") + what);
    }
};

std::string fmt(const char* f, double v) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PolyProblem worked_problem(bool commutative) {
    auto A = Algebra::declare({{"x1"}, {"x2"}}, {commutative, false});
    PolyProblem p;
    p.algebra = A;
    p.objective = A->parse_polynomial(commutative ? "x2^2 - x1*x2 - x2" : "x2^2 - 0.5*x1*x2 - 0.5*x2*x1 - x2");
    p.operator_constraints = {{A->parse_polynomial("x1 - x1^2")}, {A->parse_polynomial("x2 - x2^2")}};
    return p;
}

CMatrix partial_transpose_b(const CMatrix& rho, int dA, int dB) {
    CMatrix out(rho.rows(), rho.cols());
    for (int a = 0; a < dA; ++a)
        for (int b = 0; b < dB; ++b)
            for (int a2 = 0; a2 < dA; ++a2)
                for (int b2 = 0; b2 < dB; ++b2) out(a * dB + b, a2 * dB + b2) = rho(a * dB + b2, a2 * dB + b);
    return out;
}

int brute_alpha(const Graph& g) {
    std::vector<unsigned> adj(static_cast<std::size_t>(g.n), 0);
    for (auto [i, j] : g.edges) adj[static_cast<std::size_t>(i)] |= 1u << j, adj[static_cast<std::size_t>(j)] |= 1u << i;
    int best = 0;
    for (unsigned s = 0; s < (1u << g.n); ++s) {
        bool independent = true;
        for (int i = 0; i < g.n && independent; ++i)
            if ((s >> i & 1u) && (adj[static_cast<std::size_t>(i)] & s)) independent = false;
        if (independent) best = std::max(best, __builtin_popcount(s));
    }
    return best;
}

void add_dense(SparseBlockMatrix& S, int block, const Matrix& M) {
    for (int i = 0; i < M.rows(); ++i)
        for (int j = i; j < M.cols(); ++j) S.add(block, i, j, M(i, j));
    S.normalize();
}

// Every solve issued here is recorded for the weak-duality property.
std::vector<std::pair<StandardFormSDP, Solution>> g_solves;

Solution tracked_solve(const StandardFormSDP& P, const SolverParams& params = {}) {
    Solution s = solve(P, params);
    g_solves.emplace_back(P, s);
    return s;
}

// ---- criteria ----

Check lasserre_example() {
    Check c;
    auto p = worked_problem(true);
    for (int level : {1, 2}) {
        const auto t0 = std::chrono::steady_clock::now();
        MomentRelaxation M = build_moment(p, monomial_set(p.algebra, level));
        RelaxationResult r = solve_relaxation(M, {1e-9});
        const double secs = seconds_since(t0);
        g_solves.emplace_back(r.lowered.model.sdp, r.solution);
        if (level == 1) c.require(std::abs(r.value - 0.125) <= 1e-6, "level 1 = " + fmt("%.9f", r.value));
        else c.require(r.value <= 1e-4 && r.value >= 0, "level 2 = " + fmt("%.3e", r.value));
        c.require(secs < 1.0, "runtime " + fmt("%.3f s", secs));
    }
    return c;
}

Check nc_example() {
    Check c;
    auto p = worked_problem(false);
    for (int level : {1, 2}) {
        RelaxationResult r = solve_relaxation(build_moment(p, monomial_set(p.algebra, level)), {1e-9});
        g_solves.emplace_back(r.lowered.model.sdp, r.solution);
        c.require(std::abs(r.value - 0.125) <= 1e-6, "level " + std::to_string(level) + " = " + fmt("%.9f", r.value));
    }
    const double s3 = std::sqrt(3.0);
    Matrix X1(2, 2), X2(2, 2);
    X1 << 1, s3, s3, 3;
    X2 << 1, -s3, -s3, 3;
    X1 /= 4;
    X2 /= 4;
    const double v = (X2 * X2 - 0.5 * X1 * X2 - 0.5 * X2 * X1 - X2)(0, 0);
    c.require(std::abs(v - 0.125) <= 1e-12, "qubit model = " + fmt("%.15f", v));
    return c;
}

Check sos_round_trip() {
    Check c;
    for (bool commutative : {true, false}) {
        auto p = worked_problem(commutative);
        MomentRelaxation M = build_moment(p, monomial_set(p.algebra, 1));
        RelaxationResult r = solve_relaxation(M, {1e-10});
        SOSCertificate cert = extract_sos(M, r);
        const double res = verify_certificate(parse_certificate(serialize(cert), p), p);
        c.require(res <= 1e-6, std::string(commutative ? "commutative" : "noncommutative") + " residual " + fmt("%.2e", res));

        SOSCertificate printed;
        printed.algebra = p.algebra;
        printed.lambda = 0.125;
        printed.squares = {{0.5, p.algebra->parse_polynomial("0.5 - x1 - x2")}};
        printed.localizing = {{0, 0.5, CPolynomial::constant(p.algebra, 1.0)}, {1, 1.5, CPolynomial::constant(p.algebra, 1.0)}};
        const double exact = verify_certificate_rational(printed, p);
        c.require(exact == 0.0, "printed decomposition rational residual " + fmt("%g", exact));
    }
    return c;
}

Check chsh() {
    Check c;
    NpaResult npa = npa_bound(chsh_functional(), "1", {1e-9});
    g_solves.emplace_back(npa.result.lowered.model.sdp, npa.result.solution);
    c.require(std::abs(npa.value - 2.8284271) <= 1e-6, "NPA level 1 = " + fmt("%.9f", npa.value));
    const Rational local = local_bound_exact(chsh_functional());
    c.require(local == Rational(2), "LHV bound = " + std::to_string(local.numerator()) + "/" + std::to_string(local.denominator()));
    auto A = Algebra::bell({2, 2}, {2, 2});
    PolyProblem pb;
    pb.algebra = A;
    pb.objective = CPolynomial::constant(A, 0.0);
    Solution s;
    const double t = feasibility_margin(attach_distribution(build_moment(pb, monomial_set(A, 1)), pr_box()), {}, &s);
    c.require(t < -1e-7, "PR box margin " + fmt("%.6f", t));
    return c;
}

Check i3322_table() {
    Check c;
    struct Row {
        const char* level;
        double value, tol;
        int size;
    };
    const Row rows[] = {{"1", 1.3750000, 1e-6, 7}, {"1+AB", 1.2514709, 1e-5, 16}, {"2", 1.2509397, 1e-5, 28}, {"3", 1.2508756, 1e-5, 88}};
    double previous = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        const auto t0 = std::chrono::steady_clock::now();
        NpaResult res = npa_bound(i3322_functional(), r.level);
        const double secs = seconds_since(t0);
        g_solves.emplace_back(res.result.lowered.model.sdp, res.result.solution);
        c.require(std::abs(res.value - r.value) <= r.tol && res.size == r.size,
                  std::string("level ") + r.level + " = " + fmt("%.8f", res.value) + " size " + std::to_string(res.size) +
                      fmt(" (%.1f s)", secs));
        if (std::string(r.level) == "3") c.require(secs <= 600, "level 3 runtime " + fmt("%.1f s", secs));
        c.require(res.value <= previous + 1e-7, std::string("monotone at level ") + r.level);
        previous = res.value;
    }
    return c;
}

Check seesaw() {
    Check c;
    SeesawOptions o;
    o.restarts = 20;
    const double v_chsh = seesaw_bell(chsh_functional(), o).value;
    c.require(v_chsh >= 2.8283, "CHSH d=2 = " + fmt("%.7f", v_chsh));
    const double v_i3322 = seesaw_bell(i3322_functional(), o).value;
    c.require(std::abs(v_i3322 - 1.25) <= 1e-4, "I3322 d=2 = " + fmt("%.7f", v_i3322));
    return c;
}

Check prepare_and_measure() {
    Check c;
    const PMArray rac = rac21_functional();
    const double classical = pm_classical_bound(rac, 2, {1e-11});
    c.require(std::abs(classical - 0.75) <= 1e-9, "classical = " + fmt("%.12f", classical));
    SeesawOptions o;
    o.restarts = 10;
    const double see = seesaw_pm(rac, 2, o).value;
    c.require(std::abs(see - 0.853553) <= 1e-4, "seesaw = " + fmt("%.9f", see));
    auto S = monomial_set(pm_algebra(4, 2, 2), 1);
    NvProfileResult nv = nv_bound_all_profiles({4, 2, 2}, 2, S, rac);
    const double quantum = (1 + 1 / std::sqrt(2.0)) / 2;
    c.require(nv.value >= quantum - 1e-7 && nv.value - 0.853553 <= 1e-3, "dimension-restricted bound = " + fmt("%.9f", nv.value));
    return c;
}

Check entanglement() {
    Check c;
    DensityMatrix phi = phi_plus(2);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(partial_transpose_b(phi.rho, 2, 2));
    PptResult ppt = ppt_random_robustness(phi);
    g_solves.emplace_back(ppt.sdp, ppt.solution);
    c.require(std::abs(ppt.t + 0.5) <= 1e-7 && std::abs(ppt.t - es.eigenvalues()(0)) <= 1e-7, "phi+ t = " + fmt("%.10f", ppt.t));
    const double above = ppt_random_robustness(werner_state(1.0 / 3 + 1e-3)).t;
    const double below = ppt_random_robustness(werner_state(1.0 / 3 - 1e-3)).t;
    c.require(above < 0, "Werner v=1/3+1e-3: t = " + fmt("%.3e", above));
    c.require(below >= -1e-7, "Werner v=1/3-1e-3: t = " + fmt("%.3e", below));
    // Noisy random states straddle the boundary; feasible at level 2 must imply feasible at level 1.
    Rng rng(2024);
    std::uniform_real_distribution<double> u(0, 1);
    int violations = 0, feasible = 0, infeasible = 0;
    for (int trial = 0; trial < 20; ++trial) {
        DensityMatrix rho = random_two_qudit_state(2, 2, 1 + static_cast<int>(rng() % 2), rng);
        const double p = u(rng);
        rho.rho = p * rho.rho + (1 - p) * CMatrix::Identity(4, 4) / 4;
        for (bool ppt : {true, false}) {
            DpsResult one = dps_feasible(rho, {1, ppt});
            DpsResult two = dps_feasible(rho, {2, ppt});
            g_solves.emplace_back(two.sdp, two.solution);
            if (two.passes && !one.passes) ++violations;
            (two.passes ? feasible : infeasible) += 1;
        }
    }
    c.require(violations == 0 && feasible > 0 && infeasible > 0,
              "DPS monotone on 20 random states (" + std::to_string(violations) + " violations, " +
                  std::to_string(feasible) + " feasible / " + std::to_string(infeasible) + " infeasible at level 2)");
    return c;
}

Check negativity() {
    Check c;
    const double phi = negativity_trace_norm(phi_plus(2)).trace_norm;
    c.require(std::abs(phi - 2) <= 1e-7, "phi+ = " + fmt("%.10f", phi));
    Rng rng(99);
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int dA = 2 + static_cast<int>(rng() % 2), dB = 2 + static_cast<int>(rng() % 2);
        DensityMatrix rho = random_two_qudit_state(dA, dB, 1 + static_cast<int>(rng() % (dA * dB)), rng);
        Eigen::SelfAdjointEigenSolver<CMatrix> es(partial_transpose_b(rho.rho, dA, dB));
        NegativityResult r = negativity_trace_norm(rho);
        g_solves.emplace_back(r.sdp, r.solution);
        worst = std::max(worst, std::abs(r.trace_norm - es.eigenvalues().cwiseAbs().sum()));
    }
    c.require(worst <= 1e-7, "max deviation on 50 random states " + fmt("%.2e", worst));
    return c;
}

Check symmetrization() {
    Check c;
    StandardFormSDP P;
    P.block_sizes = {3};
    Matrix C(3, 3);
    C << 2, 0, 1, 0, 2, 0, 1, 0, 2;
    add_dense(P.C, 0, -C);
    SparseBlockMatrix a1, a2;
    a1.add(0, 0, 1, 1.0);
    a1.normalize();
    a2.add(0, 1, 2, 1.0);
    a2.normalize();
    P.A = {a1, a2};
    P.b = Vector::Ones(2);
    auto rep = GroupRepresentation::from_permutations(3, {{2, 1, 0}});

    const double raw = tracked_solve(P, {1e-11}).primal_value;
    StandardFormSDP avg = group_average(P, rep);
    c.require(avg.num_constraints() == 1, "group average leaves " + std::to_string(avg.num_constraints()) + " variable(s)");
    std::vector<BlockDecomposition> used;
    StandardFormSDP bd = block_diagonalize(P, rep, nullptr, &used);
    std::vector<int> sizes = bd.block_sizes;
    std::sort(sizes.begin(), sizes.end());
    c.require(sizes == std::vector<int>{1, 2}, "blocks " + std::to_string(sizes.front()) + "," + std::to_string(sizes.back()));
    const double sym = tracked_solve(bd, {1e-11}).primal_value;
    const double averaged = tracked_solve(avg, {1e-11}).primal_value;
    c.require(std::abs(raw + 2 * std::sqrt(3.0)) <= 1e-6, "optimum " + fmt("%.9f", raw));
    c.require(std::abs(sym - raw) <= 1e-6 && std::abs(averaged - raw) <= 1e-6, "symmetrized " + fmt("%.9f", sym));
    return c;
}

Check theta() {
    Check c;
    for (int n : {1, 4, 9}) {
        const double e = lovasz_theta(Graph::empty(n), {1e-10});
        const double k = lovasz_theta(Graph::complete(n), {1e-10});
        c.require(std::abs(e - n) <= 1e-8 && std::abs(k - 1) <= 1e-8, "empty/complete n=" + std::to_string(n));
    }
    Solution s;
    const double c5 = lovasz_theta(Graph::cycle(5), {1e-10}, &s);
    g_solves.emplace_back(theta_sdp(Graph::cycle(5)), s);
    c.require(std::abs(c5 - 2.2360680) <= 1e-5, "C5 = " + fmt("%.9f", c5));

    // External reference: export and solve with an independent solver.
    const auto dir = std::filesystem::temp_directory_path();
    const auto file = (dir / "qcrelax_acceptance_c5.dat-s").string();
    const auto out = (dir / "qcrelax_acceptance_c5.out").string();
    write_sdpa(theta_sdp(Graph::cycle(5)), file);
    const std::string cmd = std::string(QCRELAX_PYTHON) + " " + QCRELAX_REFERENCE_SCRIPT + " solve " + file + " > " + out + " 2>/dev/null";
    double ref = std::nan("");
    if (std::system(cmd.c_str()) == 0) std::ifstream(out) >> ref;
    std::filesystem::remove(file);
    std::filesystem::remove(out);
    c.require(std::abs(ref - c5) <= 1e-6, "reference solver = " + fmt("%.9f", ref));

    // θ ≥ α: every graph on ≤ 5 vertices, then random graphs on 6..12 vertices.
    int checked = 0, violations = 0;
    auto test = [&](const Graph& g) {
        ++checked;
        if (lovasz_theta(g) < brute_alpha(g) - 1e-6) ++violations;
    };
    for (int n = 1; n <= 5; ++n) {
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
        for (unsigned mask = 0; mask < (1u << pairs.size()); ++mask) {
            Graph g;
            g.n = n;
            for (std::size_t k = 0; k < pairs.size(); ++k)
                if (mask >> k & 1u) g.edges.push_back(pairs[k]);
            test(g);
        }
    }
    Rng rng(12);
    for (int n = 6; n <= 12; ++n)
        for (int t = 0; t < 25; ++t) {
            std::bernoulli_distribution coin(0.15 + 0.7 * t / 24.0);
            Graph g;
            g.n = n;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    if (coin(rng)) g.edges.emplace_back(i, j);
            test(g);
        }
    c.require(violations == 0, "theta >= alpha on " + std::to_string(checked) + " graphs");
    return c;
}

Check strict_feasibility() {
    Check c;
    for (int inputs : {2, 3}) {
        auto A = Algebra::bell_unitary({inputs, inputs}, {2, 2});
        PolyProblem p;
        p.algebra = A;
        p.objective = CPolynomial::constant(A, 0.0);
        MomentRelaxation M = build_moment(p, monomial_set(A, 2));
        const int n = M.block_size(0);
        const double v = structure_violation(M, 0, CMatrix::Identity(n, n));
        c.require(v == 0.0, std::string(inputs == 2 ? "CHSH" : "I3322") + " level 2 (size " + std::to_string(n) + ") violation " + fmt("%g", v));
    }
    return c;
}

Check properties() {
    Check c;
    // Seesaw ≤ NPA on random functionals.
    Rng rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    int sandwich = 0;
    SeesawOptions o;
    o.restarts = 3;
    for (int trial = 0; trial < 20; ++trial) {
        BellFunctional f({2, 2, 2, 2});
        for (auto& x : f.c) x = u(rng);
        o.seed = static_cast<std::uint64_t>(trial + 1);
        NpaResult npa = npa_bound(f, "1+AB", {1e-9});
        g_solves.emplace_back(npa.result.lowered.model.sdp, npa.result.solution);
        if (seesaw_bell(f, o).value > npa.value + 1e-6) ++sandwich;
    }
    c.require(sandwich == 0, "seesaw <= NPA on 20 random functionals");

    // Hierarchy monotonicity on the commutative example.
    auto p = worked_problem(true);
    double previous = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (int level = 1; level <= 3; ++level) {
        const double v = solve_relaxation(build_moment(p, monomial_set(p.algebra, level)), {1e-9}).value;
        monotone = monotone && v <= previous + 1e-7;
        previous = v;
    }
    c.require(monotone, "hierarchy monotone (levels 1..3)");

    // SDPA round trip byte stability on every recorded problem.
    int unstable = 0;
    for (const auto& [P, s] : g_solves) {
        const std::string text = write_sdpa_string(P);
        if (write_sdpa_string(read_sdpa_string(text)) != text) ++unstable;
    }
    c.require(unstable == 0, "SDPA round trip byte-stable on " + std::to_string(g_solves.size()) + " problems");

    // Weak duality on every recorded solve.
    int broken = 0;
    for (const auto& [P, s] : g_solves) {
        DualityReport d = check_duality(P, s, false);
        if (!s.weak_duality_every_iterate || d.weak_duality_slack < -1e-7) ++broken;
    }
    c.require(broken == 0, "weak duality on " + std::to_string(g_solves.size()) + " solves");
    // No bindings artifact (Python extension module or bindings target) anywhere in the build tree.
    int artifacts = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(QCRELAX_BUILD_DIR)) {
        const std::string name = e.path().filename().string();
        if (name.find("bindings") != std::string::npos || name.find(".cpython-") != std::string::npos ||
            name.find("pybind") != std::string::npos)
            ++artifacts;
    }
    c.require(artifacts == 0, "build tree has " + std::to_string(artifacts) + " bindings artifacts");
    return c;
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Check()>>> criteria{
        {"Lasserre worked example", lasserre_example},
        {"NC worked example", nc_example},
        {"SOS round-trip", sos_round_trip},
        {"CHSH", chsh},
        {"I3322 table", i3322_table},
        {"Seesaw", seesaw},
        {"Prepare-and-measure", prepare_and_measure},
        {"Entanglement", entanglement},
        {"Negativity", negativity},
        {"Symmetrization worked example", symmetrization},
        {"Lovasz theta", theta},
        {"Strict feasibility", strict_feasibility},
        {"Property suites", properties},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        try {
            c = criteria[i].second();
        } catch (const std::exception& e) {
            c.ok = false;
            c.notes.push_back(std::string("exception: ") + e.what());
        }
        std::printf("criterion %2zu %s: %s\n", i + 1, c.ok ? "PASS" : "FAIL", criteria[i].first);
        for (const auto& n : c.notes) std::printf("    %s\n", n.c_str());
        std::fflush(stdout);
        failed += c.ok ? 0 : 1;
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
