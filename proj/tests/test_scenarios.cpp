#include <doctest.h>

#include <cmath>

#include "qcrelax/linalg.hpp"
#include "qcrelax/scenarios.hpp"

using namespace qcrelax;

namespace {

CMatrix partial_transpose_b(const CMatrix& rho, int dA, int dB) {
    CMatrix out(rho.rows(), rho.cols());
    for (int a = 0; a < dA; ++a)
        for (int b = 0; b < dB; ++b)
            for (int a2 = 0; a2 < dA; ++a2)
                for (int b2 = 0; b2 < dB; ++b2) out(a * dB + b, a2 * dB + b2) = rho(a * dB + b2, a2 * dB + b);
    return out;
}

double eigen_min(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    return es.eigenvalues()(0);
}

double eigen_trace_norm(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    return es.eigenvalues().cwiseAbs().sum();
}

// Independence number by exhaustive subset search.
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

Graph random_graph(int n, double p, Rng& rng) {
    std::bernoulli_distribution coin(p);
    Graph g;
    g.n = n;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (coin(rng)) g.edges.emplace_back(i, j);
    return g;
}

BellFunctional random_functional(BellScenario s, Rng& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    BellFunctional f(s);
    for (auto& c : f.c) c = u(rng);
    return f;
}

} // namespace

TEST_CASE("CHSH: quantum, local and no-signalling values") {
    CHECK(npa_bound(chsh_functional(), "1", {1e-9}).value == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-8));
    CHECK(local_bound_exact(chsh_functional()) == Rational(2));
    CHECK(local_bound(chsh_functional()) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(chsh_functional().evaluate(pr_box()) == doctest::Approx(4.0));
}

TEST_CASE("I3322: local bound 1 and the qubit value 5/4") {
    CHECK(local_bound_exact(i3322_functional()) == Rational(1));
    SeesawOptions o;
    o.restarts = 20;
    CHECK(seesaw_bell(i3322_functional(), o).value == doctest::Approx(1.25).epsilon(1e-5));
}

TEST_CASE("LHV membership and the separating inequality") {
    LhvResult pr = lhv_membership(pr_box());
    CHECK(pr.t < -1e-3);
    CHECK(pr.dual.evaluate(pr_box()) < -1e-6);
    // The inequality holds on every deterministic strategy.
    for (std::size_t lambda = 0; lambda < 16; ++lambda) {
        ProbabilityTable d = pr_box();
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) {
                d.p[x][y].setZero();
                d.p[x][y](deterministic_outcome(lambda, x, 2), deterministic_outcome(lambda / 4, y, 2)) = 1;
            }
        CHECK(pr.dual.evaluate(d) >= -1e-7);
    }
    ProbabilityTable mixed = pr_box();
    for (auto& row : mixed.p)
        for (auto& m : row) m.setConstant(0.25);
    LhvResult local = lhv_membership(mixed);
    CHECK(local.t >= -1e-7);
    double total = 0;
    for (double w : local.weights) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("seesaw never exceeds the NPA bound on random functionals") {
    Rng rng(77);
    SeesawOptions o;
    o.restarts = 3;
    o.max_iter = 200;
    for (int trial = 0; trial < 20; ++trial) {
        BellFunctional f = random_functional({2, 2, 2, 2}, rng);
        o.seed = static_cast<std::uint64_t>(trial + 1);
        const double lower = seesaw_bell(f, o).value;
        const double upper = npa_bound(f, "1+AB", {1e-9}).value;
        CAPTURE(trial);
        CHECK(lower <= upper + 1e-6);
        CHECK(lower >= local_bound(f) - 1e-6);
    }
}

TEST_CASE("steering thresholds of Werner states") {
    auto test = [](double v, const char* which) {
        const double s = 1 / std::sqrt(2.0);
        CVector z0(2), z1(2), xp(2), xm(2), yp(2), ym(2);
        z0 << 1, 0;
        z1 << 0, 1;
        xp << s, s;
        xm << s, -s;
        yp << s, cplx(0, s);
        ym << s, cplx(0, -s);
        auto proj = [](const CVector& u) { return CMatrix(u * u.adjoint()); };
        std::vector<std::vector<CMatrix>> A{{proj(z0), proj(z1)}, {proj(xp), proj(xm)}};
        if (std::string(which) == "zxy") A.push_back({proj(yp), proj(ym)});
        return steering_test(assemblage_from_state(werner_state(v).rho, 2, 2, A)).t;
    };
    // Two settings: threshold 1/√2; three settings: 1/√3.
    CHECK(test(1 / std::sqrt(2.0) + 1e-3, "zx") < 0);
    CHECK(test(1 / std::sqrt(2.0) - 1e-3, "zx") >= -1e-7);
    CHECK(test(1 / std::sqrt(3.0) + 1e-3, "zxy") < 0);
    CHECK(test(1 / std::sqrt(3.0) - 1e-3, "zxy") >= -1e-7);
}

TEST_CASE("PPT test matches the partial-transpose eigenvalue") {
    CHECK(ppt_random_robustness(phi_plus(2)).t == doctest::Approx(-0.5).epsilon(1e-8));
    CHECK(ppt_random_robustness(phi_plus(2)).robustness == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(ppt_random_robustness(phi_plus(3)).t == doctest::Approx(eigen_min(partial_transpose_b(phi_plus(3).rho, 3, 3))).epsilon(1e-7));
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const int dA = 2 + static_cast<int>(rng() % 2), dB = dA;
        DensityMatrix rho = random_two_qudit_state(dA, dB, 1 + static_cast<int>(rng() % 4), rng);
        const double oracle = eigen_min(partial_transpose_b(rho.rho, dA, dB));
        CHECK(ppt_random_robustness(rho).t == doctest::Approx(oracle).epsilon(1e-7));
    }
    CHECK(ppt_random_robustness(werner_state(1.0 / 3 + 1e-3)).t < 0);
    CHECK(ppt_random_robustness(werner_state(1.0 / 3 - 1e-3)).t >= -1e-7);
}

TEST_CASE("DPS extensions are monotone in the level") {
    // Noisy random states straddle the separability boundary; passing level 2 implies passing level 1.
    Rng rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    int passed = 0, failed = 0;
    for (int trial = 0; trial < 20; ++trial) {
        DensityMatrix rho = random_two_qudit_state(2, 2, 1 + static_cast<int>(rng() % 2), rng);
        const double p = u(rng);
        rho.rho = p * rho.rho + (1 - p) * CMatrix::Identity(4, 4) / 4;
        CAPTURE(trial);
        for (bool ppt : {true, false}) {
            const bool one = dps_feasible(rho, {1, ppt}).passes;
            const bool two = dps_feasible(rho, {2, ppt}).passes;
            if (two) CHECK(one);
            (two ? passed : failed) += 1;
        }
    }
    CHECK(passed > 0);
    CHECK(failed > 0);
    CHECK_FALSE(dps_feasible(werner_state(0.5), {1, true}).passes);
    CHECK(dps_feasible(werner_state(0.25), {1, true}).passes);
    CHECK(dps_feasible(werner_state(0.25), {2, true}).passes);
    // Separable product states pass; the singlet fails.
    Rng r2(4);
    DensityMatrix prod = product_state(random_density_matrix(2, 2, r2), random_density_matrix(2, 2, r2));
    CHECK(dps_feasible(prod, {2, true}).passes);
    // Without PPT, level 1 is trivial but the singlet has no two-copy symmetric extension.
    CHECK(dps_feasible(werner_state(1.0), {1, false}).passes);
    CHECK_FALSE(dps_feasible(werner_state(1.0), {2, false}).passes);
}

TEST_CASE("negativity agrees with the eigenvalue oracle") {
    CHECK(negativity_trace_norm(phi_plus(2)).trace_norm == doctest::Approx(2.0).epsilon(1e-8));
    Rng rng(50);
    for (int trial = 0; trial < 50; ++trial) {
        const int dA = 2 + static_cast<int>(rng() % 2), dB = 2 + static_cast<int>(rng() % 2);
        DensityMatrix rho = random_two_qudit_state(dA, dB, 1 + static_cast<int>(rng() % (dA * dB)), rng);
        const double oracle = eigen_trace_norm(partial_transpose_b(rho.rho, dA, dB));
        NegativityResult r = negativity_trace_norm(rho);
        CAPTURE(trial);
        CHECK(std::abs(r.trace_norm - oracle) <= 1e-7);
        CHECK(r.log_negativity == doctest::Approx(std::log2(oracle)).epsilon(1e-6));
    }
}

TEST_CASE("Lovász theta on standard graphs") {
    for (int n : {1, 3, 6}) {
        CHECK(lovasz_theta(Graph::empty(n), {1e-10}) == doctest::Approx(n).epsilon(1e-8));
        CHECK(lovasz_theta(Graph::complete(n), {1e-10}) == doctest::Approx(1.0).epsilon(1e-8));
    }
    CHECK(lovasz_theta(Graph::cycle(5), {1e-10}) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-8));
    // θ(C_n) = n cos(π/n) / (1 + cos(π/n)) for odd n.
    const double c7 = std::cos(M_PI / 7);
    CHECK(lovasz_theta(Graph::cycle(7), {1e-10}) == doctest::Approx(7 * c7 / (1 + c7)).epsilon(1e-7));
}

TEST_CASE("theta bounds the independence number on random graphs") {
    Rng rng(12);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 12);
        Graph g = random_graph(n, 0.2 + 0.6 * static_cast<double>(rng() % 100) / 100, rng);
        const int alpha = brute_alpha(g);
        CAPTURE(trial);
        CHECK(independence_number(g) == alpha);
        CHECK(lovasz_theta(g) >= alpha - 1e-6);
    }
}

TEST_CASE("prepare-and-measure: classical, qubit and seesaw values for the 2→1 RAC") {
    const PMArray c = rac21_functional();
    const double quantum = (1 + 1 / std::sqrt(2.0)) / 2;
    CHECK(pm_classical_bound(c, 2, {1e-11}) == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(pm_classical_bound_exact(c, 2) == Rational(3, 4));
    CHECK(pm_classical_bound_exact(c, 4) == Rational(1));
    CHECK(pm_value(c, rac21_qubit_model()) == doctest::Approx(quantum).epsilon(1e-12));
    SeesawOptions o;
    o.restarts = 5;
    CHECK(seesaw_pm(c, 2, o).value == doctest::Approx(quantum).epsilon(1e-6));

    PmClassicalResult q = pm_classical_membership(pm_table(rac21_qubit_model()), 2);
    CHECK(q.t < -1e-4);
    CHECK(q.dual.dot(pm_table(rac21_qubit_model())) < 0);
}

TEST_CASE("input validation") {
    ProbabilityTable bad = pr_box();
    bad.p[0][0](0, 0) = 2;
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_THROWS_AS(Graph::cycle(2).validate(), Error);
    DensityMatrix rho = phi_plus(2);
    rho.rho(0, 0) = 5;
    CHECK_THROWS_AS(rho.validate(), Error);
}
