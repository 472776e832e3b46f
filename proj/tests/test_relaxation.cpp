#include <doctest.h>

#include <cmath>

#include "qcrelax/certificates.hpp"
#include "qcrelax/linalg.hpp"
#include "qcrelax/relaxation.hpp"
#include "qcrelax/scenarios.hpp"

using namespace qcrelax;

namespace {

PolyProblem example_problem(bool commutative) {
    auto A = Algebra::declare({{"x1"}, {"x2"}}, {commutative, false});
    PolyProblem p;
    p.algebra = A;
    p.objective = A->parse_polynomial(commutative ? "x2^2 - x1*x2 - x2" : "x2^2 - 0.5*x1*x2 - 0.5*x2*x1 - x2");
    p.operator_constraints = {{A->parse_polynomial("x1 - x1^2")}, {A->parse_polynomial("x2 - x2^2")}};
    return p;
}

double solve_level(const PolyProblem& p, int level, double tol = 1e-9) {
    return solve_relaxation(build_moment(p, monomial_set(p.algebra, level)), {tol}).value;
}

} // namespace

TEST_CASE("commutative worked example: level 1 gives 1/8, level 2 is nearly tight") {
    auto p = example_problem(true);
    CHECK(solve_level(p, 1) == doctest::Approx(0.125).epsilon(1e-7));
    const double v2 = solve_level(p, 2);
    CHECK(v2 <= 1e-4);
    CHECK(v2 >= -1e-7);
    CHECK(monomial_set(p.algebra, 2).size() == 6);
}

TEST_CASE("noncommutative worked example converges at level 1") {
    auto p = example_problem(false);
    CHECK(solve_level(p, 1) == doctest::Approx(0.125).epsilon(1e-7));
    CHECK(solve_level(p, 2) == doctest::Approx(0.125).epsilon(1e-7));

    // The qubit model reaching 1/8.
    const double s3 = std::sqrt(3.0);
    Matrix X1(2, 2), X2(2, 2);
    X1 << 1, s3, s3, 3;
    X2 << 1, -s3, -s3, 3;
    X1 /= 4;
    X2 /= 4;
    Matrix f = X2 * X2 - 0.5 * X1 * X2 - 0.5 * X2 * X1 - X2;
    CHECK(std::abs(f(0, 0) - 0.125) <= 1e-12);
    CHECK(min_eigenvalue(Matrix(X1 - X1 * X1)) >= -1e-12);
    CHECK(min_eigenvalue(Matrix(X2 - X2 * X2)) >= -1e-12);
}

TEST_CASE("moment matrix sizes follow the monomial count") {
    auto A = Algebra::declare({{"x"}, {"y"}, {"z"}}, {true, false});
    // (k + n)! / (n! k!) monomials of degree ≤ k in n commuting variables.
    CHECK(monomial_set(A, 1).size() == 4);
    CHECK(monomial_set(A, 2).size() == 10);
    CHECK(monomial_set(A, 3).size() == 20);

    auto B = i3322_functional().algebra();
    CHECK(monomial_set(B, 1).size() == 7);
    CHECK(monomial_set(B, "1+AB").size() == 16);
    CHECK(monomial_set(B, 2).size() == 28);
    CHECK(monomial_set(B, 3).size() == 88);
}

TEST_CASE("relaxation values are monotone in the level") {
    for (const auto& f : {chsh_functional(), i3322_functional()}) {
        double previous = std::numeric_limits<double>::infinity();
        for (const std::string level : {"1", "1+AB", "2"}) {
            const double v = npa_bound(f, level, {1e-9}).value;
            CHECK(v <= previous + 1e-7);
            previous = v;
        }
    }
    auto p = example_problem(true);
    CHECK(solve_level(p, 3) <= solve_level(p, 2) + 1e-7);
}

TEST_CASE("identity satisfies every structural equality in the unitary basis") {
    for (const auto& [inputs, level] : std::vector<std::pair<int, int>>{{2, 2}, {3, 2}, {2, 3}}) {
        auto A = Algebra::bell_unitary({inputs, inputs}, {2, 2});
        PolyProblem p;
        p.algebra = A;
        p.objective = CPolynomial::constant(A, 0.0);
        MomentRelaxation M = build_moment(p, monomial_set(A, level));
        const int n = M.block_size(0);
        CAPTURE(inputs);
        CHECK(structure_violation(M, 0, CMatrix::Identity(n, n)) == 0.0);
    }
    // In the projector basis the identity is not a moment matrix.
    auto A = Algebra::bell({2, 2}, {2, 2});
    PolyProblem p;
    p.algebra = A;
    p.objective = CPolynomial::constant(A, 0.0);
    MomentRelaxation M = build_moment(p, monomial_set(A, 1));
    CHECK(structure_violation(M, 0, CMatrix::Identity(5, 5)) > 0.5);
}

TEST_CASE("moment matrices of genuine quantum models satisfy the structure") {
    Rng rng(3);
    auto A = Algebra::bell({2, 2}, {2, 2});
    PolyProblem p;
    p.algebra = A;
    p.objective = CPolynomial::constant(A, 0.0);
    p.real = false;
    MomentRelaxation M = build_moment(p, monomial_set(A, 2));
    const auto& S = M.monomials().members;
    CVector psi = random_pure_state(9, rng);
    std::vector<CMatrix> ops;
    for (int k = 0; k < 4; ++k) {
        auto meas = random_projective_measurement(3, 2, rng);
        ops.push_back(k < 2 ? kron(meas[0], CMatrix::Identity(3, 3)) : kron(CMatrix::Identity(3, 3), meas[0]));
    }
    auto op = [&](const Monomial& w) {
        CMatrix out = CMatrix::Identity(9, 9);
        for (const auto& l : w.word()) out = out * ops[l.id];
        return out;
    };
    CMatrix G(S.size(), S.size());
    for (std::size_t i = 0; i < S.size(); ++i)
        for (std::size_t j = 0; j < S.size(); ++j)
            G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = psi.dot(op(S[i]).adjoint() * op(S[j]) * psi);
    CHECK(structure_violation(M, 0, G) <= 1e-12);
    CHECK(min_eigenvalue(G) >= -1e-12);
}

TEST_CASE("pinned distributions: PR box is infeasible, the Tsirelson point is feasible") {
    auto A = Algebra::bell({2, 2}, {2, 2});
    PolyProblem p;
    p.algebra = A;
    p.objective = CPolynomial::constant(A, 0.0);
    auto S = monomial_set(A, 1);
    CHECK(feasibility_margin(attach_distribution(build_moment(p, S), pr_box())) < -1e-3);
    CHECK(feasibility_margin(attach_distribution(build_moment(p, S), chsh_optimal_table())) >= -1e-7);
    CHECK(chsh_functional().evaluate(chsh_optimal_table()) == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("scalar constraints and minimization") {
    auto A = Algebra::declare({{"x"}, {"y"}}, {true, false});
    PolyProblem p;
    p.algebra = A;
    p.sense = Sense::Minimize;
    p.objective = A->parse_polynomial("x + y");
    p.operator_constraints = {{A->parse_polynomial("1 - x^2 - y^2")}};
    // min x + y on the unit disc is -√2.
    CHECK(solve_level(p, 1) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-7));
    p.scalar_constraints = {{A->parse_polynomial("x - y"), true}};
    CHECK(solve_level(p, 1) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-7));
    p.scalar_constraints = {{A->parse_polynomial("x - 0.5"), false}};
    CHECK(solve_level(p, 2) > -std::sqrt(2.0) + 1e-3);
}

TEST_CASE("certificates from the worked examples verify") {
    for (bool commutative : {true, false}) {
        auto p = example_problem(commutative);
        MomentRelaxation M = build_moment(p, monomial_set(p.algebra, 1));
        RelaxationResult r = solve_relaxation(M, {1e-10});
        SOSCertificate cert = extract_sos(M, r);
        CHECK(cert.lambda == doctest::Approx(0.125).epsilon(1e-7));
        CHECK(verify_certificate(cert, p) <= 1e-6);
        SOSCertificate back = parse_certificate(serialize(cert), p);
        CHECK(verify_certificate(back, p) <= 1e-6);
        CHECK(serialize(back) == serialize(cert));
    }
}

TEST_CASE("the printed decomposition is exact in rational arithmetic") {
    for (bool commutative : {true, false}) {
        auto p = example_problem(commutative);
        auto A = p.algebra;
        SOSCertificate c;
        c.algebra = A;
        c.lambda = 0.125;
        c.squares = {{0.5, A->parse_polynomial("0.5 - x1 - x2")}};
        c.localizing = {{0, 0.5, CPolynomial::constant(A, 1.0)}, {1, 1.5, CPolynomial::constant(A, 1.0)}};
        CHECK(verify_certificate_rational(c, p) == 0.0);
        CHECK(verify_certificate(c, p) <= 1e-15);
        // A wrong weight leaves a residual.
        c.localizing[1].weight = 1.25;
        CHECK(verify_certificate_rational(c, p) > 0.1);
    }
}

TEST_CASE("certificate parser rejects malformed text") {
    auto p = example_problem(true);
    CHECK_THROWS_AS(parse_certificate("not a certificate", p), Error);
}
