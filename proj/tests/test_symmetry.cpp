#include <doctest.h>

#include <cmath>

#include "qcrelax/linalg.hpp"
#include "qcrelax/relaxation.hpp"
#include "qcrelax/scenarios.hpp"
#include "qcrelax/symmetry.hpp"

using namespace qcrelax;

namespace {

void add_dense(SparseBlockMatrix& S, int block, const Matrix& M) {
    for (int i = 0; i < M.rows(); ++i)
        for (int j = i; j < M.cols(); ++j) S.add(block, i, j, M(i, j));
    S.normalize();
}

// min x1 + x2 s.t. [[2, x1, 1], [x1, 2, x2], [1, x2, 2]] ⪰ 0, in the dual form of the standard SDP.
StandardFormSDP worked_example() {
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
    return P;
}

std::vector<int> cycle_perm(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = (i + 1) % n;
    return p;
}

std::vector<int> swap01(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    std::swap(p[0], p[1]);
    return p;
}

// Projection of X onto S_n-invariant matrices: a·1 + b·(J − 1) with the diagonal and off-diagonal means.
Matrix symmetric_group_average(const Matrix& X) {
    const auto n = X.rows();
    const double diag = X.diagonal().mean();
    const double off = (X.sum() - X.trace()) / static_cast<double>(n * (n - 1));
    return Matrix::Constant(n, n, off) + (diag - off) * Matrix::Identity(n, n);
}

// A bounded, strictly feasible SDP on one n×n block invariant under the given permutations.
StandardFormSDP random_invariant_sdp(int n, GroupRepresentation& rep, int m, Rng& rng) {
    std::normal_distribution<double> g;
    auto rand_sym = [&] {
        Matrix M(n, n);
        for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = g(rng);
        return Matrix((M + M.transpose()) / 2);
    };
    StandardFormSDP P;
    P.block_sizes = {n};
    add_dense(P.C, 0, average_block(rep, 0, rand_sym()));
    Matrix X0 = Matrix::Identity(n, n);
    SparseBlockMatrix tr;
    for (int i = 0; i < n; ++i) tr.add(0, i, i, 1.0);
    tr.normalize();
    P.A.push_back(tr);
    std::vector<double> b{static_cast<double>(n)};
    for (int i = 1; i < m; ++i) {
        Matrix Ai = average_block(rep, 0, rand_sym());
        SparseBlockMatrix a;
        add_dense(a, 0, Ai);
        P.A.push_back(a);
        b.push_back((Ai.cwiseProduct(X0)).sum());
    }
    P.b = Eigen::Map<Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
    return P;
}

} // namespace

TEST_CASE("worked example: averaging merges the variables, block diagonalization splits the block") {
    StandardFormSDP P = worked_example();
    auto rep = GroupRepresentation::from_permutations(3, {{2, 1, 0}});
    Rng rng(1);
    verify_invariance(P, rep, rng);
    CHECK(rep.verified_invariance);

    Solution raw = solve(P, {1e-11});
    CHECK(raw.primal_value == doctest::Approx(-2 * std::sqrt(3.0)).epsilon(1e-8));

    Matrix row_map;
    StandardFormSDP avg = group_average(P, rep, &row_map);
    CHECK(avg.num_constraints() == 1);
    CHECK(avg.b(0) == doctest::Approx(2.0));
    Solution sa = solve(avg, {1e-11});
    CHECK(sa.primal_value == doctest::Approx(raw.primal_value).epsilon(1e-8));
    // The single multiplier is y = (x1 + x2) / 2.
    CHECK(sa.y(0) == doctest::Approx((raw.y(0) + raw.y(1)) / 2).epsilon(1e-6));

    std::vector<BlockDecomposition> used;
    StandardFormSDP bd = block_diagonalize(P, rep, nullptr, &used);
    std::vector<int> sizes = bd.block_sizes;
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<int>{1, 2});
    Solution sb = solve(bd, {1e-11});
    CHECK(sb.primal_value == doctest::Approx(raw.primal_value).epsilon(1e-8));
    REQUIRE(used.size() == 1);
    CHECK(used[0].blocks == std::vector<IrrepBlock>{{2, 1}, {1, 1}});
}

TEST_CASE("group averaging is an idempotent projection") {
    auto rep = GroupRepresentation::from_permutations(5, {cycle_perm(5), swap01(5)});
    CHECK(rep.enumerate());
    CHECK(rep.elements.size() == 120);
    Rng rng(4);
    std::normal_distribution<double> g;
    Matrix X(5, 5);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = g(rng);
    X = (X + X.transpose()) / 2;
    Matrix once = average_block(rep, 0, X);
    CHECK((average_block(rep, 0, once) - once).norm() <= 1e-12);
    CHECK((once - symmetric_group_average(X)).norm() <= 1e-12);
}

TEST_CASE("Cesàro averaging beyond the enumeration cap matches the analytic projection") {
    auto rep = GroupRepresentation::from_permutations(8, {cycle_perm(8), swap01(8)});
    CHECK_FALSE(rep.enumerate());
    CHECK_FALSE(rep.enumerated);
    Rng rng(6);
    std::normal_distribution<double> g;
    Matrix X(8, 8);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = g(rng);
    X = (X + X.transpose()) / 2;
    CHECK((average_block(rep, 0, X) - symmetric_group_average(X)).norm() <= 1e-9);
}

TEST_CASE("S6-invariant random SDP keeps its value under both reductions") {
    auto rep = GroupRepresentation::from_permutations(6, {cycle_perm(6), swap01(6)});
    REQUIRE(rep.enumerate());
    CHECK(rep.elements.size() == 720);
    Rng rng(10);
    StandardFormSDP P = random_invariant_sdp(6, rep, 3, rng);
    const double raw = solve(P, {1e-10}).primal_value;
    CHECK(solve(group_average(P, rep), {1e-10}).primal_value == doctest::Approx(raw).epsilon(1e-7));
    std::vector<BlockDecomposition> used;
    StandardFormSDP bd = block_diagonalize(P, rep, nullptr, &used);
    CHECK(used[0].blocks == std::vector<IrrepBlock>{{1, 1}, {1, 5}});
    CHECK(solve(bd, {1e-10}).primal_value == doctest::Approx(raw).epsilon(1e-7));
}

TEST_CASE("cyclic symmetry of the 5-cycle theta SDP") {
    StandardFormSDP P = theta_sdp(Graph::cycle(5));
    auto rep = GroupRepresentation::on_block(P.block_sizes, 0, {permutation_matrix(cycle_perm(5))});
    std::vector<BlockDecomposition> used;
    StandardFormSDP bd = block_diagonalize(P, rep, nullptr, &used);
    // Trivial irrep once, then the two inequivalent 2-dimensional real irreps of Z5.
    CHECK(used[0].blocks == std::vector<IrrepBlock>{{1, 1}, {1, 2}, {1, 2}});
    CHECK(solve(bd, {1e-10}).dual_value == doctest::Approx(std::sqrt(5.0)).epsilon(1e-8));
    used[0].verify({rep.generators[0][0]});
}

TEST_CASE("trivial group leaves the problem unchanged") {
    StandardFormSDP P = worked_example();
    auto rep = GroupRepresentation::trivial(P.block_sizes);
    const double raw = solve(P, {1e-10}).primal_value;
    StandardFormSDP avg = group_average(P, rep);
    CHECK(avg.num_constraints() == 2);
    CHECK(solve(avg, {1e-10}).primal_value == doctest::Approx(raw).epsilon(1e-8));
    CHECK(solve(block_diagonalize(P, rep), {1e-10}).primal_value == doctest::Approx(raw).epsilon(1e-8));
}

TEST_CASE("party swap on the CHSH moment matrix") {
    auto f = chsh_functional();
    auto A = f.algebra();
    PolyProblem pb;
    pb.algebra = A;
    pb.objective = f.polynomial(A);
    auto L = build_moment(pb, monomial_set(A, 1)).lower();
    // Moment order 1, A0|0, A0|1, B0|0, B0|1.
    auto rep = GroupRepresentation::on_block(L.model.sdp.block_sizes, L.block_of[0], {permutation_matrix({0, 3, 4, 1, 2})});
    const double raw = solve(L.model.sdp, {1e-10}).primal_value;
    const double reduced = solve(block_diagonalize(L.model.sdp, rep), {1e-10}).primal_value;
    CHECK(reduced == doctest::Approx(raw).epsilon(1e-7));
    CHECK(L.model.bound_from_value(reduced) == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-7));
}

TEST_CASE("non-invariant actions are rejected") {
    StandardFormSDP P = worked_example();
    auto rep = GroupRepresentation::from_permutations(3, {{1, 0, 2}});
    Rng rng(2);
    CHECK_THROWS_AS(verify_invariance(P, rep, rng), Error);
    CHECK_THROWS_AS(block_diagonalize(P, rep), Error);
    CHECK_THROWS_AS(GroupRepresentation::from_permutations(3, {{0, 0, 1}}), Error);
}

TEST_CASE("block bases are orthogonal and block the generators") {
    for (int n : {3, 4, 6}) {
        auto rep = GroupRepresentation::from_permutations(n, {cycle_perm(n), swap01(n)});
        BlockDecomposition D = find_block_basis(rep);
        CHECK((D.V * D.V.transpose() - Matrix::Identity(n, n)).norm() <= 1e-10);
        CHECK(D.blocks == std::vector<IrrepBlock>{{1, 1}, {1, n - 1}});
        D.verify({rep.generators[0][0], rep.generators[1][0]});
    }
}
