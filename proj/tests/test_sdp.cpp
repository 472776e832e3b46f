#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>

#include "qcrelax/linalg.hpp"
#include "qcrelax/sdp.hpp"

using namespace qcrelax;

namespace {

// Two-phase tableau simplex with Bland's rule: max c·x s.t. Ax = b, x ≥ 0.
std::optional<double> simplex_max(Matrix A, Vector b, const Vector& c) {
    const Eigen::Index m = A.rows(), n = A.cols();
    for (Eigen::Index i = 0; i < m; ++i)
        if (b(i) < 0) A.row(i) *= -1, b(i) *= -1;
    // Columns: n originals, m artificials, rhs.
    Matrix T = Matrix::Zero(m + 1, n + m + 1);
    T.topLeftCorner(m, n) = A;
    T.block(0, n, m, m).setIdentity();
    T.col(n + m).head(m) = b;
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

    auto pivot = [&](Eigen::Index r, Eigen::Index col) {
        T.row(r) /= T(r, col);
        for (Eigen::Index i = 0; i <= m; ++i)
            if (i != r && T(i, col) != 0) T.row(i) -= T(i, col) * T.row(r);
        basis[static_cast<std::size_t>(r)] = col;
    };
    // Minimizes the last row's reduced costs over the allowed columns.
    auto run = [&](Eigen::Index allowed) {
        for (int it = 0; it < 10000; ++it) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < allowed; ++j)
                if (T(m, j) < -1e-11) { enter = j; break; }
            if (enter < 0) return true;
            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m; ++i)
                if (T(i, enter) > 1e-11) {
                    const double ratio = T(i, n + m) / T(i, enter);
                    if (ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]))
                        best = ratio, leave = i;
                }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
        return false;
    };

    T.row(m).setZero();
    for (Eigen::Index i = 0; i < m; ++i) T.row(m) -= T.row(i);
    T.block(m, n, 1, m).setZero();
    if (!run(n) || T(m, n + m) < -1e-8) return std::nullopt;
    for (Eigen::Index i = 0; i < m; ++i)
        if (basis[static_cast<std::size_t>(i)] >= n)
            for (Eigen::Index j = 0; j < n; ++j)
                if (std::abs(T(i, j)) > 1e-9) { pivot(i, j); break; }
    T.row(m).setZero();
    T.row(m).head(n) = -c.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto k = basis[static_cast<std::size_t>(i)];
        if (k < n && T(m, k) != 0) T.row(m) -= T(m, k) * T.row(i);
    }
    if (!run(n)) return std::nullopt;
    return T(m, n + m);
}

StandardFormSDP lp_problem(const Matrix& A, const Vector& b, const Vector& c) {
    StandardFormSDP P;
    const int n = static_cast<int>(A.cols());
    P.block_sizes = {-n};
    for (int j = 0; j < n; ++j) P.C.add(0, j, j, c(j));
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        SparseBlockMatrix a;
        for (int j = 0; j < n; ++j) a.add(0, j, j, A(i, j));
        a.normalize();
        P.A.push_back(a);
    }
    P.C.normalize();
    P.b = b;
    return P;
}

Matrix random_symmetric(int n, Rng& rng) {
    std::normal_distribution<double> g;
    Matrix M(n, n);
    for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = g(rng);
    return (M + M.transpose()) / 2;
}

void add_dense(SparseBlockMatrix& S, int block, const Matrix& M) {
    for (int i = 0; i < M.rows(); ++i)
        for (int j = i; j < M.cols(); ++j) S.add(block, i, j, M(i, j));
    S.normalize();
}

} // namespace

TEST_CASE("simplex oracle agrees with the interior-point solver on random LPs") {
    Rng rng(2024);
    std::uniform_real_distribution<double> u(-1, 1), pos(0.1, 1);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 5 + static_cast<int>(rng() % 46);
        const int m = 1 + static_cast<int>(rng() % std::min(n - 1, 20));
        Matrix A(m, n);
        for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = u(rng);
        A.row(0).setOnes(); // Σx fixed keeps the feasible set bounded
        Vector x0(n);
        for (int j = 0; j < n; ++j) x0(j) = pos(rng);
        Vector b = A * x0;
        Vector c(n);
        for (int j = 0; j < n; ++j) c(j) = u(rng);
        auto oracle = simplex_max(A, b, c);
        REQUIRE(oracle.has_value());
        Solution s = solve(lp_problem(A, b, c));
        CAPTURE(trial);
        CHECK(s.status == SolveStatus::Optimal);
        CHECK(s.primal_value == doctest::Approx(*oracle).epsilon(1e-6));
        CHECK(s.dual_value - s.primal_value >= -1e-7);
    }
}

TEST_CASE("max <C,X> over unit-trace PSD matrices is the top eigenvalue") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 9);
        Matrix C = random_symmetric(n, rng);
        StandardFormSDP P;
        P.block_sizes = {n};
        add_dense(P.C, 0, C);
        SparseBlockMatrix tr;
        for (int i = 0; i < n; ++i) tr.add(0, i, i, 1.0);
        tr.normalize();
        P.A = {tr};
        P.b = Vector::Ones(1);
        Solution s = solve(P, {1e-10});
        Eigen::SelfAdjointEigenSolver<Matrix> es(C);
        CHECK(s.status == SolveStatus::Optimal);
        CHECK(s.primal_value == doctest::Approx(es.eigenvalues()(n - 1)).epsilon(1e-8));
        CHECK(s.weak_duality_every_iterate);
        DualityReport d = check_duality(P, s);
        CHECK(d.weak_duality_slack >= -1e-8);
        CHECK(d.min_eig_X >= -1e-9);
        CHECK(d.min_eig_Z >= -1e-9);
    }
}

TEST_CASE("mixed LP and SDP blocks, minimize sense") {
    // min x s.t. [[1, x], [x, 1]] ⪰ 0 in dual form, written as a primal with an LP slack block.
    StandardFormSDP P;
    P.sense = Sense::Minimize;
    P.block_sizes = {2, -2};
    P.C.add(0, 0, 1, 1.0);
    P.C.add(1, 0, 0, 1.0);
    P.C.normalize();
    SparseBlockMatrix a0, a1;
    a0.add(0, 0, 0, 1.0);
    a0.normalize();
    a1.add(0, 1, 1, 1.0);
    a1.add(1, 0, 0, 1.0);
    a1.add(1, 1, 1, 1.0);
    a1.normalize();
    P.A = {a0, a1};
    P.b = Vector::Ones(2);
    Solution s = solve(P, {1e-10});
    CHECK(s.status == SolveStatus::Optimal);
    // 2 X01 + X_lp0 with X00 = 1, X11 + lp0 + lp1 = 1: optimum X11 = 1, X01 = -1.
    CHECK(s.primal_value == doctest::Approx(-2.0).epsilon(1e-8));
}

TEST_CASE("infeasible and unbounded problems are detected") {
    Matrix A(1, 2);
    A << 1, 1;
    Vector b(1);
    b << -1;
    Vector c(2);
    c << 1, 0;
    CHECK(solve(lp_problem(A, b, c)).status == SolveStatus::PrimalInfeasible);

    A << 1, -1;
    b << 0;
    c << 1, 1;
    CHECK(solve(lp_problem(A, b, c)).status == SolveStatus::DualInfeasible);
}

TEST_CASE("SDPA export round-trips byte for byte") {
    Rng rng(9);
    StandardFormSDP P;
    P.block_sizes = {3, -2, 2};
    add_dense(P.C, 0, random_symmetric(3, rng));
    P.C.add(1, 1, 1, 0.25);
    P.C.normalize();
    for (int i = 0; i < 3; ++i) {
        SparseBlockMatrix a;
        add_dense(a, 0, random_symmetric(3, rng));
        a.add(1, i % 2, i % 2, 1.0 / 3.0);
        add_dense(a, 2, random_symmetric(2, rng));
        P.A.push_back(a);
    }
    P.b = Vector::LinSpaced(3, 0.1, 0.7);
    const std::string first = write_sdpa_string(P);
    const StandardFormSDP Q = read_sdpa_string(first);
    CHECK(write_sdpa_string(Q) == first);
    CHECK(Q.block_sizes == P.block_sizes);
    CHECK((Q.b - P.b).norm() == 0.0);

    const auto path = std::filesystem::temp_directory_path() / "qcrelax_roundtrip.dat-s";
    write_sdpa(P, path.string());
    CHECK(write_sdpa_string(read_sdpa(path.string())) == first);
    std::filesystem::remove(path);
}

TEST_CASE("minimize problems export as the equivalent maximize problem") {
    Matrix A(1, 2);
    A << 1, 1;
    Vector b = Vector::Ones(1);
    Vector c(2);
    c << 2, 3;
    StandardFormSDP P = lp_problem(A, b, c);
    P.sense = Sense::Minimize;
    const double direct = solve(P, {1e-10}).primal_value;
    const double via_file = solve(read_sdpa_string(write_sdpa_string(P)), {1e-10}).primal_value;
    CHECK(direct == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(via_file == doctest::Approx(-2.0).epsilon(1e-8));
}

TEST_CASE("malformed SDPA input is rejected") {
    CHECK_THROWS_AS(read_sdpa_string("1\n1\n2\n1.0\n0 1 1 3 1.0\n"), Error);
    CHECK_THROWS_AS(read_sdpa_string("garbage"), Error);
}
