#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "qcrelax/dimension.hpp"
#include "qcrelax/linalg.hpp"

using namespace qcrelax;

namespace {

const std::vector<std::vector<int>> kQubitBinary{{1, 1}, {1, 1}};

PMArray random_objective(int X, int Y, Rng& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    PMArray c(X, Y, 2);
    for (auto& v : c.v) v = u(rng);
    return c;
}

} // namespace

TEST_CASE("random access code: dimension-restricted bound at level 1") {
    auto A = pm_algebra(4, 2, 2);
    auto S = monomial_set(A, 1);
    CHECK(S.size() == 7);
    SampledBasis basis = sample_basis({4, 2, 2}, 2, S, kQubitBinary);
    CHECK(basis.safe);
    NvResult r = nv_bound(basis, rac21_functional());
    const double quantum = (1 + 1 / std::sqrt(2.0)) / 2;
    CHECK(r.value >= quantum - 1e-7);
    CHECK(r.value <= quantum + 1e-3);
    CHECK(r.label == "level-" + S.tag + " upper bound");
    CHECK(r.safe);
}

TEST_CASE("span rank does not depend on the seed") {
    auto A = pm_algebra(4, 2, 2);
    auto S = monomial_set(A, 1);
    std::vector<int> ranks;
    for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
        NvSampleOptions opt;
        opt.seed = seed;
        ranks.push_back(sample_basis({4, 2, 2}, 2, S, kQubitBinary, opt).span_rank);
    }
    for (int r : ranks) CHECK(r == ranks.front());
}

TEST_CASE("sampling is deterministic for a fixed seed") {
    auto S = monomial_set(pm_algebra(3, 2, 2), 1);
    SampledBasis a = sample_basis({3, 2, 2}, 2, S, kQubitBinary);
    SampledBasis b = sample_basis({3, 2, 2}, 2, S, kQubitBinary);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK((a.samples[i] - b.samples[i]).norm() == 0.0);
}

TEST_CASE("sampled moment matrices are PSD and normalised") {
    auto S = monomial_set(pm_algebra(3, 2, 2), 1);
    SampledBasis basis = sample_basis({3, 2, 2}, 2, S, kQubitBinary);
    for (const auto& G : basis.samples) {
        CHECK(min_eigenvalue(G) >= -1e-10);
        CHECK(G(0, 0) == doctest::Approx(2.0));
    }
}

TEST_CASE("bound dominates explicit qubit models and seesaw on random objectives") {
    Rng rng(31);
    auto S = monomial_set(pm_algebra(3, 2, 2), 1);
    SeesawOptions o;
    o.restarts = 4;
    for (int trial = 0; trial < 20; ++trial) {
        PMArray c = random_objective(3, 2, rng);
        o.seed = static_cast<std::uint64_t>(trial + 7);
        const double lower = seesaw_pm(c, 2, o).value;
        const double upper = nv_bound_all_profiles({3, 2, 2}, 2, S, c).value;
        CAPTURE(trial);
        CHECK(upper >= lower - 1e-6);
        CHECK(upper >= pm_classical_bound(c, 2) - 1e-6);
    }
}

TEST_CASE("truncated bases give monotone bounds") {
    auto S = monomial_set(pm_algebra(4, 2, 2), 1);
    SampledBasis basis = sample_basis({4, 2, 2}, 2, S, kQubitBinary);
    const PMArray c = rac21_functional();
    double previous = -std::numeric_limits<double>::infinity();
    for (int k = 1; k < static_cast<int>(basis.samples.size()); k += 3) {
        SampledBasis part = truncate_basis(basis, k);
        CHECK_FALSE(part.safe);
        CHECK_THROWS_AS(nv_bound(part, c), Error);
        const double v = nv_bound(part, c, {}, true).value;
        CHECK(v >= previous - 1e-7);
        previous = v;
    }
    CHECK(nv_bound(basis, c).value >= previous - 1e-7);
    CHECK(truncate_basis(basis, static_cast<int>(basis.samples.size())).safe);
}

TEST_CASE("rank profiles enumerate compositions of the dimension") {
    // Compositions of 2 into 2 parts: (2,0), (1,1), (0,2); three per measurement.
    CHECK(rank_profiles(2, 2, 2).size() == 9);
    CHECK(rank_profiles(3, 1, 3).size() == 10);
}

TEST_CASE("trivial cases collapse the span") {
    auto A = pm_algebra(2, 1, 2);
    SampledBasis one = sample_basis({2, 1, 2}, 2, monomial_set(A, std::vector<std::string>{"1"}), {{1, 1}});
    CHECK(one.span_rank == 1);
    SampledBasis classical = sample_basis({2, 1, 2}, 1, monomial_set(A, 1), {{1, 0}});
    CHECK(classical.span_rank == 1);
}

TEST_CASE("basis cache round trip") {
    auto S = monomial_set(pm_algebra(4, 2, 2), 1);
    SampledBasis basis = sample_basis({4, 2, 2}, 2, S, kQubitBinary);
    const auto path = (std::filesystem::temp_directory_path() / "qcrelax_basis.bin").string();
    save_basis(basis, path);
    SampledBasis back = load_basis(path);
    std::filesystem::remove(path);
    CHECK(back.dims == basis.dims);
    CHECK(back.ranks == basis.ranks);
    CHECK(back.span_rank == basis.span_rank);
    REQUIRE(back.samples.size() == basis.samples.size());
    for (std::size_t i = 0; i < back.samples.size(); ++i) CHECK((back.samples[i] - basis.samples[i]).norm() == 0.0);
    CHECK(nv_bound(back, rac21_functional()).value == doctest::Approx(nv_bound(basis, rac21_functional()).value).epsilon(1e-12));
}

TEST_CASE("dilated sampling keeps the bound valid") {
    auto S = monomial_set(pm_algebra(4, 2, 2), 1);
    NvSampleOptions opt;
    opt.dilate = true;
    SampledBasis basis = sample_basis({4, 2, 2}, 2, S, {{2, 2}, {2, 2}}, opt);
    CHECK(basis.hilbert_dim() == 4);
    CHECK(nv_bound(basis, rac21_functional()).value >= (1 + 1 / std::sqrt(2.0)) / 2 - 1e-7);
}
