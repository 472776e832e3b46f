#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcrelax/relaxation.hpp"
#include "qcrelax/scenarios.hpp"

namespace qcrelax {

// Prepare-and-measure operator algebra: states R0..R{X-1} (rank one, idempotent) and projectors M{b}|{y}.
// With completeness the last outcome of each measurement is eliminated as 1 − Σ others.
AlgebraPtr pm_algebra(int X, int Y, int N, bool completeness = true);

struct PmDims {
    int X = 0, Y = 0, N = 0;
    bool operator==(const PmDims&) const = default;
};

struct NvSampleOptions {
    std::uint64_t seed = 1;
    int rank_margin = 5;        // consecutive dependent samples before stopping
    int sample_cap = 100000;    // give up when the rank has not stalled by then
    double rank_tol = 1e-9;     // relative to the largest singular value
    bool dilate = false;        // Neumark dilation: states in C^d, projectors on C^{d·N}
    int batch = 16;             // samples drawn in parallel per merge step
};

// Moment matrices Γ(u,v) = Re tr(u† v) of sampled d-dimensional models, linearly independent.
struct SampledBasis {
    PmDims dims;
    int d = 0;
    AlgebraPtr algebra;
    MonomialSet S;
    std::vector<std::vector<int>> ranks; // ranks[y][b] of the sampled projective measurements
    bool dilated = false;
    std::vector<Matrix> samples;
    int span_rank = 0;
    int draws = 0;      // total samples drawn, dependent ones included
    bool safe = false;  // the rank stalled for rank_margin consecutive draws

    int hilbert_dim() const { return dilated ? d * dims.N : d; }
};

// All rank profiles: for each measurement, a composition of the Hilbert dimension into N nonnegative parts.
std::vector<std::vector<std::vector<int>>> rank_profiles(int dim, int Y, int N, std::size_t cap = 4096);

SampledBasis sample_basis(PmDims dims, int d, const MonomialSet& S, const std::vector<std::vector<int>>& ranks,
                          const NvSampleOptions& opt = {});

// Numeric Γ of an explicit model (states as density matrices, projectors M[y][b]).
Matrix nv_moment_matrix(const SampledBasis& basis, const std::vector<CMatrix>& states,
                        const std::vector<std::vector<CMatrix>>& M);

// First k samples of a basis; flagged unsafe unless k covers the whole basis of a safe one.
SampledBasis truncate_basis(const SampledBasis& basis, int k);

struct NvResult {
    double value = 0;
    bool safe = false;
    std::string label; // "level-<tag> upper bound"
    int span_rank = 0;
    int block_size = 0; // PSD block after compressing onto the joint range of the samples
    Vector gamma;
    Solution solution;
    StandardFormSDP sdp; // the problem that was solved
};

// max Σ c Γ(ρ_x, M_{b|y}) over Γ = Σ γ_i Γ^(i), Σ γ_i = 1, Γ ⪰ 0.
// Unsafe bases are rejected unless allow_unsafe is set, in which case the result carries safe = false.
NvResult nv_bound(const SampledBasis& basis, const PMArray& c, const SolverParams& params = {},
                  bool allow_unsafe = false);

struct NvProfileResult {
    double value = 0;
    std::vector<std::vector<int>> best_ranks;
    std::vector<double> profile_values;
    std::string label;
};
// Maximum of nv_bound over every rank profile (or the given ones).
NvProfileResult nv_bound_all_profiles(PmDims dims, int d, const MonomialSet& S, const PMArray& c,
                                      const NvSampleOptions& opt = {}, const SolverParams& params = {},
                                      std::size_t profile_cap = 4096);

// Binary cache: header "QCNVBAS1", dims, d, ranks, monomial strings, samples.
void save_basis(const SampledBasis& basis, const std::string& path);
SampledBasis load_basis(const std::string& path);

} // namespace qcrelax
