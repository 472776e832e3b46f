#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qcrelax/linalg.hpp"
#include "qcrelax/sdp.hpp"

namespace qcrelax {

// Real orthogonal representation acting blockwise on a standard-form SDP: X_k ↦ ρ_g X_k ρ_gᵀ.
// Diagonal (LP) blocks only admit signed permutation matrices.
struct GroupRepresentation {
    static constexpr std::size_t kEnumerationCap = 10000;

    std::vector<int> block_sizes;
    std::vector<BlockPoint> generators; // generators[g][block], dense |size|×|size|
    std::vector<BlockPoint> elements;   // the whole group when it fits the enumeration cap
    bool enumerated = false;
    bool verified_invariance = false;

    // Generators acting on one block, identity on the others.
    static GroupRepresentation on_block(const std::vector<int>& block_sizes, int block, const std::vector<Matrix>& gens);
    // Permutations of the coordinates of a single n×n block: ρ_π e_i = e_{π(i)}.
    static GroupRepresentation from_permutations(int n, const std::vector<std::vector<int>>& perms);
    static GroupRepresentation trivial(const std::vector<int>& block_sizes);

    void validate() const;
    // Closure of the generators under products; returns false (and leaves elements empty) beyond the cap.
    bool enumerate(std::size_t cap = kEnumerationCap);
};

Matrix permutation_matrix(const std::vector<int>& perm);

// Projection onto the fixed-point space: the group average when enumerated, otherwise the
// Cesàro iteration X ← (X + Σ_s ρ_s X ρ_sᵀ)/(1 + |S|) over generators and inverses to tolerance 1e-12.
BlockPoint average_point(const GroupRepresentation& rep, const BlockPoint& X);
Matrix average_block(const GroupRepresentation& rep, int block, const Matrix& X);

// Checks ⟨C, ρXρᵀ⟩ = ⟨C, X⟩ and constraint preservation on random feasible-affine points.
// Sets rep.verified_invariance or throws NotInvariant.
void verify_invariance(const StandardFormSDP& P, GroupRepresentation& rep, Rng& rng, double tol = 1e-8);

// Averages C and every A_i, merges constraint rows that become identical (A and b summed)
// and drops rows that are linear combinations of the others. row_map(k, i) is the weight of
// the averaged original row i in the new row k.
StandardFormSDP group_average(const StandardFormSDP& P, GroupRepresentation& rep, Matrix* row_map = nullptr,
                              std::uint64_t seed = 1);

struct IrrepBlock {
    int multiplicity = 0; // n_i
    int dimension = 0;    // d_i
    bool operator==(const IrrepBlock&) const = default;
};

// Rows of V are the new orthonormal basis, ordered irrep by irrep as C^{n_i} ⊗ C^{d_i}.
struct BlockDecomposition {
    Matrix V;
    std::vector<IrrepBlock> blocks;

    // VVᵀ = 1 to 1e-10 and V ρ_g Vᵀ = ⊕ 1_{n_i} ⊗ ρ_g^i to 1e-8 for every generator; throws otherwise.
    void verify(const std::vector<Matrix>& generators, double orth_tol = 1e-10, double block_tol = 1e-8) const;
};

// Numeric block basis of one block's representation: eigenspaces of the average of a random
// symmetric matrix are grouped into isotypic components and aligned by averaged intertwiners.
BlockDecomposition find_block_basis(const GroupRepresentation& rep, int block = 0, double tol = 1e-7,
                                    std::uint64_t seed = 1);

// Replaces every block carrying a nontrivial representation by one n_i×n_i block per irrep
// (X̄ = Vᵀ(⊕ X^i ⊗ 1_{d_i})V). Supplied decompositions are verified; blocks with neither
// objective nor constraint support are dropped.
StandardFormSDP block_diagonalize(const StandardFormSDP& P, GroupRepresentation& rep,
                                  const std::vector<BlockDecomposition>* supplied = nullptr,
                                  std::vector<BlockDecomposition>* used = nullptr, std::uint64_t seed = 1);

} // namespace qcrelax
