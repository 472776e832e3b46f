#pragma once

#include <string>
#include <vector>

#include "qcrelax/types.hpp"

namespace qcrelax {

// Upper-triangle entry of a symmetric block matrix (0-based, row <= col).
struct SymEntry {
    int block = 0;
    int row = 0;
    int col = 0;
    double value = 0;
};

// Sparse symmetric block-diagonal matrix. Entries are kept sorted and merged.
class SparseBlockMatrix {
  public:
    void add(int block, int row, int col, double value);
    void normalize(); // sort, merge duplicates, drop zeros
    const std::vector<SymEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    SparseBlockMatrix scaled(double s) const;

  private:
    std::vector<SymEntry> entries_;
};

enum class Sense { Maximize, Minimize };

// Primal:  sense <C, X>  s.t. <A_i, X> = b_i, X ⪰ 0.
// Dual (maximize form): min b·y s.t. Z = Σ y_i A_i − C ⪰ 0.
// Negative block sizes denote diagonal (LP) blocks.
struct StandardFormSDP {
    std::vector<int> block_sizes;
    SparseBlockMatrix C;
    std::vector<SparseBlockMatrix> A;
    Vector b;
    Sense sense = Sense::Maximize;

    int num_constraints() const { return static_cast<int>(A.size()); }
    int total_dimension() const;
    void validate() const;
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, SlowProgress, IterationCap };

const char* to_string(SolveStatus s);

// Per-block point; diagonal blocks are stored as column vectors.
using BlockPoint = std::vector<Matrix>;

struct Solution {
    BlockPoint X;
    Vector y;
    BlockPoint Z;
    double primal_value = 0; // reported in the problem's sense
    double dual_value = 0;
    double gap = 0;
    double primal_residual = 0;
    double dual_residual = 0;
    int iterations = 0;
    SolveStatus status = SolveStatus::IterationCap;
    bool weak_duality_every_iterate = true;
    std::vector<double> gap_history;
};

struct SolverParams {
    double tol = 1e-8;
    int max_iter = 200;
    int stall_iterations = 30;
    const Solution* initial_point = nullptr;
};

Solution solve(const StandardFormSDP& P, const SolverParams& params = {});

// <M, X> for a sparse block matrix against a block point.
double inner(const SparseBlockMatrix& m, const BlockPoint& X, const std::vector<int>& sizes);

// Dense image of a sparse block matrix in block k.
Matrix dense_block(const SparseBlockMatrix& m, int block, int size);

struct DualityReport {
    double weak_duality_slack = 0; // dual − primal in maximize form; ≥ 0 up to rounding
    double primal_residual = 0;
    double dual_residual = 0;
    double min_eig_X = 0;
    double min_eig_Z = 0;
    bool primal_strictly_feasible = false;
    bool dual_strictly_feasible = false;
    double primal_interior_margin = 0;
    double dual_interior_margin = 0;
};

DualityReport check_duality(const StandardFormSDP& P, const Solution& S, bool probe_strict = true);

void write_sdpa(const StandardFormSDP& P, const std::string& path);
std::string write_sdpa_string(const StandardFormSDP& P);
StandardFormSDP read_sdpa(const std::string& path);
StandardFormSDP read_sdpa_string(const std::string& text);

} // namespace qcrelax
