#pragma once

#include <map>
#include <vector>

#include "qcrelax/sdp.hpp"

namespace qcrelax {

// Lowered LMI problem: keeps the map between modelling variables and the standard form.
class LmiModel {
  public:
    StandardFormSDP sdp;

    // Variable values v = v0 + N·y at a solution.
    Vector variables(const Solution& s) const;
    // Objective value from the variable side (a feasible point of the modelling problem).
    double value(const Solution& s) const;
    // Objective bound from the multiplier side (valid for any primal-feasible X).
    double bound(const Solution& s) const;
    // The same bound for a given optimal value of sdp, e.g. one solved after symmetry reduction.
    double bound_from_value(double sdp_value) const;
    // Hermitian multiplier of a modelling block (real blocks have zero imaginary part).
    CMatrix block_dual(const Solution& s, int block) const;
    // Affine block value F(v) at a solution.
    CMatrix block_value(const Solution& s, int block) const;
    double inequality_dual(const Solution& s, int row) const;
    double inequality_value(const Solution& s, int row) const;
    // Multipliers ν of the equalities E v = f in the maximize form: Eᵀν = g + (⟨X, F_k⟩)_k.
    Vector equality_multipliers(const Solution& s) const;
    Sense sense() const { return sense_; }
    int num_variables() const { return static_cast<int>(objective_.size()); }

  private:
    friend class LmiBuilder;
    Sense sense_ = Sense::Maximize;
    Vector objective_; // in the caller's sense
    double objective_constant_ = 0;
    Vector v0_;
    Matrix N_;
    bool reduced_ = false;
    Matrix E_;
    struct BlockInfo {
        int sdp_block;
        int n;
        bool complex;
    };
    std::vector<BlockInfo> blocks_;
    int lp_block_ = -1;
    std::vector<SparseBlockMatrix> F_; // realified coefficient of each variable (index 0 is the constant term)
    Vector max_objective() const { return sense_ == Sense::Maximize ? objective_ : Vector(-objective_); }
};

// Builds  max/min g·v + c  s.t.  F_b(v) ⪰ 0 per block,  affine rows ≥ 0,  E v = f.
class LmiBuilder {
  public:
    explicit LmiBuilder(Sense sense = Sense::Maximize) : sense_(sense) {}

    int add_variable();
    int add_variables(int count);
    int num_variables() const { return nvars_; }

    // Hermitian block of size n; complex blocks are embedded as 2n×2n real symmetric blocks.
    int add_block(int n, bool complex = false);
    // Adds coeff·v[var] (var = -1: constant) to entry (i, j); the mirrored entry gets the conjugate.
    void add_entry(int block, int i, int j, int var, cplx coeff);

    // Row: Σ coeff·v + constant ≥ 0. Returns the row index.
    int add_inequality(const std::vector<std::pair<int, double>>& terms, double constant);
    // Σ coeff·v = rhs.
    int add_equality(const std::vector<std::pair<int, double>>& terms, double rhs);

    void add_objective(int var, double coeff);
    void add_objective_constant(double c) { objective_constant_ += c; }

    LmiModel build() const;

  private:
    struct Term {
        int block, i, j, var;
        cplx coeff;
    };
    Sense sense_;
    int nvars_ = 0;
    std::vector<std::pair<int, bool>> blocks_; // (n, complex)
    std::vector<Term> terms_;
    std::vector<std::pair<std::vector<std::pair<int, double>>, double>> rows_;
    std::vector<std::pair<std::vector<std::pair<int, double>>, double>> equalities_;
    std::map<int, double> objective_;
    double objective_constant_ = 0;
};

// d×d Hermitian matrix of real LMI variables: the diagonal, then real and imaginary parts of the upper triangle.
struct HermitianVariable {
    int first = 0;
    int d = 0;
    bool complex = true;

    static HermitianVariable add(LmiBuilder& B, int d, bool complex = true);
    int count() const { return d + (complex ? d * (d - 1) : d * (d - 1) / 2); }
    CMatrix basis(int k) const;
    CMatrix value(const Vector& v) const;
};

// Adds the Hermitian matrix M as the coefficient of `var` (-1: constant) in block entries offset + (i, j).
void add_hermitian(LmiBuilder& B, int block, int var, const CMatrix& M, int offset = 0);
void add_hermitian(LmiBuilder& B, int block, const HermitianVariable& H, double scale = 1.0, int offset = 0);
// Σ_k v_k M_k = rhs. Returns one equality row per (i ≤ j, part); -1 marks rows that are identically zero.
std::vector<int> add_hermitian_equality(LmiBuilder& B, const std::vector<std::pair<int, CMatrix>>& terms, const CMatrix& rhs);

} // namespace qcrelax
