#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcrelax/lmi.hpp"
#include "qcrelax/opalgebra.hpp"

namespace qcrelax {

struct MonomialSet {
    std::vector<Monomial> members; // identity first
    std::string tag;
    int degree = 0; // longest member

    std::size_t size() const { return members.size(); }
};

// Words of length ≤ level over the algebra's generators.
MonomialSet monomial_set(const AlgebraPtr& A, int level);
// "2", "1+AB", "2+AAB": a base level plus products of one generator from each listed class letter.
MonomialSet monomial_set(const AlgebraPtr& A, const std::string& named);
MonomialSet monomial_set(const AlgebraPtr& A, const std::vector<std::string>& explicit_list);

struct OperatorConstraint {
    CPolynomial g; // g ⪰ 0
    int level = -1; // localizing level; -1 picks ⌊k − deg(g)/2⌋
};

struct ScalarConstraint {
    CPolynomial h; // ⟨h⟩ ≥ 0, or = 0 when equality
    bool equality = false;
};

struct PolyProblem {
    AlgebraPtr algebra;
    CPolynomial objective;
    Sense sense = Sense::Maximize;
    std::vector<OperatorConstraint> operator_constraints;
    std::vector<ScalarConstraint> scalar_constraints;
    bool real = true; // identify ⟨w⟩ with ⟨w†⟩ and keep moments real
};

struct RelaxBlock {
    std::string name;
    std::vector<Monomial> index;
    std::optional<CPolynomial> g; // localizing polynomial (none for the moment block)
    bool scalar = false;          // 1×1 localizing block lowered to an inequality row
};

// Moment variable for one equality class.
struct MomentClass {
    Monomial rep;
    bool real_valued = true;
    std::optional<cplx> pinned;
};

struct ClassRef {
    int cls = -1;
    bool adjoint = false; // entry equals the conjugate of the class value
};

struct LoweredRelaxation {
    LmiModel model;
    std::vector<int> var_re, var_im;       // per class (-1 when pinned / absent)
    std::vector<int> block_of;             // relaxation block -> LMI block (-1 for scalar blocks)
    std::vector<int> row_of;               // relaxation block -> inequality row (-1 for matrix blocks)
    std::vector<int> scalar_row;           // scalar constraint -> inequality row (-1 for equalities)
    int margin_var = -1;
};

class MomentRelaxation {
  public:
    const PolyProblem& problem() const { return problem_; }
    const MonomialSet& monomials() const { return set_; }
    const std::vector<RelaxBlock>& blocks() const { return blocks_; }
    const std::vector<MomentClass>& classes() const { return classes_; }

    // Class of a canonical monomial; nullopt for zero.
    std::optional<ClassRef> lookup(const Monomial& w) const;
    std::optional<ClassRef> lookup(const MaybeMonomial& w) const { return w ? lookup(*w) : std::nullopt; }

    // Block entry as Σ coeff·class (after canonicalization); zero entries are empty.
    std::vector<std::pair<ClassRef, cplx>> entry(int block, int i, int j) const;
    std::vector<std::pair<ClassRef, cplx>> expectation(const CPolynomial& p) const;

    void pin(const Monomial& w, cplx value);
    int free_class_count() const;
    int block_size(int block) const { return static_cast<int>(blocks_[block].index.size()); }

    // Feasibility mode maximizes t with the moment block ⪰ t·I instead of the objective.
    LoweredRelaxation lower(bool feasibility_margin = false) const;

    // Numeric moment block from class values.
    CMatrix block_matrix(int block, const std::vector<cplx>& class_values) const;
    std::vector<cplx> class_values(const LoweredRelaxation& L, const Solution& s) const;

  private:
    friend MomentRelaxation build_moment(const PolyProblem&, const MonomialSet&, const std::vector<int>&);
    int intern(const Monomial& canonical);

    PolyProblem problem_;
    MonomialSet set_;
    std::vector<RelaxBlock> blocks_;
    std::vector<MomentClass> classes_;
    std::map<Monomial, int> class_index_;
};

MomentRelaxation build_moment(const PolyProblem& problem, const MonomialSet& S,
                              const std::vector<int>& localizing_levels = {});

// Two-party probability table p(a,b|x,y) stored as p[x][y](a,b).
struct ProbabilityTable {
    int X = 0, Y = 0, N = 0, M = 0;
    std::vector<std::vector<Matrix>> p;

    double operator()(int a, int b, int x, int y) const { return p[x][y](a, b); }
    void validate(bool no_signaling = false, double tol = 1e-9) const;
};

// Pins ⟨A_{a|x}B_{b|y}⟩ and the marginals on a relaxation over Algebra::bell({X,Y},{N,M}).
MomentRelaxation attach_distribution(const MomentRelaxation& M, const ProbabilityTable& p, bool no_signaling_check = true);

struct RelaxationResult {
    double value = 0;  // bound from the multiplier side
    double primal = 0; // objective at the moment point
    Solution solution;
    LoweredRelaxation lowered;
};

RelaxationResult solve_relaxation(const MomentRelaxation& M, const SolverParams& params = {});

// max t such that the pinned moment matrix minus t·I is feasible; t ≥ 0 means feasible.
double feasibility_margin(const MomentRelaxation& M, const SolverParams& params = {}, Solution* out = nullptr);

// Checks Γ against every structural equality (entries sharing a class agree, zero entries vanish, pins hold).
double structure_violation(const MomentRelaxation& M, int block, const CMatrix& gamma);

} // namespace qcrelax
