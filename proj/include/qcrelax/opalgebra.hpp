#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "qcrelax/types.hpp"

namespace qcrelax {

enum class SymbolKind {
    Hermitian, // bounded self-adjoint operator, no further relations
    Projector, // P² = P, orthogonal to the other outcomes of its measurement
    Unitary,   // U U† = U† U = 1 and U^order = 1
    State,     // rank-one state symbol: self-adjoint and idempotent
    General,   // arbitrary bounded operator; its adjoint is a separate letter
};

struct SymbolSpec {
    std::string label;
    SymbolKind kind = SymbolKind::Hermitian;
    int measurement = -1; // projectors only
    int outcome = -1;     // projectors only
    int order = 0;        // unitaries only
    int commutation_class = 0;
};

struct OperatorSymbol {
    int id = 0;
    std::string label;
    SymbolKind kind = SymbolKind::Hermitian;
    int measurement = -1;
    int outcome = -1;
    int order = 0;
    int commutation_class = 0;
    bool self_adjoint = true;
};

struct Letter {
    std::uint16_t id = 0;
    bool adjoint = false;
    auto operator<=>(const Letter&) const = default;
};

// A word in the algebra's letters. Ordering is degree-graded lexicographic.
class Monomial {
  public:
    Monomial() = default;
    explicit Monomial(std::vector<Letter> word) : word_(std::move(word)) {}

    static Monomial identity() { return {}; }

    const std::vector<Letter>& word() const { return word_; }
    std::size_t length() const { return word_.size(); }
    bool is_identity() const { return word_.empty(); }

    Monomial operator*(const Monomial& rhs) const;

    bool operator==(const Monomial&) const = default;
    std::strong_ordering operator<=>(const Monomial& rhs) const;

  private:
    std::vector<Letter> word_;
};

// Canonical result: nullopt is the distinguished zero.
using MaybeMonomial = std::optional<Monomial>;

enum class RewriteOrder { LeftToRight, RightToLeft };

struct AlgebraFlags {
    bool commutative = false;  // every symbol commutes with every other
    bool completeness = false; // drop the last projector of each measurement
};

template <typename Scalar> class Polynomial;

class Algebra : public std::enable_shared_from_this<Algebra> {
  public:
    static constexpr int kMaxPasses = 64;

    static std::shared_ptr<const Algebra> declare(const std::vector<SymbolSpec>& symbols, AlgebraFlags flags = {});

    // Bipartite (or multipartite) Bell scenario: party p has inputs[p] measurements with
    // outputs[p] outcomes each, labelled A{a}|{x}, B{b}|{y}, ...
    static std::shared_ptr<const Algebra> bell(const std::vector<int>& inputs, const std::vector<int>& outputs,
                                               bool completeness = true);

    // Generalized-observable basis: one unitary of order outputs[p] per input.
    static std::shared_ptr<const Algebra> bell_unitary(const std::vector<int>& inputs,
                                                       const std::vector<int>& outputs);

    const std::vector<OperatorSymbol>& symbols() const { return symbols_; }
    const OperatorSymbol& symbol(int id) const;
    std::optional<int> find(std::string_view label) const;
    bool commutative() const { return flags_.commutative; }
    const AlgebraFlags& flags() const { return flags_; }

    MaybeMonomial canonicalize(const Monomial& w, RewriteOrder order = RewriteOrder::LeftToRight) const;

    // Letters u† for a monomial u (before canonicalization).
    Monomial adjoint(const Monomial& w) const;

    // Canonical representative of {w, w†} and whether w is the adjoint side.
    std::pair<Monomial, bool> adjoint_class(const Monomial& canonical) const;

    // Tracial normal form: minimal canonical rotation (used for tr(u† v) moments).
    MaybeMonomial cyclic_canonical(const Monomial& w) const;

    std::string format(const Monomial& w) const;
    std::string format(const MaybeMonomial& w) const;
    MaybeMonomial parse_monomial(std::string_view text) const;
    Polynomial<cplx> parse_polynomial(std::string_view text) const;

    // Projector for a measurement outcome, expanding an eliminated outcome as 1 - Σ others.
    Polynomial<cplx> projector(int measurement, int outcome) const;
    int outcome_count(int measurement) const;
    std::vector<int> measurements_in_class(int commutation_class) const;
    int class_count() const;

    // Letters generating monomial sets: every symbol, plus adjoints of non-self-adjoint ones.
    std::vector<Letter> generators() const;

  private:
    Algebra() = default;
    bool letter_self_adjoint(const Letter& l) const { return symbols_[l.id].self_adjoint; }
    void reduce_class_word(std::vector<Letter>& w, RewriteOrder order, bool& zero) const;

    std::vector<OperatorSymbol> symbols_;
    AlgebraFlags flags_;
    std::map<std::string, int, std::less<>> by_label_;
    // measurement id -> (outcome -> symbol id); eliminated outcomes have no symbol
    std::map<int, std::map<int, int>> measurement_symbols_;
    std::map<int, int> measurement_outcomes_;
    std::map<std::string, std::pair<int, int>, std::less<>> eliminated_;
};

using AlgebraPtr = std::shared_ptr<const Algebra>;

// Scalar helpers shared by the templated polynomial.
template <typename T> T conj_of(const T& x) {
    if constexpr (std::is_same_v<T, cplx>) return std::conj(x);
    else return x;
}

template <typename T> double magnitude(const T& x) {
    if constexpr (std::is_same_v<T, cplx>) return std::abs(x);
    else if constexpr (std::is_arithmetic_v<T>) return std::abs(static_cast<double>(x));
    else return std::abs(static_cast<double>(x.numerator()) / static_cast<double>(x.denominator()));
}

// Polynomial over the algebra with coefficients in Scalar (double, complex or exact rational).
template <typename Scalar> class Polynomial {
  public:
    using Terms = std::map<Monomial, Scalar>;

    Polynomial() = default;
    explicit Polynomial(AlgebraPtr algebra) : algebra_(std::move(algebra)) {}

    static Polynomial constant(AlgebraPtr algebra, Scalar value) {
        Polynomial p(std::move(algebra));
        p.add_term(Monomial::identity(), value);
        return p;
    }
    static Polynomial monomial(AlgebraPtr algebra, const Monomial& w, Scalar value = Scalar(1)) {
        Polynomial p(std::move(algebra));
        p.add_term(w, value);
        return p;
    }

    const AlgebraPtr& algebra() const { return algebra_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    // Canonicalizes w; zero words and zero coefficients are dropped.
    void add_term(const Monomial& w, const Scalar& c) {
        if (c == Scalar(0)) return;
        auto canon = algebra_->canonicalize(w);
        if (!canon) return;
        auto [it, inserted] = terms_.try_emplace(*canon, c);
        if (!inserted) {
            it->second += c;
            if (it->second == Scalar(0)) terms_.erase(it);
        }
    }

    Scalar coefficient(const Monomial& w) const {
        auto it = terms_.find(w);
        return it == terms_.end() ? Scalar(0) : it->second;
    }

    std::size_t degree() const {
        std::size_t d = 0;
        for (const auto& [w, c] : terms_) d = std::max(d, w.length());
        return d;
    }

    Polynomial& operator+=(const Polynomial& rhs) {
        check_same(rhs);
        for (const auto& [w, c] : rhs.terms_) add_term(w, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& rhs) {
        check_same(rhs);
        for (const auto& [w, c] : rhs.terms_) add_term(w, -c);
        return *this;
    }
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        a.check_same(b);
        Polynomial out(a.algebra_);
        for (const auto& [wa, ca] : a.terms_)
            for (const auto& [wb, cb] : b.terms_) out.add_term(wa * wb, ca * cb);
        return out;
    }

    Polynomial scaled(const Scalar& s) const {
        Polynomial out(algebra_);
        for (const auto& [w, c] : terms_) out.add_term(w, c * s);
        return out;
    }

    Polynomial adjoint() const {
        Polynomial out(algebra_);
        for (const auto& [w, c] : terms_) out.add_term(algebra_->adjoint(w), conj_of(c));
        return out;
    }

    bool is_hermitian(double tol = 0.0) const { return max_abs_coefficient(*this - adjoint()) <= tol; }

    template <typename Other, typename Convert> Polynomial<Other> cast(Convert convert) const {
        Polynomial<Other> out(algebra_);
        for (const auto& [w, c] : terms_) out.add_term(w, convert(c));
        return out;
    }

    std::string to_string() const;

    friend double max_abs_coefficient(const Polynomial& p) {
        double m = 0;
        for (const auto& [w, c] : p.terms_) m = std::max(m, magnitude(c));
        return m;
    }

  private:
    void check_same(const Polynomial& other) const {
        if (algebra_ != other.algebra_) throw Error(ErrorCode::AlgebraMismatch, "polynomials over different algebras");
    }

    AlgebraPtr algebra_;
    Terms terms_;
};

using CPolynomial = Polynomial<cplx>;
using RPolynomial = Polynomial<double>;

std::string format_coefficient(double c);
std::string format_coefficient(const cplx& c);

template <typename Scalar> std::string Polynomial<Scalar>::to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [w, c] : terms_) {
        std::string coef;
        if constexpr (std::is_same_v<Scalar, cplx> || std::is_same_v<Scalar, double>) coef = format_coefficient(c);
        else coef = std::to_string(c.numerator()) + (c.denominator() == 1 ? "" : "/" + std::to_string(c.denominator()));
        if (!first) out += " + ";
        first = false;
        out += coef;
        if (!w.is_identity()) out += "*" + algebra_->format(w);
    }
    return out;
}

} // namespace qcrelax
