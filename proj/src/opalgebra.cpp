#include "qcrelax/opalgebra.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <set>

namespace qcrelax {

Monomial Monomial::operator*(const Monomial& rhs) const {
    std::vector<Letter> w = word_;
    w.insert(w.end(), rhs.word_.begin(), rhs.word_.end());
    return Monomial(std::move(w));
}

std::strong_ordering Monomial::operator<=>(const Monomial& rhs) const {
    if (auto c = word_.size() <=> rhs.word_.size(); c != 0) return c;
    return std::lexicographical_compare_three_way(word_.begin(), word_.end(), rhs.word_.begin(), rhs.word_.end());
}

std::shared_ptr<const Algebra> Algebra::declare(const std::vector<SymbolSpec>& specs, AlgebraFlags flags) {
    if (specs.empty()) throw Error(ErrorCode::InvalidArgument, "empty symbol list");
    std::shared_ptr<Algebra> alg(new Algebra());
    alg->flags_ = flags;

    std::set<std::string> labels;
    std::map<int, std::map<int, std::string>> groups;
    for (const auto& s : specs) {
        if (s.label.empty()) throw Error(ErrorCode::InvalidArgument, "empty symbol label");
        if (!labels.insert(s.label).second) throw Error(ErrorCode::InvalidArgument, "duplicate label '" + s.label + "'");
        if (s.kind == SymbolKind::Unitary && s.order < 2)
            throw Error(ErrorCode::InvalidArgument, "unitary '" + s.label + "' needs order >= 2");
        if (s.kind == SymbolKind::Projector) {
            if (s.measurement < 0 || s.outcome < 0)
                throw Error(ErrorCode::InvalidArgument, "projector '" + s.label + "' needs measurement and outcome");
            if (!groups[s.measurement].emplace(s.outcome, s.label).second)
                throw Error(ErrorCode::InvalidArgument, "repeated outcome in measurement of '" + s.label + "'");
        }
    }

    std::set<std::string> dropped;
    for (const auto& [meas, outcomes] : groups) {
        alg->measurement_outcomes_[meas] = static_cast<int>(outcomes.size());
        if (flags.completeness) {
            if (outcomes.size() < 2)
                throw Error(ErrorCode::InvalidArgument, "completeness needs >= 2 outcomes per measurement");
            const auto& last = *outcomes.rbegin();
            dropped.insert(last.second);
            alg->eliminated_[last.second] = {meas, last.first};
        }
    }

    for (const auto& s : specs) {
        if (dropped.count(s.label)) continue;
        if (alg->symbols_.size() >= 0xFFFF) throw Error(ErrorCode::CapExceeded, "too many symbols");
        OperatorSymbol sym;
        sym.id = static_cast<int>(alg->symbols_.size());
        sym.label = s.label;
        sym.kind = s.kind;
        sym.measurement = s.measurement;
        sym.outcome = s.outcome;
        sym.order = s.order;
        sym.commutation_class = flags.commutative ? 0 : s.commutation_class;
        sym.self_adjoint = s.kind == SymbolKind::Hermitian || s.kind == SymbolKind::Projector ||
                           s.kind == SymbolKind::State || (s.kind == SymbolKind::Unitary && s.order == 2);
        if (s.kind == SymbolKind::Projector) alg->measurement_symbols_[s.measurement][s.outcome] = sym.id;
        alg->by_label_[s.label] = sym.id;
        alg->symbols_.push_back(sym);
    }
    return alg;
}

static std::string party_letter(std::size_t p) { return std::string(1, static_cast<char>('A' + p)); }

std::shared_ptr<const Algebra> Algebra::bell(const std::vector<int>& inputs, const std::vector<int>& outputs,
                                             bool completeness) {
    if (inputs.empty() || inputs.size() != outputs.size() || inputs.size() > 26)
        throw Error(ErrorCode::SchemaViolation, "bell scenario needs matching inputs/outputs per party");
    std::vector<SymbolSpec> specs;
    int meas = 0;
    for (std::size_t p = 0; p < inputs.size(); ++p) {
        if (inputs[p] < 1 || outputs[p] < 2) throw Error(ErrorCode::SchemaViolation, "invalid bell dimensions");
        for (int x = 0; x < inputs[p]; ++x, ++meas)
            for (int a = 0; a < outputs[p]; ++a)
                specs.push_back({party_letter(p) + std::to_string(a) + "|" + std::to_string(x), SymbolKind::Projector,
                                 meas, a, 0, static_cast<int>(p)});
    }
    return declare(specs, {false, completeness});
}

std::shared_ptr<const Algebra> Algebra::bell_unitary(const std::vector<int>& inputs, const std::vector<int>& outputs) {
    if (inputs.empty() || inputs.size() != outputs.size() || inputs.size() > 26)
        throw Error(ErrorCode::SchemaViolation, "bell scenario needs matching inputs/outputs per party");
    std::vector<SymbolSpec> specs;
    for (std::size_t p = 0; p < inputs.size(); ++p)
        for (int x = 0; x < inputs[p]; ++x)
            specs.push_back({party_letter(p) + std::to_string(x), SymbolKind::Unitary, -1, -1, outputs[p],
                             static_cast<int>(p)});
    return declare(specs);
}

const OperatorSymbol& Algebra::symbol(int id) const {
    if (id < 0 || id >= static_cast<int>(symbols_.size()))
        throw Error(ErrorCode::UnknownSymbol, "symbol id " + std::to_string(id));
    return symbols_[id];
}

std::optional<int> Algebra::find(std::string_view label) const {
    auto it = by_label_.find(label);
    if (it == by_label_.end()) return std::nullopt;
    return it->second;
}

// One rewrite sweep over the word. Returns true when anything changed.
static bool sweep(const std::vector<OperatorSymbol>& syms, std::vector<Letter>& w, RewriteOrder order, bool& zero) {
    bool changed = false;
    auto idempotent = [&](const Letter& l) {
        auto k = syms[l.id].kind;
        return k == SymbolKind::Projector || k == SymbolKind::State;
    };
    auto orthogonal = [&](const Letter& a, const Letter& b) {
        const auto& sa = syms[a.id];
        const auto& sb = syms[b.id];
        return sa.kind == SymbolKind::Projector && sb.kind == SymbolKind::Projector &&
               sa.measurement == sb.measurement && sa.outcome != sb.outcome;
    };
    // Collapse the unitary run [lo, hi) to the shortest representative of its exponent.
    auto collapse = [&](std::size_t lo, std::size_t hi) {
        const auto& s = syms[w[lo].id];
        const int n = s.order;
        long e = 0;
        for (std::size_t k = lo; k < hi; ++k) e += w[k].adjoint ? -1 : 1;
        e = ((e % n) + n) % n;
        std::vector<Letter> rep;
        if (e <= n / 2) rep.assign(static_cast<std::size_t>(e), Letter{w[lo].id, false});
        else rep.assign(static_cast<std::size_t>(n - e), Letter{w[lo].id, !s.self_adjoint});
        if (rep.size() == hi - lo && std::equal(rep.begin(), rep.end(), w.begin() + lo)) return hi;
        w.erase(w.begin() + lo, w.begin() + hi);
        w.insert(w.begin() + lo, rep.begin(), rep.end());
        changed = true;
        return lo + rep.size();
    };

    if (order == RewriteOrder::LeftToRight) {
        std::size_t i = 0;
        while (i < w.size()) {
            const auto& s = syms[w[i].id];
            if (s.kind == SymbolKind::Unitary) {
                std::size_t j = i;
                while (j < w.size() && w[j].id == w[i].id) ++j;
                std::size_t end = collapse(i, j);
                if (changed && end != j) { i = i > 0 ? i - 1 : 0; continue; }
                i = end;
                continue;
            }
            if (i + 1 >= w.size()) break;
            if (w[i].id == w[i + 1].id && idempotent(w[i])) {
                w.erase(w.begin() + static_cast<long>(i) + 1);
                changed = true;
                continue;
            }
            if (orthogonal(w[i], w[i + 1])) { zero = true; return true; }
            ++i;
        }
    } else {
        long i = static_cast<long>(w.size()) - 1;
        while (i >= 0 && i < static_cast<long>(w.size())) {
            const auto& s = syms[w[i].id];
            if (s.kind == SymbolKind::Unitary) {
                long j = i;
                while (j >= 0 && w[j].id == w[i].id) --j;
                std::size_t lo = static_cast<std::size_t>(j + 1);
                std::size_t before = w.size();
                collapse(lo, static_cast<std::size_t>(i + 1));
                if (w.size() != before) { i = std::min<long>(static_cast<long>(lo) + 1, static_cast<long>(w.size()) - 1); continue; }
                i = j;
                continue;
            }
            if (i == 0) break;
            if (w[i].id == w[i - 1].id && idempotent(w[i])) {
                w.erase(w.begin() + i - 1);
                changed = true;
                --i;
                continue;
            }
            if (orthogonal(w[i - 1], w[i])) { zero = true; return true; }
            --i;
        }
    }
    return changed;
}

void Algebra::reduce_class_word(std::vector<Letter>& w, RewriteOrder order, bool& zero) const {
    for (int pass = 0; pass < kMaxPasses; ++pass) {
        if (!sweep(symbols_, w, order, zero) || zero) return;
    }
    throw Error(ErrorCode::NonTermination, "rewrite did not terminate within pass cap");
}

MaybeMonomial Algebra::canonicalize(const Monomial& m, RewriteOrder order) const {
    std::vector<Letter> w = m.word();
    for (auto& l : w) {
        if (l.id >= symbols_.size()) throw Error(ErrorCode::UnknownSymbol, "symbol id " + std::to_string(l.id));
        if (symbols_[l.id].self_adjoint) l.adjoint = false;
    }
    if (flags_.commutative) {
        std::sort(w.begin(), w.end());
    } else {
        std::stable_sort(w.begin(), w.end(), [&](const Letter& a, const Letter& b) {
            return symbols_[a.id].commutation_class < symbols_[b.id].commutation_class;
        });
    }
    bool zero = false;
    reduce_class_word(w, order, zero);
    if (zero) return std::nullopt;
    return Monomial(std::move(w));
}

Monomial Algebra::adjoint(const Monomial& m) const {
    std::vector<Letter> w(m.word().rbegin(), m.word().rend());
    for (auto& l : w) l.adjoint = symbol(l.id).self_adjoint ? false : !l.adjoint;
    return Monomial(std::move(w));
}

std::pair<Monomial, bool> Algebra::adjoint_class(const Monomial& canonical) const {
    auto adj = canonicalize(adjoint(canonical));
    if (!adj) throw Error(ErrorCode::InvalidArgument, "adjoint of a nonzero monomial vanished");
    if (*adj < canonical) return {*adj, true};
    return {canonical, false};
}

MaybeMonomial Algebra::cyclic_canonical(const Monomial& m) const {
    auto base = canonicalize(m);
    if (!base) return std::nullopt;
    const auto& w = base->word();
    if (w.size() <= 1) return base;
    MaybeMonomial best;
    for (std::size_t r = 0; r < w.size(); ++r) {
        std::vector<Letter> rot(w.begin() + r, w.end());
        rot.insert(rot.end(), w.begin(), w.begin() + r);
        auto c = canonicalize(Monomial(std::move(rot)));
        if (!c) return std::nullopt;
        if (!best || *c < *best) best = c;
    }
    return best;
}

std::string Algebra::format(const Monomial& w) const {
    if (w.is_identity()) return "1";
    std::string out;
    for (std::size_t k = 0; k < w.word().size(); ++k) {
        if (k) out += '*';
        out += symbol(w.word()[k].id).label;
        if (w.word()[k].adjoint) out += '\'';
    }
    return out;
}

std::string Algebra::format(const MaybeMonomial& w) const { return w ? format(*w) : "0"; }

static bool label_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '|' || c == '.'; }

MaybeMonomial Algebra::parse_monomial(std::string_view text) const {
    std::vector<Letter> w;
    std::size_t pos = 0;
    auto skip = [&] { while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos; };
    bool expect = true;
    skip();
    if (pos == text.size()) throw Error(ErrorCode::ParseError, "empty monomial");
    while (pos < text.size()) {
        skip();
        if (!expect) {
            if (text[pos] != '*') throw Error(ErrorCode::ParseError, "expected '*' at column " + std::to_string(pos + 1) + " in '" + std::string(text) + "'");
            ++pos;
            expect = true;
            continue;
        }
        std::size_t start = pos;
        while (pos < text.size() && label_char(text[pos])) ++pos;
        if (pos == start) throw Error(ErrorCode::ParseError, "expected identifier at column " + std::to_string(pos + 1) + " in '" + std::string(text) + "'");
        std::string_view label = text.substr(start, pos - start);
        bool adj = false;
        if (pos < text.size() && text[pos] == '\'') { adj = true; ++pos; }
        if (label != "1") {
            auto id = find(label);
            if (!id) {
                if (eliminated_.count(std::string(label)))
                    throw Error(ErrorCode::ParseError, "'" + std::string(label) + "' is eliminated by completeness; use a polynomial");
                throw Error(ErrorCode::UnknownSymbol, "unknown symbol '" + std::string(label) + "'");
            }
            w.push_back(Letter{static_cast<std::uint16_t>(*id), adj});
        }
        expect = false;
        skip();
    }
    if (expect) throw Error(ErrorCode::ParseError, "dangling '*' in '" + std::string(text) + "'");
    return canonicalize(Monomial(std::move(w)));
}

namespace {

class PolyParser {
  public:
    PolyParser(const Algebra& alg, AlgebraPtr ptr, std::string_view text) : alg_(alg), ptr_(std::move(ptr)), text_(text) {}

    CPolynomial parse() {
        auto p = expr();
        skip();
        if (pos_ != text_.size()) fail("unexpected character");
        return p;
    }

  private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorCode::ParseError, msg + " at column " + std::to_string(pos_ + 1) + " in '" + std::string(text_) + "'");
    }
    void skip() { while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_; }
    bool peek(char c) { skip(); return pos_ < text_.size() && text_[pos_] == c; }

    CPolynomial expr() {
        CPolynomial acc(ptr_);
        bool first = true;
        while (true) {
            skip();
            double sign = 1;
            if (peek('+') || peek('-')) {
                sign = text_[pos_] == '-' ? -1 : 1;
                ++pos_;
            } else if (!first) {
                break;
            }
            acc += term().scaled(cplx(sign, 0));
            first = false;
        }
        return acc;
    }

    CPolynomial term() {
        auto p = power();
        while (true) {
            if (peek('*')) { ++pos_; p = p * power(); }
            else if (peek('/')) {
                ++pos_;
                auto d = power();
                if (d.degree() != 0 || d.is_zero()) fail("division by a non-constant");
                p = p.scaled(1.0 / d.coefficient(Monomial::identity()));
            } else break;
        }
        return p;
    }

    CPolynomial power() {
        auto base = factor();
        if (peek('^')) {
            ++pos_;
            skip();
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (start == pos_) fail("expected exponent");
            int e = std::stoi(std::string(text_.substr(start, pos_ - start)));
            auto out = CPolynomial::constant(ptr_, 1.0);
            for (int k = 0; k < e; ++k) out = out * base;
            return out;
        }
        return base;
    }

    CPolynomial factor() {
        skip();
        if (pos_ >= text_.size()) fail("unexpected end");
        char c = text_[pos_];
        if (c == '-' || c == '+') {
            ++pos_;
            auto f = factor();
            return c == '-' ? f.scaled(cplx(-1, 0)) : f;
        }
        if (c == '(') {
            ++pos_;
            auto inner = expr();
            if (peek(',')) {
                ++pos_;
                auto im = expr();
                if (inner.degree() != 0 || im.degree() != 0) fail("complex literal must be numeric");
                if (!peek(')')) fail("expected ')'");
                ++pos_;
                cplx v = inner.coefficient(Monomial::identity()) + cplx(0, 1) * im.coefficient(Monomial::identity());
                return CPolynomial::constant(ptr_, v);
            }
            if (!peek(')')) fail("expected ')'");
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                                           text_[pos_] == 'e' || text_[pos_] == 'E' ||
                                           ((text_[pos_] == '-' || text_[pos_] == '+') && pos_ > start &&
                                            (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
                ++pos_;
            // A label such as "1x" is not a number; labels never start with a digit.
            double v = 0;
            auto sv = text_.substr(start, pos_ - start);
            auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
            if (res.ec != std::errc() || res.ptr != sv.data() + sv.size()) fail("bad number");
            return CPolynomial::constant(ptr_, v);
        }
        if (label_char(c)) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && label_char(text_[pos_])) ++pos_;
            std::string label(text_.substr(start, pos_ - start));
            bool adj = false;
            if (pos_ < text_.size() && text_[pos_] == '\'') { adj = true; ++pos_; }
            if (auto id = alg_.find(label)) {
                return CPolynomial::monomial(ptr_, Monomial({Letter{static_cast<std::uint16_t>(*id), adj}}));
            }
            if (resolve)
                if (auto expanded = resolve(label)) return *expanded;
            throw Error(ErrorCode::UnknownSymbol, "unknown symbol '" + label + "'");
        }
        fail("unexpected character");
    }

    const Algebra& alg_;
    AlgebraPtr ptr_;
    std::string_view text_;
    std::size_t pos_ = 0;

  public:
    std::function<std::optional<CPolynomial>(const std::string&)> resolve;
};

} // namespace

CPolynomial Algebra::parse_polynomial(std::string_view text) const {
    auto self = shared_from_this();
    PolyParser parser(*this, self, text);
    parser.resolve = [this](const std::string& label) -> std::optional<CPolynomial> {
        auto it = eliminated_.find(label);
        if (it == eliminated_.end()) return std::nullopt;
        return projector(it->second.first, it->second.second);
    };
    return parser.parse();
}

CPolynomial Algebra::projector(int measurement, int outcome) const {
    auto self = shared_from_this();
    auto mit = measurement_outcomes_.find(measurement);
    if (mit == measurement_outcomes_.end() || outcome < 0 || outcome >= mit->second)
        throw Error(ErrorCode::UnknownSymbol, "no projector for measurement " + std::to_string(measurement) +
                                                  " outcome " + std::to_string(outcome));
    const auto& present = measurement_symbols_.at(measurement);
    if (auto it = present.find(outcome); it != present.end())
        return CPolynomial::monomial(self, Monomial({Letter{static_cast<std::uint16_t>(it->second), false}}));
    auto p = CPolynomial::constant(self, 1.0);
    for (const auto& [o, id] : present)
        p -= CPolynomial::monomial(self, Monomial({Letter{static_cast<std::uint16_t>(id), false}}));
    return p;
}

int Algebra::outcome_count(int measurement) const {
    auto it = measurement_outcomes_.find(measurement);
    if (it == measurement_outcomes_.end()) throw Error(ErrorCode::UnknownSymbol, "unknown measurement " + std::to_string(measurement));
    return it->second;
}

std::vector<int> Algebra::measurements_in_class(int commutation_class) const {
    std::set<int> out;
    for (const auto& s : symbols_)
        if (s.kind == SymbolKind::Projector && s.commutation_class == commutation_class) out.insert(s.measurement);
    return {out.begin(), out.end()};
}

int Algebra::class_count() const {
    int m = 0;
    for (const auto& s : symbols_) m = std::max(m, s.commutation_class + 1);
    return m;
}

std::vector<Letter> Algebra::generators() const {
    std::vector<Letter> out;
    for (const auto& s : symbols_) {
        out.push_back(Letter{static_cast<std::uint16_t>(s.id), false});
        if (!s.self_adjoint) out.push_back(Letter{static_cast<std::uint16_t>(s.id), true});
    }
    return out;
}

std::string format_coefficient(double c) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", c);
    return buf;
}

std::string format_coefficient(const cplx& c) {
    if (c.imag() == 0) return format_coefficient(c.real());
    return "(" + format_coefficient(c.real()) + "," + format_coefficient(c.imag()) + ")";
}

} // namespace qcrelax
