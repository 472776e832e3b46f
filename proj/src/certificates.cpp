#include "qcrelax/certificates.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace qcrelax {

namespace {

// Weighted r† g r terms from the eigendecomposition of a Hermitian multiplier.
template <typename Push>
void factor_block(const CMatrix& W, const std::vector<Monomial>& index, const AlgebraPtr& A, double clip, Push push) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es((W + W.adjoint()) / 2.0);
    const auto& ev = es.eigenvalues();
    if (ev.size() && ev(0) < -clip)
        throw Error(ErrorCode::InvalidArgument, "dual block indefinite beyond tolerance (" + std::to_string(ev(0)) + ")");
    const double top = ev.size() ? std::max(ev(ev.size() - 1), 0.0) : 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) <= 1e-14 * std::max(top, 1.0)) continue;
        CPolynomial r(A);
        for (std::size_t a = 0; a < index.size(); ++a) {
            cplx c = es.eigenvectors()(static_cast<Eigen::Index>(a), i);
            if (std::abs(c) > 1e-15) r.add_term(index[a], c);
        }
        if (!r.is_zero()) push(ev(i), std::move(r));
    }
}

} // namespace

SOSCertificate extract_sos(const MomentRelaxation& M, const RelaxationResult& res, double clip) {
    const auto& P = M.problem();
    SOSCertificate c;
    c.algebra = P.algebra;
    c.sense = P.sense;
    c.lambda = res.value;
    if (res.lowered.block_of.empty()) return c; // constant objective, nothing solved
    for (const auto& sc : P.scalar_constraints)
        if (sc.equality) throw Error(ErrorCode::InvalidArgument, "certificates do not cover scalar equality constraints");
    for (const auto& cls : M.classes())
        if (cls.pinned && !cls.rep.is_identity())
            throw Error(ErrorCode::InvalidArgument, "certificates do not cover pinned moments");
    if (clip < 0) clip = std::max(10 * res.solution.gap, 1e-9);
    const auto& L = res.lowered;
    for (std::size_t b = 0; b < M.blocks().size(); ++b) {
        const auto& blk = M.blocks()[b];
        const int constraint = static_cast<int>(b) - 1;
        if (blk.scalar) {
            double nu = L.model.inequality_dual(res.solution, L.row_of[b]);
            if (nu < -clip) throw Error(ErrorCode::InvalidArgument, "negative multiplier beyond tolerance");
            if (nu > 0) c.multipliers.push_back({*blk.g, nu});
            continue;
        }
        CMatrix W = L.model.block_dual(res.solution, L.block_of[b]);
        factor_block(W, blk.index, P.algebra, clip, [&](double w, CPolynomial r) {
            if (!blk.g) c.squares.push_back({w, std::move(r)});
            else c.localizing.push_back({constraint, w, std::move(r)});
        });
    }
    for (std::size_t k = 0; k < P.scalar_constraints.size(); ++k) {
        double nu = L.model.inequality_dual(res.solution, L.scalar_row[k]);
        if (nu < -clip) throw Error(ErrorCode::InvalidArgument, "negative multiplier beyond tolerance");
        if (nu > 0) c.multipliers.push_back({P.scalar_constraints[k].h, nu});
    }
    return c;
}

CPolynomial certificate_residual(const SOSCertificate& c, const PolyProblem& problem) {
    if (c.algebra != problem.algebra) throw Error(ErrorCode::AlgebraMismatch, "certificate over a different algebra");
    const auto& A = problem.algebra;
    CPolynomial R = CPolynomial::constant(A, c.lambda) - problem.objective;
    if (c.sense == Sense::Minimize) R = R.scaled(-1.0);
    for (const auto& s : c.squares) R -= (s.r.adjoint() * s.r).scaled(s.weight);
    for (const auto& l : c.localizing) {
        if (l.constraint < 0 || l.constraint >= static_cast<int>(problem.operator_constraints.size()))
            throw Error(ErrorCode::InvalidArgument, "localizing term refers to a missing constraint");
        R -= (l.r.adjoint() * problem.operator_constraints[l.constraint].g * l.r).scaled(l.weight);
    }
    for (const auto& m : c.multipliers) R -= m.h.scaled(m.nu);
    return R;
}

double verify_certificate(const SOSCertificate& c, const PolyProblem& problem) {
    return max_abs_coefficient(certificate_residual(c, problem));
}

Rational round_rational(double x, long long max_den) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "cannot round a non-finite value");
    // Continued-fraction convergents, keeping the last one within the denominator bound.
    const bool neg = x < 0;
    double v = std::abs(x);
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int it = 0; it < 64; ++it) {
        const double a = std::floor(v);
        if (a > 1e15) break;
        const long long ai = static_cast<long long>(a);
        const long long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        const double frac = v - a;
        if (frac < 1e-15) break;
        v = 1.0 / frac;
    }
    if (q1 == 0) return Rational(0);
    return Rational(neg ? -p1 : p1, q1);
}

namespace {

QPolynomial to_rational(const CPolynomial& p, long long den) {
    QPolynomial out(p.algebra());
    for (const auto& [w, c] : p.terms()) {
        if (std::abs(c.imag()) > 1e-12) throw Error(ErrorCode::InvalidArgument, "rational path needs real coefficients");
        out.add_term(w, round_rational(c.real(), den));
    }
    return out;
}

} // namespace

double verify_certificate_rational(const SOSCertificate& c, const PolyProblem& problem, long long den) {
    const auto& A = problem.algebra;
    QPolynomial R = QPolynomial::constant(A, round_rational(c.lambda, den)) - to_rational(problem.objective, den);
    if (c.sense == Sense::Minimize) R = R.scaled(Rational(-1));
    for (const auto& s : c.squares) {
        auto r = to_rational(s.r, den);
        R -= (r.adjoint() * r).scaled(round_rational(s.weight, den));
    }
    for (const auto& l : c.localizing) {
        auto r = to_rational(l.r, den);
        R -= (r.adjoint() * to_rational(problem.operator_constraints.at(l.constraint).g, den) * r)
                 .scaled(round_rational(l.weight, den));
    }
    for (const auto& m : c.multipliers) R -= to_rational(m.h, den).scaled(round_rational(m.nu, den));
    return max_abs_coefficient(R);
}

std::string serialize(const SOSCertificate& c) {
    std::ostringstream out;
    out << "lambda " << format_coefficient(c.lambda) << "\n";
    out << "sense " << (c.sense == Sense::Maximize ? "max" : "min") << "\n";
    for (const auto& s : c.squares) out << "square " << format_coefficient(s.weight) << " : " << s.r.to_string() << "\n";
    for (const auto& l : c.localizing)
        out << "localizing " << l.constraint << " " << format_coefficient(l.weight) << " : " << l.r.to_string() << "\n";
    for (const auto& m : c.multipliers) out << "multiplier " << format_coefficient(m.nu) << " : " << m.h.to_string() << "\n";
    return out.str();
}

SOSCertificate parse_certificate(const std::string& text, const PolyProblem& problem) {
    SOSCertificate c;
    c.algebra = problem.algebra;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        auto fail = [&](const std::string& msg) {
            throw Error(ErrorCode::ParseError, "certificate line " + std::to_string(lineno) + ": " + msg);
        };
        auto poly = [&]() {
            auto pos = line.find(':');
            if (pos == std::string::npos) fail("missing ':'");
            return problem.algebra->parse_polynomial(line.substr(pos + 1));
        };
        if (kind == "lambda") {
            if (!(ls >> c.lambda)) fail("bad lambda");
        } else if (kind == "sense") {
            std::string s;
            ls >> s;
            if (s == "max") c.sense = Sense::Maximize;
            else if (s == "min") c.sense = Sense::Minimize;
            else fail("bad sense");
        } else if (kind == "square") {
            double w;
            if (!(ls >> w)) fail("bad weight");
            c.squares.push_back({w, poly()});
        } else if (kind == "localizing") {
            int j;
            double w;
            if (!(ls >> j >> w)) fail("bad localizing header");
            c.localizing.push_back({j, w, poly()});
        } else if (kind == "multiplier") {
            double nu;
            if (!(ls >> nu)) fail("bad multiplier");
            c.multipliers.push_back({poly(), nu});
        } else {
            fail("unknown record '" + kind + "'");
        }
    }
    return c;
}

} // namespace qcrelax
