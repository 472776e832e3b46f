#pragma once

#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "qcrelax/relaxation.hpp"

namespace qcrelax {

using Rational = boost::rational<long long>;
using QPolynomial = Polynomial<Rational>;

// λ − f = Σ w r†r + Σ_j Σ w r† g_j r + Σ ν h   (for maximization; f − λ for minimization)
struct SOSCertificate {
    struct Square {
        double weight;
        CPolynomial r;
    };
    struct Localizing {
        int constraint; // index into the problem's operator constraints
        double weight;
        CPolynomial r;
    };
    struct Multiplier {
        CPolynomial h;
        double nu;
    };

    AlgebraPtr algebra;
    Sense sense = Sense::Maximize;
    double lambda = 0;
    std::vector<Square> squares;
    std::vector<Localizing> localizing;
    std::vector<Multiplier> multipliers;
};

// Factor the dual blocks of a solved relaxation. clip < 0 uses 10× the solver gap.
SOSCertificate extract_sos(const MomentRelaxation& M, const RelaxationResult& r, double clip = -1);

CPolynomial certificate_residual(const SOSCertificate& c, const PolyProblem& problem);
double verify_certificate(const SOSCertificate& c, const PolyProblem& problem);

Rational round_rational(double x, long long max_denominator = 10000);
// Rounds every coefficient to a small rational and expands exactly; returns the max residual coefficient.
double verify_certificate_rational(const SOSCertificate& c, const PolyProblem& problem, long long max_denominator = 10000);

std::string serialize(const SOSCertificate& c);
SOSCertificate parse_certificate(const std::string& text, const PolyProblem& problem);

} // namespace qcrelax
