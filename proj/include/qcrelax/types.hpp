#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qcrelax {

template <typename T> using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T> using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using cplx = std::complex<double>;
using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using CMatrix = MatrixX<cplx>;
using CVector = VectorX<cplx>;

// Error categories surfaced to callers and through the CLI.
enum class ErrorCode {
    InvalidArgument,
    SchemaViolation,
    UnknownSymbol,
    AlgebraMismatch,
    DegreeTooHigh,
    NonTermination,
    CapExceeded,
    ParseError,
    SolverFailure,
    NotInvariant,
    Infeasible,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::SchemaViolation: return "schema-violation";
    case ErrorCode::UnknownSymbol: return "unknown-symbol";
    case ErrorCode::AlgebraMismatch: return "algebra-mismatch";
    case ErrorCode::DegreeTooHigh: return "degree-too-high";
    case ErrorCode::NonTermination: return "non-termination";
    case ErrorCode::CapExceeded: return "cap-exceeded";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::SolverFailure: return "solver-failure";
    case ErrorCode::NotInvariant: return "not-invariant";
    case ErrorCode::Infeasible: return "infeasible";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

} // namespace qcrelax
