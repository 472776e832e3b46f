#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "qcrelax/linalg.hpp"
#include "qcrelax/sdp.hpp"

namespace qcrelax {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void emit(std::string& out, int matno, const SparseBlockMatrix& m) {
    SparseBlockMatrix sorted = m;
    sorted.normalize();
    for (const auto& e : sorted.entries())
        out += std::to_string(matno) + " " + std::to_string(e.block + 1) + " " + std::to_string(e.row + 1) + " " +
               std::to_string(e.col + 1) + " " + num(e.value) + "\n";
}

} // namespace

// Minimization problems are exported as the equivalent maximization of −C.
std::string write_sdpa_string(const StandardFormSDP& P) {
    P.validate();
    std::string out;
    out += std::to_string(P.num_constraints()) + "\n";
    out += std::to_string(P.block_sizes.size()) + "\n";
    for (std::size_t k = 0; k < P.block_sizes.size(); ++k)
        out += (k ? " " : "") + std::to_string(P.block_sizes[k]);
    out += "\n";
    for (int i = 0; i < P.num_constraints(); ++i) out += (i ? " " : "") + num(P.b(i));
    out += "\n";
    emit(out, 0, P.sense == Sense::Maximize ? P.C : P.C.scaled(-1));
    for (int i = 0; i < P.num_constraints(); ++i) emit(out, i + 1, P.A[i]);
    return out;
}

void write_sdpa(const StandardFormSDP& P, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
    f << write_sdpa_string(P);
    if (!f) throw Error(ErrorCode::InvalidArgument, "write failed for '" + path + "'");
}

namespace {

struct Token {
    std::string text;
    int line, col;
};

class Lexer {
  public:
    explicit Lexer(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::size_t first = line.find_first_not_of(" \t");
            if (first == std::string::npos || line[first] == '"' || line[first] == '*') continue;
            lines_.push_back({lineno, line});
        }
    }

    // Tokens of the next logical line; header separators ,{}() count as whitespace.
    std::vector<Token> next_line(bool header) {
        if (pos_ >= lines_.size()) return {};
        const auto& [lineno, line] = lines_[pos_++];
        std::vector<Token> out;
        std::size_t i = 0;
        auto sep = [&](char c) {
            return std::isspace(static_cast<unsigned char>(c)) || (header && (c == ',' || c == '{' || c == '}' || c == '(' || c == ')'));
        };
        while (i < line.size()) {
            while (i < line.size() && sep(line[i])) ++i;
            if (i >= line.size()) break;
            std::size_t start = i;
            while (i < line.size() && !sep(line[i])) ++i;
            out.push_back({line.substr(start, i - start), lineno, static_cast<int>(start + 1)});
        }
        return out;
    }

    bool done() const { return pos_ >= lines_.size(); }

  private:
    std::vector<std::pair<int, std::string>> lines_;
    std::size_t pos_ = 0;
};

[[noreturn]] void parse_fail(const Token& t, const std::string& msg) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(t.line) + ", column " + std::to_string(t.col) + ": " + msg +
                                           " (got '" + t.text + "')");
}

long to_int(const Token& t) {
    try {
        std::size_t used = 0;
        long v = std::stol(t.text, &used);
        if (used != t.text.size()) parse_fail(t, "expected integer");
        return v;
    } catch (const std::logic_error&) {
        parse_fail(t, "expected integer");
    }
}

double to_double(const Token& t) {
    try {
        std::size_t used = 0;
        double v = std::stod(t.text, &used);
        if (used != t.text.size()) parse_fail(t, "expected number");
        return v;
    } catch (const std::logic_error&) {
        parse_fail(t, "expected number");
    }
}

} // namespace

StandardFormSDP read_sdpa_string(const std::string& text) {
    Lexer lex(text);
    auto need = [&](bool header, const char* what) {
        auto t = lex.next_line(header);
        if (t.empty()) throw Error(ErrorCode::ParseError, std::string("unexpected end of file, expected ") + what);
        return t;
    };
    StandardFormSDP P;
    auto l1 = need(true, "constraint count");
    long m = to_int(l1[0]);
    if (m < 0) parse_fail(l1[0], "negative constraint count");
    auto l2 = need(true, "block count");
    long nb = to_int(l2[0]);
    if (nb <= 0) parse_fail(l2[0], "block count must be positive");
    std::vector<Token> sizes;
    while (static_cast<long>(sizes.size()) < nb) {
        auto t = need(true, "block sizes");
        sizes.insert(sizes.end(), t.begin(), t.end());
    }
    for (long k = 0; k < nb; ++k) {
        long s = to_int(sizes[k]);
        if (s == 0) parse_fail(sizes[k], "zero block size");
        P.block_sizes.push_back(static_cast<int>(s));
    }
    std::vector<Token> bt;
    while (static_cast<long>(bt.size()) < m) {
        auto t = need(true, "objective vector");
        bt.insert(bt.end(), t.begin(), t.end());
    }
    P.b.resize(m);
    for (long i = 0; i < m; ++i) P.b(i) = to_double(bt[i]);
    P.A.resize(m);
    while (!lex.done()) {
        auto t = lex.next_line(false);
        if (t.empty()) continue;
        if (t.size() != 5) parse_fail(t[0], "expected 'matno blkno i j value'");
        long mat = to_int(t[0]), blk = to_int(t[1]), i = to_int(t[2]), j = to_int(t[3]);
        double v = to_double(t[4]);
        if (mat < 0 || mat > m) parse_fail(t[0], "matrix number out of range");
        if (blk < 1 || blk > nb) parse_fail(t[1], "block number out of range");
        const int size = std::abs(P.block_sizes[blk - 1]);
        if (i < 1 || i > size) parse_fail(t[2], "row out of range");
        if (j < 1 || j > size) parse_fail(t[3], "column out of range");
        if (P.block_sizes[blk - 1] < 0 && i != j) parse_fail(t[2], "off-diagonal entry in diagonal block");
        auto& target = mat == 0 ? P.C : P.A[mat - 1];
        target.add(static_cast<int>(blk - 1), static_cast<int>(i - 1), static_cast<int>(j - 1), v);
    }
    P.C.normalize();
    for (auto& a : P.A) a.normalize();
    P.validate();
    return P;
}

StandardFormSDP read_sdpa(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return read_sdpa_string(ss.str());
}

namespace {

double block_min_eig(const BlockPoint& X, const std::vector<int>& sizes) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < X.size(); ++k) {
        if (sizes[k] < 0) m = std::min(m, X[k].col(0).minCoeff());
        else m = std::min(m, min_eigenvalue(X[k]));
    }
    return m;
}

double trace_of(const SparseBlockMatrix& a) {
    double t = 0;
    for (const auto& e : a.entries())
        if (e.row == e.col) t += e.value;
    return t;
}

} // namespace

DualityReport check_duality(const StandardFormSDP& P, const Solution& S, bool probe_strict) {
    DualityReport r;
    const double sign = P.sense == Sense::Maximize ? 1.0 : -1.0;
    double pobj = 0;
    for (const auto& e : P.C.entries()) {
        const auto& X = S.X[e.block];
        pobj += P.block_sizes[e.block] < 0 ? e.value * X(e.row, 0)
                                            : e.value * (e.row == e.col ? X(e.row, e.row) : 2 * X(e.row, e.col));
    }
    const double dobj = P.b.dot(S.y);
    r.weak_duality_slack = sign * (dobj - pobj);

    Vector res(P.num_constraints());
    for (int i = 0; i < P.num_constraints(); ++i) res(i) = inner(P.A[i], S.X, P.block_sizes) - P.b(i);
    r.primal_residual = res.norm() / (1 + P.b.norm());
    double rd = 0, cn = 0;
    for (std::size_t k = 0; k < P.block_sizes.size(); ++k) {
        Matrix R = dense_block(P.C, static_cast<int>(k), P.block_sizes[k]);
        cn += R.squaredNorm();
        // Z = sign·(Σ y A − C)
        R = -R;
        for (int i = 0; i < P.num_constraints(); ++i)
            if (S.y(i) != 0) R += S.y(i) * dense_block(P.A[i], static_cast<int>(k), P.block_sizes[k]);
        rd += (sign * R - S.Z[k]).squaredNorm();
    }
    r.dual_residual = std::sqrt(rd) / (1 + std::sqrt(cn));
    r.min_eig_X = block_min_eig(S.X, P.block_sizes);
    r.min_eig_Z = block_min_eig(S.Z, P.block_sizes);

    if (!probe_strict) return r;
    const int nb = static_cast<int>(P.block_sizes.size());
    const int m = P.num_constraints();
    SolverParams probe_params;
    probe_params.tol = 1e-7;
    probe_params.max_iter = 120;

    // Primal probe: X = X' + (t − 1)·I with X' ⪰ 0 and 0 ≤ t ≤ 2; maximize t.
    {
        StandardFormSDP Q;
        Q.block_sizes = P.block_sizes;
        Q.block_sizes.push_back(-2);
        Q.A = P.A;
        Q.b = Vector(m + 1);
        for (int i = 0; i < m; ++i) {
            const double tr = trace_of(P.A[i]);
            Q.A[i].add(nb, 0, 0, tr);
            Q.b(i) = P.b(i) + tr;
        }
        SparseBlockMatrix box;
        box.add(nb, 0, 0, 1);
        box.add(nb, 1, 1, 1);
        Q.A.push_back(box);
        Q.b(m) = 2;
        Q.C.add(nb, 0, 0, 1);
        Solution s = solve(Q, probe_params);
        r.primal_interior_margin = s.status == SolveStatus::Optimal ? s.primal_value - 1 : -1;
        r.primal_strictly_feasible = s.status == SolveStatus::Optimal && r.primal_interior_margin > 1e-6;
    }
    // Dual probe: Σ y A − C − s·I ⪰ 0 with s ≤ 1; maximize s.
    {
        StandardFormSDP Q;
        Q.block_sizes = P.block_sizes;
        Q.block_sizes.push_back(-1);
        Q.A = P.A;
        // For minimization the slack is C − Σ y A, i.e. the same family with −C and −y.
        SparseBlockMatrix minus_id;
        for (int k = 0; k < nb; ++k)
            for (int j = 0; j < std::abs(P.block_sizes[k]); ++j) minus_id.add(k, j, j, -1);
        minus_id.add(nb, 0, 0, -1);
        Q.A.push_back(minus_id);
        Q.C = sign < 0 ? P.C.scaled(-1) : P.C;
        Q.C.add(nb, 0, 0, -1);
        Q.b = Vector::Zero(m + 1);
        Q.b(m) = -1;
        Solution s = solve(Q, probe_params);
        const double smax = -s.dual_value;
        r.dual_interior_margin = s.status == SolveStatus::Optimal ? smax : -1;
        r.dual_strictly_feasible = s.status == SolveStatus::Optimal && smax > 1e-6;
    }
    return r;
}

} // namespace qcrelax
