#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcrelax/certificates.hpp"
#include "qcrelax/dimension.hpp"
#include "qcrelax/relaxation.hpp"
#include "qcrelax/scenarios.hpp"
#include "qcrelax/symmetry.hpp"

using namespace qcrelax;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kReportSchema = "qcrelax-report/1";
constexpr double kVerdictTol = 1e-7;

struct Flags {
    std::string path;
    std::string level;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<std::uint64_t> seed;
    std::optional<int> restarts;
    std::string export_path;
    std::string certificate_path;
    std::string symmetry;
    std::string json_report;
};

struct Outcome {
    json report;
    int exit_code = 0;
};

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::SchemaViolation, msg); }

// ---- JSON accessors that name the offending key ----

void allow_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) schema(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) schema("unknown key '" + k + "' in " + where);
}

const json& need(const json& j, const std::string& key) {
    if (!j.contains(key)) schema("missing key '" + key + "'");
    return j.at(key);
}

double num(const json& v, const std::string& key) {
    if (!v.is_number()) schema("key '" + key + "' must be a number");
    return v.get<double>();
}

int integer(const json& v, const std::string& key) {
    if (!v.is_number_integer()) schema("key '" + key + "' must be an integer");
    return v.get<int>();
}

std::string str(const json& v, const std::string& key) {
    if (!v.is_string()) schema("key '" + key + "' must be a string");
    return v.get<std::string>();
}

int int_or(const json& j, const std::string& key, int def) { return j.contains(key) ? integer(j.at(key), key) : def; }
bool bool_or(const json& j, const std::string& key, bool def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_boolean()) schema("key '" + key + "' must be a boolean");
    return j.at(key).get<bool>();
}

std::vector<int> int_list(const json& v, const std::string& key) {
    if (!v.is_array()) schema("key '" + key + "' must be an array of integers");
    std::vector<int> out;
    for (const auto& e : v) out.push_back(integer(e, key));
    return out;
}

// "name:arg" preset strings
std::pair<std::string, std::string> split_preset(const std::string& s) {
    auto pos = s.find(':');
    if (pos == std::string::npos) return {s, ""};
    return {s.substr(0, pos), s.substr(pos + 1)};
}

double preset_number(const std::string& arg, const std::string& preset) {
    try {
        std::size_t used = 0;
        double v = std::stod(arg, &used);
        if (used == arg.size()) return v;
    } catch (const std::exception&) {
    }
    schema("preset '" + preset + "' needs a numeric argument");
}

int preset_int(const std::string& arg, const std::string& preset) {
    const double v = preset_number(arg, preset);
    if (v != std::floor(v)) schema("preset '" + preset + "' needs an integer argument");
    return static_cast<int>(v);
}

CMatrix complex_matrix(const json& v, const std::string& key) {
    if (v.is_object()) {
        allow_keys(v, {"re", "im"}, "matrix '" + key + "'");
        CMatrix re = complex_matrix(need(v, "re"), key);
        CMatrix out = re;
        if (v.contains("im")) {
            CMatrix im = complex_matrix(v.at("im"), key);
            if (im.rows() != re.rows() || im.cols() != re.cols()) schema("matrix '" + key + "' has mismatched re/im parts");
            out = re + cplx(0, 1) * im;
        }
        return out;
    }
    if (!v.is_array() || v.empty() || !v[0].is_array()) schema("key '" + key + "' must be a matrix (array of rows)");
    const auto rows = static_cast<Eigen::Index>(v.size()), cols = static_cast<Eigen::Index>(v[0].size());
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) schema("matrix '" + key + "' is ragged");
        for (Eigen::Index j = 0; j < cols; ++j) {
            const auto& e = row[static_cast<std::size_t>(j)];
            if (e.is_array() && e.size() == 2) m(i, j) = cplx(num(e[0], key), num(e[1], key));
            else m(i, j) = num(e, key);
        }
    }
    return m;
}

// ---- presets and payloads ----

DensityMatrix state_of(const json& v) {
    if (v.is_string()) {
        auto [name, arg] = split_preset(v.get<std::string>());
        if (name == "werner") return werner_state(preset_number(arg, name));
        if (name == "singlet") return werner_state(1.0);
        if (name == "phi-plus") return phi_plus(arg.empty() ? 2 : preset_int(arg, name));
        schema("unknown state preset '" + name + "'");
    }
    allow_keys(v, {"dims", "rho"}, "state");
    DensityMatrix rho{int_list(need(v, "dims"), "dims"), complex_matrix(need(v, "rho"), "rho")};
    rho.validate();
    return rho;
}

Graph graph_of(const json& v) {
    if (v.is_string()) {
        auto [name, arg] = split_preset(v.get<std::string>());
        const int n = preset_int(arg, name);
        if (name == "cycle") return Graph::cycle(n);
        if (name == "complete") return Graph::complete(n);
        if (name == "empty") return Graph::empty(n);
        schema("unknown graph preset '" + name + "'");
    }
    allow_keys(v, {"n", "edges"}, "graph");
    Graph g;
    g.n = integer(need(v, "n"), "n");
    const auto& edges = need(v, "edges");
    if (!edges.is_array()) schema("key 'edges' must be an array of pairs");
    for (const auto& e : edges) {
        auto p = int_list(e, "edges");
        if (p.size() != 2) schema("key 'edges' must hold pairs");
        g.edges.emplace_back(p[0], p[1]);
    }
    g.validate();
    return g;
}

BellFunctional bell_functional_of(const json& v) {
    if (v.is_string()) {
        const auto name = v.get<std::string>();
        if (name == "chsh") return chsh_functional();
        if (name == "i3322") return i3322_functional();
        schema("unknown Bell functional preset '" + name + "'");
    }
    allow_keys(v, {"scenario", "terms"}, "functional");
    auto s = int_list(need(v, "scenario"), "scenario");
    if (s.size() != 4) schema("key 'scenario' must be [X, Y, N, M]");
    BellFunctional f(BellScenario{s[0], s[1], s[2], s[3]});
    f.validate();
    for (const auto& t : need(v, "terms")) {
        if (!t.is_array() || t.size() != 5) schema("key 'terms' entries must be [a, b, x, y, c]");
        const int a = integer(t[0], "terms"), b = integer(t[1], "terms"), x = integer(t[2], "terms"), y = integer(t[3], "terms");
        if (a < 0 || a >= s[2] || b < 0 || b >= s[3] || x < 0 || x >= s[0] || y < 0 || y >= s[1])
            schema("key 'terms' has an index outside the scenario");
        f(a, b, x, y) += num(t[4], "terms");
    }
    return f;
}

ProbabilityTable bell_table_of(const json& v) {
    if (v.is_string()) {
        const auto name = v.get<std::string>();
        if (name == "pr-box") return pr_box();
        if (name == "tsirelson") return chsh_optimal_table();
        if (name == "uniform") {
            ProbabilityTable p = pr_box();
            for (auto& row : p.p)
                for (auto& m : row) m.setConstant(0.25);
            return p;
        }
        schema("unknown table preset '" + name + "'");
    }
    allow_keys(v, {"scenario", "p"}, "table");
    auto s = int_list(need(v, "scenario"), "scenario");
    if (s.size() != 4) schema("key 'scenario' must be [X, Y, N, M]");
    ProbabilityTable p;
    p.X = s[0], p.Y = s[1], p.N = s[2], p.M = s[3];
    const auto& arr = need(v, "p");
    if (!arr.is_array() || static_cast<int>(arr.size()) != p.X) schema("key 'p' must be indexed [x][y][a][b]");
    for (int x = 0; x < p.X; ++x) {
        const auto& ax = arr[static_cast<std::size_t>(x)];
        if (!ax.is_array() || static_cast<int>(ax.size()) != p.Y) schema("key 'p' must be indexed [x][y][a][b]");
        std::vector<Matrix> row;
        for (int y = 0; y < p.Y; ++y) {
            CMatrix m = complex_matrix(ax[static_cast<std::size_t>(y)], "p");
            if (m.rows() != p.N || m.cols() != p.M) schema("key 'p' blocks must be N×M");
            row.push_back(m.real());
        }
        p.p.push_back(std::move(row));
    }
    p.validate();
    return p;
}

PMArray pm_array_of(const json& v, const std::string& what) {
    if (v.is_string()) {
        const auto name = v.get<std::string>();
        if (name == "rac-2-1") return rac21_functional();
        if (name == "rac-2-1-qubit") return pm_table(rac21_qubit_model());
        schema("unknown " + what + " preset '" + name + "'");
    }
    allow_keys(v, {"scenario", "terms", "p"}, what);
    auto s = int_list(need(v, "scenario"), "scenario");
    if (s.size() != 3 || s[0] < 1 || s[1] < 1 || s[2] < 2) schema("key 'scenario' must be [X, Y, N]");
    PMArray c(s[0], s[1], s[2]);
    if (v.contains("terms")) {
        for (const auto& t : v.at("terms")) {
            if (!t.is_array() || t.size() != 4) schema("key 'terms' entries must be [b, x, y, c]");
            const int b = integer(t[0], "terms"), x = integer(t[1], "terms"), y = integer(t[2], "terms");
            if (b < 0 || b >= s[2] || x < 0 || x >= s[0] || y < 0 || y >= s[1])
                schema("key 'terms' has an index outside the scenario");
            c(b, x, y) += num(t[3], "terms");
        }
    }
    if (v.contains("p")) {
        const auto& arr = v.at("p");
        for (int x = 0; x < c.X; ++x)
            for (int y = 0; y < c.Y; ++y)
                for (int b = 0; b < c.N; ++b) {
                    try {
                        c(b, x, y) = num(arr.at(static_cast<std::size_t>(x)).at(static_cast<std::size_t>(y)).at(static_cast<std::size_t>(b)), "p");
                    } catch (const json::exception&) {
                        schema("key 'p' must be indexed [x][y][b]");
                    }
                }
    }
    return c;
}

std::vector<std::vector<CMatrix>> measurements_of(const json& v) {
    if (v.is_string()) {
        const auto name = v.get<std::string>();
        const double s = 1 / std::sqrt(2.0);
        CVector z0(2), z1(2), xp(2), xm(2), yp(2), ym(2);
        z0 << 1, 0;
        z1 << 0, 1;
        xp << s, s;
        xm << s, -s;
        yp << s, cplx(0, s);
        ym << s, cplx(0, -s);
        auto proj = [](const CVector& v) { return CMatrix(v * v.adjoint()); };
        std::vector<std::vector<CMatrix>> out{{proj(z0), proj(z1)}, {proj(xp), proj(xm)}};
        if (name == "pauli-zx") return out;
        if (name == "pauli-zxy") {
            out.push_back({proj(yp), proj(ym)});
            return out;
        }
        schema("unknown measurement preset '" + name + "'");
    }
    if (!v.is_array()) schema("key 'measurements' must be a preset or [x][a] matrices");
    std::vector<std::vector<CMatrix>> out;
    for (const auto& mx : v) {
        if (!mx.is_array()) schema("key 'measurements' must be indexed [x][a]");
        std::vector<CMatrix> row;
        for (const auto& e : mx) row.push_back(complex_matrix(e, "measurements"));
        out.push_back(std::move(row));
    }
    return out;
}

// ---- shared pieces ----

SolverParams solver_params(const json& spec, const Flags& flags) {
    SolverParams p;
    if (spec.contains("solver")) {
        const auto& s = spec.at("solver");
        allow_keys(s, {"tol", "max_iter"}, "solver");
        if (s.contains("tol")) p.tol = num(s.at("tol"), "tol");
        if (s.contains("max_iter")) p.max_iter = integer(s.at("max_iter"), "max_iter");
    }
    if (flags.tol) p.tol = *flags.tol;
    if (flags.max_iter) p.max_iter = *flags.max_iter;
    if (!(p.tol > 0) || p.max_iter < 1) schema("solver tolerance and iteration cap must be positive");
    return p;
}

std::string level_of(const json& spec, const Flags& flags, const std::string& def) {
    if (!flags.level.empty()) return flags.level;
    if (!spec.contains("level")) return def;
    const auto& v = spec.at("level");
    if (v.is_number_integer()) return std::to_string(v.get<int>());
    return str(v, "level");
}

MonomialSet monomials_for(const AlgebraPtr& A, const std::string& level) {
    if (level.empty()) schema("key 'level' is empty");
    bool digits = true;
    for (char c : level) digits = digits && std::isdigit(static_cast<unsigned char>(c));
    return digits ? monomial_set(A, std::stoi(level)) : monomial_set(A, level);
}

void put_status(json& r, const Solution& s) {
    r["status"] = to_string(s.status);
    r["gap"] = s.gap;
    r["iterations"] = s.iterations;
}

// The exported file is always a maximization; its objective at our solution lets external solvers be compared.
void maybe_export(const StandardFormSDP& sdp, const Solution& s, const Flags& flags, json& r) {
    if (flags.export_path.empty()) return;
    write_sdpa(sdp, flags.export_path);
    r["export"] = {{"path", flags.export_path},
                   {"objective", sdp.sense == Sense::Maximize ? s.primal_value : -s.primal_value}};
}

void no_export(const Flags& flags, const std::string& kind) {
    if (!flags.export_path.empty()) schema("--export is not available for kind '" + kind + "'");
}

void no_certificate(const Flags& flags, const std::string& kind) {
    if (!flags.certificate_path.empty()) schema("--certificate is not available for kind '" + kind + "'");
}

int verdict_exit(const Solution& s) {
    if (s.status == SolveStatus::PrimalInfeasible || s.status == SolveStatus::DualInfeasible) return 2;
    if (s.status != SolveStatus::Optimal) throw Error(ErrorCode::SolverFailure, std::string("solver ended with status ") + to_string(s.status));
    return 0;
}

// ---- symmetry ----

struct SymmetrySpec {
    std::string name;
    int block = 0;
    std::vector<Matrix> generators; // acting on `block`
};

std::optional<json> symmetry_json(const json& spec, const Flags& flags) {
    if (!flags.symmetry.empty()) {
        if (std::filesystem::exists(flags.symmetry)) {
            std::ifstream f(flags.symmetry);
            try {
                return json::parse(f);
            } catch (const json::parse_error& e) {
                throw Error(ErrorCode::ParseError, "symmetry file: " + std::string(e.what()));
            }
        }
        return json(flags.symmetry);
    }
    if (spec.contains("symmetry")) return spec.at("symmetry");
    return std::nullopt;
}

SymmetrySpec symmetry_from_file(const json& v, int block_size) {
    allow_keys(v, {"block", "permutations", "matrices"}, "symmetry");
    SymmetrySpec s;
    s.name = "custom";
    s.block = int_or(v, "block", 0);
    if (v.contains("permutations"))
        for (const auto& p : v.at("permutations")) {
            auto perm = int_list(p, "permutations");
            if (static_cast<int>(perm.size()) != block_size) schema("key 'permutations' entries must match the block size");
            s.generators.push_back(permutation_matrix(perm));
        }
    if (v.contains("matrices"))
        for (const auto& m : v.at("matrices")) {
            CMatrix c = complex_matrix(m, "matrices");
            if (!c.imag().isZero(0)) schema("key 'matrices' must be real");
            s.generators.push_back(c.real());
        }
    if (s.generators.empty()) schema("symmetry needs 'permutations' or 'matrices'");
    return s;
}

std::vector<int> cyclic_shift(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = (i + 1) % n;
    return p;
}

std::vector<int> reflection(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = (n - i) % n;
    return p;
}

std::vector<int> transposition(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    std::swap(p[0], p[1]);
    return p;
}

// Swap Alice and Bob on the monomial index of a Bell moment block.
std::vector<int> party_swap(const AlgebraPtr& A, const MonomialSet& S) {
    std::vector<int> perm;
    for (const auto& u : S.members) {
        std::vector<Letter> w;
        for (const auto& l : u.word()) {
            std::string label = A->symbol(l.id).label;
            label[0] = label[0] == 'A' ? 'B' : 'A';
            auto id = A->find(label);
            if (!id) schema("party-swap needs matching Alice and Bob measurements");
            w.push_back(Letter{static_cast<std::uint16_t>(*id), l.adjoint});
        }
        auto c = A->canonicalize(Monomial(std::move(w)));
        auto it = c ? std::find(S.members.begin(), S.members.end(), *c) : S.members.end();
        if (it == S.members.end()) schema("party-swap does not map the monomial set to itself");
        perm.push_back(static_cast<int>(it - S.members.begin()));
    }
    return perm;
}

struct Reduced {
    StandardFormSDP sdp;
    json info;
};

Reduced symmetrize(const StandardFormSDP& sdp, const SymmetrySpec& s, std::uint64_t seed) {
    if (s.block < 0 || s.block >= static_cast<int>(sdp.block_sizes.size())) schema("symmetry block out of range");
    if (sdp.block_sizes[static_cast<std::size_t>(s.block)] <= 0) schema("symmetry block must be a matrix block");
    auto rep = GroupRepresentation::on_block(sdp.block_sizes, s.block, s.generators);
    Rng rng(seed);
    verify_invariance(sdp, rep, rng);
    rep.enumerate();
    std::vector<BlockDecomposition> used;
    Reduced out;
    out.sdp = block_diagonalize(sdp, rep, nullptr, &used, seed);
    json blocks = json::array();
    for (const auto& b : used[static_cast<std::size_t>(s.block)].blocks) blocks.push_back({b.multiplicity, b.dimension});
    out.info = {{"name", s.name},
                {"group_order", rep.enumerated ? json(rep.elements.size()) : json(nullptr)},
                {"irreps", blocks},
                {"block_sizes", out.sdp.block_sizes},
                {"constraints", out.sdp.num_constraints()}};
    return out;
}

// ---- kinds ----

Outcome run_poly(const json& spec, const Flags& flags, bool commutative) {
    const std::string kind = commutative ? "lasserre" : "ncpop";
    allow_keys(spec, {"kind", commutative ? "variables" : "operators", "objective", "sense", "constraints", "level",
                      "real", "completeness", "solver", "symmetry"},
               "problem");
    std::vector<SymbolSpec> symbols;
    const auto& vars = need(spec, commutative ? "variables" : "operators");
    if (!vars.is_array() || vars.empty()) schema("key '" + std::string(commutative ? "variables" : "operators") + "' must be a non-empty array");
    for (const auto& v : vars) {
        if (v.is_string()) {
            symbols.push_back({v.get<std::string>(), SymbolKind::Hermitian});
            continue;
        }
        allow_keys(v, {"label", "kind", "measurement", "outcome", "order", "class"}, "operator");
        SymbolSpec s;
        s.label = str(need(v, "label"), "label");
        const std::string k = v.contains("kind") ? str(v.at("kind"), "kind") : "hermitian";
        if (k == "hermitian") s.kind = SymbolKind::Hermitian;
        else if (k == "projector") s.kind = SymbolKind::Projector;
        else if (k == "unitary") s.kind = SymbolKind::Unitary;
        else if (k == "state") s.kind = SymbolKind::State;
        else if (k == "general") s.kind = SymbolKind::General;
        else schema("key 'kind' of operator '" + s.label + "' is unknown");
        s.measurement = int_or(v, "measurement", -1);
        s.outcome = int_or(v, "outcome", -1);
        s.order = int_or(v, "order", 0);
        s.commutation_class = int_or(v, "class", 0);
        symbols.push_back(s);
    }
    auto A = Algebra::declare(symbols, {commutative, bool_or(spec, "completeness", false)});

    PolyProblem problem;
    problem.algebra = A;
    problem.objective = A->parse_polynomial(str(need(spec, "objective"), "objective"));
    const std::string sense = spec.contains("sense") ? str(spec.at("sense"), "sense") : "max";
    if (sense == "max") problem.sense = Sense::Maximize;
    else if (sense == "min") problem.sense = Sense::Minimize;
    else schema("key 'sense' must be \"max\" or \"min\"");
    problem.real = bool_or(spec, "real", true);
    if (spec.contains("constraints")) {
        for (const auto& c : spec.at("constraints")) {
            if (c.is_string()) {
                const std::string text = c.get<std::string>();
                std::size_t pos;
                if ((pos = text.find(">=")) != std::string::npos)
                    problem.operator_constraints.push_back({A->parse_polynomial("(" + text.substr(0, pos) + ") - (" + text.substr(pos + 2) + ")")});
                else if ((pos = text.find("<=")) != std::string::npos)
                    problem.operator_constraints.push_back({A->parse_polynomial("(" + text.substr(pos + 2) + ") - (" + text.substr(0, pos) + ")")});
                else
                    schema("key 'constraints' entries must read 'p >= q' or 'p <= q'");
                continue;
            }
            allow_keys(c, {"expect", "op", "localizing_level"}, "constraint");
            if (c.contains("expect")) {
                const std::string op = c.contains("op") ? str(c.at("op"), "op") : ">=";
                if (op != ">=" && op != "==") schema("key 'op' must be \">=\" or \"==\"");
                problem.scalar_constraints.push_back({A->parse_polynomial(str(c.at("expect"), "expect")), op == "=="});
            } else {
                schema("constraint objects need key 'expect'");
            }
        }
    }
    const std::string level = level_of(spec, flags, "1");
    MonomialSet S = monomials_for(A, level);
    MomentRelaxation M = build_moment(problem, S);
    const SolverParams params = solver_params(spec, flags);

    Outcome out;
    json& r = out.report;
    r["schema"] = kReportSchema;
    r["kind"] = kind;
    r["level"] = S.tag;
    r["sizes"] = {{"monomials", S.size()}, {"moment_matrix", M.block_size(0)}, {"blocks", M.blocks().size()},
                  {"moment_classes", M.free_class_count()}};
    if (auto sym = symmetry_json(spec, flags)) {
        no_certificate(flags, kind + " with symmetry");
        LoweredRelaxation L = M.lower();
        const int block = L.block_of.at(0);
        SymmetrySpec s = sym->is_string() ? (schema("symmetry '" + sym->get<std::string>() + "' is not defined for kind '" + kind + "'"), SymmetrySpec{})
                                          : symmetry_from_file(*sym, S.size());
        s.block = block;
        Reduced red = symmetrize(L.model.sdp, s, flags.seed.value_or(1));
        Solution sol = solve(red.sdp, params);
        out.exit_code = verdict_exit(sol);
        r["value"] = L.model.bound_from_value(sol.primal_value);
        put_status(r, sol);
        r["symmetry"] = red.info;
        maybe_export(red.sdp, sol, flags, r);
        return out;
    }
    RelaxationResult res = solve_relaxation(M, params);
    out.exit_code = verdict_exit(res.solution);
    r["value"] = res.value;
    put_status(r, res.solution);
    maybe_export(res.lowered.model.sdp, res.solution, flags, r);
    if (!flags.certificate_path.empty()) {
        SOSCertificate cert = extract_sos(M, res);
        std::ofstream f(flags.certificate_path);
        f << serialize(cert);
        if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write '" + flags.certificate_path + "'");
        r["certificate"] = {{"path", flags.certificate_path}, {"residual", verify_certificate(cert, problem)}};
    }
    return out;
}

Outcome run_bell_npa(const json& spec, const Flags& flags) {
    allow_keys(spec, {"kind", "functional", "table", "level", "solver", "symmetry"}, "problem");
    const SolverParams params = solver_params(spec, flags);
    const std::string level = level_of(spec, flags, "1");
    Outcome out;
    json& r = out.report;
    r["schema"] = kReportSchema;
    r["kind"] = "bell-npa";
    if (spec.contains("table")) {
        if (spec.contains("functional")) schema("give either 'functional' or 'table', not both");
        no_certificate(flags, "bell-npa with a table");
        ProbabilityTable p = bell_table_of(spec.at("table"));
        auto A = Algebra::bell({p.X, p.Y}, {p.N, p.M});
        PolyProblem pb;
        pb.algebra = A;
        pb.objective = CPolynomial::constant(A, 0.0);
        MonomialSet S = monomials_for(A, level);
        MomentRelaxation M = attach_distribution(build_moment(pb, S), p);
        Solution sol;
        const double t = feasibility_margin(M, params, &sol);
        r["level"] = S.tag;
        r["sizes"] = {{"monomials", S.size()}, {"moment_matrix", M.block_size(0)}};
        r["value"] = t;
        put_status(r, sol);
        const bool feasible = t >= -kVerdictTol;
        r["verdict"] = feasible ? "feasible" : "infeasible";
        out.exit_code = feasible ? 0 : 2;
        if (!flags.export_path.empty()) maybe_export(M.lower(true).model.sdp, sol, flags, r);
        return out;
    }
    BellFunctional f = bell_functional_of(need(spec, "functional"));
    auto A = f.algebra();
    MonomialSet S = monomials_for(A, level);
    r["level"] = S.tag;
    r["sizes"] = {{"monomials", S.size()}, {"moment_matrix", static_cast<int>(S.size())}};
    if (auto sym = symmetry_json(spec, flags)) {
        no_certificate(flags, "bell-npa with symmetry");
        PolyProblem pb;
        pb.algebra = A;
        pb.objective = f.polynomial(A);
        MomentRelaxation M = build_moment(pb, S);
        LoweredRelaxation L = M.lower();
        SymmetrySpec s;
        if (sym->is_string()) {
            if (sym->get<std::string>() != "party-swap")
                schema("symmetry '" + sym->get<std::string>() + "' is not defined for kind 'bell-npa'");
            s.name = "party-swap";
            s.generators.push_back(permutation_matrix(party_swap(A, S)));
        } else {
            s = symmetry_from_file(*sym, static_cast<int>(S.size()));
        }
        s.block = L.block_of.at(0);
        Reduced red = symmetrize(L.model.sdp, s, flags.seed.value_or(1));
        Solution sol = solve(red.sdp, params);
        out.exit_code = verdict_exit(sol);
        r["value"] = L.model.bound_from_value(sol.primal_value);
        put_status(r, sol);
        r["symmetry"] = red.info;
        maybe_export(red.sdp, sol, flags, r);
        return out;
    }
    NpaResult res = npa_bound(f, level, params);
    r["value"] = res.value;
    put_status(r, res.result.solution);
    r["sizes"]["moment_matrix"] = res.size;
    maybe_export(res.result.lowered.model.sdp, res.result.solution, flags, r);
    if (!flags.certificate_path.empty()) {
        std::ofstream file(flags.certificate_path);
        file << serialize(res.certificate);
        if (!file) throw Error(ErrorCode::InvalidArgument, "cannot write '" + flags.certificate_path + "'");
        PolyProblem pb;
        pb.algebra = res.certificate.algebra;
        pb.objective = f.polynomial(res.certificate.algebra);
        r["certificate"] = {{"path", flags.certificate_path}, {"residual", verify_certificate(res.certificate, pb)}};
    }
    return out;
}

std::string rational_text(const Rational& q) {
    std::ostringstream s;
    s << q.numerator();
    if (q.denominator() != 1) s << "/" << q.denominator();
    return s.str();
}

Outcome run_bell_lhv(const json& spec, const Flags& flags) {
    allow_keys(spec, {"kind", "functional", "table", "solver"}, "problem");
    no_certificate(flags, "bell-lhv");
    Outcome out;
    json& r = out.report;
    r["schema"] = kReportSchema;
    r["kind"] = "bell-lhv";
    if (spec.contains("functional") == spec.contains("table")) schema("give exactly one of 'functional' or 'table'");
    if (spec.contains("functional")) {
        no_export(flags, "bell-lhv with a functional");
        BellFunctional f = bell_functional_of(spec.at("functional"));
        Rational q = local_bound_exact(f);
        r["value"] = boost::rational_cast<double>(q);
        r["exact"] = rational_text(q);
        r["status"] = "exact";
        r["label"] = "local bound";
        return out;
    }
    (void)solver_params(spec, flags);
    ProbabilityTable p = bell_table_of(spec.at("table"));
    LhvResult res = lhv_membership(p);
    r["value"] = res.t;
    put_status(r, res.solution);
    const bool local = res.t >= -kVerdictTol;
    r["verdict"] = local ? "local" : "nonlocal";
    if (!local) {
        json c = json::array();
        for (double v : res.dual.c) c.push_back(v);
        r["inequality"] = {{"scenario", {p.X, p.Y, p.N, p.M}}, {"coefficients", c}};
    }
    r["sizes"] = {{"strategies", res.weights.size()}};
    maybe_export(res.sdp, res.solution, flags, r);
    out.exit_code = local ? 0 : 2;
    return out;
}

Outcome run_steering(const json& spec, const Flags& flags) {
    allow_keys(spec, {"kind", "state", "measurements", "assemblage", "solver"}, "problem");
    no_certificate(flags, "steering");
    (void)solver_params(spec, flags);
    Assemblage sigma;
    if (spec.contains("assemblage")) {
        const auto& v = spec.at("assemblage");
        if (!v.is_array()) schema("key 'assemblage' must be indexed [x][a]");
        for (const auto& mx : v) {
            std::vector<CMatrix> row;
            for (const auto& e : mx) row.push_back(complex_matrix(e, "assemblage"));
            sigma.sigma.push_back(std::move(row));
        }
        sigma.X = static_cast<int>(sigma.sigma.size());
        sigma.N = sigma.X ? static_cast<int>(sigma.sigma[0].size()) : 0;
        sigma.d = sigma.N ? static_cast<int>(sigma.sigma[0][0].rows()) : 0;
    } else {
        DensityMatrix rho = state_of(need(spec, "state"));
        if (rho.dims.size() != 2) schema("key 'state' must be bipartite");
        sigma = assemblage_from_state(rho.rho, rho.dims[0], rho.dims[1], measurements_of(need(spec, "measurements")));
    }
    sigma.validate();
    SteeringResult res = steering_test(sigma);
    Outcome out;
    json& r = out.report;
    r["schema"] = kReportSchema;
    r["kind"] = "steering";
    r["value"] = res.t;
    put_status(r, res.solution);
    const bool lhs = res.t >= -kVerdictTol;
    r["verdict"] = lhs ? "unsteerable" : "steerable";
    r["sizes"] = {{"inputs", sigma.X}, {"outcomes", sigma.N}, {"dimension", sigma.d}, {"hidden_states", res.hidden_states.size()}};
    maybe_export(res.sdp, res.solution, flags, r);
    out.exit_code = lhs ? 0 : 2;
    return out;
}

Outcome run_entanglement(const json& spec, const Flags& flags, const std::string& kind) {
    std::set<std::string> keys{"kind", "state", "solver"};
    if (kind == "dps") keys.insert({"n", "ppt"});
    allow_keys(spec, keys, "problem");
    no_certificate(flags, kind);
    (void)solver_params(spec, flags);
    DensityMatrix rho = state_of(need(spec, "state"));
    Outcome out;
    json& r = out.report;
    r["schema"] = kReportSchema;
    r["kind"] = kind;
    r["sizes"] = {{"dims", rho.dims}};
    if (kind == "separability-ppt") {
        PptResult res = ppt_random_robustness(rho);
        r["value"] = res.t;
        r["robustness"] = res.robustness;
        put_status(r, res.solution);
        const bool ppt = res.t >= -kVerdictTol;
        r["verdict"] = ppt ? "ppt" : "entangled";
        maybe_export(res.sdp, res.solution, flags, r);
        out.exit_code = ppt ? 0 : 2;
    } else if (kind == "dps") {
        DpsOptions opt;
        opt.n = int_or(spec, "n", 1);
        if (!flags.level.empty()) opt.n = preset_int(flags.level, "--level");
        opt.ppt = bool_or(spec, "ppt", true);
        DpsResult res = dps_feasible(rho, opt);
        r["value"] = res.t;
        r["level"] = std::to_string(opt.n);
        r["sizes"]["symmetric_dim"] = res.symmetric_dim;
        put_status(r, res.solution);
        r["verdict"] = res.passes ? "extendible" : "entangled";
        maybe_export(res.sdp, res.solution, flags, r);
        out.exit_code = res.passes ? 0 : 2;
    } else {
        NegativityResult res = negativity_trace_norm(rho);
        r["value"] = res.trace_norm;
        r["log_negativity"] = res.log_negativity;
        put_status(r, res.solution);
        maybe_export(res.sdp, res.solution, flags, r);
        out.exit_code = verdict_exit(res.solution);
    }
    return out;
}

Outcome run_theta(const json& spec, const Flags& flags) {
    allow_keys(spec, {"kind", "graph", "solver", "symmetry"}, "problem");
    no_certificate(flags, "theta");
    const SolverParams params = solver_params(spec, flags);
    Graph g = graph_of(need(spec, "graph"));
    StandardFormSDP sdp = theta_sdp(g);
    Outcome out;
    json& r = out.report;
    r["schema"] = kReportSchema;
    r["kind"] = "theta";
    r["sizes"] = {{"vertices", g.n}, {"edges", g.edges.size()}};
    if (auto sym = symmetry_json(spec, flags)) {
        SymmetrySpec s;
        if (sym->is_string()) {
            s.name = sym->get<std::string>();
            if (g.n < 2) schema("graph symmetry needs at least two vertices");
            if (s.name == "cyclic") s.generators = {permutation_matrix(cyclic_shift(g.n))};
            else if (s.name == "dihedral") s.generators = {permutation_matrix(cyclic_shift(g.n)), permutation_matrix(reflection(g.n))};
            else if (s.name == "symmetric") s.generators = {permutation_matrix(cyclic_shift(g.n)), permutation_matrix(transposition(g.n))};
            else schema("symmetry '" + s.name + "' is not defined for kind 'theta'");
        } else {
            s = symmetry_from_file(*sym, g.n);
        }
        Reduced red = symmetrize(sdp, s, flags.seed.value_or(1));
        r["symmetry"] = red.info;
        sdp = red.sdp;
    }
    Solution sol = solve(sdp, params);
    out.exit_code = verdict_exit(sol);
    r["value"] = sol.dual_value;
    put_status(r, sol);
    if (g.n <= 20) r["independence_number"] = independence_number(g);
    maybe_export(sdp, sol, flags, r);
    return out;
}

Outcome run_pm_classical(const json& spec, const Flags& flags) {
    allow_keys(spec, {"kind", "functional", "table", "d", "solver"}, "problem");
    no_certificate(flags, "pm-classical");
    const SolverParams params = solver_params(spec, flags);
    const int d = integer(need(spec, "d"), "d");
    Outcome out;
    json& r = out.report;
    r["schema"] = kReportSchema;
    r["kind"] = "pm-classical";
    r["sizes"] = {{"d", d}};
    if (spec.contains("functional") == spec.contains("table")) schema("give exactly one of 'functional' or 'table'");
    if (spec.contains("functional")) {
        no_export(flags, "pm-classical with a functional");
        PMArray c = pm_array_of(spec.at("functional"), "functional");
        r["value"] = pm_classical_bound(c, d, params);
        Rational q = pm_classical_bound_exact(c, d);
        r["exact"] = rational_text(q);
        r["status"] = "optimal";
        r["label"] = "classical bound";
        return out;
    }
    PMArray p = pm_array_of(spec.at("table"), "table");
    PmClassicalResult res = pm_classical_membership(p, d);
    r["value"] = res.t;
    put_status(r, res.solution);
    const bool classical = res.t >= -kVerdictTol;
    r["verdict"] = classical ? "classical" : "nonclassical";
    maybe_export(res.sdp, res.solution, flags, r);
    out.exit_code = classical ? 0 : 2;
    return out;
}

Outcome run_pm_nv(const json& spec, const Flags& flags) {
    allow_keys(spec, {"kind", "functional", "d", "level", "ranks", "dilate", "rank_margin", "cache", "seed", "solver"}, "problem");
    no_certificate(flags, "pm-nv");
    const SolverParams params = solver_params(spec, flags);
    PMArray c = pm_array_of(need(spec, "functional"), "functional");
    const int d = integer(need(spec, "d"), "d");
    NvSampleOptions opt;
    opt.seed = flags.seed.value_or(static_cast<std::uint64_t>(int_or(spec, "seed", 1)));
    opt.dilate = bool_or(spec, "dilate", false);
    opt.rank_margin = int_or(spec, "rank_margin", 5);
    PmDims dims{c.X, c.Y, c.N};
    auto A = pm_algebra(c.X, c.Y, c.N);
    MonomialSet S = monomials_for(A, level_of(spec, flags, "1"));
    Outcome out;
    json& r = out.report;
    r["schema"] = kReportSchema;
    r["kind"] = "pm-nv";
    r["level"] = S.tag;
    if (spec.contains("ranks")) {
        std::vector<std::vector<int>> ranks;
        for (const auto& row : spec.at("ranks")) ranks.push_back(int_list(row, "ranks"));
        SampledBasis basis;
        const std::string cache = spec.contains("cache") ? str(spec.at("cache"), "cache") : "";
        if (!cache.empty() && std::filesystem::exists(cache)) {
            basis = load_basis(cache);
            if (!(basis.dims == dims) || basis.d != d || basis.ranks != ranks || basis.dilated != opt.dilate)
                schema("basis cache '" + cache + "' was sampled for a different problem");
        } else {
            basis = sample_basis(dims, d, S, ranks, opt);
            if (!cache.empty()) save_basis(basis, cache);
        }
        NvResult res = nv_bound(basis, c, params);
        r["value"] = res.value;
        r["label"] = res.label;
        put_status(r, res.solution);
        r["sizes"] = {{"monomials", S.size()}, {"span_rank", res.span_rank}, {"block", res.block_size}};
        r["safe"] = res.safe;
        maybe_export(res.sdp, res.solution, flags, r);
        return out;
    }
    if (spec.contains("cache")) schema("key 'cache' needs a single rank profile in 'ranks'");
    no_export(flags, "pm-nv over all rank profiles");
    NvProfileResult res = nv_bound_all_profiles(dims, d, S, c, opt, params);
    r["value"] = res.value;
    r["label"] = res.label;
    r["status"] = "optimal";
    r["sizes"] = {{"monomials", S.size()}, {"profiles", res.profile_values.size()}};
    r["best_ranks"] = res.best_ranks;
    r["safe"] = true;
    return out;
}

SeesawOptions seesaw_options(const json& spec, const Flags& flags) {
    SeesawOptions o;
    o.restarts = int_or(spec, "restarts", o.restarts);
    o.max_iter = int_or(spec, "max_iter", o.max_iter);
    o.seed = static_cast<std::uint64_t>(int_or(spec, "seed", 1));
    if (flags.restarts) o.restarts = *flags.restarts;
    if (flags.max_iter) o.max_iter = *flags.max_iter;
    if (flags.seed) o.seed = *flags.seed;
    if (flags.tol) o.tol = *flags.tol;
    return o;
}

void put_seesaw(json& r, const SeesawResult& s) {
    r["value"] = s.value;
    r["label"] = "seesaw lower bound";
    r["status"] = "converged";
    r["iterations"] = s.iterations;
    r["restart_values"] = s.restart_values;
}

Outcome run_seesaw(const json& spec, const Flags& flags, bool bell) {
    allow_keys(spec, bell ? std::set<std::string>{"kind", "functional", "dA", "dB", "restarts", "max_iter", "seed"}
                          : std::set<std::string>{"kind", "functional", "d", "restarts", "max_iter", "seed"},
               "problem");
    no_certificate(flags, bell ? "seesaw-bell" : "seesaw-pm");
    no_export(flags, bell ? "seesaw-bell" : "seesaw-pm");
    SeesawOptions o = seesaw_options(spec, flags);
    Outcome out;
    json& r = out.report;
    r["schema"] = kReportSchema;
    r["kind"] = bell ? "seesaw-bell" : "seesaw-pm";
    if (bell) {
        BellFunctional f = bell_functional_of(need(spec, "functional"));
        o.dA = int_or(spec, "dA", 2);
        o.dB = int_or(spec, "dB", 2);
        r["sizes"] = {{"dA", o.dA}, {"dB", o.dB}, {"restarts", o.restarts}};
        put_seesaw(r, seesaw_bell(f, o));
    } else {
        PMArray c = pm_array_of(need(spec, "functional"), "functional");
        const int d = int_or(spec, "d", 2);
        r["sizes"] = {{"d", d}, {"restarts", o.restarts}};
        put_seesaw(r, seesaw_pm(c, d, o));
    }
    return out;
}

Outcome run_problem(const json& spec, const Flags& flags) {
    if (!spec.is_object()) schema("problem file must hold a JSON object");
    const std::string kind = str(need(spec, "kind"), "kind");
    if (kind == "lasserre") return run_poly(spec, flags, true);
    if (kind == "ncpop") return run_poly(spec, flags, false);
    if (kind == "bell-npa") return run_bell_npa(spec, flags);
    if (kind == "bell-lhv") return run_bell_lhv(spec, flags);
    if (kind == "steering") return run_steering(spec, flags);
    if (kind == "separability-ppt" || kind == "dps" || kind == "negativity") return run_entanglement(spec, flags, kind);
    if (kind == "theta") return run_theta(spec, flags);
    if (kind == "pm-classical") return run_pm_classical(spec, flags);
    if (kind == "pm-nv") return run_pm_nv(spec, flags);
    if (kind == "seesaw-bell") return run_seesaw(spec, flags, true);
    if (kind == "seesaw-pm") return run_seesaw(spec, flags, false);
    schema("key 'kind' has unknown value '" + kind + "'");
}

void print_text(const json& r, double ms) {
    std::printf("kind:    %s\n", r.value("kind", "").c_str());
    if (r.contains("level")) std::printf("level:   %s\n", r["level"].get<std::string>().c_str());
    if (r.contains("value")) std::printf("value:   %.10f\n", r["value"].get<double>());
    if (r.contains("exact")) std::printf("exact:   %s\n", r["exact"].get<std::string>().c_str());
    if (r.contains("label")) std::printf("label:   %s\n", r["label"].get<std::string>().c_str());
    if (r.contains("verdict")) std::printf("verdict: %s\n", r["verdict"].get<std::string>().c_str());
    std::printf("status:  %s\n", r.value("status", "").c_str());
    if (r.contains("gap")) std::printf("gap:     %.3e\n", r["gap"].get<double>());
    if (r.contains("sizes")) std::printf("sizes:   %s\n", r["sizes"].dump().c_str());
    if (r.contains("symmetry")) std::printf("symmetry: %s\n", r["symmetry"].dump().c_str());
    if (r.contains("certificate")) std::printf("certificate: %s\n", r["certificate"].dump().c_str());
    if (r.contains("export")) std::printf("export:  %s\n", r["export"]["path"].get<std::string>().c_str());
    std::printf("time:    %.1f ms\n", ms);
}

int run_command(const Flags& flags) {
    std::ifstream f(flags.path);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open '" + flags.path + "'");
    json spec;
    try {
        spec = json::parse(f);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, flags.path + ": " + e.what());
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out = run_problem(spec, flags);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (flags.json_report.empty()) {
        print_text(out.report, ms);
    } else if (flags.json_report == "-") {
        std::cout << out.report.dump(2) << "\n";
    } else {
        std::ofstream rep(flags.json_report);
        rep << out.report.dump(2) << "\n";
        if (!rep) throw Error(ErrorCode::InvalidArgument, "cannot write '" + flags.json_report + "'");
        print_text(out.report, ms);
    }
    return out.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qcrelax: SDP relaxations of quantum-correlation problems"};
    app.require_subcommand(1);
    Flags flags;
    auto* run = app.add_subcommand("run", "Solve the problem described by a JSON file");
    run->add_option("file", flags.path, "problem file")->required();
    run->add_option("--level", flags.level, "relaxation level (e.g. 2, 1+AB) or DPS extension order");
    run->add_option("--tol", flags.tol, "solver tolerance");
    run->add_option("--max-iter", flags.max_iter, "solver / seesaw iteration cap");
    run->add_option("--seed", flags.seed, "random seed");
    run->add_option("--restarts", flags.restarts, "seesaw restarts");
    run->add_option("--export", flags.export_path, "write the solved SDP in SDPA sparse format");
    run->add_option("--certificate", flags.certificate_path, "write the SOS certificate");
    run->add_option("--symmetry", flags.symmetry, "symmetry name or JSON file");
    run->add_option("--json-report", flags.json_report, "write the JSON report to a path ('-' for stdout)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    try {
        return run_command(flags);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
    }
    return 1;
}
