#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "boolmin/cnf.hpp"
#include "boolmin/sat.hpp"
#include "boolmin/subprocess.hpp"

namespace boolmin {

/// Prenex quantified clause set with the fixed three-block prefix
/// "exists X, forall Y, exists Z". Any block may be empty; the blocks are
/// disjoint and jointly cover every matrix variable.
struct QbfInstance {
    std::vector<int> outer_exists;
    std::vector<int> universals;
    std::vector<int> inner_exists;
    Cnf matrix;
};

/// Throws if the prefix blocks overlap or fail to cover the matrix.
inline void validate(const QbfInstance& q) {
    std::vector<int> block_of(q.matrix.num_vars + 1, 0);
    auto mark = [&](const std::vector<int>& vars, int tag) {
        for (int v : vars) {
            if (v < 1 || v > q.matrix.num_vars)
                throw std::invalid_argument("prefix variable " + std::to_string(v) +
                                            " out of range");
            if (block_of[v] != 0)
                throw std::invalid_argument("variable " + std::to_string(v) +
                                            " appears in two prefix blocks");
            block_of[v] = tag;
        }
    };
    mark(q.outer_exists, 1);
    mark(q.universals, 2);
    mark(q.inner_exists, 3);
    for (const Clause& c : q.matrix.clauses)
        for (Literal l : c)
            if (block_of[std::abs(l)] == 0)
                throw std::invalid_argument("matrix variable " +
                                            std::to_string(std::abs(l)) +
                                            " is not quantified");
}

enum class QbfStatus { True, False, TrueNoModel, Timeout };

struct QbfResult {
    QbfStatus status;
    /// Outer-existential assignment when status == True.
    std::map<int, bool> outer_model;
    double elapsed_ms = 0.0;
    std::uint64_t sat_conflicts = 0;
};

/// Universal blocks wider than this are refused by the expansion engine.
inline constexpr int kExpansionCap = 16;

class expansion_cap_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

struct ExpansionMaps {
    std::vector<int> role;       // 0 none, 1 outer, 2 universal, 3 inner
    std::vector<int> outer_new;  // original outer var -> expanded var
    std::vector<int> universal_bit;  // original universal var -> bit position
    std::vector<int> inner_slot;     // original inner var -> copy-local slot
    int num_outer = 0;
    int num_inner = 0;
};

inline ExpansionMaps build_expansion_maps(const QbfInstance& q) {
    ExpansionMaps m;
    int n = q.matrix.num_vars;
    m.role.assign(n + 1, 0);
    m.outer_new.assign(n + 1, 0);
    m.universal_bit.assign(n + 1, -1);
    m.inner_slot.assign(n + 1, -1);
    for (int v : q.outer_exists) {
        m.role[v] = 1;
        m.outer_new[v] = ++m.num_outer;
    }
    for (std::size_t i = 0; i < q.universals.size(); ++i) {
        m.role[q.universals[i]] = 2;
        m.universal_bit[q.universals[i]] = static_cast<int>(i);
    }
    for (int v : q.inner_exists) {
        m.role[v] = 3;
        m.inner_slot[v] = m.num_inner++;
    }
    return m;
}

}  // namespace detail

/// Decide the instance by universal expansion: one propositional formula
/// with the outer existentials shared and one fresh copy of the inner
/// existentials per universal assignment. Clauses over outer variables
/// only are emitted once. Requires |universals| <= universal_cap.
inline QbfResult solve_expansion(const QbfInstance& q,
                                 std::optional<double> budget_ms = std::nullopt,
                                 int universal_cap = kExpansionCap,
                                 std::uint64_t seed = 0) {
    validate(q);
    int u = static_cast<int>(q.universals.size());
    if (u > universal_cap)
        throw expansion_cap_error("universal block of width " + std::to_string(u) +
                                  " exceeds the expansion cap " +
                                  std::to_string(universal_cap));

    detail::ExpansionMaps m = detail::build_expansion_maps(q);
    std::uint32_t copies = std::uint32_t{1} << u;

    Cnf expanded;
    expanded.num_vars = m.num_outer + static_cast<int>(copies) * m.num_inner;
    Clause mapped;
    for (std::uint32_t tau = 0; tau < copies; ++tau) {
        int copy_base = m.num_outer + static_cast<int>(tau) * m.num_inner;
        for (const Clause& c : q.matrix.clauses) {
            bool satisfied = false;
            bool copy_specific = false;
            mapped.clear();
            for (Literal l : c) {
                int v = std::abs(l);
                switch (m.role[v]) {
                    case 1:
                        mapped.push_back(l > 0 ? m.outer_new[v] : -m.outer_new[v]);
                        break;
                    case 2: {
                        copy_specific = true;
                        bool val = (tau >> m.universal_bit[v]) & 1u;
                        if (val == (l > 0)) satisfied = true;
                        break;  // false literals drop out of the clause
                    }
                    case 3: {
                        copy_specific = true;
                        int nv = copy_base + m.inner_slot[v] + 1;
                        mapped.push_back(l > 0 ? nv : -nv);
                        break;
                    }
                }
                if (satisfied) break;
            }
            if (satisfied) continue;
            if (!copy_specific && tau != 0) continue;  // shared clause, already emitted
            expanded.add_clause(mapped);
        }
    }

    CdclSolver solver(expanded, seed);
    SatResult sat = solver.solve(budget_ms);

    QbfResult res;
    res.elapsed_ms = sat.elapsed_ms;
    res.sat_conflicts = sat.conflicts;
    switch (sat.status) {
        case SatStatus::Timeout:
            res.status = QbfStatus::Timeout;
            break;
        case SatStatus::Unsatisfiable:
            res.status = QbfStatus::False;
            break;
        case SatStatus::Satisfiable:
            res.status = QbfStatus::True;
            for (int v : q.outer_exists)
                res.outer_model[v] = sat.model[m.outer_new[v]];
            break;
    }
    return res;
}

/// Check an outer-existential assignment: under it, every universal
/// assignment must leave the inner problem satisfiable.
inline bool verify_outer_model(const QbfInstance& q,
                               const std::map<int, bool>& outer_model,
                               int universal_cap = kExpansionCap) {
    validate(q);
    int u = static_cast<int>(q.universals.size());
    if (u > universal_cap)
        throw expansion_cap_error("universal block of width " + std::to_string(u) +
                                  " exceeds the expansion cap " +
                                  std::to_string(universal_cap));
    detail::ExpansionMaps m = detail::build_expansion_maps(q);

    for (std::uint32_t tau = 0; tau < (std::uint32_t{1} << u); ++tau) {
        Cnf inner;
        inner.num_vars = m.num_inner;
        Clause mapped;
        bool empty_clause = false;
        for (const Clause& c : q.matrix.clauses) {
            bool satisfied = false;
            mapped.clear();
            for (Literal l : c) {
                int v = std::abs(l);
                switch (m.role[v]) {
                    case 1: {
                        auto it = outer_model.find(v);
                        bool val = it != outer_model.end() && it->second;
                        if (val == (l > 0)) satisfied = true;
                        break;
                    }
                    case 2: {
                        bool val = (tau >> m.universal_bit[v]) & 1u;
                        if (val == (l > 0)) satisfied = true;
                        break;
                    }
                    case 3: {
                        int nv = m.inner_slot[v] + 1;
                        mapped.push_back(l > 0 ? nv : -nv);
                        break;
                    }
                }
                if (satisfied) break;
            }
            if (satisfied) continue;
            if (mapped.empty()) {
                empty_clause = true;
                break;
            }
            inner.add_clause(mapped);
        }
        if (empty_clause) return false;
        if (solve(inner).status != SatStatus::Satisfiable) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// QDIMACS
// ---------------------------------------------------------------------------

inline std::string write_qdimacs(const QbfInstance& q) {
    std::ostringstream out;
    out << "p cnf " << q.matrix.num_vars << ' ' << q.matrix.clauses.size() << '\n';
    auto block = [&](char tag, const std::vector<int>& vars) {
        if (vars.empty()) return;
        out << tag;
        for (int v : vars) out << ' ' << v;
        out << " 0\n";
    };
    block('e', q.outer_exists);
    block('a', q.universals);
    block('e', q.inner_exists);
    for (const Clause& clause : q.matrix.clauses) {
        for (Literal l : clause) out << l << ' ';
        out << "0\n";
    }
    return out.str();
}

/// Parse QDIMACS restricted to at most three blocks in e-a-e order (the
/// shape this library produces and consumes).
inline QbfInstance parse_qdimacs(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    QbfInstance q;
    bool header_seen = false;
    long declared_clauses = -1;
    int prefix_state = 0;  // 0 none, 1 outer e, 2 a, 3 inner e
    bool clauses_started = false;
    Clause current;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == 'c') continue;
        if (line[0] == 'p') {
            std::istringstream hs(line);
            std::string p, fmt;
            long vars = -1, clauses = -1;
            hs >> p >> fmt >> vars >> clauses;
            if (p != "p" || fmt != "cnf" || vars < 0 || clauses < 0 || hs.fail())
                throw dimacs_error("malformed QDIMACS header: " + line);
            q.matrix.num_vars = static_cast<int>(vars);
            declared_clauses = clauses;
            header_seen = true;
            continue;
        }
        if (!header_seen) throw dimacs_error("missing QDIMACS header");
        if (line[0] == 'e' || line[0] == 'a') {
            if (clauses_started)
                throw dimacs_error("quantifier line after clauses");
            bool is_e = line[0] == 'e';
            if (is_e && prefix_state == 0)
                prefix_state = 1;
            else if (!is_e && prefix_state <= 1)
                prefix_state = 2;
            else if (is_e && prefix_state == 2)
                prefix_state = 3;
            else
                throw dimacs_error("unsupported quantifier prefix (want e-a-e)");
            std::vector<int>& block = prefix_state == 1   ? q.outer_exists
                                      : prefix_state == 2 ? q.universals
                                                          : q.inner_exists;
            std::istringstream ls(line.substr(1));
            long v;
            bool terminated = false;
            while (ls >> v) {
                if (v == 0) {
                    terminated = true;
                    break;
                }
                if (v < 0 || v > q.matrix.num_vars)
                    throw dimacs_error("prefix variable out of range: " +
                                       std::to_string(v));
                block.push_back(static_cast<int>(v));
            }
            if (!terminated) throw dimacs_error("quantifier line missing 0");
            continue;
        }
        clauses_started = true;
        std::istringstream ls(line);
        long lit;
        while (ls >> lit) {
            if (lit == 0) {
                q.matrix.clauses.push_back(current);
                current.clear();
            } else {
                if (std::labs(lit) > q.matrix.num_vars)
                    throw dimacs_error("literal out of range: " + std::to_string(lit));
                current.push_back(static_cast<Literal>(lit));
            }
        }
    }
    if (!header_seen) throw dimacs_error("missing QDIMACS header");
    if (!current.empty()) throw dimacs_error("clause missing terminating 0");
    if (declared_clauses >= 0 &&
        declared_clauses != static_cast<long>(q.matrix.clauses.size()))
        throw dimacs_error("clause count mismatch in QDIMACS input");
    return q;
}

/// Run an external QBF solver on the QDIMACS rendering. Exit 10 means
/// true, 20 means false. Solvers that print "V <lit> 0" lines yield an
/// outer model; solvers that cannot produce instantiations yield
/// TrueNoModel, which callers needing a decodable model must reject.
inline QbfResult solve_external(const QbfInstance& q, const std::string& solver_path,
                                std::optional<double> budget_ms = std::nullopt) {
    validate(q);
    TempFile file(write_qdimacs(q), ".qdimacs");
    ProcessResult proc;
    try {
        proc = run_process({solver_path, file.path()}, budget_ms);
    } catch (const spawn_error& e) {
        throw external_solver_error(external_solver_error::Kind::Spawn, e.what());
    }

    QbfResult res;
    res.elapsed_ms = proc.elapsed_ms;
    if (proc.timed_out) {
        res.status = QbfStatus::Timeout;
        return res;
    }
    if (proc.exit_code == 20) {
        res.status = QbfStatus::False;
        return res;
    }
    if (proc.exit_code != 10)
        throw external_solver_error(
            external_solver_error::Kind::Protocol,
            "unexpected solver exit code " + std::to_string(proc.exit_code));

    bool has_v_line = false;
    {
        std::istringstream out(proc.output);
        std::string line;
        while (std::getline(out, line))
            if (!line.empty() && line[0] == 'V' &&
                (line.size() == 1 ||
                 std::isspace(static_cast<unsigned char>(line[1])))) {
                has_v_line = true;
                break;
            }
    }
    if (!has_v_line) {
        res.status = QbfStatus::TrueNoModel;
        return res;
    }

    std::vector<bool> lits =
        detail::parse_model_lines(proc.output, q.matrix.num_vars, 'V');
    res.status = QbfStatus::True;
    // Unmentioned outer variables default to false; exactly-one selector
    // groups tolerate this only if the solver printed the full block.
    for (int v : q.outer_exists) res.outer_model[v] = lits[v];
    return res;
}

}  // namespace boolmin
