#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "boolmin/formula.hpp"

namespace boolmin {

/// Signed nonzero DIMACS-style literal; |lit| is the variable index.
using Literal = std::int32_t;

using Clause = std::vector<Literal>;

struct Cnf {
    int num_vars = 0;
    std::vector<Clause> clauses;

    void add_clause(std::initializer_list<Literal> lits) {
        clauses.emplace_back(lits);
    }

    void add_clause(Clause lits) { clauses.push_back(std::move(lits)); }

    /// Concatenate another clause set; variable counts take the maximum.
    void append(const Cnf& other) {
        num_vars = std::max(num_vars, other.num_vars);
        clauses.insert(clauses.end(), other.clauses.begin(), other.clauses.end());
    }
};

/// Hands out fresh variable indices, never reusing one, and keeps the
/// name map for named (formula) variables.
class VarAllocator {
public:
    int fresh(std::string debug_name = {}) {
        names_.push_back(std::move(debug_name));
        return static_cast<int>(names_.size());
    }

    /// Index of a named variable, registering it on first use.
    int ensure_var(const std::string& name) {
        auto it = by_name_.find(name);
        if (it != by_name_.end()) return it->second;
        int idx = fresh(name);
        by_name_.emplace(name, idx);
        return idx;
    }

    std::optional<int> index_of(const std::string& name) const {
        auto it = by_name_.find(name);
        if (it == by_name_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& name_of(int var) const { return names_.at(var - 1); }

    int count() const { return static_cast<int>(names_.size()); }

private:
    std::vector<std::string> names_;
    std::map<std::string, int> by_name_;
};

namespace detail {

struct TseitinContext {
    VarAllocator& alloc;
    Cnf& out;
    int false_var = 0;

    int literal_for_false() {
        if (false_var == 0) {
            false_var = alloc.fresh("_false");
            out.add_clause({-false_var});
        }
        return false_var;
    }
};

inline void emit_gate(TseitinContext& ctx, const Formula& f, Literal out);

/// Literal standing for a subformula: formula variables and the constant
/// reuse their own index, composites get a fresh defined variable.
inline Literal subformula_literal(TseitinContext& ctx, const Formula& f) {
    switch (f.kind()) {
        case Formula::Kind::Var: {
            auto idx = ctx.alloc.index_of(f.var_name());
            if (!idx)
                throw std::logic_error("tseitin: unregistered variable " + f.var_name());
            return *idx;
        }
        case Formula::Kind::ConstFalse:
            return ctx.literal_for_false();
        default: {
            Literal x = ctx.alloc.fresh();
            emit_gate(ctx, f, x);
            return x;
        }
    }
}

inline void emit_gate(TseitinContext& ctx, const Formula& f, Literal out) {
    switch (f.kind()) {
        case Formula::Kind::Var: {
            auto idx = ctx.alloc.index_of(f.var_name());
            if (!idx)
                throw std::logic_error("tseitin: unregistered variable " + f.var_name());
            ctx.out.add_clause({-out, *idx});
            ctx.out.add_clause({out, -*idx});
            return;
        }
        case Formula::Kind::ConstFalse:
            ctx.out.add_clause({-out});
            return;
        case Formula::Kind::Not: {
            Literal a = subformula_literal(ctx, f.operand());
            ctx.out.add_clause({-out, -a});
            ctx.out.add_clause({out, a});
            return;
        }
        case Formula::Kind::Binary: {
            Literal a = subformula_literal(ctx, f.left());
            Literal b = subformula_literal(ctx, f.right());
            switch (f.connective()) {
                case Connective::And:
                    ctx.out.add_clause({-out, a});
                    ctx.out.add_clause({-out, b});
                    ctx.out.add_clause({out, -a, -b});
                    return;
                case Connective::Or:
                    ctx.out.add_clause({-out, a, b});
                    ctx.out.add_clause({out, -a});
                    ctx.out.add_clause({out, -b});
                    return;
                case Connective::Implies:
                    ctx.out.add_clause({-out, -a, b});
                    ctx.out.add_clause({out, a});
                    ctx.out.add_clause({out, -b});
                    return;
            }
        }
    }
}

}  // namespace detail

/// Clauses defining out <-> f, with full biconditional definitions for every
/// composite subformula (both directions are needed when the encoding sits
/// under a universal quantifier). Formula variables must already be
/// registered in the allocator; internal leaves reuse their index directly.
/// Clause count is linear in the formula size.
inline Cnf tseitin(const Formula& f, Literal out, VarAllocator& alloc) {
    Cnf cnf;
    detail::TseitinContext ctx{alloc, cnf};
    detail::emit_gate(ctx, f, out);
    cnf.num_vars = alloc.count();
    return cnf;
}

/// Exactly one of the literals is true: one at-least-one clause plus
/// pairwise at-most-one clauses.
inline Cnf exactly_one(const std::vector<Literal>& lits) {
    if (lits.empty())
        throw std::invalid_argument("exactly_one over an empty literal list");
    Cnf cnf;
    cnf.add_clause(Clause(lits.begin(), lits.end()));
    for (std::size_t i = 0; i < lits.size(); ++i)
        for (std::size_t j = i + 1; j < lits.size(); ++j)
            cnf.add_clause({-lits[i], -lits[j]});
    return cnf;
}

/// At most k of the literals are true, by the sequential-counter encoding.
/// Auxiliary counter variables come from the allocator; assignments of the
/// input literals extend to the auxiliaries iff at most k are true.
inline Cnf at_most_k(const std::vector<Literal>& lits, int k, VarAllocator& alloc) {
    int n = static_cast<int>(lits.size());
    if (k < 0 || k > n)
        throw std::invalid_argument("at_most_k: bound out of range");
    Cnf cnf;
    if (k == n) return cnf;
    if (k == 0) {
        for (Literal l : lits) cnf.add_clause({-l});
        return cnf;
    }
    // s[i][j] (i in 0..n-2, j in 0..k-1): the count over lits[0..i] is > j.
    std::vector<std::vector<int>> s(n - 1, std::vector<int>(k));
    for (auto& row : s)
        for (auto& v : row) v = alloc.fresh();

    cnf.add_clause({-lits[0], s[0][0]});
    for (int j = 1; j < k; ++j) cnf.add_clause({-s[0][j]});
    for (int i = 1; i < n - 1; ++i) {
        cnf.add_clause({-lits[i], s[i][0]});
        cnf.add_clause({-s[i - 1][0], s[i][0]});
        for (int j = 1; j < k; ++j) {
            cnf.add_clause({-lits[i], -s[i - 1][j - 1], s[i][j]});
            cnf.add_clause({-s[i - 1][j], s[i][j]});
        }
        cnf.add_clause({-lits[i], -s[i - 1][k - 1]});
    }
    cnf.add_clause({-lits[n - 1], -s[n - 2][k - 1]});
    cnf.num_vars = alloc.count();
    return cnf;
}

// ---------------------------------------------------------------------------
// DIMACS
// ---------------------------------------------------------------------------

class dimacs_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string write_dimacs(const Cnf& cnf) {
    std::ostringstream out;
    out << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
    for (const Clause& clause : cnf.clauses) {
        for (Literal l : clause) out << l << ' ';
        out << "0\n";
    }
    return out.str();
}

inline Cnf parse_dimacs(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Cnf cnf;
    long declared_clauses = -1;
    bool header_seen = false;
    Clause current;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == 'c') continue;
        if (line[0] == 'p') {
            std::istringstream hs(line);
            std::string p, fmt;
            long vars = -1, clauses = -1;
            hs >> p >> fmt >> vars >> clauses;
            if (p != "p" || fmt != "cnf" || vars < 0 || clauses < 0 || hs.fail())
                throw dimacs_error("malformed DIMACS header: " + line);
            cnf.num_vars = static_cast<int>(vars);
            declared_clauses = clauses;
            header_seen = true;
            continue;
        }
        if (!header_seen) throw dimacs_error("clause before DIMACS header");
        std::istringstream ls(line);
        long lit;
        while (ls >> lit) {
            if (lit == 0) {
                cnf.clauses.push_back(current);
                current.clear();
            } else {
                if (std::abs(lit) > cnf.num_vars)
                    throw dimacs_error("literal " + std::to_string(lit) +
                                       " out of range for " +
                                       std::to_string(cnf.num_vars) + " variables");
                current.push_back(static_cast<Literal>(lit));
            }
        }
    }
    if (!header_seen) throw dimacs_error("missing DIMACS header");
    if (!current.empty()) throw dimacs_error("clause missing terminating 0");
    if (declared_clauses >= 0 &&
        declared_clauses != static_cast<long>(cnf.clauses.size()))
        throw dimacs_error("clause count mismatch: header declares " +
                           std::to_string(declared_clauses) + ", found " +
                           std::to_string(cnf.clauses.size()));
    return cnf;
}

}  // namespace boolmin
