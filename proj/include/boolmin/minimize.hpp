#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "boolmin/cnf.hpp"
#include "boolmin/enumeration.hpp"
#include "boolmin/formula.hpp"
#include "boolmin/qbf.hpp"
#include "boolmin/sat.hpp"

namespace boolmin {

enum class QbfMode { Fast, Exact };

struct SolverBackend {
    enum class Kind { Internal, External };
    Kind kind = Kind::Internal;
    std::string path;  // external executable

    static SolverBackend internal() { return {}; }
    static SolverBackend external(std::string p) {
        return {Kind::External, std::move(p)};
    }
};

struct MinimizeConfig {
    /// Admissible binary connectives for candidate formulae.
    std::vector<Connective> output_connectives{Connective::And, Connective::Or,
                                               Connective::Implies};
    bool allow_not = true;
    bool allow_false_leaf = true;
    /// Fast: minimize size within the smallest feasible scheme depth.
    /// Exact: globally size-minimal output (the default for the library;
    /// the CLI defaults to Fast).
    QbfMode qbf_mode = QbfMode::Exact;
    SolverBackend sat_backend;
    SolverBackend qbf_backend;
    /// Wall-clock budget for one minimization call.
    std::optional<double> budget_ms;
    int expansion_cap = kExpansionCap;
    /// Scheme depth never exceeds this; it bounds the exact-mode guarantee
    /// for inputs whose minimal equivalents would need deeper templates.
    int depth_cap = 12;
    std::uint64_t solver_seed = 0;
};

enum class MinimizeStatus { Ok, Timeout };

struct MinimizationResult {
    MinimizeStatus status = MinimizeStatus::Ok;
    std::optional<Formula> output;
    int output_size = 0;
    std::uint64_t candidates_tested = 0;
    std::uint64_t solver_calls = 0;
    double elapsed_ms = 0.0;
};

namespace detail {

class Deadline {
public:
    explicit Deadline(std::optional<double> budget_ms)
        : start_(std::chrono::steady_clock::now()), budget_ms_(budget_ms) {}

    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

    bool expired() const { return budget_ms_ && elapsed_ms() >= *budget_ms_; }

    /// Remaining budget, if any; never negative.
    std::optional<double> remaining_ms() const {
        if (!budget_ms_) return std::nullopt;
        return std::max(0.0, *budget_ms_ - elapsed_ms());
    }

private:
    std::chrono::steady_clock::time_point start_;
    std::optional<double> budget_ms_;
};

inline std::vector<std::string> sorted_vars(const Formula& f) {
    auto set = f.vars();
    return {set.begin(), set.end()};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scheme: the complete binary candidate template
// ---------------------------------------------------------------------------

/// One position of the template. Selector variables live in the outer
/// existential block; the value variable z lives in the inner block. A
/// selector value of 0 means the option is absent at this node.
struct SchemeNode {
    int value_var = 0;                 // z^i
    int sel_false = 0;                 // leaf option: constant false
    int sel_dummy = 0;                 // node unused
    std::vector<int> sel_var;          // aligned with Scheme::universals
    int sel_not = 0;                   // internal option: negation
    std::vector<int> sel_conn;         // aligned with Scheme::connectives

    void collect_selectors(std::vector<int>& out) const {
        if (sel_false) out.push_back(sel_false);
        out.push_back(sel_dummy);
        for (int s : sel_var) out.push_back(s);
        if (sel_not) out.push_back(sel_not);
        for (int s : sel_conn) out.push_back(s);
    }
};

/// Complete binary template of a given depth with per-node selector
/// variables; a satisfying outer assignment encodes one concrete formula.
/// Nodes are stored in heap order: children of node i are 2i+1 and 2i+2.
struct Scheme {
    int depth = 0;
    std::vector<std::pair<int, std::string>> universals;  // (var id, name)
    std::vector<Connective> connectives;
    std::vector<SchemeNode> nodes;

    bool is_leaf(std::size_t i) const { return 2 * i + 1 >= nodes.size(); }

    int root_value_var() const { return nodes.at(0).value_var; }

    std::vector<int> selector_vars() const {
        std::vector<int> out;
        for (const auto& n : nodes) n.collect_selectors(out);
        return out;
    }

    /// One literal per node, true iff the node is used.
    std::vector<Literal> used_node_literals() const {
        std::vector<Literal> out;
        out.reserve(nodes.size());
        for (const auto& n : nodes) out.push_back(-n.sel_dummy);
        return out;
    }
};

/// Build the template of the given depth over the universal (input
/// formula) variables. Emits, per node: the semantic constraints tying the
/// node value to the selected symbol, an exactly-one constraint over the
/// node's selectors, and the pruning clauses that force the unused
/// children of leaf-valued and negation nodes to dummy. The root is
/// forbidden from being dummy: with an all-dummy template every node value
/// is unconstrained and the equivalence query would be vacuously true.
inline std::pair<Scheme, Cnf> build_scheme(
    int depth, const std::vector<std::pair<int, std::string>>& universals,
    const MinimizeConfig& cfg, VarAllocator& alloc) {
    if (depth < 0) throw std::invalid_argument("scheme depth must be >= 0");

    Scheme scheme;
    scheme.depth = depth;
    scheme.universals = universals;
    scheme.connectives = cfg.output_connectives;
    std::size_t node_count = (std::size_t{2} << depth) - 1;
    scheme.nodes.resize(node_count);

    Cnf cnf;
    for (std::size_t i = 0; i < node_count; ++i) {
        SchemeNode& node = scheme.nodes[i];
        bool leaf = scheme.is_leaf(i);
        node.value_var = alloc.fresh("z@" + std::to_string(i));
        if (cfg.allow_false_leaf)
            node.sel_false = alloc.fresh("x_false@" + std::to_string(i));
        node.sel_dummy = alloc.fresh("x_dummy@" + std::to_string(i));
        node.sel_var.reserve(universals.size());
        for (const auto& [var_id, name] : universals)
            node.sel_var.push_back(alloc.fresh("x_" + name + "@" + std::to_string(i)));
        if (!leaf) {
            if (cfg.allow_not)
                node.sel_not = alloc.fresh("x_not@" + std::to_string(i));
            node.sel_conn.reserve(cfg.output_connectives.size());
            for (Connective c : cfg.output_connectives)
                node.sel_conn.push_back(alloc.fresh(
                    std::string("x_") + connective_name(c) + "@" + std::to_string(i)));
        }
    }

    for (std::size_t i = 0; i < node_count; ++i) {
        const SchemeNode& node = scheme.nodes[i];
        int z = node.value_var;

        if (node.sel_false) cnf.add_clause({-node.sel_false, -z});
        for (std::size_t j = 0; j < universals.size(); ++j) {
            int y = universals[j].first;
            int s = node.sel_var[j];
            cnf.add_clause({-s, -z, y});
            cnf.add_clause({-s, z, -y});
        }

        if (!scheme.is_leaf(i)) {
            const SchemeNode& lc = scheme.nodes[2 * i + 1];
            const SchemeNode& rc = scheme.nodes[2 * i + 2];
            int zl = lc.value_var;
            int zr = rc.value_var;

            if (node.sel_not) {
                cnf.add_clause({-node.sel_not, -z, -zl});
                cnf.add_clause({-node.sel_not, z, zl});
                cnf.add_clause({-node.sel_not, rc.sel_dummy});
            }
            for (std::size_t ci = 0; ci < scheme.connectives.size(); ++ci) {
                int s = node.sel_conn[ci];
                switch (scheme.connectives[ci]) {
                    case Connective::And:
                        cnf.add_clause({-s, -z, zl});
                        cnf.add_clause({-s, -z, zr});
                        cnf.add_clause({-s, z, -zl, -zr});
                        break;
                    case Connective::Or:
                        cnf.add_clause({-s, z, -zl});
                        cnf.add_clause({-s, z, -zr});
                        cnf.add_clause({-s, -z, zl, zr});
                        break;
                    case Connective::Implies:
                        cnf.add_clause({-s, z, zl});
                        cnf.add_clause({-s, z, -zr});
                        cnf.add_clause({-s, -z, -zl, zr});
                        break;
                }
            }

            // A node valued as a leaf symbol, or unused, uses no children.
            auto force_children_dummy = [&](int s) {
                cnf.add_clause({-s, lc.sel_dummy});
                cnf.add_clause({-s, rc.sel_dummy});
            };
            if (node.sel_false) force_children_dummy(node.sel_false);
            force_children_dummy(node.sel_dummy);
            for (int s : node.sel_var) force_children_dummy(s);
        }

        std::vector<int> selectors;
        node.collect_selectors(selectors);
        cnf.append(exactly_one(std::vector<Literal>(selectors.begin(), selectors.end())));
    }

    cnf.add_clause({-scheme.nodes[0].sel_dummy});
    cnf.num_vars = alloc.count();
    return {std::move(scheme), std::move(cnf)};
}

/// Read the formula encoded by an outer-existential model. Walks the used
/// part of the template from the root; throws if a visited node does not
/// have exactly one true selector or the root is unused.
inline Formula decode_scheme(const Scheme& scheme, const std::map<int, bool>& outer_model) {
    auto truth = [&](int var) {
        auto it = outer_model.find(var);
        return it != outer_model.end() && it->second;
    };

    struct Walker {
        const Scheme& scheme;
        const decltype(truth)& is_true;

        Formula decode(std::size_t i) const {
            const SchemeNode& node = scheme.nodes.at(i);
            int chosen = 0;
            enum class Pick { False, Var, Not, Conn, Dummy } pick = Pick::Dummy;
            std::size_t pick_index = 0;
            auto take = [&](int var, Pick p, std::size_t idx) {
                if (var == 0 || !is_true(var)) return;
                if (chosen != 0)
                    throw std::logic_error("scheme model selects two symbols at node " +
                                           std::to_string(i));
                chosen = var;
                pick = p;
                pick_index = idx;
            };
            take(node.sel_false, Pick::False, 0);
            take(node.sel_dummy, Pick::Dummy, 0);
            for (std::size_t j = 0; j < node.sel_var.size(); ++j)
                take(node.sel_var[j], Pick::Var, j);
            take(node.sel_not, Pick::Not, 0);
            for (std::size_t j = 0; j < node.sel_conn.size(); ++j)
                take(node.sel_conn[j], Pick::Conn, j);
            if (chosen == 0)
                throw std::logic_error("scheme model selects no symbol at node " +
                                       std::to_string(i));
            switch (pick) {
                case Pick::False:
                    return Formula::constant_false();
                case Pick::Var:
                    return Formula::var(scheme.universals[pick_index].second);
                case Pick::Not:
                    return Formula::negation(decode(2 * i + 1));
                case Pick::Conn:
                    return Formula::binary(scheme.connectives[pick_index],
                                           decode(2 * i + 1), decode(2 * i + 2));
                case Pick::Dummy:
                    throw std::logic_error("scheme model reaches a dummy node at " +
                                           std::to_string(i));
            }
            throw std::logic_error("unreachable");
        }
    };

    return Walker{scheme, truth}.decode(0);
}

// ---------------------------------------------------------------------------
// The equivalence query behind the QBF algorithm
// ---------------------------------------------------------------------------

/// Everything needed to pose and decode one depth-bounded equivalence
/// question about a formula.
struct SchemeQuery {
    QbfInstance instance;
    Scheme scheme;
};

/// Construct the query: a three-block instance whose matrix is the input
/// formula's CNF definition, the template clauses, the root equality, and
/// an optional cardinality bound on used template nodes. The outer
/// existential block holds exactly the selector variables; the universal
/// block holds the input formula's variables; all defined value and
/// counter variables sit in the inner block.
inline SchemeQuery build_equivalence_query(const Formula& f, int depth,
                                           std::optional<int> size_bound,
                                           const MinimizeConfig& cfg) {
    VarAllocator alloc;
    std::vector<std::pair<int, std::string>> universals;
    for (const auto& name : detail::sorted_vars(f))
        universals.emplace_back(alloc.ensure_var(name), name);

    int z_input = alloc.fresh("z_input");
    Cnf matrix = tseitin(f, z_input, alloc);

    auto [scheme, scheme_cnf] = build_scheme(depth, universals, cfg, alloc);
    matrix.append(scheme_cnf);

    int z_root = scheme.root_value_var();
    matrix.add_clause({-z_input, z_root});
    matrix.add_clause({z_input, -z_root});

    if (size_bound) {
        if (*size_bound < 0)
            throw std::invalid_argument("size bound must be nonnegative");
        std::vector<Literal> used = scheme.used_node_literals();
        if (*size_bound < static_cast<int>(used.size()))
            matrix.append(at_most_k(used, *size_bound, alloc));
    }
    matrix.num_vars = alloc.count();

    QbfInstance instance;
    instance.matrix = std::move(matrix);
    instance.outer_exists = scheme.selector_vars();
    for (const auto& [var_id, name] : universals)
        instance.universals.push_back(var_id);

    std::vector<char> placed(instance.matrix.num_vars + 1, 0);
    for (int v : instance.outer_exists) placed[v] = 1;
    for (int v : instance.universals) placed[v] = 1;
    for (int v = 1; v <= instance.matrix.num_vars; ++v)
        if (!placed[v]) instance.inner_exists.push_back(v);

    return {std::move(instance), std::move(scheme)};
}

/// A true verdict that arrived without an outer model cannot be decoded
/// into a formula.
class no_outer_model_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline QbfResult solve_qbf_backend(const QbfInstance& instance,
                                   const MinimizeConfig& cfg,
                                   std::optional<double> budget_ms) {
    if (cfg.qbf_backend.kind == SolverBackend::Kind::External)
        return solve_external(instance, cfg.qbf_backend.path, budget_ms);
    return solve_expansion(instance, budget_ms, cfg.expansion_cap, cfg.solver_seed);
}

inline SatResult solve_sat_backend(const Cnf& cnf, const MinimizeConfig& cfg,
                                   std::optional<double> budget_ms) {
    if (cfg.sat_backend.kind == SolverBackend::Kind::External)
        return solve_external(cnf, cfg.sat_backend.path, budget_ms);
    return solve(cnf, budget_ms, cfg.solver_seed);
}

}  // namespace detail

/// Is some formula of depth <= depth (and size <= size_bound, when given)
/// over the input's variables, the configured connectives, negation, and
/// the false constant equivalent to f? True verdicts must carry an outer
/// model so the formula can be decoded.
inline QbfResult equivalent_qbf(const Formula& f, int depth,
                                std::optional<int> size_bound,
                                const MinimizeConfig& cfg,
                                std::optional<double> budget_ms = std::nullopt) {
    SchemeQuery query = build_equivalence_query(f, depth, size_bound, cfg);
    QbfResult result = detail::solve_qbf_backend(query.instance, cfg, budget_ms);
    if (result.status == QbfStatus::TrueNoModel)
        throw no_outer_model_error(
            "QBF backend cannot report outer models; decoding requires one");
    return result;
}

// ---------------------------------------------------------------------------
// The three minimization algorithms
// ---------------------------------------------------------------------------

namespace detail {

inline FormulaSpace candidate_space(const Formula& f, const MinimizeConfig& cfg) {
    return FormulaSpace{sorted_vars(f), cfg.output_connectives, cfg.allow_not,
                        cfg.allow_false_leaf};
}

inline void check_sound(const Formula& input, const Formula& output) {
    if (!equivalent_tt(input, output))
        throw std::logic_error("minimizer produced a non-equivalent formula");
}

[[noreturn]] inline void throw_no_equivalent() {
    throw std::runtime_error(
        "no equivalent found in the candidate space; the output connective "
        "set cannot express the input within the search bounds");
}

}  // namespace detail

/// Search candidates of size 1, 2, ... in enumeration order and return the
/// first whose truth table matches. The assignment loop exits on the first
/// mismatching row.
inline MinimizationResult minimize_bruteforce(const Formula& f,
                                              const MinimizeConfig& cfg = {}) {
    detail::Deadline deadline(cfg.budget_ms);
    MinimizationResult res;

    FormulaSpace space = detail::candidate_space(f, cfg);
    int n = static_cast<int>(space.variables.size());
    if (n > kTruthTableVarCap)
        throw std::length_error("too many variables for truth-table search");
    std::map<std::string, int> positions;
    for (int j = 0; j < n; ++j) positions.emplace(space.variables[j], j);

    std::uint32_t rows = std::uint32_t{1} << n;
    std::vector<bool> target(rows);
    for (std::uint32_t r = 0; r < rows; ++r)
        target[r] = detail::eval_indexed(f, positions, n, r);

    for (int candidate_size = 1; candidate_size <= f.size(); ++candidate_size) {
        std::optional<Formula> found;
        bool timed_out = false;
        for_each_formula(space, candidate_size, [&](const Formula& candidate) {
            ++res.candidates_tested;
            if ((res.candidates_tested & 0x3FF) == 0 && deadline.expired()) {
                timed_out = true;
                return false;
            }
            for (std::uint32_t r = 0; r < rows; ++r)
                if (detail::eval_indexed(candidate, positions, n, r) != target[r])
                    return true;
            found = candidate;
            return false;
        });
        if (timed_out) {
            res.status = MinimizeStatus::Timeout;
            res.elapsed_ms = deadline.elapsed_ms();
            return res;
        }
        if (found) {
            detail::check_sound(f, *found);
            res.output = std::move(found);
            res.output_size = res.output->size();
            res.elapsed_ms = deadline.elapsed_ms();
            return res;
        }
    }
    detail::throw_no_equivalent();
}

/// Same search order as the brute-force algorithm, but each candidate is
/// checked by refuting the clause set
///   tseitin(f, x1) + tseitin(candidate, x2) + (x1 xor x2):
/// the candidate is equivalent exactly when the solver reports
/// unsatisfiable.
inline MinimizationResult minimize_sat(const Formula& f,
                                       const MinimizeConfig& cfg = {}) {
    detail::Deadline deadline(cfg.budget_ms);
    MinimizationResult res;

    FormulaSpace space = detail::candidate_space(f, cfg);

    for (int candidate_size = 1; candidate_size <= f.size(); ++candidate_size) {
        std::optional<Formula> found;
        bool timed_out = false;
        for_each_formula(space, candidate_size, [&](const Formula& candidate) {
            ++res.candidates_tested;
            if (deadline.expired()) {
                timed_out = true;
                return false;
            }
            VarAllocator alloc;
            for (const auto& name : space.variables) alloc.ensure_var(name);
            int x1 = alloc.fresh("x1");
            int x2 = alloc.fresh("x2");
            Cnf gamma = tseitin(f, x1, alloc);
            gamma.append(tseitin(candidate, x2, alloc));
            gamma.add_clause({x1, x2});
            gamma.add_clause({-x1, -x2});
            gamma.num_vars = alloc.count();

            ++res.solver_calls;
            SatResult verdict = detail::solve_sat_backend(gamma, cfg, deadline.remaining_ms());
            if (verdict.status == SatStatus::Timeout) {
                timed_out = true;
                return false;
            }
            if (verdict.status == SatStatus::Unsatisfiable) {
                found = candidate;
                return false;
            }
            return true;
        });
        if (timed_out) {
            res.status = MinimizeStatus::Timeout;
            res.elapsed_ms = deadline.elapsed_ms();
            return res;
        }
        if (found) {
            detail::check_sound(f, *found);
            res.output = std::move(found);
            res.output_size = res.output->size();
            res.elapsed_ms = deadline.elapsed_ms();
            return res;
        }
    }
    detail::throw_no_equivalent();
}

/// Minimize through the template encoding.
///
/// Fast mode finds the smallest depth admitting an equivalent, then
/// tightens the node-count bound at that depth until the query flips to
/// false; the result is size-minimal among formulae of that depth. Exact
/// mode instead asks one query per size bound k = 1, 2, ... with depth
/// k - 1 (a size-k formula can need no more), so the first decodable
/// answer is globally size-minimal, subject to the configured depth cap.
inline MinimizationResult minimize_qbf(const Formula& f,
                                       const MinimizeConfig& cfg = {}) {
    detail::Deadline deadline(cfg.budget_ms);
    MinimizationResult res;

    auto timeout_result = [&] {
        MinimizationResult r;
        r.status = MinimizeStatus::Timeout;
        r.solver_calls = res.solver_calls;
        r.elapsed_ms = deadline.elapsed_ms();
        return r;
    };

    auto ok_result = [&](Formula output) {
        detail::check_sound(f, output);
        res.output = std::move(output);
        res.output_size = res.output->size();
        res.elapsed_ms = deadline.elapsed_ms();
        return res;
    };

    if (cfg.qbf_mode == QbfMode::Exact) {
        for (int k = 1; k <= f.size(); ++k) {
            int depth = std::min(k - 1, cfg.depth_cap);
            if (deadline.expired()) return timeout_result();
            SchemeQuery query = build_equivalence_query(f, depth, k, cfg);
            ++res.solver_calls;
            QbfResult verdict =
                detail::solve_qbf_backend(query.instance, cfg, deadline.remaining_ms());
            if (verdict.status == QbfStatus::Timeout) return timeout_result();
            if (verdict.status == QbfStatus::TrueNoModel)
                throw no_outer_model_error(
                    "QBF backend cannot report outer models; exact minimization "
                    "requires decoding");
            if (verdict.status == QbfStatus::True) {
                Formula decoded = decode_scheme(query.scheme, verdict.outer_model);
                if (decoded.size() > k)
                    throw std::logic_error("decoded formula exceeds the size bound");
                return ok_result(std::move(decoded));
            }
        }
        detail::throw_no_equivalent();
    }

    // Fast mode.
    int depth_limit = std::min(f.depth(), cfg.depth_cap);
    std::optional<Formula> best;
    int best_depth = 0;
    for (int depth = 0; depth <= depth_limit; ++depth) {
        if (deadline.expired()) return timeout_result();
        SchemeQuery query = build_equivalence_query(f, depth, std::nullopt, cfg);
        ++res.solver_calls;
        QbfResult verdict =
            detail::solve_qbf_backend(query.instance, cfg, deadline.remaining_ms());
        if (verdict.status == QbfStatus::Timeout) return timeout_result();
        if (verdict.status == QbfStatus::TrueNoModel)
            throw no_outer_model_error(
                "QBF backend cannot report outer models; decoding requires one");
        if (verdict.status == QbfStatus::True) {
            best = decode_scheme(query.scheme, verdict.outer_model);
            best_depth = depth;
            break;
        }
    }
    if (!best) detail::throw_no_equivalent();

    while (best->size() > 1) {
        if (deadline.expired()) return timeout_result();
        SchemeQuery query =
            build_equivalence_query(f, best_depth, best->size() - 1, cfg);
        ++res.solver_calls;
        QbfResult verdict =
            detail::solve_qbf_backend(query.instance, cfg, deadline.remaining_ms());
        if (verdict.status == QbfStatus::Timeout) return timeout_result();
        if (verdict.status == QbfStatus::TrueNoModel)
            throw no_outer_model_error(
                "QBF backend cannot report outer models; decoding requires one");
        if (verdict.status == QbfStatus::False) break;
        best = decode_scheme(query.scheme, verdict.outer_model);
    }

    // Depth-restricted minima can in principle exceed the input; the input
    // itself is then the smaller answer.
    if (best->size() > f.size()) best = f;
    return ok_result(std::move(*best));
}

/// Dispatch by algorithm name ("brute", "sat", "qbf").
inline MinimizationResult minimize(const Formula& f, const std::string& algorithm,
                                   const MinimizeConfig& cfg = {}) {
    if (algorithm == "brute") return minimize_bruteforce(f, cfg);
    if (algorithm == "sat") return minimize_sat(f, cfg);
    if (algorithm == "qbf") return minimize_qbf(f, cfg);
    throw std::invalid_argument("unknown algorithm: " + algorithm);
}

}  // namespace boolmin
