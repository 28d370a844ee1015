#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "boolmin/cnf.hpp"

namespace boolmin {

enum class SatStatus { Satisfiable, Unsatisfiable, Timeout };

struct SatResult {
    SatStatus status;
    /// For Satisfiable: model[v] for v in 1..num_vars (index 0 unused).
    std::vector<bool> model;
    double elapsed_ms = 0.0;
    std::uint64_t conflicts = 0;
    std::uint64_t decisions = 0;
    std::uint64_t propagations = 0;
};

/// Conflict-driven clause learning solver: two-watched-literal propagation,
/// first-UIP learning with local clause minimization, activity-based
/// decision order with phase saving, and Luby restarts. Learned-clause
/// deletion stays off until the database passes ten thousand clauses.
///
/// A solver instance is single-owner; distinct instances are independent.
class CdclSolver {
public:
    explicit CdclSolver(const Cnf& cnf, std::uint64_t seed = 0)
        : num_vars_(cnf.num_vars) {
        value_.assign(num_vars_ + 1, 0);
        level_.assign(num_vars_ + 1, 0);
        reason_.assign(num_vars_ + 1, -1);
        seen_.assign(num_vars_ + 1, 0);
        polarity_.assign(num_vars_ + 1, 0);
        activity_.assign(num_vars_ + 1, 0.0);
        watches_.assign(2 * num_vars_ + 2, {});
        if (seed != 0) {
            // Tiny seeded perturbation so distinct seeds explore distinct
            // (but reproducible) decision orders.
            std::uint64_t x = seed;
            for (int v = 1; v <= num_vars_; ++v) {
                x ^= x << 13; x ^= x >> 7; x ^= x << 17;
                activity_[v] = static_cast<double>(x % 1000) * 1e-9;
            }
        }
        order_.init(num_vars_, &activity_);

        for (const Clause& c : cnf.clauses) {
            if (!add_input_clause(c)) {
                unsat_on_input_ = true;
                break;
            }
        }
        num_original_ = static_cast<int>(clauses_.size());
    }

    SatResult solve(std::optional<double> budget_ms = std::nullopt) {
        auto start = std::chrono::steady_clock::now();
        auto elapsed = [&] {
            return std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                .count();
        };
        SatResult res;
        res.status = SatStatus::Unsatisfiable;

        if (!unsat_on_input_) {
            res.status = search(budget_ms, start);
        }
        res.elapsed_ms = elapsed();
        res.conflicts = stats_conflicts_;
        res.decisions = stats_decisions_;
        res.propagations = stats_propagations_;
        if (res.status == SatStatus::Satisfiable) {
            res.model.assign(num_vars_ + 1, false);
            for (int v = 1; v <= num_vars_; ++v) res.model[v] = value_[v] > 0;
            check_model(res.model);
        }
        return res;
    }

    /// True iff the assignment satisfies every input clause.
    static bool satisfies(const Cnf& cnf, const std::vector<bool>& model) {
        for (const Clause& c : cnf.clauses) {
            bool sat = false;
            for (Literal l : c) {
                int v = std::abs(l);
                if (v < static_cast<int>(model.size()) && model[v] == (l > 0)) {
                    sat = true;
                    break;
                }
            }
            if (!sat) return false;
        }
        return true;
    }

private:
    // ----- literal plumbing -------------------------------------------------

    static int widx(Literal l) {
        return 2 * std::abs(l) + (l < 0 ? 1 : 0);
    }

    int lit_value(Literal l) const {  // 1 true, -1 false, 0 unassigned
        int v = value_[std::abs(l)];
        return l > 0 ? v : -v;
    }

    void assign(Literal l, int reason_clause) {
        int v = std::abs(l);
        value_[v] = l > 0 ? 1 : -1;
        level_[v] = current_level();
        reason_[v] = reason_clause;
        trail_.push_back(l);
    }

    int current_level() const { return static_cast<int>(trail_lim_.size()); }

    // ----- input ------------------------------------------------------------

    bool add_input_clause(const Clause& in) {
        Clause c(in);
        std::sort(c.begin(), c.end(), [](Literal a, Literal b) {
            int va = std::abs(a), vb = std::abs(b);
            return va != vb ? va < vb : a < b;
        });
        Clause dedup;
        for (Literal l : c) {
            if (std::abs(l) > num_vars_)
                throw std::invalid_argument("clause literal out of range");
            if (!dedup.empty() && dedup.back() == l) continue;
            if (!dedup.empty() && dedup.back() == -l) return true;  // tautology
            dedup.push_back(l);
        }
        if (dedup.empty()) return false;
        if (dedup.size() == 1) {
            int val = lit_value(dedup[0]);
            if (val < 0) return false;
            if (val == 0) assign(dedup[0], -1);
            return true;
        }
        attach_clause(std::move(dedup));
        return true;
    }

    void attach_clause(Clause c) {
        int idx = static_cast<int>(clauses_.size());
        watches_[widx(-c[0])].push_back({idx, c[1]});
        watches_[widx(-c[1])].push_back({idx, c[0]});
        clauses_.push_back(std::move(c));
        clause_activity_.push_back(0.0);
    }

    // ----- propagation ------------------------------------------------------

    struct Watcher {
        int clause;
        Literal blocker;
    };

    /// Returns the conflicting clause index or -1.
    int propagate() {
        while (qhead_ < trail_.size()) {
            Literal p = trail_[qhead_++];
            ++stats_propagations_;
            auto& ws = watches_[widx(p)];  // clauses watching -p
            std::size_t keep = 0;
            for (std::size_t i = 0; i < ws.size(); ++i) {
                Watcher w = ws[i];
                if (lit_value(w.blocker) > 0) {
                    ws[keep++] = w;
                    continue;
                }
                Clause& c = clauses_[w.clause];
                Literal false_lit = -p;
                if (c[0] == false_lit) std::swap(c[0], c[1]);
                // c[1] is the false watched literal now.
                if (lit_value(c[0]) > 0) {
                    ws[keep++] = {w.clause, c[0]};
                    continue;
                }
                bool moved = false;
                for (std::size_t k = 2; k < c.size(); ++k) {
                    if (lit_value(c[k]) >= 0) {
                        std::swap(c[1], c[k]);
                        watches_[widx(-c[1])].push_back({w.clause, c[0]});
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                // Unit or conflicting.
                ws[keep++] = {w.clause, c[0]};
                if (lit_value(c[0]) < 0) {
                    // Conflict: keep remaining watchers, restore queue state.
                    for (std::size_t k = i + 1; k < ws.size(); ++k)
                        ws[keep++] = ws[k];
                    ws.resize(keep);
                    qhead_ = trail_.size();
                    return w.clause;
                }
                assign(c[0], w.clause);
            }
            ws.resize(keep);
        }
        return -1;
    }

    // ----- conflict analysis ------------------------------------------------

    void bump_var(int v) {
        activity_[v] += var_inc_;
        if (activity_[v] > 1e100) {
            for (int u = 1; u <= num_vars_; ++u) activity_[u] *= 1e-100;
            var_inc_ *= 1e-100;
        }
        order_.update(v);
    }

    void bump_clause(int ci) {
        clause_activity_[ci] += clause_inc_;
        if (clause_activity_[ci] > 1e20) {
            for (auto& a : clause_activity_) a *= 1e-20;
            clause_inc_ *= 1e-20;
        }
    }

    /// First-UIP learned clause; returns the backtrack level.
    int analyze(int confl, Clause& learnt) {
        learnt.clear();
        learnt.push_back(0);  // slot for the asserting literal
        int counter = 0;
        Literal p = 0;
        std::size_t index = trail_.size();

        do {
            Clause& c = clauses_[confl];
            if (confl >= num_original_) bump_clause(confl);
            for (Literal q : c) {
                if (q == p) continue;
                int v = std::abs(q);
                if (!seen_[v] && level_[v] > 0) {
                    seen_[v] = 1;
                    bump_var(v);
                    if (level_[v] >= current_level())
                        ++counter;
                    else
                        learnt.push_back(q);
                }
            }
            while (!seen_[std::abs(trail_[index - 1])]) --index;
            p = trail_[--index];
            confl = reason_[std::abs(p)];
            seen_[std::abs(p)] = 0;
            --counter;
        } while (counter > 0);
        learnt[0] = -p;

        // Local minimization: drop literals whose reason is covered by the
        // rest of the clause. Redundancy tests need the seen_ marks, so
        // flags are cleared only after all literals are classified.
        std::vector<char> drop(learnt.size(), 0);
        for (std::size_t i = 1; i < learnt.size(); ++i) {
            int v = std::abs(learnt[i]);
            int r = reason_[v];
            if (r < 0) continue;
            bool redundant = true;
            for (Literal q : clauses_[r]) {
                int u = std::abs(q);
                if (u == v) continue;
                if (!seen_[u] && level_[u] > 0) {
                    redundant = false;
                    break;
                }
            }
            drop[i] = redundant;
        }
        for (Literal l : learnt) seen_[std::abs(l)] = 0;
        std::size_t keep = 1;
        for (std::size_t i = 1; i < learnt.size(); ++i)
            if (!drop[i]) learnt[keep++] = learnt[i];
        learnt.resize(keep);

        if (learnt.size() == 1) return 0;
        // Second-highest decision level in the clause.
        std::size_t max_i = 1;
        for (std::size_t i = 2; i < learnt.size(); ++i)
            if (level_[std::abs(learnt[i])] > level_[std::abs(learnt[max_i])]) max_i = i;
        std::swap(learnt[1], learnt[max_i]);
        return level_[std::abs(learnt[1])];
    }

    void backtrack(int target_level) {
        if (current_level() <= target_level) return;
        std::size_t bound = trail_lim_[target_level];
        for (std::size_t i = trail_.size(); i > bound; --i) {
            Literal l = trail_[i - 1];
            int v = std::abs(l);
            polarity_[v] = value_[v];
            value_[v] = 0;
            reason_[v] = -1;
            order_.insert(v);
        }
        trail_.resize(bound);
        trail_lim_.resize(target_level);
        qhead_ = trail_.size();
    }

    // ----- learned clause database -------------------------------------------

    bool clause_locked(int ci) const {
        const Clause& c = clauses_[ci];
        return lit_value(c[0]) > 0 && reason_[std::abs(c[0])] == ci;
    }

    void reduce_db() {
        struct Entry {
            int idx;
            double act;
        };
        std::vector<Entry> learned;
        for (int ci = num_original_; ci < static_cast<int>(clauses_.size()); ++ci)
            if (!clauses_[ci].empty() && !clause_locked(ci) && clauses_[ci].size() > 2)
                learned.push_back({ci, clause_activity_[ci]});
        std::sort(learned.begin(), learned.end(), [](const Entry& a, const Entry& b) {
            return a.act != b.act ? a.act < b.act : a.idx < b.idx;
        });
        std::size_t victims = learned.size() / 2;
        for (std::size_t i = 0; i < victims; ++i)
            clauses_[learned[i].idx].clear();  // tombstone
        rebuild_watches();
    }

    void rebuild_watches() {
        for (auto& ws : watches_) ws.clear();
        for (int ci = 0; ci < static_cast<int>(clauses_.size()); ++ci) {
            Clause& c = clauses_[ci];
            if (c.empty()) continue;
            watches_[widx(-c[0])].push_back({ci, c[1]});
            watches_[widx(-c[1])].push_back({ci, c[0]});
        }
    }

    // ----- search -----------------------------------------------------------

    static std::uint64_t luby(std::uint64_t x) {
        // Luby sequence 1,1,2,1,1,2,4,...
        std::uint64_t size = 1, seq = 0;
        while (size < x + 1) {
            ++seq;
            size = 2 * size + 1;
        }
        while (size - 1 != x) {
            size = (size - 1) / 2;
            --seq;
            x %= size;
        }
        return std::uint64_t{1} << seq;
    }

    SatStatus search(std::optional<double> budget_ms,
                     std::chrono::steady_clock::time_point start) {
        std::uint64_t restart_count = 0;
        std::uint64_t conflicts_until_restart = luby(restart_count) * kRestartBase;
        std::uint64_t conflicts_this_restart = 0;

        while (true) {
            int confl = propagate();
            if (confl != -1) {
                ++stats_conflicts_;
                ++conflicts_this_restart;
                if (current_level() == 0) return SatStatus::Unsatisfiable;
                Clause learnt;
                int bt = analyze(confl, learnt);
                backtrack(bt);
                if (learnt.size() == 1) {
                    assign(learnt[0], -1);
                } else {
                    int ci = static_cast<int>(clauses_.size());
                    attach_clause(learnt);
                    bump_clause(ci);
                    assign(clauses_[ci][0], ci);
                }
                var_inc_ /= kVarDecay;
                clause_inc_ /= kClauseDecay;

                if ((stats_conflicts_ & 0x3FF) == 0 && over_budget(budget_ms, start))
                    return SatStatus::Timeout;
                continue;
            }

            if (conflicts_this_restart >= conflicts_until_restart) {
                ++restart_count;
                conflicts_until_restart = luby(restart_count) * kRestartBase;
                conflicts_this_restart = 0;
                backtrack(0);
                if (over_budget(budget_ms, start)) return SatStatus::Timeout;
                std::size_t learned_count = clauses_.size() - num_original_;
                if (learned_count > kReduceThreshold) reduce_db();
                continue;
            }

            int v = pick_branch_var();
            if (v == 0) return SatStatus::Satisfiable;
            ++stats_decisions_;
            if ((stats_decisions_ & 0xFFF) == 0 && over_budget(budget_ms, start))
                return SatStatus::Timeout;
            trail_lim_.push_back(trail_.size());
            assign(polarity_[v] > 0 ? v : -v, -1);
        }
    }

    bool over_budget(std::optional<double> budget_ms,
                     std::chrono::steady_clock::time_point start) const {
        if (!budget_ms) return false;
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
        return ms > *budget_ms;
    }

    int pick_branch_var() {
        while (!order_.empty()) {
            int v = order_.pop();
            if (value_[v] == 0) return v;
        }
        return 0;
    }

    void check_model(const std::vector<bool>& model) const {
        for (int ci = 0; ci < num_original_; ++ci) {
            const Clause& c = clauses_[ci];
            if (c.empty()) continue;
            bool sat = false;
            for (Literal l : c)
                if (model[std::abs(l)] == (l > 0)) {
                    sat = true;
                    break;
                }
            if (!sat) throw std::logic_error("internal solver returned a bad model");
        }
        // Units assigned before clause storage are on the level-0 trail and
        // are reflected in the model by construction.
    }

    // ----- decision order ----------------------------------------------------

    /// Indexed max-heap over variable activities; ties go to the smaller
    /// variable index, which keeps runs bit-for-bit reproducible.
    class VarOrder {
    public:
        void init(int n, const std::vector<double>* act) {
            act_ = act;
            pos_.assign(n + 1, -1);
            heap_.clear();
            for (int v = 1; v <= n; ++v) insert(v);
        }

        bool empty() const { return heap_.empty(); }

        void insert(int v) {
            if (pos_[v] != -1) return;
            pos_[v] = static_cast<int>(heap_.size());
            heap_.push_back(v);
            up(pos_[v]);
        }

        void update(int v) {
            if (pos_[v] != -1) up(pos_[v]);
        }

        int pop() {
            int top = heap_[0];
            pos_[top] = -1;
            if (heap_.size() > 1) {
                heap_[0] = heap_.back();
                pos_[heap_[0]] = 0;
                heap_.pop_back();
                down(0);
            } else {
                heap_.pop_back();
            }
            return top;
        }

    private:
        bool before(int a, int b) const {
            double aa = (*act_)[a], ab = (*act_)[b];
            return aa != ab ? aa > ab : a < b;
        }

        void up(int i) {
            int v = heap_[i];
            while (i > 0) {
                int parent = (i - 1) / 2;
                if (!before(v, heap_[parent])) break;
                heap_[i] = heap_[parent];
                pos_[heap_[i]] = i;
                i = parent;
            }
            heap_[i] = v;
            pos_[v] = i;
        }

        void down(int i) {
            int v = heap_[i];
            std::size_t n = heap_.size();
            while (true) {
                std::size_t l = 2 * i + 1, r = 2 * i + 2;
                if (l >= n) break;
                std::size_t child = (r < n && before(heap_[r], heap_[l])) ? r : l;
                if (!before(heap_[child], v)) break;
                heap_[i] = heap_[child];
                pos_[heap_[i]] = i;
                i = static_cast<int>(child);
            }
            heap_[i] = v;
            pos_[v] = i;
        }

        const std::vector<double>* act_ = nullptr;
        std::vector<int> heap_;
        std::vector<int> pos_;
    };

    static constexpr double kVarDecay = 0.95;
    static constexpr double kClauseDecay = 0.999;
    static constexpr std::uint64_t kRestartBase = 100;
    static constexpr std::size_t kReduceThreshold = 10000;

    int num_vars_;
    bool unsat_on_input_ = false;
    int num_original_ = 0;

    std::vector<Clause> clauses_;
    std::vector<double> clause_activity_;
    std::vector<std::vector<Watcher>> watches_;

    std::vector<int8_t> value_;
    std::vector<int> level_;
    std::vector<int> reason_;
    std::vector<int8_t> seen_;
    std::vector<int8_t> polarity_;
    std::vector<double> activity_;
    double var_inc_ = 1.0;
    double clause_inc_ = 1.0;

    std::vector<Literal> trail_;
    std::vector<std::size_t> trail_lim_;
    std::size_t qhead_ = 0;

    VarOrder order_;

    std::uint64_t stats_conflicts_ = 0;
    std::uint64_t stats_decisions_ = 0;
    std::uint64_t stats_propagations_ = 0;
};

/// Decide satisfiability with the embedded solver.
inline SatResult solve(const Cnf& cnf, std::optional<double> budget_ms = std::nullopt,
                       std::uint64_t seed = 0) {
    CdclSolver solver(cnf, seed);
    return solver.solve(budget_ms);
}

/// External solver misbehaviour, with the failure class kept separate so
/// callers can distinguish a missing binary from a lying one.
class external_solver_error : public std::runtime_error {
public:
    enum class Kind { Spawn, Protocol, Parse };

    external_solver_error(Kind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

}  // namespace boolmin

#include "boolmin/subprocess.hpp"

namespace boolmin {

namespace detail {

/// Parse "v <lit> ... <lit> 0" model lines (any number of lines; the final
/// literal list is 0-terminated).
inline std::vector<bool> parse_model_lines(const std::string& output, int num_vars,
                                           char prefix) {
    std::vector<bool> model(num_vars + 1, false);
    bool any = false, terminated = false;
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] != prefix) continue;
        if (line.size() > 1 && !std::isspace(static_cast<unsigned char>(line[1])))
            continue;  // e.g. "verbose ..." is not a model line
        any = true;
        std::istringstream ls(line.substr(1));
        long lit;
        while (ls >> lit) {
            if (lit == 0) {
                terminated = true;
                break;
            }
            long v = std::labs(lit);
            if (v > num_vars)
                throw external_solver_error(
                    external_solver_error::Kind::Parse,
                    "model literal " + std::to_string(lit) + " out of range");
            model[static_cast<std::size_t>(v)] = lit > 0;
        }
    }
    if (!any)
        throw external_solver_error(external_solver_error::Kind::Parse,
                                    "satisfiable verdict without model lines");
    if (!terminated)
        throw external_solver_error(external_solver_error::Kind::Parse,
                                    "model lines missing terminating 0");
    return model;
}

}  // namespace detail

/// Run an external SAT solver on the DIMACS rendering of the instance.
/// Contract: argv = [path, dimacs_file]; exit code 10 = satisfiable with
/// "v" model lines, 20 = unsatisfiable. The model is re-verified locally
/// before being returned.
inline SatResult solve_external(const Cnf& cnf, const std::string& solver_path,
                                std::optional<double> budget_ms = std::nullopt) {
    TempFile file(write_dimacs(cnf), ".cnf");
    ProcessResult proc;
    try {
        proc = run_process({solver_path, file.path()}, budget_ms);
    } catch (const spawn_error& e) {
        throw external_solver_error(external_solver_error::Kind::Spawn, e.what());
    }

    SatResult res;
    res.elapsed_ms = proc.elapsed_ms;
    if (proc.timed_out) {
        res.status = SatStatus::Timeout;
        return res;
    }
    if (proc.exit_code == 20) {
        res.status = SatStatus::Unsatisfiable;
        return res;
    }
    if (proc.exit_code != 10)
        throw external_solver_error(
            external_solver_error::Kind::Protocol,
            "unexpected solver exit code " + std::to_string(proc.exit_code));

    res.status = SatStatus::Satisfiable;
    res.model = detail::parse_model_lines(proc.output, cnf.num_vars, 'v');
    if (!CdclSolver::satisfies(cnf, res.model))
        throw external_solver_error(external_solver_error::Kind::Protocol,
                                    "solver model does not satisfy the instance");
    return res;
}

}  // namespace boolmin
