#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "boolmin/formula.hpp"

namespace boolmin {

/// The space of formulae a size-indexed count/enumeration/sample ranges
/// over: an ordered leaf list, an ordered binary connective list, and flags
/// for negation and the constant false.
struct FormulaSpace {
    std::vector<std::string> variables;
    std::vector<Connective> binary_connectives;
    bool allow_not = true;
    bool allow_false = true;

    std::size_t leaf_count() const {
        return variables.size() + (allow_false ? 1 : 0);
    }
};

/// Exact counts of syntactically distinct formulae by size. The recurrence:
///
///   N(1) = #variables (+1 with the false constant)
///   N(n) = N(n-1)                      if negation is allowed
///        + #connectives * sum_{i+j=n-1, i,j>=1} N(i) * N(j)
///
/// Counts use arbitrary precision; they overflow 64 bits around size 30
/// with three connectives.
class CountTable {
public:
    explicit CountTable(FormulaSpace space) : space_(std::move(space)) {
        if (space_.variables.empty() && !space_.allow_false)
            throw std::invalid_argument("formula space has no leaves");
        memo_.resize(2);
        memo_[1] = static_cast<unsigned long>(space_.leaf_count());
    }

    const FormulaSpace& space() const { return space_; }

    const mpz_class& count(int n) {
        if (n < 1) throw std::invalid_argument("formula size must be >= 1");
        while (static_cast<int>(memo_.size()) <= n) {
            int m = static_cast<int>(memo_.size());
            mpz_class total = 0;
            if (space_.allow_not) total += memo_[m - 1];
            mpz_class splits = 0;
            for (int i = 1; i <= m - 2; ++i)
                splits += memo_[i] * memo_[m - 1 - i];
            total += splits * static_cast<unsigned long>(space_.binary_connectives.size());
            memo_.push_back(std::move(total));
        }
        return memo_[n];
    }

private:
    FormulaSpace space_;
    std::vector<mpz_class> memo_;
};

namespace detail {

inline Formula leaf_at(const FormulaSpace& space, std::size_t index) {
    if (index < space.variables.size())
        return Formula::var(space.variables[index]);
    return Formula::constant_false();
}

/// Yields every formula of size exactly n once. Returns false if the
/// visitor stopped the run.
inline bool for_each_impl(const FormulaSpace& space, int n,
                          const std::function<bool(const Formula&)>& visit) {
    if (n == 1) {
        for (std::size_t i = 0; i < space.leaf_count(); ++i)
            if (!visit(leaf_at(space, i))) return false;
        return true;
    }
    if (space.allow_not) {
        bool go = for_each_impl(space, n - 1, [&](const Formula& child) {
            return visit(Formula::negation(child));
        });
        if (!go) return false;
    }
    for (int i = 1; i <= n - 2; ++i) {
        for (Connective c : space.binary_connectives) {
            bool go = for_each_impl(space, i, [&](const Formula& lhs) {
                return for_each_impl(space, n - 1 - i, [&](const Formula& rhs) {
                    return visit(Formula::binary(c, lhs, rhs));
                });
            });
            if (!go) return false;
        }
    }
    return true;
}

}  // namespace detail

/// Enumerate all formulae of size exactly n, each exactly once, in a fixed
/// documented order: leaves (variables in list order, then false); then
/// negations of every size-(n-1) formula; then binary nodes by ascending
/// left subtree size, connective list order, left operand order, right
/// operand order. The visitor returns false to stop early; the function
/// returns false iff stopped.
inline bool for_each_formula(const FormulaSpace& space, int n,
                             const std::function<bool(const Formula&)>& visit) {
    if (n < 1) throw std::invalid_argument("formula size must be >= 1");
    return detail::for_each_impl(space, n, visit);
}

inline std::vector<Formula> enumerate_formulas(const FormulaSpace& space, int n) {
    std::vector<Formula> out;
    for_each_formula(space, n, [&](const Formula& f) {
        out.push_back(f);
        return true;
    });
    return out;
}

namespace detail {

/// Uniform integer in [0, bound) by rejection over whole 64-bit words.
inline mpz_class uniform_below(const mpz_class& bound, std::mt19937_64& rng) {
    if (bound <= 0) throw std::invalid_argument("uniform_below: empty range");
    if (bound == 1) return 0;
    std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
    std::size_t words = (bits + 63) / 64;
    std::uint64_t top_mask = (bits % 64) ? ((std::uint64_t{1} << (bits % 64)) - 1)
                                         : ~std::uint64_t{0};
    std::vector<std::uint64_t> buf(words);
    mpz_class value;
    while (true) {
        for (auto& w : buf) w = rng();
        buf.back() &= top_mask;
        mpz_import(value.get_mpz_t(), words, -1 /*lsw first*/, sizeof(std::uint64_t),
                   0, 0, buf.data());
        if (value < bound) return value;
    }
}

}  // namespace detail

/// Draw one formula of size n with each syntactically distinct formula
/// having probability exactly 1/count(n). The top production (leaf,
/// negation, or a (connective, split) pair) is chosen with probability
/// proportional to its subcount, then operands are drawn recursively.
inline Formula sample_uniform(CountTable& table, int n, std::mt19937_64& rng) {
    const FormulaSpace& space = table.space();
    const mpz_class& total = table.count(n);
    if (total == 0)
        throw std::domain_error("no formulae of size " + std::to_string(n) +
                                " in this space");
    if (n == 1) {
        mpz_class u = detail::uniform_below(total, rng);
        return detail::leaf_at(space, u.get_ui());
    }
    mpz_class u = detail::uniform_below(total, rng);
    if (space.allow_not) {
        const mpz_class& w = table.count(n - 1);
        if (u < w) return Formula::negation(sample_uniform(table, n - 1, rng));
        u -= w;
    }
    for (int i = 1; i <= n - 2; ++i) {
        mpz_class w = table.count(i) * table.count(n - 1 - i);
        for (Connective c : space.binary_connectives) {
            if (u < w) {
                Formula lhs = sample_uniform(table, i, rng);
                Formula rhs = sample_uniform(table, n - 1 - i, rng);
                return Formula::binary(c, std::move(lhs), std::move(rhs));
            }
            u -= w;
        }
    }
    throw std::logic_error("sample_uniform: weights did not cover the count");
}

}  // namespace boolmin
