#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "boolmin/enumeration.hpp"

using namespace boolmin;

namespace {

// Independent oracle for the tree-count closed form.
mpz_class catalan(int m) {
    std::vector<mpz_class> c{1};
    for (int k = 1; k <= m; ++k) {
        mpz_class sum = 0;
        for (int i = 0; i < k; ++i) sum += c[i] * c[k - 1 - i];
        c.push_back(sum);
    }
    return c[m];
}

mpz_class power(mpz_class base, int exp) {
    mpz_class r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

std::vector<std::string> var_names(int n) {
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.emplace_back(1, static_cast<char>('a' + i));
    return names;
}

std::vector<Connective> conn_list(int n) {
    std::vector<Connective> all{Connective::And, Connective::Or, Connective::Implies};
    return {all.begin(), all.begin() + n};
}

}  // namespace

TEST_CASE("binary-only counts match the closed form", "[enumeration]") {
    for (int nc = 1; nc <= 3; ++nc) {
        for (int nv = 1; nv <= 3; ++nv) {
            FormulaSpace space{var_names(nv), conn_list(nc), false, false};
            CountTable table(space);
            for (int m = 0; m <= 6; ++m) {
                mpz_class expected = catalan(m) * power(nc, m) * power(nv, m + 1);
                CAPTURE(nc, nv, m);
                REQUIRE(table.count(2 * m + 1) == expected);
                if (m > 0) REQUIRE(table.count(2 * m) == 0);  // even sizes impossible
            }
        }
    }
    // The worked instance: C_2 * 2^2 * 2^3 = 2 * 4 * 8.
    FormulaSpace space{{"p", "q"}, {Connective::And, Connective::Or}, false, false};
    CountTable table(space);
    REQUIRE(table.count(5) == 64);
}

TEST_CASE("small counts with negation", "[enumeration]") {
    // Only !p has size 2 over a single variable.
    FormulaSpace unary{{"p"}, conn_list(3), true, false};
    CountTable t1(unary);
    REQUIRE(t1.count(2) == 1);
    // Size 3 over one variable: !!p, p&p, p|p, p->p.
    REQUIRE(t1.count(3) == 4);

    FormulaSpace no_not{{"p"}, conn_list(3), false, false};
    CountTable t2(no_not);
    REQUIRE(t2.count(2) == 0);

    // The false leaf joins the leaf count.
    FormulaSpace with_false{{"p"}, conn_list(3), true, true};
    CountTable t3(with_false);
    REQUIRE(t3.count(1) == 2);
}

TEST_CASE("enumeration yields exactly the counted formulae", "[enumeration]") {
    FormulaSpace space{{"p", "q"}, {Connective::And, Connective::Or}, true, false};
    CountTable table(space);
    for (int n = 1; n <= 9; ++n) {
        std::set<std::string> seen;
        std::size_t produced = 0;
        for_each_formula(space, n, [&](const Formula& f) {
            ++produced;
            REQUIRE(f.size() == n);
            seen.insert(to_string(f));
            return true;
        });
        CAPTURE(n);
        REQUIRE(produced == seen.size());        // pairwise distinct
        REQUIRE(table.count(n) == mpz_class(produced));
    }
}

TEST_CASE("enumeration order is the documented one", "[enumeration]") {
    FormulaSpace space{{"p"}, {Connective::And}, false, false};
    auto only = enumerate_formulas(space, 3);
    REQUIRE(only.size() == 1);
    CHECK(to_string(only[0]) == "p & p");

    FormulaSpace space2{{"p", "q"}, {Connective::And, Connective::Or}, true, true};
    auto order = enumerate_formulas(space2, 1);
    REQUIRE(order.size() == 3);
    CHECK(to_string(order[0]) == "p");
    CHECK(to_string(order[1]) == "q");
    CHECK(to_string(order[2]) == "false");

    // Size 3: negations of size-2 first, then And before Or on the 1+1 split.
    auto size3 = enumerate_formulas(space2, 3);
    CHECK(to_string(size3.front()) == "!!p");
    bool saw_and = false;
    for (const Formula& f : size3) {
        if (f.kind() == Formula::Kind::Binary) {
            if (!saw_and) {
                CHECK(f.connective() == Connective::And);
                saw_and = true;
            }
        }
    }
    CHECK(saw_and);

    // Early stop: the callback contract.
    int visited = 0;
    bool completed = for_each_formula(space2, 3, [&](const Formula&) {
        return ++visited < 5;
    });
    CHECK_FALSE(completed);
    CHECK(visited == 5);
}

TEST_CASE("sampling is deterministic per seed", "[enumeration]") {
    FormulaSpace space{{"p", "q"}, {Connective::And, Connective::Or}, true, false};
    CountTable table(space);
    std::mt19937_64 rng1(1234), rng2(1234), rng3(99);
    std::vector<std::string> a, b, c;
    for (int i = 0; i < 50; ++i) {
        a.push_back(to_string(sample_uniform(table, 7, rng1)));
        b.push_back(to_string(sample_uniform(table, 7, rng2)));
        c.push_back(to_string(sample_uniform(table, 7, rng3)));
    }
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("sampling only size-1 formulae over one variable", "[enumeration]") {
    FormulaSpace space{{"p"}, conn_list(3), true, false};
    CountTable table(space);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i)
        CHECK(to_string(sample_uniform(table, 1, rng)) == "p");

    FormulaSpace no_not{{"p"}, conn_list(3), false, false};
    CountTable t2(no_not);
    CHECK_THROWS_AS(sample_uniform(t2, 2, rng), std::domain_error);
}

TEST_CASE("sampler is uniform at size 4 over two variables", "[enumeration]") {
    // Chi-square against the exhaustive support; seed fixed, threshold is
    // the 0.999 quantile, so a correct sampler fails with p < 0.001.
    FormulaSpace space{{"p", "q"}, {Connective::And, Connective::Or}, true, false};
    CountTable table(space);
    auto support = enumerate_formulas(space, 4);
    REQUIRE(support.size() == 26);

    std::map<std::string, int> freq;
    for (const Formula& f : support) freq[to_string(f)] = 0;
    const int draws = 100000;
    std::mt19937_64 rng(42);
    for (int i = 0; i < draws; ++i) {
        auto it = freq.find(to_string(sample_uniform(table, 4, rng)));
        REQUIRE(it != freq.end());
        ++it->second;
    }
    double expected = static_cast<double>(draws) / static_cast<double>(support.size());
    double chi2 = 0.0;
    for (const auto& [text, n] : freq) {
        double d = n - expected;
        chi2 += d * d / expected;
    }
    // chi2 0.999 quantile at df = 25.
    CHECK(chi2 < 52.620);
}

TEST_CASE("sampler root-production marginals match the recurrence", "[enumeration]") {
    FormulaSpace space{{"p", "q"}, {Connective::And, Connective::Or}, true, false};
    CountTable table(space);
    const int n = 6, draws = 20000;
    std::mt19937_64 rng(7);
    int nots = 0;
    for (int i = 0; i < draws; ++i)
        if (sample_uniform(table, n, rng).kind() == Formula::Kind::Not) ++nots;
    double expected = mpz_class(table.count(n - 1)).get_d() /
                      mpz_class(table.count(n)).get_d();
    double observed = static_cast<double>(nots) / draws;
    CHECK(observed == Catch::Approx(expected).margin(0.02));
}
