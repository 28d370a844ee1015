#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include <sys/stat.h>

#include "boolmin/qbf.hpp"

using namespace boolmin;

namespace {

// Test-local oracle: literal triple loop over the quantifier semantics.
bool clause_true(const Clause& c, const std::vector<int>& value) {
    for (Literal l : c)
        if (value[std::abs(l)] == (l > 0 ? 1 : 0)) return true;
    return false;
}

bool brute_force_qbf(const QbfInstance& q) {
    std::vector<int> value(q.matrix.num_vars + 1, 0);
    auto assign_bits = [&](const std::vector<int>& vars, std::uint32_t bits) {
        for (std::size_t i = 0; i < vars.size(); ++i)
            value[vars[i]] = (bits >> i) & 1u;
    };
    for (std::uint32_t x = 0; x < (1u << q.outer_exists.size()); ++x) {
        assign_bits(q.outer_exists, x);
        bool all_universals_ok = true;
        for (std::uint32_t y = 0; y < (1u << q.universals.size()); ++y) {
            assign_bits(q.universals, y);
            bool some_inner = false;
            for (std::uint32_t z = 0; z < (1u << q.inner_exists.size()); ++z) {
                assign_bits(q.inner_exists, z);
                bool ok = true;
                for (const Clause& c : q.matrix.clauses)
                    if (!clause_true(c, value)) {
                        ok = false;
                        break;
                    }
                if (ok) {
                    some_inner = true;
                    break;
                }
            }
            if (!some_inner) {
                all_universals_ok = false;
                break;
            }
        }
        if (all_universals_ok) return true;
    }
    return false;
}

QbfInstance random_instance(std::mt19937_64& rng) {
    QbfInstance q;
    int no = 1 + static_cast<int>(rng() % 4);
    int nu = 1 + static_cast<int>(rng() % 4);
    int ni = 1 + static_cast<int>(rng() % 4);
    q.matrix.num_vars = no + nu + ni;
    int v = 1;
    for (int i = 0; i < no; ++i) q.outer_exists.push_back(v++);
    for (int i = 0; i < nu; ++i) q.universals.push_back(v++);
    for (int i = 0; i < ni; ++i) q.inner_exists.push_back(v++);
    int clauses = static_cast<int>(rng() % 13);
    for (int i = 0; i < clauses; ++i) {
        Clause c;
        int len = 1 + static_cast<int>(rng() % 3);
        for (int j = 0; j < len; ++j) {
            int var = 1 + static_cast<int>(rng() % q.matrix.num_vars);
            c.push_back(rng() % 2 ? var : -var);
        }
        q.matrix.clauses.push_back(c);
    }
    return q;
}

class ScriptSolver {
public:
    explicit ScriptSolver(const std::string& body) {
        path_ = "/tmp/boolmin-test-qbf-" + std::to_string(counter_++) + ".sh";
        std::ofstream out(path_);
        out << "#!/bin/sh\n" << body;
        out.close();
        chmod(path_.c_str(), 0755);
    }
    ~ScriptSolver() { std::remove(path_.c_str()); }
    const std::string& path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::string path_;
};

}  // namespace

TEST_CASE("hand instances", "[qbf]") {
    // exists x forall y: (x | y)(x | !y) is true with x = 1.
    {
        QbfInstance q;
        q.matrix.num_vars = 2;
        q.outer_exists = {1};
        q.universals = {2};
        q.matrix.add_clause({1, 2});
        q.matrix.add_clause({1, -2});
        QbfResult r = solve_expansion(q);
        REQUIRE(r.status == QbfStatus::True);
        CHECK(r.outer_model.at(1) == true);
    }
    // exists x forall y: x <-> y is false.
    {
        QbfInstance q;
        q.matrix.num_vars = 2;
        q.outer_exists = {1};
        q.universals = {2};
        q.matrix.add_clause({-1, 2});
        q.matrix.add_clause({1, -2});
        CHECK(solve_expansion(q).status == QbfStatus::False);
    }
    // forall y exists z: z <-> y is true.
    {
        QbfInstance q;
        q.matrix.num_vars = 2;
        q.universals = {1};
        q.inner_exists = {2};
        q.matrix.add_clause({-2, 1});
        q.matrix.add_clause({2, -1});
        CHECK(solve_expansion(q).status == QbfStatus::True);
    }
    // Empty matrix: trivially true, empty outer model verifies.
    {
        QbfInstance q;
        q.matrix.num_vars = 1;
        q.universals = {1};
        CHECK(solve_expansion(q).status == QbfStatus::True);
        CHECK(verify_outer_model(q, {}));
    }
}

TEST_CASE("expansion cap is enforced", "[qbf]") {
    QbfInstance q;
    q.matrix.num_vars = 20;
    for (int v = 1; v <= 20; ++v) q.universals.push_back(v);
    CHECK_THROWS_AS(solve_expansion(q), expansion_cap_error);
    CHECK_THROWS_AS(verify_outer_model(q, {}), expansion_cap_error);
}

TEST_CASE("instance validation", "[qbf]") {
    QbfInstance overlap;
    overlap.matrix.num_vars = 1;
    overlap.outer_exists = {1};
    overlap.universals = {1};
    CHECK_THROWS_AS(validate(overlap), std::invalid_argument);

    QbfInstance uncovered;
    uncovered.matrix.num_vars = 2;
    uncovered.outer_exists = {1};
    uncovered.matrix.add_clause({2});
    CHECK_THROWS_AS(validate(uncovered), std::invalid_argument);
}

TEST_CASE("expansion matches the triple-loop oracle", "[qbf]") {
    std::mt19937_64 rng(91);
    int true_count = 0, false_count = 0;
    for (int round = 0; round < 1000; ++round) {
        QbfInstance q = random_instance(rng);
        bool expected = brute_force_qbf(q);
        QbfResult r = solve_expansion(q);
        CAPTURE(round, write_qdimacs(q));
        REQUIRE((r.status == QbfStatus::True) == expected);
        if (expected) {
            ++true_count;
            REQUIRE(verify_outer_model(q, r.outer_model));
        } else {
            ++false_count;
        }
    }
    CHECK(true_count > 100);
    CHECK(false_count > 100);
}

TEST_CASE("verify_outer_model rejects wrong models", "[qbf]") {
    // exists x forall y: (x | y): only x = 1 works.
    QbfInstance q;
    q.matrix.num_vars = 2;
    q.outer_exists = {1};
    q.universals = {2};
    q.matrix.add_clause({1, 2});
    CHECK(verify_outer_model(q, {{1, true}}));
    CHECK_FALSE(verify_outer_model(q, {{1, false}}));
}

TEST_CASE("qdimacs format", "[qbf]") {
    QbfInstance q;
    q.matrix.num_vars = 3;
    q.outer_exists = {1};
    q.universals = {2};
    q.inner_exists = {3};
    q.matrix.add_clause({1, -2, 3});
    CHECK(write_qdimacs(q) == "p cnf 3 1\ne 1 0\na 2 0\ne 3 0\n1 -2 3 0\n");

    QbfInstance back = parse_qdimacs(write_qdimacs(q));
    CHECK(back.outer_exists == q.outer_exists);
    CHECK(back.universals == q.universals);
    CHECK(back.inner_exists == q.inner_exists);
    CHECK(back.matrix.clauses == q.matrix.clauses);

    // Empty blocks are omitted when writing.
    QbfInstance no_outer;
    no_outer.matrix.num_vars = 2;
    no_outer.universals = {1};
    no_outer.inner_exists = {2};
    no_outer.matrix.add_clause({-1, 2});
    std::string text = write_qdimacs(no_outer);
    CHECK(text.find("e 2 0\n") != std::string::npos);
    CHECK(text.find("a 1 0\n") != std::string::npos);

    CHECK_THROWS_AS(parse_qdimacs("p cnf 2 0\ne 1 0\na 2 0\ne 1 0\na 2 0\n"),
                    dimacs_error);
    CHECK_THROWS_AS(parse_qdimacs("p cnf 1 1\n1 0\ne 1 0\n"), dimacs_error);
}

TEST_CASE("qdimacs round-trip on random instances", "[qbf]") {
    std::mt19937_64 rng(13);
    for (int round = 0; round < 100; ++round) {
        QbfInstance q = random_instance(rng);
        QbfInstance back = parse_qdimacs(write_qdimacs(q));
        REQUIRE(back.outer_exists == q.outer_exists);
        REQUIRE(back.universals == q.universals);
        REQUIRE(back.inner_exists == q.inner_exists);
        REQUIRE(back.matrix.clauses == q.matrix.clauses);
    }
}

TEST_CASE("external adapter agrees with expansion", "[qbf]") {
    std::mt19937_64 rng(2025);
    for (int round = 0; round < 300; ++round) {
        QbfInstance q = random_instance(rng);
        QbfResult internal = solve_expansion(q);
        QbfResult external = solve_external(q, BOOLMIN_QBF_TOOL_PATH);
        CAPTURE(round);
        REQUIRE((internal.status == QbfStatus::True) ==
                (external.status == QbfStatus::True));
        if (external.status == QbfStatus::True)
            REQUIRE(verify_outer_model(q, external.outer_model));
    }
}

TEST_CASE("external adapter protocol", "[qbf]") {
    QbfInstance q;
    q.matrix.num_vars = 2;
    q.outer_exists = {1};
    q.universals = {2};
    q.matrix.add_clause({1, 2});
    q.matrix.add_clause({1, -2});

    SECTION("true verdict without V lines becomes TrueNoModel") {
        ScriptSolver s("exit 10\n");
        QbfResult r = solve_external(q, s.path());
        CHECK(r.status == QbfStatus::TrueNoModel);
    }

    SECTION("V lines yield the outer model") {
        ScriptSolver s("echo 's cnf 1'\necho 'V 1 0'\nexit 10\n");
        QbfResult r = solve_external(q, s.path());
        REQUIRE(r.status == QbfStatus::True);
        CHECK(r.outer_model.at(1) == true);
    }

    SECTION("false verdict") {
        ScriptSolver s("exit 20\n");
        CHECK(solve_external(q, s.path()).status == QbfStatus::False);
    }

    SECTION("unexpected exit code is a protocol error") {
        ScriptSolver s("exit 3\n");
        try {
            solve_external(q, s.path());
            FAIL("expected protocol error");
        } catch (const external_solver_error& e) {
            CHECK(e.kind() == external_solver_error::Kind::Protocol);
        }
    }

    SECTION("missing solver is a spawn error") {
        try {
            solve_external(q, "/nonexistent/qbf-solver");
            FAIL("expected spawn error");
        } catch (const external_solver_error& e) {
            CHECK(e.kind() == external_solver_error::Kind::Spawn);
        }
    }
}
