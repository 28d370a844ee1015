#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "boolmin/subprocess.hpp"

using boolmin::ProcessResult;
using boolmin::run_process;

namespace {

ProcessResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), BOOLMIN_CLI_PATH);
    return run_process(args, 60'000.0);
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string drop_time_column(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        int commas = 0;
        std::string kept;
        for (char ch : line) {
            if (ch == ',') ++commas;
            if (commas == 5 && ch != ',') continue;
            kept += ch;
        }
        out << kept << '\n';
    }
    return out.str();
}

struct TempPath {
    std::string path;
    explicit TempPath(const std::string& name) : path("/tmp/" + name) {}
    ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("minimize subcommand", "[cli]") {
    ProcessResult r = cli({"minimize", "--algo", "qbf", "--mode", "exact", "p & p"});
    REQUIRE(r.exit_code == 0);
    auto out = lines(r.output);
    REQUIRE(out.size() >= 2);
    CHECK(out[0] == "p");
    CHECK(out[1] == "size 1");

    r = cli({"minimize", "--algo", "brute", "p | !p"});
    REQUIRE(r.exit_code == 0);
    CHECK(lines(r.output)[0] == "!false");

    r = cli({"minimize", "--algo", "sat", "p & q | p & q"});
    REQUIRE(r.exit_code == 0);
    CHECK(lines(r.output)[1] == "size 3");
}

TEST_CASE("minimize reads formulas from files", "[cli]") {
    TempPath file("boolmin-cli-input.txt");
    {
        std::ofstream out(file.path);
        out << "q & q & q\n";
    }
    ProcessResult r = cli({"minimize", "--algo", "brute", "--file", file.path});
    REQUIRE(r.exit_code == 0);
    CHECK(lines(r.output)[0] == "q");
}

TEST_CASE("parse errors exit with code 2 and a column", "[cli]") {
    ProcessResult r = cli({"minimize", "p & & q"});
    CHECK(r.exit_code == 2);
}

TEST_CASE("timeouts exit with code 3", "[cli]") {
    ProcessResult r = cli({"minimize", "--algo", "sat", "--timeout", "0.000001",
                           "(p | q & r) -> ((r -> p & !q) | !(q | !r & p))"});
    CHECK(r.exit_code == 3);
}

TEST_CASE("usage errors exit with code 1", "[cli]") {
    CHECK(cli({"minimize"}).exit_code == 1);                       // no formula
    CHECK(cli({"nonsense"}).exit_code == 1);                       // bad subcommand
    CHECK(cli({"generate"}).exit_code == 1);                       // missing --size
    CHECK(cli({"minimize", "--algo", "foo", "p"}).exit_code == 1); // bad algo
    CHECK(cli({"stats", "/nonexistent.csv"}).exit_code == 1);      // missing file
}

TEST_CASE("external solver failures exit with code 4", "[cli]") {
    ProcessResult r = cli({"minimize", "--algo", "sat", "--sat-solver",
                           "external:/nonexistent/solver", "p & p"});
    CHECK(r.exit_code == 4);
}

TEST_CASE("generate is deterministic and uniform-space aware", "[cli]") {
    ProcessResult r = cli({"generate", "--size", "1", "--vars", "1", "--count", "3",
                           "--seed", "1"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.output == "p\np\np\n");

    ProcessResult again = cli({"generate", "--size", "1", "--vars", "1", "--count",
                               "3", "--seed", "1"});
    CHECK(again.output == r.output);

    ProcessResult sized = cli({"generate", "--size", "9", "--count", "5", "--seed",
                               "12"});
    REQUIRE(sized.exit_code == 0);
    CHECK(lines(sized.output).size() == 5);

    // Without negation there is no formula of size 2.
    ProcessResult empty = cli({"generate", "--size", "2", "--no-not"});
    CHECK(empty.exit_code == 1);
}

TEST_CASE("bench and stats work end to end", "[cli]") {
    TempPath csv("boolmin-cli-bench.csv");
    ProcessResult r = cli({"bench", "--sizes", "1..3", "--count", "2", "--algos",
                           "brute,sat", "--seed", "5", "--out", csv.path});
    REQUIRE(r.exit_code == 0);
    auto rows = lines(slurp(csv.path));
    REQUIRE(rows.size() == 13);  // header + 3 sizes x 2 instances x 2 algos
    CHECK(rows[0].rfind("seed,size,instance,algo,status", 0) == 0);

    ProcessResult stats = cli({"stats", csv.path, "--group-by", "size,algo"});
    REQUIRE(stats.exit_code == 0);
    REQUIRE(lines(stats.output).size() == 7);  // header + 3 sizes x 2 algos

    ProcessResult stats_csv = cli({"stats", csv.path, "--emit", "csv"});
    REQUIRE(stats_csv.exit_code == 0);
    CHECK(lines(stats_csv.output)[0].rfind("size,algo,n,", 0) == 0);

    ProcessResult dist = cli({"stats", csv.path, "--distribution", "2,brute"});
    REQUIRE(dist.exit_code == 0);
    CHECK(lines(dist.output).size() == 2);

    // Reruns agree except for the time column.
    TempPath csv2("boolmin-cli-bench2.csv");
    ProcessResult r2 = cli({"bench", "--sizes", "1..3", "--count", "2", "--algos",
                            "brute,sat", "--seed", "5", "--out", csv2.path});
    REQUIRE(r2.exit_code == 0);
    CHECK(drop_time_column(slurp(csv.path)) == drop_time_column(slurp(csv2.path)));
}

TEST_CASE("bench accepts qbf algorithm aliases", "[cli]") {
    ProcessResult r = cli({"bench", "--sizes", "2", "--count", "1", "--algos",
                           "qbf,qbf-exact", "--seed", "1"});
    REQUIRE(r.exit_code == 0);
    auto rows = lines(r.output);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].find("qbf-fast") != std::string::npos);
    CHECK(rows[2].find("qbf-exact") != std::string::npos);
}

TEST_CASE("stats rejects unsupported groupings", "[cli]") {
    TempPath csv("boolmin-cli-group.csv");
    ProcessResult r = cli({"bench", "--sizes", "1", "--count", "1", "--algos",
                           "brute", "--seed", "2", "--out", csv.path});
    REQUIRE(r.exit_code == 0);
    CHECK(cli({"stats", csv.path, "--group-by", "instance"}).exit_code == 1);
}
