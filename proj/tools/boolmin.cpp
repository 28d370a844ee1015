// boolmin: minimize propositional formulae, generate random instances,
// and benchmark the minimization algorithms.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 formula parse
// error, 3 timeout, 4 external-solver failure.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "boolmin/bench.hpp"
#include "boolmin/enumeration.hpp"
#include "boolmin/formula.hpp"
#include "boolmin/minimize.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitTimeout = 3;
constexpr int kExitExternalSolver = 4;

std::vector<boolmin::Connective> parse_connectives(const std::string& list) {
    std::vector<boolmin::Connective> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "and")
            out.push_back(boolmin::Connective::And);
        else if (item == "or")
            out.push_back(boolmin::Connective::Or);
        else if (item == "implies")
            out.push_back(boolmin::Connective::Implies);
        else
            throw CLI::ValidationError("--output-connectives",
                                       "unknown connective: " + item);
    }
    if (out.empty())
        throw CLI::ValidationError("--output-connectives", "empty connective list");
    return out;
}

boolmin::SolverBackend parse_backend(const std::string& spec, const char* flag) {
    if (spec == "internal") return boolmin::SolverBackend::internal();
    if (spec.rfind("external:", 0) == 0) {
        std::string path = spec.substr(9);
        if (path.empty())
            throw CLI::ValidationError(flag, "external backend needs a path");
        return boolmin::SolverBackend::external(path);
    }
    throw CLI::ValidationError(flag, "expected 'internal' or 'external:PATH'");
}

boolmin::SolverBackend backend_from(const std::optional<std::string>& flag_value,
                                    const char* env_name, const char* flag) {
    if (flag_value) return parse_backend(*flag_value, flag);
    if (const char* env = std::getenv(env_name); env && *env)
        return boolmin::SolverBackend::external(env);
    return boolmin::SolverBackend::internal();
}

std::vector<int> parse_size_list(const std::string& text) {
    std::vector<int> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto dots = item.find("..");
        if (dots != std::string::npos) {
            int lo = std::stoi(item.substr(0, dots));
            int hi = std::stoi(item.substr(dots + 2));
            if (lo < 1 || hi < lo)
                throw CLI::ValidationError("--sizes", "bad range: " + item);
            for (int s = lo; s <= hi; ++s) sizes.push_back(s);
        } else {
            int s = std::stoi(item);
            if (s < 1) throw CLI::ValidationError("--sizes", "bad size: " + item);
            sizes.push_back(s);
        }
    }
    if (sizes.empty()) throw CLI::ValidationError("--sizes", "empty size list");
    return sizes;
}

std::vector<boolmin::Algo> parse_algo_list(const std::string& text) {
    std::vector<boolmin::Algo> algos;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "qbf")
            algos.push_back(boolmin::Algo::QbfFast);
        else
            algos.push_back(boolmin::parse_algo(item));
    }
    if (algos.empty()) throw CLI::ValidationError("--algos", "empty algorithm list");
    return algos;
}

struct SharedSolverFlags {
    std::optional<std::string> sat_solver;
    std::optional<std::string> qbf_solver;
    std::string output_connectives = "and,or,implies";
    bool no_false_leaf = false;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--sat-solver", sat_solver,
                       "SAT backend: internal | external:PATH");
        cmd.add_option("--qbf-solver", qbf_solver,
                       "QBF backend: internal | external:PATH");
        cmd.add_option("--output-connectives", output_connectives,
                       "Binary connectives admitted in outputs")
            ->capture_default_str();
        cmd.add_flag("--no-false-leaf", no_false_leaf,
                     "Disallow the constant false as a candidate leaf");
    }

    void apply(boolmin::MinimizeConfig& cfg) const {
        cfg.output_connectives = parse_connectives(output_connectives);
        cfg.allow_false_leaf = !no_false_leaf;
        cfg.sat_backend = backend_from(sat_solver, "BOOLMIN_SAT_SOLVER", "--sat-solver");
        cfg.qbf_backend = backend_from(qbf_solver, "BOOLMIN_QBF_SOLVER", "--qbf-solver");
    }
};

int cmd_minimize(const std::string& formula_text, const std::string& algo,
                 const std::string& mode, std::optional<double> timeout_s,
                 const SharedSolverFlags& solver_flags, std::uint64_t seed) {
    boolmin::Formula input = boolmin::parse(formula_text);

    boolmin::MinimizeConfig cfg;
    solver_flags.apply(cfg);
    cfg.qbf_mode = mode == "exact" ? boolmin::QbfMode::Exact : boolmin::QbfMode::Fast;
    cfg.solver_seed = seed;
    if (timeout_s) cfg.budget_ms = *timeout_s * 1000.0;

    boolmin::MinimizationResult result = boolmin::minimize(input, algo, cfg);
    if (result.status == boolmin::MinimizeStatus::Timeout) {
        std::cerr << "timeout after " << std::fixed << std::setprecision(1)
                  << result.elapsed_ms << " ms\n";
        return kExitTimeout;
    }
    std::cout << boolmin::to_string(*result.output) << '\n';
    std::cout << "size " << result.output_size << '\n';
    std::cerr << "algo=" << algo << " mode=" << mode << " input_size=" << input.size()
              << " candidates=" << result.candidates_tested
              << " solver_calls=" << result.solver_calls << " time_ms=" << std::fixed
              << std::setprecision(2) << result.elapsed_ms << '\n';
    return kExitOk;
}

int cmd_generate(int size, int count, std::uint64_t seed, std::optional<int> vars,
                 bool no_not, const std::string& connectives) {
    int var_count = vars ? *vars : boolmin::BenchPlan::variable_count(size);
    if (var_count < 1) throw CLI::ValidationError("--vars", "need at least one variable");

    boolmin::FormulaSpace space{boolmin::default_variable_names(var_count),
                                parse_connectives(connectives), !no_not,
                                /*allow_false=*/false};
    boolmin::CountTable table(space);
    if (table.count(size) == 0) {
        std::cerr << "no formulae of size " << size << " exist in this space\n";
        return kExitUsage;
    }
    std::cerr << "seed=" << seed << " size=" << size << " vars=" << var_count << '\n';
    std::mt19937_64 rng(seed);
    for (int i = 0; i < count; ++i)
        std::cout << boolmin::to_string(boolmin::sample_uniform(table, size, rng))
                  << '\n';
    return kExitOk;
}

int cmd_bench(const std::string& sizes, int count, std::uint64_t seed,
              const std::string& algos, double timeout_s,
              const std::optional<std::string>& out_path, int jobs,
              const SharedSolverFlags& solver_flags) {
    boolmin::BenchPlan plan;
    plan.sizes = parse_size_list(sizes);
    plan.count = count;
    plan.seed = seed;
    plan.algorithms = parse_algo_list(algos);
    plan.timeout_ms = timeout_s * 1000.0;
    plan.jobs = jobs;
    solver_flags.apply(plan.config);

    std::cerr << "seed=" << seed << " sizes=" << sizes << " count=" << count
              << " algos=" << algos << " timeout_s=" << timeout_s << " jobs=" << jobs
              << '\n';
    std::vector<boolmin::BenchRecord> records = boolmin::run_plan(plan);
    if (out_path) {
        std::ofstream out(*out_path);
        if (!out) {
            std::cerr << "cannot open " << *out_path << " for writing\n";
            return kExitUsage;
        }
        boolmin::write_csv(out, records);
        std::cerr << "wrote " << records.size() << " records to " << *out_path << '\n';
    } else {
        boolmin::write_csv(std::cout, records);
    }
    return kExitOk;
}

void print_stats_table(std::ostream& out, const std::vector<boolmin::StatsRow>& rows) {
    out << std::left << std::setw(6) << "size" << std::setw(11) << "algo"
        << std::right << std::setw(6) << "n" << std::setw(10) << "timeouts"
        << std::setw(14) << "mean_ms" << std::setw(14) << "median_ms"
        << std::setw(12) << "mean_size"
        << "  histogram\n";
    for (const auto& r : rows) {
        out << std::left << std::setw(6) << r.size << std::setw(11)
            << boolmin::algo_name(r.algo) << std::right << std::setw(6) << r.n
            << std::setw(10) << r.n_timeout;
        auto cell = [&](const std::optional<double>& v, int width) {
            out << std::setw(width);
            if (v)
                out << std::fixed << std::setprecision(3) << *v;
            else
                out << "-";
        };
        cell(r.mean_ms, 14);
        cell(r.median_ms, 14);
        cell(r.mean_output_size, 12);
        out << "  ";
        bool first = true;
        for (const auto& [sz, n] : r.output_size_histogram) {
            if (!first) out << ' ';
            out << sz << ':' << n;
            first = false;
        }
        out << '\n';
    }
}

void print_stats_csv(std::ostream& out, const std::vector<boolmin::StatsRow>& rows) {
    out << "size,algo,n,n_timeout,mean_ms,median_ms,mean_output_size,"
           "output_size_histogram\n";
    for (const auto& r : rows) {
        out << r.size << ',' << boolmin::algo_name(r.algo) << ',' << r.n << ','
            << r.n_timeout << ',';
        auto cell = [&](const std::optional<double>& v) {
            if (v) out << std::fixed << std::setprecision(3) << *v;
        };
        cell(r.mean_ms);
        out << ',';
        cell(r.median_ms);
        out << ',';
        cell(r.mean_output_size);
        out << ',';
        bool first = true;
        for (const auto& [sz, n] : r.output_size_histogram) {
            if (!first) out << ' ';
            out << sz << ':' << n;
            first = false;
        }
        out << '\n';
    }
}

int cmd_stats(const std::string& csv_path, const std::string& group_by,
              const std::string& emit, const std::optional<std::string>& distribution) {
    if (group_by != "size,algo" && group_by != "algo,size")
        throw CLI::ValidationError("--group-by", "supported grouping: size,algo");
    if (emit != "table" && emit != "csv")
        throw CLI::ValidationError("--emit", "expected 'table' or 'csv'");

    std::ifstream in(csv_path);
    if (!in) {
        std::cerr << "cannot open " << csv_path << '\n';
        return kExitUsage;
    }
    std::vector<boolmin::BenchRecord> records = boolmin::read_csv(in);

    if (distribution) {
        auto comma = distribution->find(',');
        if (comma == std::string::npos)
            throw CLI::ValidationError("--distribution", "expected SIZE,ALGO");
        int size = std::stoi(distribution->substr(0, comma));
        boolmin::Algo algo = boolmin::parse_algo(distribution->substr(comma + 1));
        for (const auto& t : boolmin::time_distribution(records, size, algo)) {
            if (t)
                std::cout << std::fixed << std::setprecision(3) << *t << '\n';
            else
                std::cout << "timeout\n";
        }
        return kExitOk;
    }

    std::vector<boolmin::StatsRow> rows = boolmin::aggregate(records);
    if (emit == "csv")
        print_stats_csv(std::cout, rows);
    else
        print_stats_table(std::cout, rows);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boolean formula minimization toolkit"};
    app.require_subcommand(1);

    // --- minimize ---
    auto* minimize = app.add_subcommand("minimize", "Find a size-minimal equivalent");
    std::string formula_arg;
    std::string file_arg;
    std::string algo = "qbf";
    std::string mode = "fast";
    std::optional<double> timeout_s;
    std::uint64_t min_seed = 0;
    SharedSolverFlags min_solver_flags;
    minimize->add_option("formula", formula_arg, "Formula text (see grammar in --help)");
    minimize->add_option("--file", file_arg, "Read the formula from a file");
    minimize->add_option("--algo", algo, "Algorithm: brute | sat | qbf")
        ->check(CLI::IsMember({"brute", "sat", "qbf"}))
        ->capture_default_str();
    minimize->add_option("--mode", mode, "QBF guarantee: fast (depth-minimal) | exact")
        ->check(CLI::IsMember({"fast", "exact"}))
        ->capture_default_str();
    minimize->add_option("--timeout", timeout_s, "Time budget in seconds");
    minimize->add_option("--seed", min_seed, "Solver heuristic seed");
    min_solver_flags.add_to(*minimize);

    // --- generate ---
    auto* generate = app.add_subcommand("generate", "Sample uniform random formulae");
    int gen_size = 0;
    int gen_count = 1;
    std::uint64_t gen_seed = 0;
    std::optional<int> gen_vars;
    bool gen_no_not = false;
    std::string gen_conns = "and,or";
    generate->add_option("--size", gen_size, "Formula size (symbol count)")
        ->required()
        ->check(CLI::PositiveNumber);
    generate->add_option("--count", gen_count, "How many formulae")
        ->capture_default_str();
    generate->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
    generate->add_option("--vars", gen_vars,
                         "Variable count (default: round(sqrt(size)), min 1)");
    generate->add_flag("--no-not", gen_no_not, "Exclude negation");
    generate->add_option("--connectives", gen_conns, "Binary connectives")
        ->capture_default_str();

    // --- bench ---
    auto* bench = app.add_subcommand("bench", "Run the benchmark protocol");
    std::string bench_sizes = "1..20";
    int bench_count = 100;
    std::uint64_t bench_seed = 0;
    std::string bench_algos = "brute,sat,qbf";
    double bench_timeout_s = 60.0;
    std::optional<std::string> bench_out;
    int bench_jobs = static_cast<int>(std::thread::hardware_concurrency());
    SharedSolverFlags bench_solver_flags;
    bench->add_option("--sizes", bench_sizes, "Sizes, e.g. 1..20 or 3,5,9")
        ->capture_default_str();
    bench->add_option("--count", bench_count, "Instances per size")
        ->capture_default_str();
    bench->add_option("--seed", bench_seed, "Campaign seed")->capture_default_str();
    bench->add_option("--algos", bench_algos,
                      "Comma list of brute, sat, qbf (=qbf-fast), qbf-fast, qbf-exact")
        ->capture_default_str();
    bench->add_option("--timeout", bench_timeout_s, "Per-run timeout in seconds")
        ->capture_default_str();
    bench->add_option("--out", bench_out, "Write the CSV here (default: stdout)");
    bench->add_option("--jobs", bench_jobs, "Parallel workers")->capture_default_str();
    bench_solver_flags.add_to(*bench);

    // --- stats ---
    auto* stats = app.add_subcommand("stats", "Aggregate a benchmark CSV");
    std::string stats_csv;
    std::string stats_group_by = "size,algo";
    std::string stats_emit = "table";
    std::optional<std::string> stats_distribution;
    stats->add_option("csv", stats_csv, "Benchmark CSV file")->required();
    stats->add_option("--group-by", stats_group_by, "Grouping key")
        ->capture_default_str();
    stats->add_option("--emit", stats_emit, "Output format: table | csv")
        ->capture_default_str();
    stats->add_option("--distribution", stats_distribution,
                      "Print the sorted time distribution for SIZE,ALGO");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (minimize->parsed()) {
            if (formula_arg.empty() == file_arg.empty()) {
                std::cerr << "minimize: give a formula either inline or via --file\n";
                return kExitUsage;
            }
            std::string text = formula_arg;
            if (!file_arg.empty()) {
                std::ifstream in(file_arg);
                if (!in) {
                    std::cerr << "cannot open " << file_arg << '\n';
                    return kExitUsage;
                }
                std::ostringstream buf;
                buf << in.rdbuf();
                text = buf.str();
            }
            return cmd_minimize(text, algo, mode, timeout_s, min_solver_flags, min_seed);
        }
        if (generate->parsed())
            return cmd_generate(gen_size, gen_count, gen_seed, gen_vars, gen_no_not,
                                gen_conns);
        if (bench->parsed())
            return cmd_bench(bench_sizes, bench_count, bench_seed, bench_algos,
                             bench_timeout_s, bench_out, std::max(1, bench_jobs),
                             bench_solver_flags);
        if (stats->parsed())
            return cmd_stats(stats_csv, stats_group_by, stats_emit, stats_distribution);
        return kExitUsage;
    } catch (const boolmin::parse_error& e) {
        std::cerr << "parse error at column " << e.column() << ": " << e.what() << '\n';
        return kExitParse;
    } catch (const boolmin::external_solver_error& e) {
        std::cerr << "external solver failure: " << e.what() << '\n';
        return kExitExternalSolver;
    } catch (const boolmin::no_outer_model_error& e) {
        std::cerr << "external solver failure: " << e.what() << '\n';
        return kExitExternalSolver;
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
