#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "boolmin/enumeration.hpp"
#include "boolmin/formula.hpp"
#include "boolmin/minimize.hpp"

namespace boolmin {

enum class Algo { Brute, Sat, QbfFast, QbfExact };

inline std::string algo_name(Algo a) {
    switch (a) {
        case Algo::Brute: return "brute";
        case Algo::Sat: return "sat";
        case Algo::QbfFast: return "qbf-fast";
        case Algo::QbfExact: return "qbf-exact";
    }
    return "?";
}

inline Algo parse_algo(const std::string& name) {
    if (name == "brute") return Algo::Brute;
    if (name == "sat") return Algo::Sat;
    if (name == "qbf-fast") return Algo::QbfFast;
    if (name == "qbf-exact") return Algo::QbfExact;
    throw std::invalid_argument("unknown algorithm: " + name);
}

/// One benchmark campaign: random instances per size, each minimized by
/// each configured algorithm under a wall-clock timeout. The instance set
/// is a pure function of (seed, sizes, count, variable rule); worker count
/// cannot change it.
struct BenchPlan {
    std::vector<int> sizes = default_sizes();
    int count = 100;
    std::uint64_t seed = 0;
    std::vector<Algo> algorithms{Algo::Brute, Algo::Sat, Algo::QbfFast};
    double timeout_ms = 60'000.0;

    /// Instance generation space: binary connectives, negation, and
    /// whether the false constant may appear as a leaf.
    std::vector<Connective> input_connectives{Connective::And, Connective::Or};
    bool input_allow_not = true;
    bool input_allow_false = false;

    /// Output-side configuration shared by all algorithms (connectives,
    /// backends, caps). Its budget is overridden by timeout_ms per run.
    MinimizeConfig config;

    int jobs = 1;

    static std::vector<int> default_sizes() {
        std::vector<int> s;
        for (int i = 1; i <= 20; ++i) s.push_back(i);
        return s;
    }

    /// Number of generation variables for a given instance size.
    static int variable_count(int size) {
        return std::max(1, static_cast<int>(std::lround(std::sqrt(size))));
    }
};

/// Variable names handed to the generator: p..z, then v12, v13, ...
inline std::vector<std::string> default_variable_names(int count) {
    std::vector<std::string> names;
    names.reserve(count);
    for (int i = 0; i < count; ++i) {
        if (i < 11)
            names.emplace_back(1, static_cast<char>('p' + i));
        else
            names.push_back("v" + std::to_string(i + 1));
    }
    return names;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed of one instance. Depends only on (plan seed, size, index), so the
/// same triple regenerates the same formula whatever else the plan says.
inline std::uint64_t instance_seed(std::uint64_t plan_seed, int size, int index) {
    return splitmix64(plan_seed ^ splitmix64((static_cast<std::uint64_t>(size) << 32) |
                                             static_cast<std::uint32_t>(index)));
}

/// The random input formula for one (plan, size, index) slot.
inline Formula generate_instance(const BenchPlan& plan, int size, int index) {
    FormulaSpace space{default_variable_names(BenchPlan::variable_count(size)),
                       plan.input_connectives, plan.input_allow_not,
                       plan.input_allow_false};
    CountTable table(space);
    std::mt19937_64 rng(instance_seed(plan.seed, size, index));
    return sample_uniform(table, size, rng);
}

/// One CSV row: a single (instance, algorithm) run.
struct BenchRecord {
    std::uint64_t seed = 0;  // per-instance derived seed
    int size = 0;
    int instance = 0;
    Algo algo = Algo::Brute;
    bool timed_out = false;
    double time_ms = 0.0;
    std::string input_formula;
    std::string output_formula;          // empty on timeout
    std::optional<int> output_size;      // empty on timeout
    std::uint64_t solver_calls = 0;
    std::uint64_t candidates_tested = 0;
};

namespace detail {

inline MinimizationResult run_algorithm(const Formula& f, Algo algo,
                                        const BenchPlan& plan) {
    MinimizeConfig cfg = plan.config;
    cfg.budget_ms = plan.timeout_ms;
    switch (algo) {
        case Algo::Brute: return minimize_bruteforce(f, cfg);
        case Algo::Sat: return minimize_sat(f, cfg);
        case Algo::QbfFast:
            cfg.qbf_mode = QbfMode::Fast;
            return minimize_qbf(f, cfg);
        case Algo::QbfExact:
            cfg.qbf_mode = QbfMode::Exact;
            return minimize_qbf(f, cfg);
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

/// Run the whole plan. Records come back sorted by (size, instance,
/// algorithm) no matter how many workers ran them; only time_ms varies
/// between repeat runs.
inline std::vector<BenchRecord> run_plan(const BenchPlan& plan) {
    struct Task {
        int size;
        int index;
    };
    std::vector<Task> tasks;
    for (int size : plan.sizes)
        for (int index = 0; index < plan.count; ++index) tasks.push_back({size, index});

    std::vector<std::vector<BenchRecord>> slots(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        while (true) {
            std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            try {
                const Task& task = tasks[t];
                Formula input = generate_instance(plan, task.size, task.index);
                std::string input_text = to_string(input);
                std::uint64_t seed = instance_seed(plan.seed, task.size, task.index);
                for (Algo algo : plan.algorithms) {
                    auto start = std::chrono::steady_clock::now();
                    MinimizationResult r = detail::run_algorithm(input, algo, plan);
                    double wall_ms = std::chrono::duration<double, std::milli>(
                                         std::chrono::steady_clock::now() - start)
                                         .count();
                    BenchRecord rec;
                    rec.seed = seed;
                    rec.size = task.size;
                    rec.instance = task.index;
                    rec.algo = algo;
                    rec.time_ms = wall_ms;
                    rec.input_formula = input_text;
                    rec.solver_calls = r.solver_calls;
                    rec.candidates_tested = r.candidates_tested;
                    if (r.status == MinimizeStatus::Timeout) {
                        rec.timed_out = true;
                    } else {
                        rec.output_formula = to_string(*r.output);
                        rec.output_size = r.output_size;
                    }
                    slots[t].push_back(rec);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    int jobs = std::max(1, plan.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<BenchRecord> records;
    records.reserve(tasks.size() * plan.algorithms.size());
    for (auto& slot : slots)
        for (auto& rec : slot) records.push_back(std::move(rec));
    std::sort(records.begin(), records.end(),
              [](const BenchRecord& a, const BenchRecord& b) {
                  if (a.size != b.size) return a.size < b.size;
                  if (a.instance != b.instance) return a.instance < b.instance;
                  return static_cast<int>(a.algo) < static_cast<int>(b.algo);
              });
    return records;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "seed,size,instance,algo,status,time_ms,input_formula,output_formula,"
    "output_size,solver_calls,candidates_tested";

inline void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
    out << kCsvHeader << '\n';
    for (const BenchRecord& r : records) {
        out << r.seed << ',' << r.size << ',' << r.instance << ','
            << algo_name(r.algo) << ',' << (r.timed_out ? "timeout" : "ok") << ','
            << std::fixed << std::setprecision(3) << r.time_ms << ','
            << r.input_formula << ',' << r.output_formula << ',';
        if (r.output_size) out << *r.output_size;
        out << ',' << r.solver_calls << ',' << r.candidates_tested << '\n';
    }
}

inline std::vector<BenchRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw std::runtime_error("missing or unexpected CSV header");
    std::vector<BenchRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                cells.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (cells.size() != 11)
            throw std::runtime_error("CSV line " + std::to_string(line_no) +
                                     ": expected 11 fields, found " +
                                     std::to_string(cells.size()));
        try {
            BenchRecord r;
            r.seed = std::stoull(cells[0]);
            r.size = std::stoi(cells[1]);
            r.instance = std::stoi(cells[2]);
            r.algo = parse_algo(cells[3]);
            if (cells[4] == "ok")
                r.timed_out = false;
            else if (cells[4] == "timeout")
                r.timed_out = true;
            else
                throw std::invalid_argument("bad status: " + cells[4]);
            r.time_ms = std::stod(cells[5]);
            r.input_formula = cells[6];
            r.output_formula = cells[7];
            if (!cells[8].empty()) r.output_size = std::stoi(cells[8]);
            r.solver_calls = std::stoull(cells[9]);
            r.candidates_tested = std::stoull(cells[10]);
            records.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("CSV line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Per (size, algorithm) summary. Timed-out runs are excluded from the
/// mean and median times and from the size statistics; they are counted in
/// n and n_timeout.
struct StatsRow {
    int size = 0;
    Algo algo = Algo::Brute;
    int n = 0;
    int n_timeout = 0;
    std::optional<double> mean_ms;
    std::optional<double> median_ms;
    std::optional<double> mean_output_size;
    std::map<int, int> output_size_histogram;
};

inline std::vector<StatsRow> aggregate(const std::vector<BenchRecord>& records) {
    std::map<std::pair<int, int>, std::vector<const BenchRecord*>> groups;
    for (const BenchRecord& r : records)
        groups[{r.size, static_cast<int>(r.algo)}].push_back(&r);

    std::vector<StatsRow> rows;
    rows.reserve(groups.size());
    for (auto& [key, group] : groups) {
        StatsRow row;
        row.size = key.first;
        row.algo = static_cast<Algo>(key.second);
        row.n = static_cast<int>(group.size());
        std::vector<double> times;
        double size_sum = 0.0;
        int size_n = 0;
        for (const BenchRecord* r : group) {
            if (r->timed_out) {
                ++row.n_timeout;
                continue;
            }
            times.push_back(r->time_ms);
            if (r->output_size) {
                size_sum += *r->output_size;
                ++size_n;
                ++row.output_size_histogram[*r->output_size];
            }
        }
        if (!times.empty()) {
            double sum = 0.0;
            for (double t : times) sum += t;
            row.mean_ms = sum / static_cast<double>(times.size());
            std::sort(times.begin(), times.end());
            // Lower median for even counts.
            row.median_ms = times[(times.size() - 1) / 2];
        }
        if (size_n > 0) row.mean_output_size = size_sum / size_n;
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Per-instance times for one (size, algorithm) group, sorted in
/// decreasing order; timed-out runs come first as empty entries.
inline std::vector<std::optional<double>> time_distribution(
    const std::vector<BenchRecord>& records, int size, Algo algo) {
    std::vector<std::optional<double>> out;
    std::vector<double> finished;
    for (const BenchRecord& r : records) {
        if (r.size != size || r.algo != algo) continue;
        if (r.timed_out)
            out.emplace_back(std::nullopt);
        else
            finished.push_back(r.time_ms);
    }
    std::sort(finished.rbegin(), finished.rend());
    for (double t : finished) out.emplace_back(t);
    return out;
}

}  // namespace boolmin
