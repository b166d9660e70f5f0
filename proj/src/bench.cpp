#include "skillrank/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "skillrank/types.hpp"

namespace skillrank {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start, Clock::time_point end) {
    return std::chrono::duration<double, std::milli>(end - start).count();
}

}  // namespace

double percentile_nearest_rank(std::vector<double> values, double p) {
    if (values.empty()) throw ValidationError("percentile: no values");
    if (p <= 0.0 || p > 100.0) throw ValidationError("percentile: p must be in (0, 100]");
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

LatencyReport time_queries(const QueryRunner& runner, const std::vector<std::string>& queries,
                           const BenchOptions& options) {
    if (queries.empty()) throw ValidationError("time_queries: no queries");
    if (options.concurrency == 0) throw ValidationError("time_queries: concurrency must be >= 1");

    LatencyReport report;
    report.concurrency = options.concurrency;
    report.drive_mode = options.concurrency == 1 ? "sequential" : "concurrent";

    // Warmup phase: untimed, cycling through the query set.
    report.warmup_count = std::min(options.warmup, queries.size() * 4);
    for (std::size_t i = 0; i < report.warmup_count; ++i) {
        try {
            runner(queries[i % queries.size()]);
        } catch (...) {
            // warmup failures do not count against the report
        }
    }

    if (options.concurrency == 1) {
        const auto phase_start = Clock::now();
        for (const auto& query : queries) {
            const auto start = Clock::now();
            try {
                runner(query);
                report.latencies_ms.push_back(elapsed_ms(start, Clock::now()));
            } catch (...) {
                ++report.failures;
            }
        }
        const auto phase_end = Clock::now();
        report.n_queries = report.latencies_ms.size();
        const double total_s = elapsed_ms(phase_start, phase_end) / 1000.0;
        report.qps = total_s > 0.0 ? static_cast<double>(report.n_queries) / total_s : 0.0;
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> failures{0};
        std::mutex latencies_mutex;
        std::vector<double> latencies;
        latencies.reserve(queries.size());

        const auto phase_start = Clock::now();
        std::vector<std::thread> workers;
        workers.reserve(options.concurrency);
        for (std::size_t w = 0; w < options.concurrency; ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= queries.size()) return;
                    const auto start = Clock::now();
                    try {
                        runner(queries[i]);
                        const double ms = elapsed_ms(start, Clock::now());
                        const std::lock_guard<std::mutex> lock(latencies_mutex);
                        latencies.push_back(ms);
                    } catch (...) {
                        failures.fetch_add(1);
                    }
                }
            });
        }
        for (auto& worker : workers) worker.join();
        const auto phase_end = Clock::now();

        report.latencies_ms = std::move(latencies);
        report.failures = failures.load();
        report.n_queries = report.latencies_ms.size();
        const double total_s = elapsed_ms(phase_start, phase_end) / 1000.0;
        report.qps = total_s > 0.0 ? static_cast<double>(report.n_queries) / total_s : 0.0;
    }

    if (!report.latencies_ms.empty()) {
        report.p50_ms = percentile_nearest_rank(report.latencies_ms, 50.0);
        report.p95_ms = percentile_nearest_rank(report.latencies_ms, 95.0);
    }
    return report;
}

std::string format_latency_report(const LatencyReport& report) {
    std::ostringstream os;
    os << "drive mode: " << report.drive_mode << " (concurrency " << report.concurrency
       << "), warmup " << report.warmup_count << ", failures " << report.failures << '\n';
    os << std::left << std::setw(12) << "p50 (ms)" << std::setw(12) << "p95 (ms)"
       << std::setw(10) << "QPS" << std::setw(10) << "queries" << '\n';
    os << std::left << std::fixed << std::setprecision(1) << std::setw(12) << report.p50_ms
       << std::setw(12) << report.p95_ms << std::setprecision(2) << std::setw(10)
       << report.qps << std::setw(10) << report.n_queries << '\n';
    return os.str();
}

}  // namespace skillrank
