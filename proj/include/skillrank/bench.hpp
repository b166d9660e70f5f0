#pragma once

#include <functional>
#include <string>
#include <vector>

namespace skillrank {

// Measures the online query path only; indexes and providers must already
// be warm.
struct LatencyReport {
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double qps = 0.0;
    std::size_t n_queries = 0;
    std::size_t warmup_count = 0;
    std::size_t failures = 0;
    std::size_t concurrency = 1;  // 1 = sequential latency mode
    std::string drive_mode = "sequential";
    std::vector<double> latencies_ms;  // timed phase only, in completion order
};

using QueryRunner = std::function<void(const std::string& query_text)>;

struct BenchOptions {
    std::size_t warmup = 5;
    std::size_t concurrency = 1;  // >1 switches to throughput drive
};

// Runs warmup queries untimed, then times each query end to end. Sequential
// mode keeps one query in flight for clean latency; concurrent mode drives
// `concurrency` in-flight queries for throughput. Percentiles are
// nearest-rank over the timed phase; a runner exception counts as a failure
// and the report stays partial.
LatencyReport time_queries(const QueryRunner& runner, const std::vector<std::string>& queries,
                           const BenchOptions& options = {});

// Nearest-rank percentile (no interpolation), p in (0, 100].
double percentile_nearest_rank(std::vector<double> values, double p);

std::string format_latency_report(const LatencyReport& report);

}  // namespace skillrank
