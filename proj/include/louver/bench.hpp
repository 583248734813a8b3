#pragma once

#include <map>
#include <optional>
#include <string>

#include "louver/cache.hpp"
#include "louver/io.hpp"
#include "louver/threshold.hpp"

namespace louver {

/// Appendix-style cost model: query cost is proportional to g/r + f_scan,
/// so speedup over a brute-force scan is 1 / (g/r + f_scan).
double speedup_estimate(double g, double r, double f_scan);

struct ThresholdSource {
    std::optional<Scalar> fixed_tau;      // exactly one of these is set
    std::optional<OracleConfig> oracle;
};

struct DecodeSimConfig {
    BuildConfig build;
    std::size_t buffer_capacity = 128;
    FilterAlgo algo = FilterAlgo::Ta;
    ThresholdSource threshold;
    std::size_t reservoir_capacity = 256;
    std::uint64_t seed = 0;
    bool verify = false;                  // compare every answer to the oracle
    bool strict_threshold = false;
    std::vector<int> recall_ks;           // recall@k to report, vs exact top-k
};

struct MetricsReport {
    std::size_t steps = 0;
    std::size_t flushes = 0;
    std::size_t violations = 0;           // zero-false-negative check failures
    double mean_f_scan = 0.0;
    double mean_keys_scanned = 0.0;
    double mean_groups_tested = 0.0;
    double mean_gate_cost_equiv = 0.0;
    double mean_selected = 0.0;
    double mean_retrieved = 0.0;
    double mean_tau = 0.0;
    double mean_speedup_estimate = 0.0;
    double median_query_us = 0.0;
    std::map<int, double> recall;         // k -> mean recall@k
};

/// Autoregressive decode simulation: per step, estimate tau, query the cache,
/// compute attention, then push the step's key/value (triggering buffered
/// index updates). Row t of keys/values/queries drives step t.
MetricsReport run_decode_sim(const Matrix& keys, const Matrix& values, const Matrix& queries,
                             const DecodeSimConfig& cfg);

struct AblationSpec {
    std::vector<int> S_values;
    std::vector<int> r_values;
    std::vector<GroupingStrategy> groupings;
    std::vector<EnclosureKind> enclosings;
    std::size_t n = 4096;
    int d = 64;
    std::size_t query_count = 64;
    DistributionSpec key_dist;
    DistributionSpec query_dist;
    ThresholdSource threshold;
    FilterAlgo algo = FilterAlgo::Ta;
    std::uint64_t seed = 0;

    void validate() const {
        if (S_values.empty() || r_values.empty() || groupings.empty() || enclosings.empty())
            throw std::invalid_argument("AblationSpec: empty grid");
    }
};

struct AblationRow {
    int S = 0, r = 0;
    GroupingStrategy grouping = GroupingStrategy::PcaTree;
    EnclosureKind enclosing = EnclosureKind::Ball;
    double scan_pct = 0.0;
    double recall_pct = 0.0;
    double speedup = 0.0;
    double gate_cost_equiv = 0.0;
    double median_query_us = 0.0;
    bool failed = false;
    std::string error;
};

std::vector<AblationRow> run_ablation(const AblationSpec& spec);

/// Frozen CSV schema:
/// S,r,grouping,enclosing,scan_pct,recall_pct,speedup,gate_cost_equiv,median_query_us,status
std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace louver
