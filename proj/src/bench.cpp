#include "louver/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace louver {

double speedup_estimate(double g, double r, double f_scan) {
    if (r < 1.0) throw std::invalid_argument("speedup_estimate: r >= 1 required");
    if (g < 0.0 || f_scan < 0.0 || f_scan > 1.0)
        throw std::invalid_argument("speedup_estimate: need g >= 0 and f_scan in [0, 1]");
    const double denom = g / r + f_scan;
    if (denom == 0.0) throw std::domain_error("speedup_estimate: g and f_scan both zero");
    return 1.0 / denom;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + mid);
        return 0.5 * (lo + hi);
    }
    return hi;
}

std::vector<KeyId> exact_topk_ids(const KeyStore& store, ConstVecRef q, int k) {
    std::vector<std::pair<Scalar, KeyId>> scored(store.n());
    for (std::size_t j = 0; j < store.n(); ++j)
        scored[j] = {dot(q.data(), store.key(static_cast<KeyId>(j)), store.dim()),
                     static_cast<KeyId>(j)};
    const std::size_t kk = std::min<std::size_t>(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + kk, scored.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    std::vector<KeyId> out(kk);
    for (std::size_t i = 0; i < kk; ++i) out[i] = scored[i].second;
    return out;
}

}  // namespace

MetricsReport run_decode_sim(const Matrix& keys, const Matrix& values, const Matrix& queries,
                             const DecodeSimConfig& cfg) {
    if (keys.rows() != values.rows() || keys.rows() != queries.rows())
        throw std::invalid_argument("run_decode_sim: keys/values/queries row mismatch");
    if (!cfg.threshold.fixed_tau && !cfg.threshold.oracle)
        throw std::invalid_argument("run_decode_sim: no threshold source");
    const int d = static_cast<int>(keys.cols());
    const std::size_t steps = static_cast<std::size_t>(keys.rows());

    LouverCache cache(d, cfg.build, cfg.buffer_capacity);
    Reservoir reservoir(cfg.reservoir_capacity, cfg.seed);

    MetricsReport rep;
    rep.steps = steps;
    std::vector<double> wall_us;
    wall_us.reserve(steps);
    double sum_tau = 0.0, sum_speedup = 0.0;
    std::map<int, double> recall_sum;
    std::size_t recall_steps = 0;

    for (std::size_t t = 0; t < steps; ++t) {
        const Vector q = queries.row(t).transpose();

        QueryRequest req;
        req.q = q;
        if (cfg.threshold.fixed_tau) {
            req.tau = *cfg.threshold.fixed_tau;
        } else if (reservoir.size() >= 2 &&
                   reservoir.size() >= static_cast<std::size_t>(
                       cfg.threshold.oracle->variant == OracleVariant::SampleTopK
                           ? cfg.threshold.oracle->m
                           : 1)) {
            req.tau = estimate_tau(reservoir, q, *cfg.threshold.oracle);
        } else {
            req.tau = -std::numeric_limits<Scalar>::infinity();  // warmup: retrieve all
        }

        const auto t0 = std::chrono::steady_clock::now();
        const auto ans = cache.query(req, cfg.algo, cfg.strict_threshold);
        const auto t1 = std::chrono::steady_clock::now();
        wall_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());

        if (cfg.verify) {
            const auto oracle = brute_force_range(cache.store(), q, req.tau, cache.store().n());
            if (ans.selected != oracle) ++rep.violations;
        }
        if (!cfg.recall_ks.empty() && cache.store().n() > 0) {
            for (int k : cfg.recall_ks) {
                const auto topk = exact_topk_ids(cache.store(), q, k);
                if (!topk.empty()) recall_sum[k] += recall_at_k(topk, ans.retrieved);
            }
            ++recall_steps;
        }

        rep.mean_f_scan += ans.stats.f_scan;
        rep.mean_keys_scanned += static_cast<double>(ans.stats.keys_scanned);
        rep.mean_groups_tested += static_cast<double>(ans.stats.groups_tested);
        rep.mean_gate_cost_equiv += ans.stats.gate_cost_equiv;
        rep.mean_selected += static_cast<double>(ans.selected.size());
        rep.mean_retrieved += static_cast<double>(ans.retrieved.size());
        sum_tau += std::isfinite(req.tau) ? req.tau : 0.0;
        const int g = cfg.build.enclosing == EnclosureKind::Aabb ? 2 : 1;
        sum_speedup += speedup_estimate(g, cfg.build.r, ans.stats.f_scan);

        cache.push_key(keys.row(t).transpose(), values.row(t).transpose());
        reservoir.update(static_cast<KeyId>(t), keys.row(t).transpose());
    }

    const double inv = steps ? 1.0 / static_cast<double>(steps) : 0.0;
    rep.flushes = cache.flush_count();
    rep.mean_f_scan *= inv;
    rep.mean_keys_scanned *= inv;
    rep.mean_groups_tested *= inv;
    rep.mean_gate_cost_equiv *= inv;
    rep.mean_selected *= inv;
    rep.mean_retrieved *= inv;
    rep.mean_tau = sum_tau * inv;
    rep.mean_speedup_estimate = sum_speedup * inv;
    rep.median_query_us = median(std::move(wall_us));
    for (auto& [k, total] : recall_sum)
        rep.recall[k] = recall_steps ? total / static_cast<double>(recall_steps) : 0.0;
    return rep;
}

std::vector<AblationRow> run_ablation(const AblationSpec& spec) {
    spec.validate();
    const Matrix keys = gen_synthetic(spec.n, spec.d, spec.key_dist, spec.seed);
    const Matrix queries = gen_synthetic(spec.query_count, spec.d, spec.query_dist, spec.seed + 1);
    KeyStore store(keys, keys);  // values unused by the filter metrics

    Reservoir reservoir(256, spec.seed + 2);
    for (std::size_t j = 0; j < store.n(); ++j)
        reservoir.update(static_cast<KeyId>(j), keys.row(j).transpose());

    std::vector<AblationRow> rows;
    for (int S : spec.S_values)
        for (int r : spec.r_values)
            for (auto grouping : spec.groupings)
                for (auto enclosing : spec.enclosings) {
                    AblationRow row;
                    row.S = S;
                    row.r = r;
                    row.grouping = grouping;
                    row.enclosing = enclosing;
                    try {
                        BuildConfig cfg{S, r, grouping, enclosing, spec.seed};
                        const auto index = build_index(store, cfg);
                        const int g = enclosing == EnclosureKind::Aabb ? 2 : 1;

                        double scan_sum = 0.0, recall_sum = 0.0, gate_sum = 0.0;
                        std::vector<double> wall_us;
                        for (Eigen::Index qi = 0; qi < queries.rows(); ++qi) {
                            QueryRequest req;
                            req.q = queries.row(qi).transpose();
                            req.tau = spec.threshold.fixed_tau
                                          ? *spec.threshold.fixed_tau
                                          : estimate_tau(reservoir, req.q,
                                                         *spec.threshold.oracle);

                            const auto t0 = std::chrono::steady_clock::now();
                            CandidateSet cand;
                            if (spec.algo == FilterAlgo::FullSubspace) {
                                req.tau_subspace =
                                    derive_subspace_thresholds(index, req.q, req.tau);
                                cand = query_full_subspace(index, store, req);
                            } else {
                                cand = query_ta(index, store, req);
                            }
                            const auto got = exact_check(store, cand.live_ids, req.q, req.tau);
                            const auto t1 = std::chrono::steady_clock::now();
                            wall_us.push_back(
                                std::chrono::duration<double, std::micro>(t1 - t0).count());

                            const auto want =
                                brute_force_range(store, req.q, req.tau, store.n());
                            recall_sum += want.empty()
                                              ? 1.0
                                              : recall_at_k(want, got);
                            scan_sum += cand.stats.f_scan;
                            gate_sum += cand.stats.gate_cost_equiv;
                        }
                        const double nq = static_cast<double>(queries.rows());
                        row.scan_pct = 100.0 * scan_sum / nq;
                        row.recall_pct = 100.0 * recall_sum / nq;
                        row.gate_cost_equiv = gate_sum / nq;
                        row.speedup = speedup_estimate(g, r, scan_sum / nq);
                        row.median_query_us = median(std::move(wall_us));
                    } catch (const std::exception& e) {
                        row.failed = true;
                        row.error = e.what();
                    }
                    rows.push_back(std::move(row));
                }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "S,r,grouping,enclosing,scan_pct,recall_pct,speedup,gate_cost_equiv,"
          "median_query_us,status\n";
    char buf[160];
    for (const auto& row : rows) {
        if (row.failed) {
            os << row.S << ',' << row.r << ',' << to_string(row.grouping) << ','
               << to_string(row.enclosing) << ",,,,,,failed\n";
            continue;
        }
        std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f,%.2f,ok", row.scan_pct,
                      row.recall_pct, row.speedup, row.gate_cost_equiv, row.median_query_us);
        os << row.S << ',' << row.r << ',' << to_string(row.grouping) << ','
           << to_string(row.enclosing) << ',' << buf << '\n';
    }
    return os.str();
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%4s %4s %-12s %-10s %9s %9s %8s %10s\n", "S", "r",
                  "grouping", "enclosing", "scan%", "recall%", "speedup", "query_us");
    os << buf;
    for (const auto& row : rows) {
        if (row.failed) {
            std::snprintf(buf, sizeof(buf), "%4d %4d %-12s %-10s   FAILED: %s\n", row.S, row.r,
                          to_string(row.grouping).c_str(), to_string(row.enclosing).c_str(),
                          row.error.c_str());
        } else {
            std::snprintf(buf, sizeof(buf), "%4d %4d %-12s %-10s %9.2f %9.1f %7.2fx %10.1f\n",
                          row.S, row.r, to_string(row.grouping).c_str(),
                          to_string(row.enclosing).c_str(), row.scan_pct, row.recall_pct,
                          row.speedup, row.median_query_us);
        }
        os << buf;
    }
    return os.str();
}

}  // namespace louver
