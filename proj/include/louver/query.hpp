#pragma once

#include <optional>
#include <span>
#include <vector>

#include "louver/index.hpp"

namespace louver {

struct QueryRequest {
    Vector q;
    Scalar tau = 0.0f;
    std::optional<std::vector<Scalar>> tau_subspace;  // full-subspace filter only
    Scalar scale = 0.0f;  // softmax scale; 0 means use 1/sqrt(d)

    Scalar effective_scale() const {
        return scale != 0.0f ? scale : Scalar(1.0 / std::sqrt(double(q.size())));
    }
};

struct QueryStats {
    std::vector<std::int64_t> groups_tested_per_subspace;
    std::int64_t groups_tested = 0;   // sum over subspaces
    std::int64_t keys_scanned = 0;    // keys entering the exact check
    double f_scan = 0.0;              // keys_scanned / indexed_count
    double gate_cost_equiv = 0.0;     // g * groups_tested / r
    std::optional<int> ta_stop_depth;
    std::optional<double> ta_stop_upper;  // U(d*) when the TA scan halted early
};

struct CandidateSet {
    std::vector<KeyId> live_ids;  // ascending, duplicate-free
    QueryStats stats;
};

struct AttentionResult {
    std::vector<KeyId> selected_ids;
    std::vector<Scalar> weights;  // aligned with selected_ids
    Vector output;
};

/// Linear-scan oracle over ids [0, limit): all ids with dot(q, k) >= tau.
std::vector<KeyId> brute_force_range(const KeyStore& store, ConstVecRef q, Scalar tau,
                                     std::size_t limit);

/// Filter candidates by the exact threshold test; output sorted ascending.
std::vector<KeyId> exact_check(const KeyStore& store, std::span<const KeyId> candidates,
                               ConstVecRef q, Scalar tau);

/// Per-subspace ball filter with AND across subspaces. Requires tau_subspace.
CandidateSet query_full_subspace(const LouverIndex& index, const KeyStore& store,
                                 const QueryRequest& req);

/// Threshold-algorithm filter: scan groups of every subspace in descending
/// upper-bound order, halting once the aggregate bound on unseen keys drops
/// below tau.
CandidateSet query_ta(const LouverIndex& index, const KeyStore& store, const QueryRequest& req);

/// Safe per-subspace thresholds for the full-subspace filter:
/// tau_s = tau - sum_{s' != s} max_i f_{s',i}, minus a small slack covering
/// float accumulation error, so any key meeting the global threshold meets
/// every per-subspace one.
std::vector<Scalar> derive_subspace_thresholds(const LouverIndex& index, ConstVecRef q,
                                               Scalar tau);

/// Softmax-weighted value sum over selected ids plus buffer ids.
/// Empty token set yields nullopt; the caller decides the fallback.
std::optional<AttentionResult> sparse_attention(const KeyStore& store,
                                                std::span<const KeyId> buffer_ids,
                                                std::span<const KeyId> selected_ids, ConstVecRef q,
                                                Scalar scale);

/// |retrieved ∩ exact_topk| / k.
double recall_at_k(std::span<const KeyId> exact_topk, std::span<const KeyId> retrieved);

}  // namespace louver
