#include "louver/cache.hpp"

#include <numeric>

namespace louver {

void LouverCache::push_key(ConstVecRef k, ConstVecRef v) {
    store_.append(k, v);
    if (pending_count() >= buffer_capacity_) flush_buffer();
}

bool LouverCache::flush_buffer() {
    const std::size_t pending = pending_count();
    if (pending == 0) return false;
    if (index_.per_subspace.empty()) {
        index_ = build_index(store_, cfg_);
    } else {
        append_to_index(index_, store_, static_cast<KeyId>(index_.indexed_count), pending);
    }
    ++flushes_;
    return true;
}

std::vector<KeyId> LouverCache::pending_ids() const {
    std::vector<KeyId> out(pending_count());
    std::iota(out.begin(), out.end(), static_cast<KeyId>(index_.indexed_count));
    return out;
}

CacheQueryResult LouverCache::query(const QueryRequest& req, FilterAlgo algo,
                                    bool strict_threshold) const {
    CacheQueryResult res;

    if (index_.indexed_count > 0) {
        CandidateSet cand;
        if (algo == FilterAlgo::FullSubspace) {
            QueryRequest r2 = req;
            if (!r2.tau_subspace)
                r2.tau_subspace = derive_subspace_thresholds(index_, req.q, req.tau);
            cand = query_full_subspace(index_, store_, r2);
        } else {
            cand = query_ta(index_, store_, req);
        }
        res.stats = std::move(cand.stats);
        res.selected = exact_check(store_, cand.live_ids, req.q, req.tau);
    }

    // Buffer keys are scanned densely: thresholded for K* membership, always
    // counted as retrieved.
    const auto buffer = pending_ids();
    res.retrieved = res.selected;
    for (KeyId j : buffer) {
        res.retrieved.push_back(j);
        if (dot(req.q.data(), store_.key(j), store_.dim()) >= req.tau) res.selected.push_back(j);
    }

    // At the cache level f_scan covers every key whose exact score was
    // computed, buffer included.
    if (store_.n() > 0) {
        res.stats.keys_scanned += static_cast<std::int64_t>(buffer.size());
        res.stats.f_scan = static_cast<double>(res.stats.keys_scanned) /
                           static_cast<double>(store_.n());
    } else {
        res.stats.f_scan = 1.0;  // vacuous full scan of an empty cache
    }

    std::vector<KeyId> attended = strict_threshold ? res.selected : res.retrieved;
    res.attention = sparse_attention(store_, {}, attended, req.q, req.effective_scale());
    return res;
}

}  // namespace louver
