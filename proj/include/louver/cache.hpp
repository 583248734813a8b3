#pragma once

#include "louver/query.hpp"

namespace louver {

enum class FilterAlgo { FullSubspace, Ta };

/// Result of a full decode-time query: index filter + exact check over the
/// indexed range, plus a dense scan of the buffer.
struct CacheQueryResult {
    std::vector<KeyId> selected;   // K*: all keys meeting the threshold
    std::vector<KeyId> retrieved;  // selected ∪ buffer (buffer counts as retrieved)
    QueryStats stats;
    std::optional<AttentionResult> attention;
};

/// KV store + Louver index + fixed-capacity update buffer.
/// Single-writer: push_key / flush_buffer require exclusive access; queries
/// are read-only and may run concurrently with each other.
class LouverCache {
  public:
    LouverCache(int dim, BuildConfig cfg, std::size_t buffer_capacity)
        : store_(dim), cfg_(cfg), buffer_capacity_(buffer_capacity) {
        cfg.validate(dim);
        if (buffer_capacity < 1)
            throw std::invalid_argument("LouverCache: buffer capacity >= 1 required");
    }

    /// Adopts an existing store; all of it is indexed immediately.
    LouverCache(KeyStore store, BuildConfig cfg, std::size_t buffer_capacity)
        : store_(std::move(store)), cfg_(cfg), buffer_capacity_(buffer_capacity) {
        if (buffer_capacity < 1)
            throw std::invalid_argument("LouverCache: buffer capacity >= 1 required");
        if (store_.n() > 0) index_ = build_index(store_, cfg_);
    }

    void push_key(ConstVecRef k, ConstVecRef v);

    /// Folds pending keys into the index. Returns false (no-op) when empty.
    bool flush_buffer();

    /// Threshold query over everything present: filtered index scan plus a
    /// dense buffer scan. If `strict_threshold` is false (the default),
    /// buffer keys below tau still enter the attention sum.
    CacheQueryResult query(const QueryRequest& req, FilterAlgo algo,
                           bool strict_threshold = false) const;

    const KeyStore& store() const { return store_; }
    const LouverIndex& index() const { return index_; }
    std::size_t indexed_count() const { return index_.indexed_count; }
    std::size_t pending_count() const { return store_.n() - index_.indexed_count; }
    std::vector<KeyId> pending_ids() const;
    std::size_t flush_count() const { return flushes_; }
    std::size_t buffer_capacity() const { return buffer_capacity_; }

  private:
    KeyStore store_;
    BuildConfig cfg_;
    std::size_t buffer_capacity_;
    LouverIndex index_;
    std::size_t flushes_ = 0;
};

}  // namespace louver
