#pragma once

#include <random>

#include "louver/core.hpp"

namespace louver {

enum class OracleVariant { SampleMax, SampleTopK, SampleGap, SampleMeanMax, Budget };

struct OracleConfig {
    OracleVariant variant = OracleVariant::SampleMax;
    int m = 2;           // rank for sample_topk
    double alpha = 0.1;  // target retrieval fraction for budget

    void validate() const {
        if (variant == OracleVariant::SampleTopK && m < 1)
            throw std::invalid_argument("OracleConfig: m >= 1 required");
        if (variant == OracleVariant::Budget && !(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("OracleConfig: 0 < alpha < 1 required");
    }
};

/// Parses "max", "topk:m", "gap", "meanmax", "budget:alpha".
OracleConfig parse_oracle(const std::string& text);
std::string to_string(const OracleConfig& cfg);

/// Fixed-capacity uniform sample of past keys (Algorithm R).
class Reservoir {
  public:
    explicit Reservoir(std::size_t capacity = 256, std::uint64_t seed = 0)
        : capacity_(capacity), rng_(seed) {
        if (capacity < 1) throw std::invalid_argument("Reservoir: capacity >= 1 required");
    }

    void update(KeyId id, ConstVecRef key);

    std::size_t size() const { return keys_.size(); }
    std::size_t seen() const { return seen_; }
    std::size_t capacity() const { return capacity_; }
    const std::vector<Vector>& keys() const { return keys_; }
    const std::vector<KeyId>& ids() const { return ids_; }

  private:
    std::size_t capacity_;
    std::vector<Vector> keys_;
    std::vector<KeyId> ids_;
    std::size_t seen_ = 0;
    std::mt19937_64 rng_;
};

/// Estimates the retrieval threshold from reservoir scores against q.
Scalar estimate_tau(const Reservoir& res, ConstVecRef q, const OracleConfig& cfg);

}  // namespace louver
