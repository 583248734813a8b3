#include "louver/threshold.hpp"

#include <algorithm>
#include <cmath>

namespace louver {

OracleConfig parse_oracle(const std::string& text) {
    OracleConfig cfg;
    if (text == "max") {
        cfg.variant = OracleVariant::SampleMax;
    } else if (text == "gap") {
        cfg.variant = OracleVariant::SampleGap;
    } else if (text == "meanmax") {
        cfg.variant = OracleVariant::SampleMeanMax;
    } else if (text.rfind("topk:", 0) == 0) {
        cfg.variant = OracleVariant::SampleTopK;
        cfg.m = std::stoi(text.substr(5));
    } else if (text.rfind("budget:", 0) == 0) {
        cfg.variant = OracleVariant::Budget;
        cfg.alpha = std::stod(text.substr(7));
    } else {
        throw std::invalid_argument("unknown oracle variant: " + text);
    }
    cfg.validate();
    return cfg;
}

std::string to_string(const OracleConfig& cfg) {
    switch (cfg.variant) {
        case OracleVariant::SampleMax: return "max";
        case OracleVariant::SampleGap: return "gap";
        case OracleVariant::SampleMeanMax: return "meanmax";
        case OracleVariant::SampleTopK: return "topk:" + std::to_string(cfg.m);
        case OracleVariant::Budget: return "budget:" + std::to_string(cfg.alpha);
    }
    return "?";
}

void Reservoir::update(KeyId id, ConstVecRef key) {
    ++seen_;
    if (keys_.size() < capacity_) {
        keys_.emplace_back(key);
        ids_.push_back(id);
        return;
    }
    // Item t replaces a uniform slot with probability capacity/t.
    std::uniform_int_distribution<std::size_t> pick(0, seen_ - 1);
    const std::size_t slot = pick(rng_);
    if (slot < capacity_) {
        keys_[slot] = key;
        ids_[slot] = id;
    }
}

Scalar estimate_tau(const Reservoir& res, ConstVecRef q, const OracleConfig& cfg) {
    cfg.validate();
    const std::size_t n = res.size();
    if (n == 0) throw std::invalid_argument("estimate_tau: empty reservoir");

    std::vector<Scalar> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = dot(q, res.keys()[i]);
    std::sort(scores.begin(), scores.end(), std::greater<>());

    switch (cfg.variant) {
        case OracleVariant::SampleMax:
            return scores[0];
        case OracleVariant::SampleTopK:
            if (n < static_cast<std::size_t>(cfg.m))
                throw std::invalid_argument("estimate_tau: sample smaller than topk rank");
            return scores[cfg.m - 1];
        case OracleVariant::SampleGap: {
            if (n < 2) throw std::invalid_argument("estimate_tau: gap needs >= 2 samples");
            // Cut at the largest gap; ties keep the highest-score gap so the
            // head of the distribution is retained.
            std::size_t best = 0;
            Scalar best_gap = scores[0] - scores[1];
            for (std::size_t i = 1; i + 1 < n; ++i) {
                const Scalar gap = scores[i] - scores[i + 1];
                if (gap > best_gap) {
                    best_gap = gap;
                    best = i;
                }
            }
            return scores[best];
        }
        case OracleVariant::SampleMeanMax: {
            double mean = 0.0;
            for (Scalar s : scores) mean += s;
            mean /= static_cast<double>(n);
            return static_cast<Scalar>((double(scores[0]) + mean) / 2.0);
        }
        case OracleVariant::Budget: {
            // Nearest-rank quantile: ascending index ceil((1-alpha)*n),
            // clamped to the valid range.
            const auto idx = static_cast<std::size_t>(
                std::min<double>(std::ceil((1.0 - cfg.alpha) * static_cast<double>(n)),
                                 static_cast<double>(n - 1)));
            return scores[n - 1 - idx];  // scores is descending
        }
    }
    throw std::logic_error("estimate_tau: unreachable");
}

}  // namespace louver
