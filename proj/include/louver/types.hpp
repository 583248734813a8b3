#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace louver {

using Scalar = float;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using ConstVecRef = Eigen::Ref<const Vector>;
using KeyId = std::uint32_t;

enum class GroupingStrategy : std::uint32_t {
    Contiguous = 0,
    Interleaved = 1,
    Random = 2,
    PcaTree = 3,
};

enum class EnclosureKind : std::uint32_t {
    Ball = 0,
    Aabb = 1,
    SpanBall = 2,
};

inline std::string to_string(GroupingStrategy g) {
    switch (g) {
        case GroupingStrategy::Contiguous: return "contiguous";
        case GroupingStrategy::Interleaved: return "interleaved";
        case GroupingStrategy::Random: return "random";
        case GroupingStrategy::PcaTree: return "pca_tree";
    }
    return "?";
}

inline std::string to_string(EnclosureKind k) {
    switch (k) {
        case EnclosureKind::Ball: return "ball";
        case EnclosureKind::Aabb: return "aabb";
        case EnclosureKind::SpanBall: return "span_ball";
    }
    return "?";
}

inline GroupingStrategy grouping_from_string(const std::string& s) {
    if (s == "contiguous") return GroupingStrategy::Contiguous;
    if (s == "interleaved") return GroupingStrategy::Interleaved;
    if (s == "random") return GroupingStrategy::Random;
    if (s == "pca_tree" || s == "pca") return GroupingStrategy::PcaTree;
    throw std::invalid_argument("unknown grouping strategy: " + s);
}

inline EnclosureKind enclosure_from_string(const std::string& s) {
    if (s == "ball") return EnclosureKind::Ball;
    if (s == "aabb") return EnclosureKind::Aabb;
    if (s == "span_ball" || s == "spanball") return EnclosureKind::SpanBall;
    throw std::invalid_argument("unknown enclosure kind: " + s);
}

}  // namespace louver
