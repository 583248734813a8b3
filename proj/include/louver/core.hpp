#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "louver/types.hpp"

namespace louver {

/// Normative dot product: strict left-to-right scalar accumulation in
/// 32-bit float. Every score comparison in the library (oracle and index
/// alike) goes through this definition so exact set-equality checks are
/// well-posed.
inline Scalar dot(const Scalar* a, const Scalar* b, std::ptrdiff_t len) {
    Scalar acc = 0.0f;
    for (std::ptrdiff_t i = 0; i < len; ++i) acc += a[i] * b[i];
    return acc;
}

inline Scalar dot(ConstVecRef a, ConstVecRef b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    return dot(a.data(), b.data(), a.size());
}

/// Euclidean norm via the normative dot.
inline Scalar norm2(ConstVecRef v) {
    return std::sqrt(dot(v.data(), v.data(), v.size()));
}

/// Partition of [0, d) into S contiguous coordinate slices.
/// Widths are floor(d/S) or ceil(d/S); the wider slices come first.
struct SubspaceLayout {
    int d = 0;
    int S = 0;
    std::vector<int> offsets;  // size S+1, offsets[0]=0, offsets[S]=d

    SubspaceLayout() = default;
    SubspaceLayout(int dim, int subspaces) : d(dim), S(subspaces) {
        if (subspaces < 1 || subspaces > dim)
            throw std::invalid_argument("SubspaceLayout: need 1 <= S <= d");
        offsets.resize(S + 1);
        const int base = d / S;
        const int extra = d % S;  // first `extra` slices get width base+1
        offsets[0] = 0;
        for (int s = 0; s < S; ++s)
            offsets[s + 1] = offsets[s] + base + (s < extra ? 1 : 0);
    }

    int begin(int s) const { return offsets[s]; }
    int width(int s) const { return offsets[s + 1] - offsets[s]; }
};

/// View of the slice of a full-dimension vector belonging to subspace s.
inline Eigen::Map<const Vector> project(const Scalar* v, const SubspaceLayout& layout, int s) {
    if (s < 0 || s >= layout.S) throw std::out_of_range("project: subspace id out of range");
    return Eigen::Map<const Vector>(v + layout.begin(s), layout.width(s));
}

inline Eigen::Map<const Vector> project(const Vector& v, const SubspaceLayout& layout, int s) {
    assert(v.size() == layout.d);
    return project(v.data(), layout, s);
}

// The returned map aliases v; a temporary would leave it dangling.
Eigen::Map<const Vector> project(Vector&& v, const SubspaceLayout& layout, int s) = delete;

/// Query halfspace {p : <q, p> >= tau}.
struct Halfspace {
    Vector q;
    Scalar tau = 0.0f;
};

/// Convex bound around a group of projected keys. Ball and span-ball are
/// center+radius; aabb is a coordinate box. Gate cost is the per-group
/// filter cost in dot-product equivalents.
struct Enclosure {
    EnclosureKind kind = EnclosureKind::Ball;
    Vector center;       // ball / span_ball
    Scalar radius = 0.0f;
    Vector lo, hi;       // aabb

    int gate_cost() const { return kind == EnclosureKind::Aabb ? 2 : 1; }

    int dim() const {
        return kind == EnclosureKind::Aabb ? static_cast<int>(lo.size())
                                           : static_cast<int>(center.size());
    }
};

/// Max possible <q_s, p> over points p inside the enclosure.
/// Ball: <q_s, c> + rho * ||q_s||.  Aabb: corner maximization per coordinate.
inline Scalar enclosure_upper_bound(const Enclosure& e, ConstVecRef q_s) {
    if (e.dim() != q_s.size())
        throw std::invalid_argument("enclosure_upper_bound: dimension mismatch");
    if (e.kind == EnclosureKind::Aabb) {
        Scalar acc = 0.0f;
        for (Eigen::Index i = 0; i < q_s.size(); ++i)
            acc += std::max(q_s[i] * e.lo[i], q_s[i] * e.hi[i]);
        return acc;
    }
    return dot(q_s, e.center) + e.radius * norm2(q_s);
}

/// Ball–halfspace (or box–halfspace) intersection test. Ties count as
/// intersecting: the retrieval predicate is inclusive (>= tau).
inline bool intersects(const Enclosure& e, ConstVecRef q_s, Scalar tau_s) {
    return enclosure_upper_bound(e, q_s) >= tau_s;
}

/// Append-only key/value store. Rows are addressed by stable id in [0, n).
/// Storage grows geometrically; rows [0, n) never move once written is a
/// non-goal (reallocation may relocate), but their contents never mutate.
class KeyStore {
  public:
    explicit KeyStore(int dim) : d_(dim) {
        if (dim < 1) throw std::invalid_argument("KeyStore: d >= 1 required");
    }

    KeyStore(Matrix keys, Matrix values)
        : d_(static_cast<int>(keys.cols())),
          n_(keys.rows()),
          keys_(std::move(keys)),
          values_(std::move(values)) {
        if (keys_.rows() != values_.rows() || keys_.cols() != values_.cols())
            throw std::invalid_argument("KeyStore: keys/values shape mismatch");
        if (d_ < 1) throw std::invalid_argument("KeyStore: d >= 1 required");
        for (Eigen::Index j = 0; j < n_; ++j)
            max_key_norm_ = std::max(max_key_norm_, norm2(keys_.row(j).transpose()));
    }

    KeyId append(ConstVecRef k, ConstVecRef v) {
        if (k.size() != d_ || v.size() != d_)
            throw std::invalid_argument("KeyStore::append: dimension mismatch");
        if (n_ == keys_.rows()) grow(std::max<Eigen::Index>(16, 2 * n_));
        keys_.row(n_) = k.transpose();
        values_.row(n_) = v.transpose();
        max_key_norm_ = std::max(max_key_norm_, norm2(k));
        return static_cast<KeyId>(n_++);
    }

    std::size_t n() const { return static_cast<std::size_t>(n_); }
    int dim() const { return d_; }
    auto keys() const { return keys_.topRows(n_); }
    auto values() const { return values_.topRows(n_); }
    const Scalar* key(KeyId j) const { return keys_.row(j).data(); }
    const Scalar* value(KeyId j) const { return values_.row(j).data(); }

    /// Largest key norm seen so far; used for float-safety slack when
    /// deriving per-subspace thresholds.
    Scalar max_key_norm() const { return max_key_norm_; }

  private:
    void grow(Eigen::Index cap) {
        Matrix k(cap, d_), v(cap, d_);
        k.topRows(n_) = keys_.topRows(n_);
        v.topRows(n_) = values_.topRows(n_);
        keys_.swap(k);
        values_.swap(v);
    }

    int d_;
    Eigen::Index n_ = 0;
    Matrix keys_{0, d_};
    Matrix values_{0, d_};
    Scalar max_key_norm_ = 0.0f;
};

}  // namespace louver
