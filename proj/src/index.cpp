#include "louver/index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace louver {

namespace {

// Returns the number of groups produced. `ids` spans the working id
// permutation; [lo, hi) is the current subtree.
std::uint32_t pca_split(Eigen::Ref<const Matrix> points, std::uint32_t* ids, std::size_t lo,
                        std::size_t hi, int r, std::uint32_t offset,
                        std::vector<std::uint32_t>& out) {
    const std::size_t m = hi - lo;
    if (m <= static_cast<std::size_t>(r)) {
        for (std::size_t i = lo; i < hi; ++i) out[ids[i]] = offset;
        return 1;
    }

    // Dominant coordinate axis: max variance, ties toward the lowest index.
    const int dim = static_cast<int>(points.cols());
    int axis = 0;
    double best_var = -1.0;
    for (int c = 0; c < dim; ++c) {
        double mean = 0.0;
        for (std::size_t i = lo; i < hi; ++i) mean += points(ids[i], c);
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double dv = points(ids[i], c) - mean;
            var += dv * dv;
        }
        if (var > best_var) {
            best_var = var;
            axis = c;
        }
    }

    // Sort by coordinate, ties by id, so median splits are reproducible.
    std::sort(ids + lo, ids + hi, [&](std::uint32_t a, std::uint32_t b) {
        const Scalar pa = points(a, axis), pb = points(b, axis);
        if (pa != pb) return pa < pb;
        return a < b;
    });

    const std::size_t left = m / 2;
    const std::uint32_t left_groups = pca_split(points, ids, lo, lo + left, r, offset, out);
    // Advance by the actual left-subtree group count so ids stay dense.
    const std::uint32_t right_groups =
        pca_split(points, ids, lo + left, hi, r, offset + left_groups, out);
    return left_groups + right_groups;
}

}  // namespace

std::vector<std::uint32_t> balanced_pca_tree(Eigen::Ref<const Matrix> points, int r) {
    const std::size_t m = static_cast<std::size_t>(points.rows());
    if (m == 0) throw std::invalid_argument("balanced_pca_tree: empty point set");
    std::vector<std::uint32_t> ids(m);
    std::iota(ids.begin(), ids.end(), 0u);
    std::vector<std::uint32_t> out(m);
    pca_split(points, ids.data(), 0, m, r, 0, out);
    return out;
}

std::vector<std::uint32_t> assign_groups(Eigen::Ref<const Matrix> points, const BuildConfig& cfg,
                                         int subspace, KeyId base_id) {
    const std::size_t m = static_cast<std::size_t>(points.rows());
    if (m == 0) throw std::invalid_argument("assign_groups: empty point set");
    const std::size_t r = static_cast<std::size_t>(cfg.r);
    std::vector<std::uint32_t> out(m);
    switch (cfg.grouping) {
        case GroupingStrategy::Contiguous:
            for (std::size_t j = 0; j < m; ++j) out[j] = static_cast<std::uint32_t>(j / r);
            break;
        case GroupingStrategy::Interleaved: {
            const std::size_t K = (m + r - 1) / r;
            for (std::size_t j = 0; j < m; ++j) out[j] = static_cast<std::uint32_t>(j % K);
            break;
        }
        case GroupingStrategy::Random: {
            std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed),
                              static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                              static_cast<std::uint32_t>(subspace),
                              static_cast<std::uint32_t>(base_id)};
            std::mt19937_64 rng(seq);
            std::vector<std::uint32_t> perm(m);
            std::iota(perm.begin(), perm.end(), 0u);
            std::shuffle(perm.begin(), perm.end(), rng);
            for (std::size_t p = 0; p < m; ++p) out[perm[p]] = static_cast<std::uint32_t>(p / r);
            break;
        }
        case GroupingStrategy::PcaTree:
            out = balanced_pca_tree(points, cfg.r);
            break;
    }
    return out;
}

Enclosure enclose_group(Eigen::Ref<const Matrix> points, EnclosureKind kind) {
    const Eigen::Index m = points.rows();
    const Eigen::Index dim = points.cols();
    if (m == 0) throw std::invalid_argument("enclose_group: empty group");

    Enclosure e;
    e.kind = kind;
    if (kind == EnclosureKind::Aabb) {
        e.lo = points.colwise().minCoeff().transpose();
        e.hi = points.colwise().maxCoeff().transpose();
        return e;
    }

    if (kind == EnclosureKind::Ball) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
        for (Eigen::Index i = 0; i < m; ++i) acc += points.row(i).cast<double>().transpose();
        e.center = (acc / static_cast<double>(m)).cast<Scalar>();
    } else {  // span_ball: midpoint of the min/max box
        const Vector lo = points.colwise().minCoeff().transpose();
        const Vector hi = points.colwise().maxCoeff().transpose();
        e.center = 0.5f * (lo + hi);
    }

    Scalar radius = 0.0f;
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vector diff = points.row(i).transpose() - e.center;
        radius = std::max(radius, norm2(diff));
    }
    // One ulp of headroom keeps every member inside under float rounding.
    if (radius > 0.0f)
        radius = std::nextafter(radius, std::numeric_limits<Scalar>::infinity());
    e.radius = radius;
    return e;
}

void append_gate_entry(SubspaceIndex& sub, const Group& grp) {
    const Enclosure& e = grp.enclosure;
    double b = 0.0;
    if (e.kind == EnclosureKind::Aabb) {
        const std::size_t w = static_cast<std::size_t>(e.lo.size());
        if (sub.gate_lo.empty()) {
            sub.gate_lo.resize(w);
            sub.gate_hi.resize(w);
        }
        double sq = 0.0;
        for (std::size_t c = 0; c < w; ++c) {
            sub.gate_lo[c].push_back(e.lo[c]);
            sub.gate_hi[c].push_back(e.hi[c]);
            const double m = std::max(std::abs(double(e.lo[c])), std::abs(double(e.hi[c])));
            sq += m * m;
        }
        b = std::sqrt(sq);
    } else {
        const std::size_t w = static_cast<std::size_t>(e.center.size());
        if (sub.gate_centers.empty()) sub.gate_centers.resize(w);
        for (std::size_t c = 0; c < w; ++c) sub.gate_centers[c].push_back(e.center[c]);
        sub.gate_radii.push_back(e.radius);
        b = double(e.center.norm()) + double(e.radius);
    }
    sub.norm_bound = std::max(sub.norm_bound, b);

    if (sub.member_offsets.empty()) sub.member_offsets.push_back(0);
    sub.member_ids.insert(sub.member_ids.end(), grp.members.begin(), grp.members.end());
    sub.member_offsets.push_back(static_cast<std::uint32_t>(sub.member_ids.size()));
}

namespace {

void append_subspace_groups(SubspaceIndex& sub, Eigen::Ref<const Matrix> proj,
                            const std::vector<std::uint32_t>& local_assign, KeyId base_id,
                            EnclosureKind kind) {
    const std::size_t m = local_assign.size();
    const std::uint32_t group_base = static_cast<std::uint32_t>(sub.groups.size());
    std::uint32_t local_groups = 0;
    for (std::uint32_t a : local_assign) local_groups = std::max(local_groups, a + 1);

    std::vector<std::vector<KeyId>> members(local_groups);
    for (std::size_t j = 0; j < m; ++j)
        members[local_assign[j]].push_back(base_id + static_cast<KeyId>(j));

    sub.assignments.reserve(sub.assignments.size() + m);
    for (std::size_t j = 0; j < m; ++j) sub.assignments.push_back(group_base + local_assign[j]);

    for (std::uint32_t g = 0; g < local_groups; ++g) {
        Matrix pts(members[g].size(), proj.cols());
        for (std::size_t i = 0; i < members[g].size(); ++i)
            pts.row(i) = proj.row(members[g][i] - base_id);
        Group grp;
        grp.enclosure = enclose_group(pts, kind);
        grp.members = std::move(members[g]);
        append_gate_entry(sub, grp);
        sub.groups.push_back(std::move(grp));
    }
}

void index_range(LouverIndex& index, const KeyStore& store, KeyId first_id, std::size_t count) {
    const auto keys = store.keys();
    for (int s = 0; s < index.layout.S; ++s) {
        const Matrix proj =
            keys.block(first_id, index.layout.begin(s), count, index.layout.width(s));
        const auto assign = assign_groups(proj, index.config, s, first_id);
        append_subspace_groups(index.per_subspace[s], proj, assign, first_id,
                               index.config.enclosing);
    }
    index.indexed_count = first_id + count;
}

}  // namespace

LouverIndex build_index(const KeyStore& store, const BuildConfig& cfg) {
    cfg.validate(store.dim());
    if (store.n() == 0) throw std::invalid_argument("build_index: empty store");
    LouverIndex index;
    index.layout = SubspaceLayout(store.dim(), cfg.S);
    index.config = cfg;
    index.per_subspace.resize(cfg.S);
    index_range(index, store, 0, store.n());
    return index;
}

void append_to_index(LouverIndex& index, const KeyStore& store, KeyId first_id,
                     std::size_t count) {
    if (first_id != index.indexed_count)
        throw std::invalid_argument("append_to_index: ids must extend the indexed range");
    if (count == 0) return;
    if (first_id + count > store.n())
        throw std::invalid_argument("append_to_index: range exceeds store");
    index_range(index, store, first_id, count);
}

}  // namespace louver
