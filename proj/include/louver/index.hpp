#pragma once

#include <cstdint>
#include <vector>

#include "louver/core.hpp"

namespace louver {

struct BuildConfig {
    int S = 4;
    int r = 4;
    GroupingStrategy grouping = GroupingStrategy::PcaTree;
    EnclosureKind enclosing = EnclosureKind::Ball;
    std::uint64_t rng_seed = 0;

    void validate(int d) const {
        if (S < 1) throw std::invalid_argument("BuildConfig: S >= 1 required");
        if (r < 1) throw std::invalid_argument("BuildConfig: r >= 1 required");
        if (S > d) throw std::invalid_argument("BuildConfig: S <= d required");
    }
};

struct Group {
    Enclosure enclosure;
    std::vector<KeyId> members;  // ascending key ids
};

struct SubspaceIndex {
    std::vector<std::uint32_t> assignments;  // key id -> group id
    std::vector<Group> groups;

    // Packed copies of the enclosure parameters, kept aligned with `groups`
    // and laid out coordinate-major (one contiguous array per coordinate),
    // so the per-group gate test streams contiguous memory instead of
    // chasing one small heap vector per group. Ball kinds fill
    // centers/radii; boxes fill lo/hi. Derived data: rebuilt on snapshot
    // load, never serialized.
    std::vector<std::vector<Scalar>> gate_centers;      // width arrays of K
    std::vector<Scalar> gate_radii;                     // K
    std::vector<std::vector<Scalar>> gate_lo, gate_hi;  // width arrays of K
    double norm_bound = 0.0;  // max over groups of the enclosure norm bound

    // Flattened copy of every group's member list: group g owns
    // member_ids[member_offsets[g] .. member_offsets[g + 1]). One contiguous
    // array instead of one heap vector per group, so marking a scan prefix
    // stays cache-resident.
    std::vector<std::uint32_t> member_offsets;  // K + 1 prefix offsets
    std::vector<KeyId> member_ids;
};

struct LouverIndex {
    SubspaceLayout layout;
    BuildConfig config;
    std::vector<SubspaceIndex> per_subspace;
    std::size_t indexed_count = 0;
};

/// Recursive median bisection along the max-variance coordinate axis.
/// Leaves of size <= r become groups; ids are dense in [0, K).
std::vector<std::uint32_t> balanced_pca_tree(Eigen::Ref<const Matrix> points, int r);

/// Dispatch over the grouping strategies. `subspace` and `base_id` salt the
/// seed for random grouping so different subspaces and update batches do not
/// share a permutation.
std::vector<std::uint32_t> assign_groups(Eigen::Ref<const Matrix> points, const BuildConfig& cfg,
                                         int subspace, KeyId base_id = 0);

/// Fit one enclosure around a set of member projections (rows of `points`).
/// Ball radii are nudged up one ulp so containment survives float rounding.
Enclosure enclose_group(Eigen::Ref<const Matrix> points, EnclosureKind kind);

/// Append one freshly created group's packed gate parameters and flattened
/// member list, and fold its norm bound into the subspace maximum. Must be
/// called once per group, in group order, to keep the packed arrays aligned
/// with `groups`.
void append_gate_entry(SubspaceIndex& sub, const Group& grp);

LouverIndex build_index(const KeyStore& store, const BuildConfig& cfg);

/// Group the keys [first_id, first_id + count) and append the resulting
/// groups to every subspace. Existing groups are never touched.
void append_to_index(LouverIndex& index, const KeyStore& store, KeyId first_id, std::size_t count);

}  // namespace louver
