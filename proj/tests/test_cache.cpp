#include <doctest.h>

#include <functional>

#include "louver/cache.hpp"
#include "test_util.hpp"

using namespace louver;

namespace {

constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();

std::size_t hash_groups(const LouverIndex& index, std::size_t group_limit) {
    std::size_t h = 0;
    const auto mix = [&h](std::size_t v) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    for (const auto& sub : index.per_subspace) {
        for (std::size_t g = 0; g < std::min(group_limit, sub.groups.size()); ++g) {
            const auto& grp = sub.groups[g];
            for (KeyId j : grp.members) mix(j);
            for (Eigen::Index c = 0; c < grp.enclosure.center.size(); ++c)
                mix(std::hash<Scalar>{}(grp.enclosure.center[c]));
            mix(std::hash<Scalar>{}(grp.enclosure.radius));
        }
    }
    return h;
}

}  // namespace

TEST_CASE("push_key buffer semantics") {
    BuildConfig cfg{2, 4, GroupingStrategy::PcaTree, EnclosureKind::Ball, 0};
    LouverCache cache(8, cfg, 128);
    const Matrix keys = testutil::random_matrix(128, 8, 1);

    cache.push_key(keys.row(0).transpose(), keys.row(0).transpose());
    CHECK(cache.pending_count() == 1);
    CHECK(cache.indexed_count() == 0);
    CHECK(cache.flush_count() == 0);

    for (int t = 1; t < 127; ++t)
        cache.push_key(keys.row(t).transpose(), keys.row(t).transpose());
    CHECK(cache.pending_count() == 127);

    // The B-th key triggers the flush.
    cache.push_key(keys.row(127).transpose(), keys.row(127).transpose());
    CHECK(cache.pending_count() == 0);
    CHECK(cache.indexed_count() == 128);
    CHECK(cache.flush_count() == 1);
}

TEST_CASE("4096 pushes with B=128 flush exactly 32 times") {
    BuildConfig cfg{4, 4, GroupingStrategy::PcaTree, EnclosureKind::Ball, 0};
    LouverCache cache(16, cfg, 128);
    const Matrix keys = testutil::random_matrix(4096, 16, 2);
    for (int t = 0; t < 4096; ++t)
        cache.push_key(keys.row(t).transpose(), keys.row(t).transpose());
    CHECK(cache.flush_count() == 32);
    CHECK(cache.pending_count() == 0);
}

TEST_CASE("flush of B=8 pending keys with r=4 appends 2 groups per subspace") {
    BuildConfig cfg{2, 4, GroupingStrategy::PcaTree, EnclosureKind::Ball, 0};
    LouverCache cache(8, cfg, 16);
    const Matrix keys = testutil::random_matrix(8, 8, 3);
    for (int t = 0; t < 8; ++t)
        cache.push_key(keys.row(t).transpose(), keys.row(t).transpose());
    REQUIRE(cache.pending_count() == 8);
    CHECK(cache.flush_buffer());
    for (const auto& sub : cache.index().per_subspace) CHECK(sub.groups.size() == 2);
    CHECK(cache.pending_count() == 0);

    // Flush on an empty buffer is a no-op signal.
    CHECK_FALSE(cache.flush_buffer());
    CHECK(cache.flush_count() == 1);
}

TEST_CASE("coverage invariant and group immutability across flushes") {
    BuildConfig cfg{2, 4, GroupingStrategy::PcaTree, EnclosureKind::Ball, 0};
    LouverCache cache(8, cfg, 32);
    const Matrix keys = testutil::random_matrix(200, 8, 4);

    std::size_t prev_groups = 0;
    std::size_t prev_hash = 0;
    for (int t = 0; t < 200; ++t) {
        cache.push_key(keys.row(t).transpose(), keys.row(t).transpose());
        CHECK(cache.indexed_count() + cache.pending_count() == cache.store().n());
        const std::size_t groups = cache.index().per_subspace.empty()
                                       ? 0
                                       : cache.index().per_subspace[0].groups.size();
        if (groups > prev_groups && prev_groups > 0) {
            // Existing groups are untouched by the append.
            CHECK(hash_groups(cache.index(), prev_groups) == prev_hash);
        }
        prev_groups = groups;
        prev_hash = hash_groups(cache.index(), groups);
    }
}

TEST_CASE("interleaved pushes and queries always match the oracle") {
    BuildConfig cfg{4, 4, GroupingStrategy::PcaTree, EnclosureKind::Ball, 0};
    LouverCache cache(16, cfg, 32);
    const Matrix keys = testutil::random_matrix(512, 16, 5);
    const Matrix values = testutil::random_matrix(512, 16, 6);

    for (int t = 0; t < 512; ++t) {
        cache.push_key(keys.row(t).transpose(), values.row(t).transpose());
        if (t % 16 != 15) continue;
        for (auto algo : {FilterAlgo::Ta, FilterAlgo::FullSubspace}) {
            QueryRequest req;
            req.q = testutil::random_query(16, 1000 + t);
            req.tau = 2.0f;
            const auto ans = cache.query(req, algo);
            const auto want = brute_force_range(cache.store(), req.q, req.tau,
                                                cache.store().n());
            CHECK(ans.selected == want);
        }
    }
}

TEST_CASE("strict threshold toggle controls buffer attendance") {
    BuildConfig cfg{2, 2, GroupingStrategy::PcaTree, EnclosureKind::Ball, 0};
    LouverCache cache(4, cfg, 64);
    Matrix keys(3, 4);
    keys << 1, 1, 1, 1, -1, -1, -1, -1, 2, 2, 2, 2;
    for (int t = 0; t < 3; ++t)
        cache.push_key(keys.row(t).transpose(), keys.row(t).transpose());

    QueryRequest req;
    req.q = testutil::vec({1, 1, 1, 1});
    req.tau = 0.0f;  // key 1 scores -4, below tau

    const auto dense = cache.query(req, FilterAlgo::Ta, false);
    REQUIRE(dense.attention.has_value());
    CHECK(dense.attention->selected_ids.size() == 3);  // buffer attended densely
    CHECK(dense.selected == std::vector<KeyId>{0, 2});
    CHECK(dense.retrieved.size() == 3);

    const auto strict = cache.query(req, FilterAlgo::Ta, true);
    REQUIRE(strict.attention.has_value());
    CHECK(strict.attention->selected_ids == std::vector<KeyId>{0, 2});
}

TEST_CASE("partial final flush produces an undersized last group") {
    BuildConfig cfg{2, 4, GroupingStrategy::Contiguous, EnclosureKind::Ball, 0};
    LouverCache cache(8, cfg, 64);
    const Matrix keys = testutil::random_matrix(6, 8, 7);
    for (int t = 0; t < 6; ++t)
        cache.push_key(keys.row(t).transpose(), keys.row(t).transpose());
    CHECK(cache.flush_buffer());
    for (const auto& sub : cache.index().per_subspace) {
        REQUIRE(sub.groups.size() == 2);
        CHECK(sub.groups[0].members.size() == 4);
        CHECK(sub.groups[1].members.size() == 2);
    }
}
