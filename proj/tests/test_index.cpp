#include <doctest.h>

#include <chrono>
#include <map>
#include <random>

#include "louver/index.hpp"
#include "test_util.hpp"

using namespace louver;
using testutil::vec;

namespace {

std::map<std::uint32_t, std::size_t> group_sizes(const std::vector<std::uint32_t>& assign) {
    std::map<std::uint32_t, std::size_t> sizes;
    for (auto a : assign) ++sizes[a];
    return sizes;
}

void check_index_invariants(const LouverIndex& index, const KeyStore& store) {
    REQUIRE(index.per_subspace.size() == static_cast<std::size_t>(index.layout.S));
    for (int s = 0; s < index.layout.S; ++s) {
        const auto& sub = index.per_subspace[s];
        REQUIRE(sub.assignments.size() == index.indexed_count);

        // Partition: assignments and member lists are mutually consistent.
        std::vector<std::size_t> seen(index.indexed_count, 0);
        for (std::uint32_t g = 0; g < sub.groups.size(); ++g) {
            CHECK(sub.groups[g].members.size() <= static_cast<std::size_t>(index.config.r));
            for (KeyId j : sub.groups[g].members) {
                CHECK(sub.assignments[j] == g);
                ++seen[j];
            }
        }
        for (auto count : seen) CHECK(count == 1);

        // Containment: every member projection lies inside its enclosure.
        for (const auto& grp : sub.groups) {
            for (KeyId j : grp.members) {
                const auto p = project(store.key(j), index.layout, s);
                const auto& e = grp.enclosure;
                if (e.kind == EnclosureKind::Aabb) {
                    for (Eigen::Index c = 0; c < p.size(); ++c) {
                        CHECK(e.lo[c] <= p[c]);
                        CHECK(p[c] <= e.hi[c]);
                    }
                } else {
                    const Vector diff = p - e.center;
                    CHECK(norm2(diff) <= e.radius);
                }
            }
        }
    }
}

}  // namespace

TEST_CASE("balanced pca tree on simple 1-D inputs") {
    Matrix pts(4, 1);
    pts << 0, 1, 2, 3;
    const auto assign = balanced_pca_tree(pts, 2);
    CHECK(assign == std::vector<std::uint32_t>{0, 0, 1, 1});

    Matrix three(3, 2);
    three << 0, 0, 1, 1, 2, 2;
    CHECK(balanced_pca_tree(three, 4) == std::vector<std::uint32_t>{0, 0, 0});

    CHECK_THROWS_AS(balanced_pca_tree(Matrix(0, 1), 2), std::invalid_argument);
}

TEST_CASE("balanced pca tree m=10 r=4 splits 10 -> (5,5) -> (2,3),(2,3)") {
    const Matrix pts = testutil::random_matrix(10, 3, 5);
    const auto assign = balanced_pca_tree(pts, 4);
    const auto sizes = group_sizes(assign);
    REQUIRE(sizes.size() == 4);
    CHECK(sizes.at(0) == 2);
    CHECK(sizes.at(1) == 3);
    CHECK(sizes.at(2) == 2);
    CHECK(sizes.at(3) == 3);
}

TEST_CASE("assign_groups strategies") {
    const Matrix pts8 = testutil::random_matrix(8, 2, 1);
    BuildConfig cfg;
    cfg.r = 4;

    cfg.grouping = GroupingStrategy::Contiguous;
    CHECK(assign_groups(pts8, cfg, 0) == std::vector<std::uint32_t>{0, 0, 0, 0, 1, 1, 1, 1});

    cfg.grouping = GroupingStrategy::Interleaved;
    CHECK(assign_groups(pts8, cfg, 0) == std::vector<std::uint32_t>{0, 1, 0, 1, 0, 1, 0, 1});

    const Matrix pts9 = testutil::random_matrix(9, 2, 2);
    cfg.grouping = GroupingStrategy::Contiguous;
    const auto sizes = group_sizes(assign_groups(pts9, cfg, 0));
    CHECK(sizes.at(0) == 4);
    CHECK(sizes.at(1) == 4);
    CHECK(sizes.at(2) == 1);

    cfg.grouping = GroupingStrategy::Random;
    cfg.rng_seed = 7;
    const auto a1 = assign_groups(pts9, cfg, 0);
    const auto a2 = assign_groups(pts9, cfg, 0);
    CHECK(a1 == a2);  // seeded determinism
    for (const auto& [g, size] : group_sizes(a1)) CHECK(size <= 4);
}

TEST_CASE("enclose_group") {
    Matrix two(2, 2);
    two << 0, 0, 2, 0;
    const auto ball = enclose_group(two, EnclosureKind::Ball);
    CHECK(testutil::same(ball.center, vec({1, 0})));
    CHECK(ball.radius == doctest::Approx(1.0).epsilon(1e-6));

    Matrix one(1, 2);
    one << 3, -4;
    for (auto kind : {EnclosureKind::Ball, EnclosureKind::SpanBall}) {
        const auto e = enclose_group(one, kind);
        CHECK(testutil::same(e.center, vec({3, -4})));
        CHECK(e.radius == 0.0f);
    }
    const auto degenerate = enclose_group(one, EnclosureKind::Aabb);
    CHECK(testutil::same(degenerate.lo, vec({3, -4})));
    CHECK(testutil::same(degenerate.hi, vec({3, -4})));

    Matrix tri(3, 2);
    tri << 0, 0, 1, 2, 2, 1;
    const auto box = enclose_group(tri, EnclosureKind::Aabb);
    CHECK(testutil::same(box.lo, vec({0, 0})));
    CHECK(testutil::same(box.hi, vec({2, 2})));

    CHECK_THROWS_AS(enclose_group(Matrix(0, 2), EnclosureKind::Ball), std::invalid_argument);
}

TEST_CASE("build_index invariants on a real-sized instance") {
    const KeyStore store = testutil::random_store(4096, 64, 11);
    BuildConfig cfg{4, 4, GroupingStrategy::PcaTree, EnclosureKind::Ball, 0};
    const auto index = build_index(store, cfg);
    CHECK(index.indexed_count == 4096);
    check_index_invariants(index, store);
}

TEST_CASE("build_index single key") {
    Matrix k(1, 8);
    k = testutil::random_matrix(1, 8, 3);
    KeyStore store(k, k);
    BuildConfig cfg{2, 4, GroupingStrategy::PcaTree, EnclosureKind::Ball, 0};
    const auto index = build_index(store, cfg);
    for (const auto& sub : index.per_subspace) {
        REQUIRE(sub.groups.size() == 1);
        CHECK(sub.groups[0].enclosure.radius == 0.0f);
    }
    CHECK_THROWS_AS(build_index(store, BuildConfig{9, 4, GroupingStrategy::PcaTree,
                                                   EnclosureKind::Ball, 0}),
                    std::invalid_argument);
}

TEST_CASE("pca tree balance bounds") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 16 + rng() % 700;
        const int r = 2 + static_cast<int>(rng() % 7);
        if (n <= static_cast<std::size_t>(r)) continue;
        const Matrix pts = testutil::random_matrix(n, 4, trial);
        const auto sizes = group_sizes(balanced_pca_tree(pts, r));
        const std::size_t K = sizes.size();
        CHECK(K >= (n + r - 1) / r);
        CHECK(K <= (2 * n + r) / (r + 1));
        for (const auto& [g, size] : sizes) {
            CHECK(size >= static_cast<std::size_t>((r + 1) / 2));
            CHECK(size <= static_cast<std::size_t>(r));
        }
    }
}

TEST_CASE("build determinism across strategies") {
    const KeyStore store = testutil::random_store(257, 16, 23);
    for (auto grouping : {GroupingStrategy::Contiguous, GroupingStrategy::Interleaved,
                          GroupingStrategy::Random, GroupingStrategy::PcaTree}) {
        BuildConfig cfg{4, 4, grouping, EnclosureKind::Ball, 99};
        const auto a = build_index(store, cfg);
        const auto b = build_index(store, cfg);
        for (int s = 0; s < cfg.S; ++s) {
            CHECK(a.per_subspace[s].assignments == b.per_subspace[s].assignments);
            REQUIRE(a.per_subspace[s].groups.size() == b.per_subspace[s].groups.size());
            for (std::size_t g = 0; g < a.per_subspace[s].groups.size(); ++g) {
                CHECK(a.per_subspace[s].groups[g].members == b.per_subspace[s].groups[g].members);
                CHECK(testutil::same(a.per_subspace[s].groups[g].enclosure.center,
                                    b.per_subspace[s].groups[g].enclosure.center));
            }
        }
        check_index_invariants(a, store);
    }
}

TEST_CASE("construction time grows near-linearly") {
    const KeyStore small = testutil::random_store(8192, 32, 31);
    const KeyStore big = testutil::random_store(16384, 32, 32);
    BuildConfig cfg{4, 4, GroupingStrategy::PcaTree, EnclosureKind::Ball, 0};

    const auto time_build = [&](const KeyStore& store) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto index = build_index(store, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        CHECK(index.indexed_count == store.n());
        return std::chrono::duration<double>(t1 - t0).count();
    };
    time_build(small);  // warm up allocator and caches
    const double t_small = time_build(small);
    const double t_big = time_build(big);
    // O(S n log(n/r)): doubling n should far less than quadruple the time.
    // Generous bound to stay robust on shared hardware.
    CHECK(t_big < 4.0 * t_small + 0.05);
}
