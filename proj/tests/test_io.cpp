#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "louver/io.hpp"
#include "louver/query.hpp"
#include "test_util.hpp"

using namespace louver;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("louver_test_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("synthetic generation is deterministic and byte-stable") {
    TempDir tmp;
    const auto a = tmp.path / "a.lvkd";
    const auto b = tmp.path / "b.lvkd";
    save_dataset(a, gen_synthetic(256, 16, DistributionSpec{}, 42));
    save_dataset(b, gen_synthetic(256, 16, DistributionSpec{}, 42));
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a).substr(0, 4) == "LVKD");
}

TEST_CASE("gaussian sample mean stays near zero") {
    const std::size_t n = 4096;
    const Matrix data = gen_synthetic(n, 64, DistributionSpec{}, 7);
    // Coordinates are zero-mean gaussian but temporally correlated (AR(1)
    // persistence up to 0.95), so the sample-mean std is inflated by up to
    // (1 + 0.95) / (1 - 0.95) = 39 relative to iid draws of the same
    // marginal. Bound each coordinate mean at five long-run sigmas.
    const double long_run = std::sqrt(39.0 / static_cast<double>(n));
    for (int c = 0; c < 64; ++c) {
        const auto col = data.col(c).cast<double>();
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().mean());
        CHECK(std::abs(mean) < 5.0 * sd * long_run);
    }
}

TEST_CASE("mixture with zero spread collapses each component") {
    DistributionSpec spec;
    spec.type = DistributionSpec::Type::Mixture;
    spec.k_components = 3;
    spec.spread = 0.0;
    const Matrix data = gen_synthetic(64, 8, spec, 9);
    // Every row must equal one of at most 3 distinct points.
    std::vector<Vector> distinct;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const Vector row = data.row(i).transpose();
        bool found = false;
        for (const auto& p : distinct) found = found || testutil::same(p, row);
        if (!found) distinct.push_back(row);
    }
    CHECK(distinct.size() <= 3);
}

TEST_CASE("dataset round trip and corruption detection") {
    TempDir tmp;
    const auto path = tmp.path / "data.lvkd";
    const Matrix data = testutil::random_matrix(100, 12, 3);
    save_dataset(path, data);
    CHECK(testutil::same(load_dataset(path), data));

    // Truncation is an explicit error.
    const std::string bytes = slurp(path);
    std::ofstream(tmp.path / "trunc.lvkd", std::ios::binary)
        << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_WITH_AS(load_dataset(tmp.path / "trunc.lvkd"),
                         doctest::Contains("corrupt"), std::runtime_error);

    std::ofstream(tmp.path / "bad.lvkd", std::ios::binary) << "NOPE" << bytes.substr(4);
    CHECK_THROWS_WITH_AS(load_dataset(tmp.path / "bad.lvkd"), doctest::Contains("magic"),
                         std::runtime_error);
}

TEST_CASE("index snapshot round-trips behaviorally") {
    TempDir tmp;
    const KeyStore store = testutil::random_store(512, 32, 5);
    BuildConfig cfg{4, 4, GroupingStrategy::PcaTree, EnclosureKind::Ball, 1};
    const auto index = build_index(store, cfg);

    const auto path = tmp.path / "index.lvix";
    save_index(path, index);
    CHECK(slurp(path).substr(0, 4) == "LVIX");
    const auto loaded = load_index(path);
    CHECK(loaded.indexed_count == index.indexed_count);
    CHECK(loaded.config.grouping == cfg.grouping);

    for (int trial = 0; trial < 25; ++trial) {
        QueryRequest req;
        req.q = testutil::random_query(32, 600 + trial);
        req.tau = static_cast<Scalar>(trial) - 5.0f;
        const auto a = query_ta(index, store, req);
        const auto b = query_ta(loaded, store, req);
        CHECK(a.live_ids == b.live_ids);
        req.tau_subspace = derive_subspace_thresholds(index, req.q, req.tau);
        CHECK(query_full_subspace(index, store, req).live_ids ==
              query_full_subspace(loaded, store, req).live_ids);
    }

    // Truncated snapshot: explicit error, no partial state.
    const std::string bytes = slurp(path);
    std::ofstream(tmp.path / "trunc.lvix", std::ios::binary)
        << bytes.substr(0, bytes.size() - 7);
    CHECK_THROWS_AS(load_index(tmp.path / "trunc.lvix"), std::runtime_error);
}
