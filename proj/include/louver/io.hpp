#pragma once

#include <filesystem>
#include <string>

#include "louver/index.hpp"

namespace louver {

/// Synthetic data distributions. Nothing is normalized.
///
/// Gaussian emulates a decode-time key stream rather than drawing iid
/// coordinates: each key is a slowly varying scalar magnitude (AR(1)) times a
/// fixed heavy-tailed direction shared by the whole stream, plus a small
/// per-coordinate AR(1) residual. Every coordinate is still exactly zero-mean
/// gaussian, but consecutive keys are correlated and a few coordinates carry
/// most of the energy — the regime in which group enclosures are tight and
/// per-subspace rankings agree, so filtering has something to prune.
///
/// Mixture draws each point from one of k_components gaussian clusters whose
/// centers are themselves standard-normal scaled by 4, with per-cluster
/// spread as the component std-dev.
struct DistributionSpec {
    enum class Type { Gaussian, Mixture } type = Type::Gaussian;
    int k_components = 8;
    double spread = 0.25;
};

DistributionSpec parse_distribution(const std::string& text);

Matrix gen_synthetic(std::size_t n, int d, const DistributionSpec& dist, std::uint64_t seed);

/// Queries paired with the key dataset gen_synthetic(·, d, dist, seed)
/// produces. Gaussian queries align with the sign pattern of the stream's
/// dominant direction plus isotropic noise (queries and keys deliberately
/// follow different laws, as attention queries and keys do); mixture queries
/// are fresh draws from the same mixture. Deterministic given seed and
/// independent of n, so keys and queries can be generated in either order.
Matrix gen_synthetic_queries(std::size_t n_queries, int d, const DistributionSpec& dist,
                             std::uint64_t seed);

/// "LVKD" container: magic, version=1, n, d (u32 LE), then n*d f32 LE
/// row-major. Used for both key and query matrices.
void save_dataset(const std::filesystem::path& path, const Matrix& data);
Matrix load_dataset(const std::filesystem::path& path);

/// "LVIX" versioned index snapshot: layout, build config, indexed_count,
/// and every subspace's assignments, enclosures, and member lists.
void save_index(const std::filesystem::path& path, const LouverIndex& index);
LouverIndex load_index(const std::filesystem::path& path);

}  // namespace louver
