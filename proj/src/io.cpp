#include "louver/io.hpp"

#include <cstring>
#include <fstream>
#include <random>
#include <vector>

namespace louver {

namespace {

constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint32_t kIndexVersion = 1;
constexpr char kDatasetMagic[4] = {'L', 'V', 'K', 'D'};
constexpr char kIndexMagic[4] = {'L', 'V', 'I', 'X'};

// All on-disk integers and floats are little-endian; this code assumes a
// little-endian host, as the examples in this space do.

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error(std::string("corrupt file: truncated ") + what);
    return v;
}

void put_vec(std::ostream& os, const Vector& v) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(v.size()));
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(Scalar)));
}

Vector get_vec(std::istream& is) {
    const auto len = get<std::uint32_t>(is, "vector length");
    Vector v(len);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(len * sizeof(Scalar)));
    if (!is) throw std::runtime_error("corrupt file: truncated vector payload");
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
    return is;
}

void check_magic(std::istream& is, const char expected[4], const char* what) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, expected, 4) != 0)
        throw std::runtime_error(std::string("bad magic: not a ") + what + " file");
}

}  // namespace

DistributionSpec parse_distribution(const std::string& text) {
    DistributionSpec spec;
    if (text == "gaussian") return spec;
    if (text.rfind("mixture", 0) == 0) {
        spec.type = DistributionSpec::Type::Mixture;
        // "mixture" or "mixture:k:spread"
        const auto c1 = text.find(':');
        if (c1 != std::string::npos) {
            const auto c2 = text.find(':', c1 + 1);
            spec.k_components = std::stoi(text.substr(c1 + 1, c2 - c1 - 1));
            if (c2 != std::string::npos) spec.spread = std::stod(text.substr(c2 + 1));
        }
        if (spec.k_components < 1) throw std::invalid_argument("mixture: k >= 1 required");
        if (spec.spread < 0.0) throw std::invalid_argument("mixture: spread >= 0 required");
        return spec;
    }
    throw std::invalid_argument("unknown distribution: " + text);
}

namespace {

// Decode-trace gaussian stream parameters. kPhi* are AR(1) persistence
// coefficients; innovations are scaled so every AR process is stationary
// with unit variance, keeping each key coordinate exactly
// N(0, kSigmaMag^2 * v_c^2 + kSigmaResid^2).
constexpr double kSigmaMag = 1.5;    // scale of the shared magnitude
constexpr double kPhiMag = 0.95;     // persistence of the shared magnitude
constexpr double kSigmaResid = 0.3;  // scale of the per-coordinate residual
constexpr double kPhiResid = 0.9;    // persistence of the residual
constexpr double kSigmaDir = 2.5;    // log-std of direction coordinates
constexpr double kQueryAlign = 1.0;  // query weight on the direction's signs
constexpr double kSigmaQuery = 0.25; // isotropic query noise

// The seed is split into independent streams so the direction is shared by
// keys and queries while their trajectories stay distinct.
constexpr std::uint64_t kDirStream = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kQueryStream = 0xC2B2AE3D27D4EB4FULL;

// Fixed heavy-tailed direction: random signs, log-normal magnitudes. A few
// coordinates dominate, so contiguous coordinate slices differ strongly in
// energy.
Vector dominant_direction(int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ kDirStream);
    std::normal_distribution<double> unit(0.0, 1.0);
    Vector v(d);
    for (int c = 0; c < d; ++c) {
        const double sign = unit(rng) < 0.0 ? -1.0 : 1.0;
        v[c] = static_cast<Scalar>(sign * std::exp(kSigmaDir * unit(rng)));
    }
    return v;
}

Matrix mixture_centers(const DistributionSpec& dist, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    Matrix centers(dist.k_components, d);
    for (int k = 0; k < dist.k_components; ++k)
        for (int c = 0; c < d; ++c) centers(k, c) = static_cast<Scalar>(4.0 * unit(rng));
    return centers;
}

Matrix mixture_draws(const DistributionSpec& dist, const Matrix& centers, std::size_t n, int d,
                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, dist.k_components - 1);
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const int k = pick(rng);
        for (int c = 0; c < d; ++c)
            out(i, c) = centers(k, c) + static_cast<Scalar>(dist.spread * unit(rng));
    }
    return out;
}

}  // namespace

Matrix gen_synthetic(std::size_t n, int d, const DistributionSpec& dist, std::uint64_t seed) {
    if (n < 1 || d < 1) throw std::invalid_argument("gen_synthetic: n, d >= 1 required");

    if (dist.type == DistributionSpec::Type::Gaussian) {
        const Vector v = dominant_direction(d, seed);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> unit(0.0, 1.0);
        // Stationary start, then unit-variance AR(1) steps.
        const double step_m = std::sqrt(1.0 - kPhiMag * kPhiMag);
        const double step_r = std::sqrt(1.0 - kPhiResid * kPhiResid);
        double mag = unit(rng);
        std::vector<double> resid(d);
        for (int c = 0; c < d; ++c) resid[c] = unit(rng);

        Matrix out(n, d);
        for (std::size_t t = 0; t < n; ++t) {
            if (t > 0) mag = kPhiMag * mag + step_m * unit(rng);
            for (int c = 0; c < d; ++c) {
                if (t > 0) resid[c] = kPhiResid * resid[c] + step_r * unit(rng);
                out(t, c) = static_cast<Scalar>(kSigmaMag * mag * double(v[c]) +
                                                kSigmaResid * resid[c]);
            }
        }
        return out;
    }

    const Matrix centers = mixture_centers(dist, d, seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    // Skip the draws the centers consumed so point draws continue the stream.
    for (int i = 0; i < dist.k_components * d; ++i) unit(rng);
    std::uniform_int_distribution<int> pick(0, dist.k_components - 1);
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const int k = pick(rng);
        for (int c = 0; c < d; ++c)
            out(i, c) = centers(k, c) + static_cast<Scalar>(dist.spread * unit(rng));
    }
    return out;
}

Matrix gen_synthetic_queries(std::size_t n_queries, int d, const DistributionSpec& dist,
                             std::uint64_t seed) {
    if (n_queries < 1 || d < 1)
        throw std::invalid_argument("gen_synthetic_queries: n, d >= 1 required");

    if (dist.type == DistributionSpec::Type::Gaussian) {
        const Vector v = dominant_direction(d, seed);
        std::mt19937_64 rng(seed ^ kQueryStream);
        std::normal_distribution<double> unit(0.0, 1.0);
        Matrix out(n_queries, d);
        for (std::size_t i = 0; i < n_queries; ++i)
            for (int c = 0; c < d; ++c) {
                const double sign = v[c] < 0.0f ? -1.0 : 1.0;
                out(i, c) = static_cast<Scalar>(kQueryAlign * sign + kSigmaQuery * unit(rng));
            }
        return out;
    }

    const Matrix centers = mixture_centers(dist, d, seed);
    return mixture_draws(dist, centers, n_queries, d, seed ^ kQueryStream);
}

void save_dataset(const std::filesystem::path& path, const Matrix& data) {
    auto os = open_out(path);
    os.write(kDatasetMagic, 4);
    put<std::uint32_t>(os, kDatasetVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(data.rows()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(data.cols()));
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(Scalar)));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

Matrix load_dataset(const std::filesystem::path& path) {
    auto is = open_in(path);
    check_magic(is, kDatasetMagic, "dataset");
    const auto version = get<std::uint32_t>(is, "version");
    if (version != kDatasetVersion)
        throw std::runtime_error("unsupported dataset version " + std::to_string(version));
    const auto n = get<std::uint32_t>(is, "row count");
    const auto d = get<std::uint32_t>(is, "dimension");
    Matrix data(n, d);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(Scalar)));
    if (!is) throw std::runtime_error("corrupt file: truncated payload in " + path.string());
    is.peek();
    if (!is.eof()) throw std::runtime_error("corrupt file: trailing bytes in " + path.string());
    return data;
}

void save_index(const std::filesystem::path& path, const LouverIndex& index) {
    auto os = open_out(path);
    os.write(kIndexMagic, 4);
    put<std::uint32_t>(os, kIndexVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(index.layout.d));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(index.layout.S));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(index.config.r));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(index.config.grouping));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(index.config.enclosing));
    put<std::uint64_t>(os, index.config.rng_seed);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(index.indexed_count));

    for (const auto& sub : index.per_subspace) {
        put<std::uint64_t>(os, static_cast<std::uint64_t>(sub.assignments.size()));
        os.write(reinterpret_cast<const char*>(sub.assignments.data()),
                 static_cast<std::streamsize>(sub.assignments.size() * sizeof(std::uint32_t)));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(sub.groups.size()));
        for (const auto& grp : sub.groups) {
            put<std::uint32_t>(os, static_cast<std::uint32_t>(grp.enclosure.kind));
            if (grp.enclosure.kind == EnclosureKind::Aabb) {
                put_vec(os, grp.enclosure.lo);
                put_vec(os, grp.enclosure.hi);
            } else {
                put_vec(os, grp.enclosure.center);
                put<Scalar>(os, grp.enclosure.radius);
            }
            put<std::uint32_t>(os, static_cast<std::uint32_t>(grp.members.size()));
            os.write(reinterpret_cast<const char*>(grp.members.data()),
                     static_cast<std::streamsize>(grp.members.size() * sizeof(KeyId)));
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

LouverIndex load_index(const std::filesystem::path& path) {
    auto is = open_in(path);
    check_magic(is, kIndexMagic, "index snapshot");
    const auto version = get<std::uint32_t>(is, "version");
    if (version != kIndexVersion)
        throw std::runtime_error("unsupported snapshot version " + std::to_string(version));

    LouverIndex index;
    const auto d = get<std::uint32_t>(is, "dimension");
    const auto S = get<std::uint32_t>(is, "subspace count");
    index.config.S = static_cast<int>(S);
    index.config.r = static_cast<int>(get<std::uint32_t>(is, "group size"));
    index.config.grouping = static_cast<GroupingStrategy>(get<std::uint32_t>(is, "grouping"));
    index.config.enclosing = static_cast<EnclosureKind>(get<std::uint32_t>(is, "enclosing"));
    index.config.rng_seed = get<std::uint64_t>(is, "seed");
    index.layout = SubspaceLayout(static_cast<int>(d), static_cast<int>(S));
    index.indexed_count = static_cast<std::size_t>(get<std::uint64_t>(is, "indexed count"));

    index.per_subspace.resize(S);
    for (auto& sub : index.per_subspace) {
        const auto asz = get<std::uint64_t>(is, "assignment count");
        sub.assignments.resize(asz);
        is.read(reinterpret_cast<char*>(sub.assignments.data()),
                static_cast<std::streamsize>(asz * sizeof(std::uint32_t)));
        if (!is) throw std::runtime_error("corrupt file: truncated assignments");
        const auto gcount = get<std::uint32_t>(is, "group count");
        sub.groups.resize(gcount);
        for (auto& grp : sub.groups) {
            grp.enclosure.kind = static_cast<EnclosureKind>(get<std::uint32_t>(is, "kind"));
            if (grp.enclosure.kind == EnclosureKind::Aabb) {
                grp.enclosure.lo = get_vec(is);
                grp.enclosure.hi = get_vec(is);
            } else {
                grp.enclosure.center = get_vec(is);
                grp.enclosure.radius = get<Scalar>(is, "radius");
            }
            const auto msz = get<std::uint32_t>(is, "member count");
            grp.members.resize(msz);
            is.read(reinterpret_cast<char*>(grp.members.data()),
                    static_cast<std::streamsize>(msz * sizeof(KeyId)));
            if (!is) throw std::runtime_error("corrupt file: truncated members");
            append_gate_entry(sub, grp);  // packed arrays are derived, not stored
        }
    }
    is.peek();
    if (!is.eof()) throw std::runtime_error("corrupt file: trailing bytes in " + path.string());
    return index;
}

}  // namespace louver
