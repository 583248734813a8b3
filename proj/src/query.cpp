#include "louver/query.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace louver {

std::vector<KeyId> brute_force_range(const KeyStore& store, ConstVecRef q, Scalar tau,
                                     std::size_t limit) {
    if (limit > store.n()) throw std::invalid_argument("brute_force_range: limit > n");
    const int d = store.dim();
    std::vector<KeyId> out;
    for (std::size_t j = 0; j < limit; ++j)
        if (dot(q.data(), store.key(static_cast<KeyId>(j)), d) >= tau)
            out.push_back(static_cast<KeyId>(j));
    return out;
}

std::vector<KeyId> exact_check(const KeyStore& store, std::span<const KeyId> candidates,
                               ConstVecRef q, Scalar tau) {
    const int d = store.dim();
    std::vector<KeyId> out;
    out.reserve(candidates.size());
    for (KeyId j : candidates)
        if (dot(q.data(), store.key(j), d) >= tau) out.push_back(j);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::vector<KeyId> collect_live(const std::vector<std::uint8_t>& mask) {
    std::vector<KeyId> out;
    for (std::size_t j = 0; j < mask.size(); ++j)
        if (mask[j]) out.push_back(static_cast<KeyId>(j));
    return out;
}

// Upper bounds for every group of one subspace, streamed coordinate-major
// from the packed gate arrays. Per group the float operations and their
// order match enclosure_upper_bound exactly (0 + q_0*a_0 + ... , then the
// radius term last), so both paths yield bit-identical bounds while the
// per-coordinate inner loops vectorize.
void gate_bounds(const SubspaceIndex& sub, const Scalar* qs, int w, EnclosureKind kind,
                 Scalar* out) {
    const std::size_t K = sub.groups.size();
    std::fill(out, out + K, 0.0f);
    if (kind == EnclosureKind::Aabb) {
        for (int c = 0; c < w; ++c) {
            const Scalar qc = qs[c];
            const Scalar* lo = sub.gate_lo[c].data();
            const Scalar* hi = sub.gate_hi[c].data();
            for (std::size_t i = 0; i < K; ++i) out[i] += std::max(qc * lo[i], qc * hi[i]);
        }
    } else {
        for (int c = 0; c < w; ++c) {
            const Scalar qc = qs[c];
            const Scalar* ctr = sub.gate_centers[c].data();
            for (std::size_t i = 0; i < K; ++i) out[i] += qc * ctr[i];
        }
        const Scalar qn = std::sqrt(dot(qs, qs, w));
        const Scalar* rad = sub.gate_radii.data();
        for (std::size_t i = 0; i < K; ++i) out[i] += rad[i] * qn;
    }
}

void finalize_stats(QueryStats& st, const LouverIndex& index) {
    st.groups_tested = 0;
    for (auto g : st.groups_tested_per_subspace) st.groups_tested += g;
    const std::size_t n = index.indexed_count;
    st.f_scan = n ? static_cast<double>(st.keys_scanned) / static_cast<double>(n) : 0.0;
    const int gate = index.config.enclosing == EnclosureKind::Aabb ? 2 : 1;
    st.gate_cost_equiv =
        static_cast<double>(gate) * static_cast<double>(st.groups_tested) / index.config.r;
}

}  // namespace

CandidateSet query_full_subspace(const LouverIndex& index, const KeyStore& store,
                                 const QueryRequest& req) {
    if (!req.tau_subspace)
        throw std::invalid_argument("query_full_subspace: tau_subspace required");
    if (static_cast<int>(req.tau_subspace->size()) != index.layout.S)
        throw std::invalid_argument("query_full_subspace: tau_subspace length != S");
    (void)store;

    const std::size_t n = index.indexed_count;
    std::vector<std::uint8_t> live(n, 1);
    CandidateSet result;
    result.stats.groups_tested_per_subspace.resize(index.layout.S, 0);

    std::vector<std::uint8_t> sub_live(n);
    std::vector<Scalar> bounds;
    for (int s = 0; s < index.layout.S; ++s) {
        const Scalar* qs = req.q.data() + index.layout.begin(s);
        const Scalar tau_s = (*req.tau_subspace)[s];
        std::fill(sub_live.begin(), sub_live.end(), 0);
        const auto& sub = index.per_subspace[s];
        result.stats.groups_tested_per_subspace[s] = static_cast<std::int64_t>(sub.groups.size());
        bounds.resize(sub.groups.size());
        gate_bounds(sub, qs, index.layout.width(s), index.config.enclosing, bounds.data());
        for (std::size_t i = 0; i < sub.groups.size(); ++i) {
            if (bounds[i] < tau_s) continue;  // inclusive predicate: ties intersect
            for (std::uint32_t t = sub.member_offsets[i]; t < sub.member_offsets[i + 1]; ++t)
                sub_live[sub.member_ids[t]] = 1;
        }
        for (std::size_t j = 0; j < n; ++j) live[j] &= sub_live[j];
    }

    result.live_ids = collect_live(live);
    result.stats.keys_scanned = static_cast<std::int64_t>(result.live_ids.size());
    finalize_stats(result.stats, index);
    return result;
}

namespace {

// Order-preserving map from float to unsigned: ascending keys sort like
// ascending floats, so descending scans walk from the top.
inline std::uint32_t rank_key(Scalar x) {
    const auto b = std::bit_cast<std::uint32_t>(x);
    return (b & 0x80000000u) ? ~b : (b | 0x80000000u);
}

inline Scalar rank_key_inverse(std::uint32_t t) {
    return std::bit_cast<Scalar>((t & 0x80000000u) ? (t ^ 0x80000000u) : ~t);
}

// LSD radix sort, descending. Comparison sorts are noticeably slower on
// these sizes. 3 passes of 11 bits cover a 32-bit key.
void radix_sort_descending(std::vector<std::uint32_t>& v, std::vector<std::uint32_t>& scratch) {
    constexpr int kBits = 11;
    constexpr std::uint32_t kMask = (1u << kBits) - 1;
    scratch.resize(v.size());
    for (int shift = 0; shift < 32; shift += kBits) {
        std::uint32_t count[(kMask + 1) + 1] = {};
        for (std::uint32_t t : v) ++count[((t >> shift) & kMask) + 1];
        for (std::uint32_t b = 1; b <= kMask; ++b) count[b + 1] += count[b];
        for (std::uint32_t t : v) scratch[count[(t >> shift) & kMask]++] = t;
        v.swap(scratch);
    }
    std::reverse(v.begin(), v.end());
}

// Per-subspace ranked bound list, materialized lazily: a stride sample of
// the bounds estimates a cutoff for the requested prefix length, one linear
// gather collects every group at or above the cutoff (ascending group id),
// and a radix sort orders the gathered bound values descending. The gather
// predicate runs on exact bounds, so the prefix is exact; a short gather
// (sampling error) just lowers the cutoff and regathers.
//
// Only the bound values are sorted. The scan order on ties is ascending
// group id, and the gather already visits ids in ascending order, so the
// top-d prefix of the scan is recovered from the gathered list by taking
// everything strictly above the d-th ranked value plus the earliest ties at
// that value.
struct RankedBounds {
    std::vector<Scalar> bounds;              // upper bound per group
    std::vector<Scalar> sample;              // descending stride sample of bounds
    std::vector<std::uint32_t> cand_ids;     // gathered group ids, ascending
    std::vector<std::uint32_t> cand_keys;    // rank keys, parallel to cand_ids
    std::vector<std::uint32_t> sorted_keys;  // rank keys, descending
    std::size_t filled = 0;

    void init() {
        const std::size_t stride = std::max<std::size_t>(1, bounds.size() / 256);
        sample.clear();
        for (std::size_t i = 0; i < bounds.size(); i += stride) sample.push_back(bounds[i]);
        std::sort(sample.begin(), sample.end(), std::greater<>());
    }

    // Ensure the sorted prefix covers at least `target` entries (or all).
    void extend(std::size_t target, std::vector<std::uint32_t>& scratch) {
        const std::size_t K = bounds.size();
        target = std::min(target, K);
        if (filled >= target) return;
        // Sampled quantile with headroom; grows until the gather suffices.
        std::size_t pos = target * sample.size() / K;
        pos += pos / 2 + 8;
        for (;;) {
            const bool open = pos >= sample.size();
            const Scalar cut = open ? -std::numeric_limits<Scalar>::infinity() : sample[pos];
            cand_ids.clear();
            cand_keys.clear();
            for (std::uint32_t i = 0; i < K; ++i)
                if (bounds[i] >= cut) {
                    cand_ids.push_back(i);
                    cand_keys.push_back(rank_key(bounds[i]));
                }
            if (cand_ids.size() >= target || open) break;
            pos = pos * 2 + 8;
        }
        sorted_keys = cand_keys;
        radix_sort_descending(sorted_keys, scratch);
        filled = sorted_keys.size();
    }
};

}  // namespace

CandidateSet query_ta(const LouverIndex& index, const KeyStore& store, const QueryRequest& req) {
    (void)store;
    const int S = index.layout.S;
    const std::size_t n = index.indexed_count;

    CandidateSet result;
    result.stats.groups_tested_per_subspace.resize(S, 0);
    std::vector<RankedBounds> ranked(S);
    std::size_t max_groups = 0;
    for (int s = 0; s < S; ++s) {
        const auto& sub = index.per_subspace[s];
        ranked[s].bounds.resize(sub.groups.size());
        gate_bounds(sub, req.q.data() + index.layout.begin(s), index.layout.width(s),
                    index.config.enclosing, ranked[s].bounds.data());
        ranked[s].init();
        result.stats.groups_tested_per_subspace[s] =
            static_cast<std::int64_t>(sub.groups.size());
        max_groups = std::max(max_groups, sub.groups.size());
    }

    // The scan visits each subspace's groups in descending-bound order
    // (ties by ascending group id), one group per subspace per round, and
    // halts after the first round d* where the aggregated upper bound drops
    // below tau. The live set after d* rounds is exactly the union of every
    // subspace's top-d* groups, so it suffices to find d* on the ranked
    // bound values and then mark the members of each top-d* prefix.
    std::vector<std::uint32_t> scratch;
    std::size_t prefix = std::min<std::size_t>(1024, max_groups);
    for (int s = 0; s < S; ++s) ranked[s].extend(prefix, scratch);

    std::size_t halt_depth = 0;  // 0: never halted, scan everything
    double halt_upper = 0.0;
    for (std::size_t d = 1; d <= max_groups; ++d) {
        if (d > prefix) {
            prefix = std::min(prefix * 2, max_groups);
            for (int s = 0; s < S; ++s) ranked[s].extend(prefix, scratch);
        }
        double upper = 0.0;
        for (int s = 0; s < S; ++s)
            if (d <= ranked[s].filled)
                upper += static_cast<double>(rank_key_inverse(ranked[s].sorted_keys[d - 1]));
        if (upper < static_cast<double>(req.tau)) {
            halt_depth = d;
            halt_upper = upper;
            break;
        }
    }

    std::vector<std::uint8_t> live(n, 0);
    std::size_t live_count = 0;
    for (int s = 0; s < S; ++s) {
        const auto& sub = index.per_subspace[s];
        const std::uint32_t* off = sub.member_offsets.data();
        const KeyId* mem = sub.member_ids.data();
        const auto mark = [&](std::uint32_t g) {
            for (std::uint32_t t = off[g]; t < off[g + 1]; ++t) {
                const KeyId j = mem[t];
                if (!live[j]) {
                    live[j] = 1;
                    ++live_count;
                }
            }
        };
        const std::size_t K = sub.groups.size();
        const std::size_t depth_s = halt_depth == 0 ? K : std::min(halt_depth, K);
        if (depth_s == K) {
            for (std::uint32_t g = 0; g < K; ++g) mark(g);
            continue;
        }
        // Top-depth_s prefix of the scan order (bound descending, group id
        // ascending on ties): everything strictly above the boundary value,
        // plus the earliest gathered ties at the boundary.
        const RankedBounds& rb = ranked[s];
        const std::uint32_t v = rb.sorted_keys[depth_s - 1];
        const std::size_t above =
            static_cast<std::size_t>(std::lower_bound(rb.sorted_keys.begin(),
                                                      rb.sorted_keys.begin() + depth_s, v,
                                                      std::greater<>()) -
                                     rb.sorted_keys.begin());
        std::size_t ties_left = depth_s - above;
        for (std::size_t i = 0; i < rb.cand_ids.size(); ++i) {
            const std::uint32_t k = rb.cand_keys[i];
            if (k > v) {
                mark(rb.cand_ids[i]);
            } else if (k == v && ties_left > 0) {
                mark(rb.cand_ids[i]);
                --ties_left;
            }
        }
    }

    if (halt_depth > 0) {
        result.stats.ta_stop_depth = static_cast<int>(halt_depth);
        result.stats.ta_stop_upper = halt_upper;
    }
    result.live_ids = collect_live(live);
    result.stats.keys_scanned = static_cast<std::int64_t>(live_count);
    finalize_stats(result.stats, index);
    return result;
}

std::vector<Scalar> derive_subspace_thresholds(const LouverIndex& index, ConstVecRef q,
                                               Scalar tau) {
    const int S = index.layout.S;
    std::vector<double> peak(S, 0.0);  // M_s
    double norm_bound_sq = 0.0;        // bound on max ||k||^2 via enclosures
    std::vector<Scalar> bounds;
    for (int s = 0; s < S; ++s) {
        const auto& sub = index.per_subspace[s];
        bounds.resize(sub.groups.size());
        gate_bounds(sub, q.data() + index.layout.begin(s), index.layout.width(s),
                    index.config.enclosing, bounds.data());
        double m = -std::numeric_limits<double>::infinity();
        for (Scalar f : bounds) m = std::max(m, static_cast<double>(f));
        peak[s] = m;
        norm_bound_sq += sub.norm_bound * sub.norm_bound;
    }

    // Slack absorbing the gap between the full left-to-right dot and the sum
    // of per-subspace partial dots under float rounding. With a single
    // subspace the two coincide, so no slack is needed.
    const double eps = std::numeric_limits<Scalar>::epsilon();
    const double slack =
        S == 1 ? 0.0
               : 4.0 * index.layout.d * eps * double(q.norm()) * std::sqrt(norm_bound_sq);

    double total_peak = 0.0;
    for (int s = 0; s < S; ++s) total_peak += peak[s];
    std::vector<Scalar> out(S);
    for (int s = 0; s < S; ++s)
        out[s] = static_cast<Scalar>(double(tau) - (total_peak - peak[s]) - slack);
    return out;
}

std::optional<AttentionResult> sparse_attention(const KeyStore& store,
                                                std::span<const KeyId> buffer_ids,
                                                std::span<const KeyId> selected_ids, ConstVecRef q,
                                                Scalar scale) {
    std::vector<KeyId> tokens(selected_ids.begin(), selected_ids.end());
    tokens.insert(tokens.end(), buffer_ids.begin(), buffer_ids.end());
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    if (tokens.empty()) return std::nullopt;

    const int d = store.dim();
    std::vector<Scalar> scores(tokens.size());
    Scalar max_score = -std::numeric_limits<Scalar>::infinity();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        scores[i] = scale * dot(q.data(), store.key(tokens[i]), d);
        max_score = std::max(max_score, scores[i]);
    }

    AttentionResult res;
    res.selected_ids = std::move(tokens);
    res.weights.resize(scores.size());
    Scalar denom = 0.0f;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        res.weights[i] = std::exp(scores[i] - max_score);
        denom += res.weights[i];
    }
    res.output = Vector::Zero(d);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        res.weights[i] /= denom;
        res.output += res.weights[i] *
                      Eigen::Map<const Vector>(store.value(res.selected_ids[i]), d);
    }
    return res;
}

double recall_at_k(std::span<const KeyId> exact_topk, std::span<const KeyId> retrieved) {
    if (exact_topk.empty()) throw std::invalid_argument("recall_at_k: k >= 1 required");
    std::vector<KeyId> a(exact_topk.begin(), exact_topk.end());
    std::vector<KeyId> b(retrieved.begin(), retrieved.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<KeyId> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    return static_cast<double>(both.size()) / static_cast<double>(a.size());
}

}  // namespace louver
