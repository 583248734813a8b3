// Command-line surface for the Louver index: dataset generation, index
// construction, batch queries, decode-loop simulation, and the ablation grid.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "louver/bench.hpp"

namespace {

using namespace louver;

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, Parse parse) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse(item));
    return out;
}

ThresholdSource make_threshold(const std::string& oracle, double tau, bool tau_set) {
    ThresholdSource src;
    if (tau_set)
        src.fixed_tau = static_cast<Scalar>(tau);
    else
        src.oracle = parse_oracle(oracle.empty() ? "budget:0.05" : oracle);
    return src;
}

void print_report(const MetricsReport& rep) {
    std::printf("steps:              %zu\n", rep.steps);
    std::printf("flushes:            %zu\n", rep.flushes);
    std::printf("violations:         %zu\n", rep.violations);
    std::printf("mean f_scan:        %.4f\n", rep.mean_f_scan);
    std::printf("mean keys_scanned:  %.1f\n", rep.mean_keys_scanned);
    std::printf("mean groups_tested: %.1f\n", rep.mean_groups_tested);
    std::printf("mean gate_cost:     %.2f\n", rep.mean_gate_cost_equiv);
    std::printf("mean selected:      %.1f\n", rep.mean_selected);
    std::printf("mean retrieved:     %.1f\n", rep.mean_retrieved);
    std::printf("mean tau:           %.4f\n", rep.mean_tau);
    std::printf("mean speedup est:   %.2fx\n", rep.mean_speedup_estimate);
    std::printf("median query us:    %.1f\n", rep.median_query_us);
    for (const auto& [k, v] : rep.recall) std::printf("recall@%d:          %.4f\n", k, v);
}

int run(int argc, char** argv) {
    CLI::App app{"Louver: halfspace range-search index for KV-cache retrieval"};
    app.require_subcommand(1);

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    std::size_t gen_n = 4096, gen_qn = 0;
    int gen_d = 64;
    std::string gen_dist = "gaussian", gen_out = "keys.lvkd", gen_qout = "queries.lvkd";
    std::uint64_t gen_seed = 0;
    gen->add_option("--n", gen_n, "Number of keys");
    gen->add_option("--d", gen_d, "Dimension");
    gen->add_option("--dist", gen_dist, "gaussian | mixture[:k[:spread]]");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out", gen_out, "Output keys file (LVKD)");
    gen->add_option("--query-n", gen_qn, "Also emit this many queries");
    gen->add_option("--queries-out", gen_qout, "Output queries file");

    // ---- build / snapshot ----
    std::string keys_path, values_path, queries_path, index_out = "index.lvix",
                index_in;
    int S = 4, r = 4;
    std::string grouping = "pca_tree", enclosing = "ball";
    std::uint64_t seed = 0;

    auto add_build_flags = [&](CLI::App* cmd) {
        cmd->add_option("--S", S, "Subspace count");
        cmd->add_option("--r", r, "Group size");
        cmd->add_option("--grouping", grouping, "contiguous|interleaved|random|pca_tree");
        cmd->add_option("--enclosing", enclosing, "ball|aabb|span_ball");
        cmd->add_option("--seed", seed, "RNG seed");
    };

    auto* build = app.add_subcommand("build", "Build an index from a dataset");
    build->add_option("--keys", keys_path, "Keys file (LVKD)")->required();
    build->add_option("--out", index_out, "Index snapshot output (LVIX)");
    add_build_flags(build);

    auto* snapshot = app.add_subcommand("snapshot", "Save or load an index snapshot");
    snapshot->require_subcommand(1);
    auto* snap_save = snapshot->add_subcommand("save", "Build an index and write a snapshot");
    snap_save->add_option("--keys", keys_path, "Keys file (LVKD)")->required();
    snap_save->add_option("--out", index_out, "Snapshot path");
    add_build_flags(snap_save);
    auto* snap_load = snapshot->add_subcommand("load", "Read a snapshot and print a summary");
    snap_load->add_option("--in", index_in, "Snapshot path")->required();

    // ---- query ----
    auto* query = app.add_subcommand("query", "Run batch halfspace queries");
    double tau = 0.0;
    std::string oracle_text, algo_text = "ta";
    bool verify = false;
    query->add_option("--keys", keys_path, "Keys file (LVKD)")->required();
    query->add_option("--queries", queries_path, "Queries file (LVKD)")->required();
    query->add_option("--index", index_in, "Index snapshot; built from flags if omitted");
    auto* tau_opt = query->add_option("--tau", tau, "Fixed global threshold");
    query->add_option("--oracle", oracle_text, "max|topk:m|gap|meanmax|budget:a");
    query->add_option("--algo", algo_text, "full | ta");
    query->add_flag("--verify", verify, "Check every answer against the brute-force oracle");
    add_build_flags(query);

    // ---- decode-sim ----
    auto* sim = app.add_subcommand("decode-sim", "Simulate autoregressive decoding");
    std::size_t steps = 4096, buffer = 128;
    int sim_d = 64;
    std::string sim_dist = "gaussian", sim_qdist = "gaussian", recall_ks_text;
    bool strict = false;
    sim->add_option("--steps", steps, "Decode steps");
    sim->add_option("--d", sim_d, "Dimension for synthetic keys");
    sim->add_option("--buffer", buffer, "Buffer capacity B");
    sim->add_option("--keys", keys_path, "Keys file; synthetic if omitted");
    sim->add_option("--values", values_path, "Values file; defaults to keys");
    sim->add_option("--queries", queries_path, "Queries file; synthetic if omitted");
    sim->add_option("--dist", sim_dist, "Synthetic key distribution");
    sim->add_option("--query-dist", sim_qdist, "Synthetic query distribution");
    auto* sim_tau_opt = sim->add_option("--tau", tau, "Fixed global threshold");
    sim->add_option("--oracle", oracle_text, "Threshold oracle (default budget:0.05)");
    sim->add_option("--algo", algo_text, "full | ta");
    sim->add_option("--recall-k", recall_ks_text, "Comma-separated k values for recall@k");
    sim->add_flag("--verify", verify, "Check every answer against the brute-force oracle");
    sim->add_flag("--strict-threshold", strict, "Apply tau to buffer keys in the attention sum");
    add_build_flags(sim);

    // ---- ablate ----
    auto* ablate = app.add_subcommand("ablate", "Run the pruning ablation grid");
    std::string grid_S = "2,4,8,16", grid_r = "4",
                grid_grouping = "contiguous,interleaved,random,pca_tree",
                grid_enclosing = "ball", csv_out;
    std::size_t ab_n = 4096, ab_queries = 64;
    int ab_d = 64;
    ablate->add_option("--S", grid_S, "Comma-separated subspace counts");
    ablate->add_option("--r", grid_r, "Comma-separated group sizes");
    ablate->add_option("--grouping", grid_grouping, "Comma-separated strategies");
    ablate->add_option("--enclosing", grid_enclosing, "Comma-separated enclosure kinds");
    ablate->add_option("--n", ab_n, "Keys per cell");
    ablate->add_option("--d", ab_d, "Dimension");
    ablate->add_option("--queries", ab_queries, "Queries per cell");
    auto* ab_tau_opt = ablate->add_option("--tau", tau, "Fixed global threshold");
    ablate->add_option("--oracle", oracle_text, "Threshold oracle (default budget:0.05)");
    ablate->add_option("--algo", algo_text, "full | ta");
    ablate->add_option("--seed", seed, "RNG seed");
    ablate->add_option("--out", csv_out, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        const auto dist = parse_distribution(gen_dist);
        save_dataset(gen_out, gen_synthetic(gen_n, gen_d, dist, gen_seed));
        std::printf("wrote %s (%zu x %d)\n", gen_out.c_str(), gen_n, gen_d);
        if (gen_qn > 0) {
            save_dataset(gen_qout, gen_synthetic(gen_qn, gen_d, dist, gen_seed + 1));
            std::printf("wrote %s (%zu x %d)\n", gen_qout.c_str(), gen_qn, gen_d);
        }
        return 0;
    }

    const BuildConfig build_cfg{S, r, grouping_from_string(grouping),
                                enclosure_from_string(enclosing), seed};
    const FilterAlgo algo = algo_text == "full" ? FilterAlgo::FullSubspace : FilterAlgo::Ta;

    if (build->parsed() || snap_save->parsed()) {
        const Matrix keys = load_dataset(keys_path);
        KeyStore store(keys, keys);
        const auto index = build_index(store, build_cfg);
        save_index(index_out, index);
        std::size_t groups = 0;
        for (const auto& sub : index.per_subspace) groups += sub.groups.size();
        std::printf("indexed %zu keys, S=%d, %zu groups total -> %s\n", index.indexed_count,
                    index.layout.S, groups, index_out.c_str());
        return 0;
    }

    if (snap_load->parsed()) {
        const auto index = load_index(index_in);
        std::size_t groups = 0;
        for (const auto& sub : index.per_subspace) groups += sub.groups.size();
        std::printf("snapshot %s: d=%d S=%d r=%d grouping=%s enclosing=%s keys=%zu groups=%zu\n",
                    index_in.c_str(), index.layout.d, index.layout.S, index.config.r,
                    to_string(index.config.grouping).c_str(),
                    to_string(index.config.enclosing).c_str(), index.indexed_count, groups);
        return 0;
    }

    if (query->parsed()) {
        const Matrix keys = load_dataset(keys_path);
        const Matrix queries = load_dataset(queries_path);
        KeyStore store(keys, keys);
        const LouverIndex index =
            index_in.empty() ? build_index(store, build_cfg) : load_index(index_in);

        Reservoir reservoir(256, seed);
        const auto threshold = make_threshold(oracle_text, tau, tau_opt->count() > 0);
        if (threshold.oracle)
            for (std::size_t j = 0; j < store.n(); ++j)
                reservoir.update(static_cast<KeyId>(j), keys.row(j).transpose());

        std::printf("query,tau,candidates,selected,f_scan,speedup_est,verified\n");
        std::size_t violations = 0;
        for (Eigen::Index qi = 0; qi < queries.rows(); ++qi) {
            QueryRequest req;
            req.q = queries.row(qi).transpose();
            req.tau = threshold.fixed_tau ? *threshold.fixed_tau
                                          : estimate_tau(reservoir, req.q, *threshold.oracle);
            CandidateSet cand;
            if (algo == FilterAlgo::FullSubspace) {
                req.tau_subspace = derive_subspace_thresholds(index, req.q, req.tau);
                cand = query_full_subspace(index, store, req);
            } else {
                cand = query_ta(index, store, req);
            }
            const auto got = exact_check(store, cand.live_ids, req.q, req.tau);
            std::string verdict = "-";
            if (verify) {
                const bool ok = got == brute_force_range(store, req.q, req.tau, store.n());
                if (!ok) ++violations;
                verdict = ok ? "ok" : "MISMATCH";
            }
            const int g = index.config.enclosing == EnclosureKind::Aabb ? 2 : 1;
            std::printf("%lld,%.4f,%zu,%zu,%.4f,%.2f,%s\n", static_cast<long long>(qi),
                        double(req.tau), cand.live_ids.size(), got.size(), cand.stats.f_scan,
                        speedup_estimate(g, index.config.r, cand.stats.f_scan), verdict.c_str());
        }
        if (verify) std::printf("false-negative violations: %zu\n", violations);
        return violations == 0 ? 0 : 1;
    }

    if (sim->parsed()) {
        Matrix keys = keys_path.empty()
                          ? gen_synthetic(steps, sim_d, parse_distribution(sim_dist), seed)
                          : load_dataset(keys_path);
        const int d = static_cast<int>(keys.cols());
        Matrix values = values_path.empty() ? keys : load_dataset(values_path);
        Matrix queries = queries_path.empty()
                             ? gen_synthetic(static_cast<std::size_t>(keys.rows()), d,
                                             parse_distribution(sim_qdist), seed + 1)
                             : load_dataset(queries_path);
        if (static_cast<std::size_t>(keys.rows()) > steps) {
            keys = keys.topRows(steps).eval();
            values = values.topRows(steps).eval();
            queries = queries.topRows(steps).eval();
        }

        DecodeSimConfig cfg;
        cfg.build = build_cfg;
        cfg.buffer_capacity = buffer;
        cfg.algo = algo;
        cfg.threshold = make_threshold(oracle_text, tau, sim_tau_opt->count() > 0);
        cfg.seed = seed;
        cfg.verify = verify;
        cfg.strict_threshold = strict;
        if (!recall_ks_text.empty()) cfg.recall_ks = parse_int_list(recall_ks_text);
        print_report(run_decode_sim(keys, values, queries, cfg));
        return 0;
    }

    if (ablate->parsed()) {
        AblationSpec spec;
        spec.S_values = parse_int_list(grid_S);
        spec.r_values = parse_int_list(grid_r);
        spec.groupings = parse_list<GroupingStrategy>(grid_grouping, grouping_from_string);
        spec.enclosings = parse_list<EnclosureKind>(grid_enclosing, enclosure_from_string);
        spec.n = ab_n;
        spec.d = ab_d;
        spec.query_count = ab_queries;
        spec.threshold = make_threshold(oracle_text, tau, ab_tau_opt->count() > 0);
        spec.algo = algo;
        spec.seed = seed;

        const auto rows = run_ablation(spec);
        std::cout << ablation_table(rows);
        if (!csv_out.empty()) {
            std::ofstream os(csv_out);
            os << ablation_csv(rows);
            std::printf("wrote %s\n", csv_out.c_str());
        }
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
