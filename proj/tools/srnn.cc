#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "srnn/data_io.h"
#include "srnn/decoder.h"
#include "srnn/gradcheck.h"
#include "srnn/oracle.h"
#include "srnn/rng.h"
#include "srnn/segcrf.h"
#include "srnn/speedup.h"
#include "srnn/trainer.h"

using namespace srnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

RunConfig load_config(const std::string& path) {
    if (path.empty()) return RunConfig{};
    return parse_config_file(path);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

template <class Fn>
void parallel_over(int n, int threads, const Fn& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

int cmd_train(const std::string& config_path, const std::string& train_manifest,
              const std::string& valid_manifest, const std::string& out_dir,
              const std::string& vocab_path, int64_t seed, int threads) {
    RunConfig cfg = load_config(config_path);
    if (seed >= 0) cfg.train.seed = static_cast<uint64_t>(seed);
    if (threads > 0) cfg.train.threads = threads;
    std::string vpath = !vocab_path.empty() ? vocab_path : cfg.vocab_path;
    std::string tpath = !train_manifest.empty() ? train_manifest : cfg.train_manifest;
    std::string vmpath = !valid_manifest.empty() ? valid_manifest : cfg.valid_manifest;
    if (vpath.empty()) throw Error("train: no vocabulary (use --vocab or [data] vocab)");
    if (tpath.empty() || vmpath.empty())
        throw Error("train: both --train and --valid manifests are required");

    Vocabulary vocab = read_vocabulary(vpath);
    auto train_set = load_dataset(tpath, vocab);
    auto valid_set = load_dataset(vmpath, vocab);
    TrainResult r = train(cfg, train_set, valid_set, vocab, out_dir, true);
    std::printf("best_epoch=%d best_valid_err=%.17g epochs_run=%zu\n", r.report.best_epoch,
                r.report.best_error, r.report.epochs.size());
    return kExitOk;
}

int cmd_decode(const std::string& model_path, const std::string& data_manifest,
               const std::string& mode_name, const std::string& collapse_path,
               bool merge_adjacent, const std::string& out_path, int threads) {
    DecodeMode mode;
    if (mode_name == "joint")
        mode = DecodeMode::kJoint;
    else if (mode_name == "marginal-hybrid")
        mode = DecodeMode::kMarginalHybrid;
    else
        throw Error("decode: mode must be joint or marginal-hybrid");

    Checkpoint ck = load_checkpoint(model_path);
    auto data = load_dataset(data_manifest, ck.vocab);

    CollapseMap collapse;
    bool use_collapse = !collapse_path.empty();
    if (use_collapse) collapse = read_collapse_map(collapse_path, ck.vocab);

    const int n = static_cast<int>(data.size());
    std::vector<std::string> lines(n);
    parallel_over(n, resolve_threads(threads), [&](int i) {
        const Utterance& u = data[i];
        ad::Tape tape;
        ModelVars vars = bind(tape, ck.model);
        EncodeResult enc = encode(tape, u.frames, ck.model.dims.encoder, vars.encoder,
                                  RunMode::kEval, 0);
        ClampConfig clamp{ck.model.dims.clamp_subsampled()};
        LatticeNodes lat =
            build_score_lattice(tape, enc.states, vars.feat, ck.model.dims.vocab, clamp);
        DecodeResult r = mode == DecodeMode::kJoint ? decode_joint(lat.values)
                                                    : decode_marginal_hybrid(lat.values);
        LabelSequence labels = r.labels;
        const Vocabulary* out_vocab = &ck.vocab;
        if (use_collapse) {
            labels = collapse_labels(labels, collapse.mapping, merge_adjacent);
            out_vocab = &collapse.target;
        }
        std::string line = u.id + "\t";
        for (size_t j = 0; j < labels.labels.size(); ++j) {
            if (j) line += " ";
            line += out_vocab->token(labels.labels[j]);
        }
        char score[40];
        std::snprintf(score, sizeof(score), "%.17g", r.score);
        line += "\t";
        line += score;
        line += "\t";
        const Segmentation& seg = *r.segmentation;
        for (size_t j = 0; j < seg.boundaries.size(); ++j) {
            if (j) line += " ";
            line += std::to_string(seg.boundaries[j]);
        }
        lines[i] = line;
    });

    std::ofstream out(out_path);
    if (!out) throw Error("decode: cannot write " + out_path);
    for (const auto& l : lines) out << l << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& hyp_path, const std::string& ref_manifest) {
    std::ifstream in(hyp_path);
    if (!in) throw Error("eval: cannot open " + hyp_path);
    std::map<std::string, std::vector<std::string>> hyps;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string id, tokens;
        if (!std::getline(ls, id, '\t') || !std::getline(ls, tokens, '\t'))
            throw Error("eval: malformed hypothesis line: " + line);
        std::vector<std::string> toks;
        std::stringstream ts(tokens);
        std::string t;
        while (ts >> t) toks.push_back(t);
        hyps[id] = std::move(toks);
    }

    int64_t edits = 0, ref_len = 0;
    for (const auto& e : read_manifest(ref_manifest)) {
        auto it = hyps.find(e.id);
        if (it == hyps.end()) throw Error("eval: no hypothesis for utterance " + e.id);
        std::ifstream rf(e.labels_path);
        std::vector<std::string> ref;
        std::string t;
        while (rf >> t) ref.push_back(t);
        if (ref.empty()) throw Error("eval: empty reference for " + e.id);
        edits += edit_distance(it->second, ref);
        ref_len += static_cast<int64_t>(ref.size());
    }
    std::printf("PER %.6f (edits=%lld, ref_tokens=%lld)\n",
                static_cast<double>(edits) / static_cast<double>(ref_len),
                static_cast<long long>(edits), static_cast<long long>(ref_len));
    return kExitOk;
}

int cmd_gradcheck(uint64_t seed, const std::string& size, bool corrupt) {
    ad::corrupt_tanh_pullback_for_test = corrupt;  // test hook
    GradcheckResult r = run_gradcheck(size, seed);
    ad::corrupt_tanh_pullback_for_test = false;
    std::printf("gradcheck size=%s seed=%llu params=%lld max_rel_err=%.3e worst=%s %s\n",
                size.c_str(), static_cast<unsigned long long>(seed),
                static_cast<long long>(r.params_checked), r.max_rel_err,
                r.worst_tensor.c_str(), r.pass ? "PASS" : "FAIL");
    return r.pass ? kExitOk : kExitRuntime;
}

int cmd_selftest(uint64_t seed) {
    Rng rng(mix_seed(seed, 0x73656c66ull));
    double worst_partition = 0.0, worst_clamped = 0.0;
    int decode_mismatches = 0;
    int cases = 0;
    for (int T = 1; T <= 6; ++T) {
        for (int L = 1; L <= T; ++L) {
            for (int V = 1; V <= 3; ++V) {
                ScoreLattice lat(T, L, V);
                for (double& v : lat.raw()) v = rng.uniform(-2.0, 2.0);
                double dp = log_partition(lat);
                double brute = oracle::brute_log_partition(lat);
                worst_partition = std::max(
                    worst_partition, std::fabs(dp - brute) / std::max(1.0, std::fabs(brute)));

                int J = 1 + static_cast<int>(rng.uniform_int(0, T - 1));
                if (clamp_feasible(T, J, L)) {
                    LabelSequence y;
                    for (int j = 0; j < J; ++j)
                        y.labels.push_back(static_cast<int>(rng.uniform_int(0, V - 1)));
                    ClampedSum cs = log_clamped(lat, y);
                    auto bc = oracle::brute_log_clamped(lat, y);
                    if (cs.feasible && bc.feasible)
                        worst_clamped =
                            std::max(worst_clamped, std::fabs(cs.log_z - bc.log_z) /
                                                        std::max(1.0, std::fabs(bc.log_z)));
                }

                DecodeResult best = decode_joint(lat);
                oracle::BruteBest brute_best = oracle::brute_argmax(lat);
                if (best.score != brute_best.score || !(best.labels == brute_best.labels) ||
                    !(best.segmentation == brute_best.seg))
                    ++decode_mismatches;
                ++cases;
            }
        }
    }
    bool ok = worst_partition < 1e-9 && worst_clamped < 1e-9 && decode_mismatches == 0;
    std::printf("selftest cases=%d\n", cases);
    std::printf("  partition  max_rel_err=%.3e  %s\n", worst_partition,
                worst_partition < 1e-9 ? "PASS" : "FAIL");
    std::printf("  clamped    max_rel_err=%.3e  %s\n", worst_clamped,
                worst_clamped < 1e-9 ? "PASS" : "FAIL");
    std::printf("  decode     mismatches=%d     %s\n", decode_mismatches,
                decode_mismatches == 0 ? "PASS" : "FAIL");
    return ok ? kExitOk : kExitRuntime;
}

int cmd_gen_synth(const SynthConfig& cfg, const std::string& out_dir) {
    SynthCorpus c = gen_synthetic(cfg, out_dir);
    std::printf("vocab=%s\n", c.vocab_path.c_str());
    std::printf("train_manifest=%s\n", c.train_manifest.c_str());
    if (!c.valid_manifest.empty())
        std::printf("valid_manifest=%s\n", c.valid_manifest.c_str());
    return kExitOk;
}

int cmd_speedup(const std::string& config_path, int T, int dim, int vocab, uint64_t seed,
                int reps) {
    RunConfig cfg = load_config(config_path);
    if (config_path.empty()) {
        cfg.clamp_frames = 30;  // matched original-frame clamp
        cfg.encoder.num_layers = 3;
    }
    auto rows = run_speedup(cfg, T, dim, vocab, seed, reps);
    std::printf("%-10s %-4s %-6s %-10s %-10s %-9s %s\n", "subsample", "L", "T'", "cells",
                "time_ms", "speedup", "reference");
    bool cells_ok = true;
    for (const auto& r : rows) {
        cells_ok = cells_ok &&
                   r.cells == lattice_entry_count(r.length_sub, r.clamp_sub, vocab);
        std::printf("%-10d %-4d %-6d %-10lld %-10.2f %-9.2f %s\n", r.subsample_layers,
                    r.clamp_sub, r.length_sub, static_cast<long long>(r.cells),
                    r.seconds * 1e3, r.speedup, r.reference.c_str());
    }
    std::printf("cell_counts_match_analytic=%s\n", cells_ok ? "true" : "false");
    return cells_ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Segmental recurrent network trainer and decoder"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model");
    std::string tr_config, tr_train, tr_valid, tr_out, tr_vocab;
    int64_t tr_seed = -1;
    int tr_threads = 0;
    train_cmd->add_option("--config", tr_config, "Configuration file");
    train_cmd->add_option("--train", tr_train, "Training manifest");
    train_cmd->add_option("--valid", tr_valid, "Validation manifest");
    train_cmd->add_option("--out", tr_out, "Output directory")->required();
    train_cmd->add_option("--vocab", tr_vocab, "Vocabulary file");
    train_cmd->add_option("--seed", tr_seed, "Override the training seed");
    train_cmd->add_option("--threads", tr_threads, "Worker threads (0 = all cores)");

    // decode
    auto* decode_cmd = app.add_subcommand("decode", "Decode a dataset");
    std::string de_model, de_data, de_mode = "joint", de_collapse, de_out;
    bool de_merge = false;
    int de_threads = 0;
    decode_cmd->add_option("--model", de_model, "Checkpoint file")->required();
    decode_cmd->add_option("--data", de_data, "Dataset manifest")->required();
    decode_cmd->add_option("--mode", de_mode, "joint or marginal-hybrid");
    decode_cmd->add_option("--collapse", de_collapse, "Label collapse map");
    decode_cmd->add_flag("--merge-adjacent", de_merge,
                         "Merge adjacent duplicates after collapse");
    decode_cmd->add_option("--out", de_out, "Hypothesis output file")->required();
    decode_cmd->add_option("--threads", de_threads, "Worker threads (0 = all cores)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score hypotheses against references");
    std::string ev_hyp, ev_ref;
    eval_cmd->add_option("--hyp", ev_hyp, "Hypothesis file from decode")->required();
    eval_cmd->add_option("--ref", ev_ref, "Reference manifest")->required();

    // gradcheck
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    uint64_t gc_seed = 1;
    std::string gc_size = "small";
    bool gc_corrupt = false;
    gc_cmd->add_option("--seed", gc_seed, "Random seed");
    gc_cmd->add_option("--size", gc_size, "small or medium");
    gc_cmd->add_flag("--corrupt", gc_corrupt,
                     "Corrupt a pullback (expect failure; test hook)");

    // selftest
    auto* st_cmd = app.add_subcommand("selftest", "Oracle-equivalence self tests");
    uint64_t st_seed = 1;
    st_cmd->add_option("--seed", st_seed, "Random seed");

    // gen-synth
    auto* gs_cmd = app.add_subcommand("gen-synth", "Generate a synthetic corpus");
    SynthConfig synth;
    std::string gs_out;
    gs_cmd->add_option("--out", gs_out, "Output directory")->required();
    gs_cmd->add_option("--n-train", synth.n_train, "Training utterances");
    gs_cmd->add_option("--n-valid", synth.n_valid, "Validation utterances");
    gs_cmd->add_option("--vocab-size", synth.vocab_size, "Vocabulary size");
    gs_cmd->add_option("--dim", synth.dim, "Feature dimension");
    gs_cmd->add_option("--dur-min", synth.dur_min, "Min segment duration (frames)");
    gs_cmd->add_option("--dur-max", synth.dur_max, "Max segment duration (frames)");
    gs_cmd->add_option("--sigma", synth.sigma, "Noise standard deviation");
    gs_cmd->add_option("--j-min", synth.j_min, "Min labels per utterance");
    gs_cmd->add_option("--j-max", synth.j_max, "Max labels per utterance");
    gs_cmd->add_option("--seed", synth.seed, "Random seed");

    // speedup-report
    auto* sp_cmd = app.add_subcommand("speedup-report", "Subsampling speedup measurement");
    std::string sp_config;
    int sp_T = 512, sp_dim = 8, sp_vocab = 10, sp_reps = 3;
    uint64_t sp_seed = 1;
    sp_cmd->add_option("--config", sp_config, "Configuration file");
    sp_cmd->add_option("--T", sp_T, "Input length in original frames");
    sp_cmd->add_option("--dim", sp_dim, "Feature dimension");
    sp_cmd->add_option("--vocab", sp_vocab, "Vocabulary size");
    sp_cmd->add_option("--reps", sp_reps, "Timing repetitions");
    sp_cmd->add_option("--seed", sp_seed, "Random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train_cmd)
            return cmd_train(tr_config, tr_train, tr_valid, tr_out, tr_vocab, tr_seed,
                             tr_threads);
        if (*decode_cmd)
            return cmd_decode(de_model, de_data, de_mode, de_collapse, de_merge, de_out,
                              de_threads);
        if (*eval_cmd) return cmd_eval(ev_hyp, ev_ref);
        if (*gc_cmd) return cmd_gradcheck(gc_seed, gc_size, gc_corrupt);
        if (*st_cmd) return cmd_selftest(st_seed);
        if (*gs_cmd) return cmd_gen_synth(synth, gs_out);
        if (*sp_cmd) return cmd_speedup(sp_config, sp_T, sp_dim, sp_vocab, sp_seed, sp_reps);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::string what = e.what();
        bool usage = what.find("config") != std::string::npos ||
                     what.find("cannot open") != std::string::npos ||
                     what.find("manifest") != std::string::npos ||
                     what.find("vocabulary") != std::string::npos ||
                     what.find("must be") != std::string::npos;
        return usage ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
