#include "srnn/trainer.h"

#include <chrono>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include "srnn/decoder.h"
#include "srnn/rng.h"

namespace srnn {

namespace {

double now_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Deterministic parallel map: results land in index order regardless of
// scheduling.
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

struct EvalOutcome {
    double loss = 0.0;
    bool feasible = true;
    int edits = 0;
    int ref_len = 0;
};

EvalOutcome eval_utterance(const Model& m, const Utterance& u) {
    ad::Tape tape;
    ModelVars vars = bind(tape, m);
    EncodeResult enc = encode(tape, u.frames, m.dims.encoder, vars.encoder,
                              RunMode::kEval, 0);
    ClampConfig clamp{m.dims.clamp_subsampled()};
    LatticeNodes lat = build_score_lattice(tape, enc.states, vars.feat, m.dims.vocab, clamp);

    EvalOutcome out;
    DecodeResult hyp = decode_joint(lat.values);
    out.edits = edit_distance(hyp.labels.labels, u.labels.labels);
    out.ref_len = u.labels.size();

    if (clamp_feasible(lat.values.T(), u.labels.size(), lat.values.L())) {
        double log_z = log_partition(lat.values);
        ClampedSum zc = log_clamped(lat.values, u.labels);
        if (zc.feasible) {
            out.loss = log_z - zc.log_z;
            return out;
        }
    }
    out.feasible = false;
    return out;
}

}  // namespace

bool sgd_step(Model& m, const GradMap& grads, double lr) {
    for (const auto& [name, g] : grads)
        if (!g.finite()) return false;
    for_each_tensor(m, [&](const std::string& name, ad::Tensor& t) {
        const ad::Tensor& g = grads.at(name);
        for (int i = 0; i < t.numel(); ++i) t.v[i] -= lr * g.v[i];
    });
    return true;
}

void clip_gradients(GradMap& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads)
        for (double v : g.v) sq += v * v;
    double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    double scale = max_norm / norm;
    for (auto& [name, g] : grads)
        for (double& v : g.v) v *= scale;
}

LrDecision schedule_lr(const std::vector<double>& error_history, double current_lr,
                       const TrainConfig& cfg) {
    if (error_history.empty()) throw Error("schedule_lr: needs at least one epoch");
    int streak = 0;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> improved;
    for (double e : error_history) {
        improved.push_back(e < best ? 1 : 0);
        best = std::min(best, e);
    }
    for (int i = static_cast<int>(improved.size()) - 1; i >= 0 && !improved[i]; --i) ++streak;
    LrDecision d{current_lr, false};
    if (streak >= cfg.patience) d.lr = current_lr / cfg.decay_factor;
    if (d.lr < cfg.effective_min_lr()) d.stop = true;
    return d;
}

double corpus_label_error(const Model& m, const std::vector<Utterance>& data, int threads) {
    const int n = static_cast<int>(data.size());
    std::vector<EvalOutcome> results(n);
    parallel_over(n, resolve_threads(threads),
                  [&](int i) { results[i] = eval_utterance(m, data[i]); });
    int64_t edits = 0, ref_len = 0;
    for (const auto& r : results) {
        edits += r.edits;
        ref_len += r.ref_len;
    }
    return ref_len == 0 ? 0.0 : static_cast<double>(edits) / static_cast<double>(ref_len);
}

double corpus_loss(const Model& m, const std::vector<Utterance>& data, int threads,
                   int* skipped) {
    const int n = static_cast<int>(data.size());
    std::vector<EvalOutcome> results(n);
    parallel_over(n, resolve_threads(threads),
                  [&](int i) { results[i] = eval_utterance(m, data[i]); });
    double total = 0.0;
    int used = 0, skip = 0;
    for (const auto& r : results) {
        if (r.feasible) {
            total += r.loss;
            ++used;
        } else {
            ++skip;
        }
    }
    if (skipped) *skipped = skip;
    return used == 0 ? 0.0 : total / used;
}

TrainResult train(const RunConfig& cfg, const std::vector<Utterance>& train_set,
                  const std::vector<Utterance>& valid_set, const Vocabulary& vocab,
                  const std::string& out_dir, bool verbose) {
    if (train_set.empty()) throw Error("train: empty training set");
    if (valid_set.empty()) throw Error("train: empty validation set");
    const int D = train_set.front().frames.D;
    for (const auto& u : train_set)
        if (u.frames.D != D) throw Error("train: inconsistent feature dimension");

    const TrainConfig& tc = cfg.train;
    Model model = make_model(model_dims(cfg, D, vocab.size()), tc.seed);
    const ClampConfig clamp{model.dims.clamp_subsampled()};
    const int threads = resolve_threads(tc.threads);

    TrainResult result;
    result.report.best_error = std::numeric_limits<double>::infinity();
    result.best = model;

    Rng shuffle_rng(mix_seed(tc.seed, 0x7368756666ull));
    std::vector<int> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    double lr = tc.lr_init;
    std::vector<double> error_history;

    for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        double t0 = now_seconds();
        // Seeded Fisher-Yates shuffle per epoch.
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
            int j = static_cast<int>(shuffle_rng.uniform_int(0, i));
            std::swap(order[i], order[j]);
        }

        double loss_sum = 0.0;
        int loss_count = 0, skipped = 0;
        GradMap batch_grads;
        int batch_fill = 0;

        auto apply_batch = [&]() {
            if (batch_fill == 0) return;
            if (batch_fill > 1)
                for (auto& [name, g] : batch_grads)
                    for (double& v : g.v) v /= batch_fill;
            clip_gradients(batch_grads, tc.clip_norm);
            sgd_step(model, batch_grads, lr);
            batch_grads.clear();
            batch_fill = 0;
        };

        for (int idx : order) {
            const Utterance& u = train_set[idx];
            ad::Tape tape;
            ModelVars vars = bind(tape, model);
            EncodeResult enc = encode(tape, u.frames, model.dims.encoder, vars.encoder,
                                      RunMode::kTrain, mix_seed(tc.seed, epoch, idx));
            int Tp = static_cast<int>(enc.states.size());
            if (!clamp_feasible(Tp, u.labels.size(), clamp.max_duration)) {
                ++skipped;
                if (verbose)
                    std::cerr << "warning: skipping infeasible utterance " << u.id
                              << " (J=" << u.labels.size() << ", T'=" << Tp << ")\n";
                continue;
            }
            LatticeNodes lat = build_score_lattice(tape, enc.states, vars.feat,
                                                   model.dims.vocab, clamp);
            LossNodes loss = nll_loss(tape, lat, u.labels);
            loss_sum += tape.value(loss.loss)[0];
            ++loss_count;
            tape.backward(loss.loss);
            GradMap grads = collect_grads(tape, vars);
            bool finite = true;
            for (const auto& [name, g] : grads)
                if (!g.finite()) finite = false;
            if (!finite) {
                std::cerr << "warning: non-finite gradient on utterance " << u.id
                          << ", step aborted\n";
                continue;
            }
            if (tc.batch == 1) {
                clip_gradients(grads, tc.clip_norm);
                sgd_step(model, grads, lr);
            } else {
                if (batch_grads.empty()) {
                    batch_grads = std::move(grads);
                } else {
                    for (auto& [name, g] : batch_grads) {
                        const ad::Tensor& add = grads.at(name);
                        for (int i = 0; i < g.numel(); ++i) g.v[i] += add.v[i];
                    }
                }
                if (++batch_fill == tc.batch) apply_batch();
            }
        }
        apply_batch();

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.skipped = skipped;
        stats.train_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
        stats.valid_loss = corpus_loss(model, valid_set, threads, nullptr);
        stats.valid_error = corpus_label_error(model, valid_set, threads);
        stats.wall_seconds = now_seconds() - t0;
        result.report.epochs.push_back(stats);

        if (verbose) {
            std::printf("epoch=%d lr=%.17g train_loss=%.17g valid_loss=%.17g "
                        "valid_err=%.17g wall_s=%.3f skipped=%d\n",
                        epoch, lr, stats.train_loss, stats.valid_loss, stats.valid_error,
                        stats.wall_seconds, skipped);
            std::fflush(stdout);
        }

        if (stats.valid_error < result.report.best_error) {
            result.report.best_error = stats.valid_error;
            result.report.best_epoch = epoch;
            result.best = model;
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                save_checkpoint((std::filesystem::path(out_dir) / "best.srnc").string(),
                                model, vocab, serialize_model_config(cfg));
            }
        }

        if (tc.target_error >= 0.0 && stats.valid_error <= tc.target_error) {
            result.report.reached_target = true;
            break;
        }

        error_history.push_back(stats.valid_error);
        LrDecision d = schedule_lr(error_history, lr, tc);
        lr = d.lr;
        if (d.stop) break;
    }

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream rep(std::filesystem::path(out_dir) / "report.tsv");
        rep << "epoch\tlr\ttrain_loss\tvalid_loss\tvalid_err\twall_s\tskipped\n";
        char buf[256];
        for (const auto& e : result.report.epochs) {
            std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\t%.17g\t%.17g\t%.3f\t%d\n",
                          e.epoch, e.lr, e.train_loss, e.valid_loss, e.valid_error,
                          e.wall_seconds, e.skipped);
            rep << buf;
        }
    }
    return result;
}

}  // namespace srnn
