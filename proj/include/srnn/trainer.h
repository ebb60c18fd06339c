#ifndef SRNN_TRAINER_H
#define SRNN_TRAINER_H

#include <string>
#include <vector>

#include "srnn/config.h"
#include "srnn/data_io.h"
#include "srnn/model.h"

namespace srnn {

// p <- p - lr * g for every tensor; plain SGD. Returns false (and leaves the
// parameters untouched) when any gradient is non-finite.
bool sgd_step(Model& m, const GradMap& grads, double lr);

// Scales all gradients so the global L2 norm is at most max_norm.
void clip_gradients(GradMap& grads, double max_norm);

struct LrDecision {
    double lr;
    bool stop;
};

// Newbob-style decay: when the latest validation errors failed to improve
// the best-so-far for `patience` consecutive epochs, divide the rate by
// decay_factor. Signals stop when the decayed rate falls below min_lr.
LrDecision schedule_lr(const std::vector<double>& error_history, double current_lr,
                       const TrainConfig& cfg);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;  // mean per-utterance nll
    double valid_loss = 0.0;
    double valid_error = 0.0;  // corpus label error rate, joint decode
    double lr = 0.0;
    double wall_seconds = 0.0;
    int skipped = 0;  // infeasible utterances this epoch
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_error = 0.0;
    bool reached_target = false;
};

struct TrainResult {
    Model best;
    TrainReport report;
};

// Per-utterance SGD over a seeded shuffle, validation loss + label error
// each epoch, best-checkpoint tracking. Fully reproducible from
// (cfg.train.seed, data). When out_dir is non-empty, writes best.srnc and
// report.tsv there. Progress lines go to stdout when verbose.
TrainResult train(const RunConfig& cfg, const std::vector<Utterance>& train_set,
                  const std::vector<Utterance>& valid_set, const Vocabulary& vocab,
                  const std::string& out_dir = "", bool verbose = true);

// Corpus label error rate of joint decoding on a dataset (used for
// validation and by tests).
double corpus_label_error(const Model& m, const std::vector<Utterance>& data, int threads);

// Mean per-utterance nll on a dataset in eval mode; infeasible utterances
// are skipped and counted.
double corpus_loss(const Model& m, const std::vector<Utterance>& data, int threads,
                   int* skipped = nullptr);

}  // namespace srnn

#endif
