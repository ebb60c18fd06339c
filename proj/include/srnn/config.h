#ifndef SRNN_CONFIG_H
#define SRNN_CONFIG_H

#include <cstdint>
#include <string>

#include "srnn/model.h"

namespace srnn {

struct TrainConfig {
    double lr_init = 0.1;
    double decay_factor = 2.0;
    int max_epochs = 30;
    int patience = 1;        // plateau epochs before decay
    double min_lr = 0.0;     // 0 => lr_init / 1024
    int batch = 1;           // utterances per gradient step
    double clip_norm = 5.0;  // per-utterance gradient max-norm
    uint64_t seed = 1;
    double target_error = -1.0;  // stop early at this validation error; < 0 disables
    double dropout_rate = 0.2;
    int threads = 0;  // 0 => hardware concurrency

    double effective_min_lr() const { return min_lr > 0.0 ? min_lr : lr_init / 1024.0; }
    void validate() const;
};

// Parsed key = value configuration. Sections: [encoder], [features], [crf],
// [train], [data]. Unknown sections or keys are errors.
struct RunConfig {
    EncoderConfig encoder;  // dropout_rate mirrors train.dropout_rate

    int embed = 32;
    int dw = 64;
    int dh = 64;
    int ddur = 8;
    bool use_duration = true;

    int clamp_frames = 30;
    double frame_period_ms = 10.0;

    TrainConfig train;

    std::string vocab_path;
    std::string train_manifest;
    std::string valid_manifest;
    std::string collapse_path;

    void validate() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Canonical [encoder]/[features]/[crf] serialization; this is the
// hyperparameter block stored in checkpoints and compared on load.
std::string serialize_model_config(const RunConfig& c);
std::string serialize_full_config(const RunConfig& c);

ModelDims model_dims(const RunConfig& c, int input_dim, int vocab_size);

}  // namespace srnn

#endif
