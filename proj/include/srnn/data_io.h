#ifndef SRNN_DATA_IO_H
#define SRNN_DATA_IO_H

#include <cstdint>
#include <string>
#include <vector>

#include "srnn/config.h"
#include "srnn/lattice.h"
#include "srnn/model.h"

namespace srnn {

// Binary frames file: magic "SRNF", u32 version 1, u32 T, u32 D, then T*D
// float32 values row-major, all little-endian.
void write_frames(const std::string& path, const FrameSequence& x);
FrameSequence read_frames(const std::string& path);

void write_vocabulary(const std::string& path, const Vocabulary& vocab);
Vocabulary read_vocabulary(const std::string& path);

// Labels: UTF-8 text, whitespace-separated tokens, one utterance per file.
void write_labels(const std::string& path, const LabelSequence& y, const Vocabulary& vocab);
LabelSequence read_labels(const std::string& path, const Vocabulary& vocab);

struct ManifestEntry {
    std::string id;
    std::string frames_path;
    std::string labels_path;
};

// One "id<TAB>frames_path<TAB>labels_path" line per utterance. Relative
// paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

struct Utterance {
    std::string id;
    FrameSequence frames;
    LabelSequence labels;
};

std::vector<Utterance> load_dataset(const std::string& manifest_path, const Vocabulary& vocab);

// Collapse map file: "src_token dst_token" per line; must cover the whole
// source vocabulary. Returns the index mapping and the target vocabulary
// (dst tokens in order of first appearance).
struct CollapseMap {
    std::vector<int> mapping;
    Vocabulary target;
};
CollapseMap read_collapse_map(const std::string& path, const Vocabulary& source);

// Versioned model container: magic "SRNC", u32 version, hyperparameter
// block, vocabulary, then named tensors with shapes and f64 payloads.
void save_checkpoint(const std::string& path, const Model& model, const Vocabulary& vocab,
                     const std::string& model_config_text);

struct Checkpoint {
    Model model;
    Vocabulary vocab;
    std::string model_config_text;
    int input_dim = 0;
};
// When expected_config is non-empty it must equal the stored hyperparameter
// block unless allow_mismatch is set.
Checkpoint load_checkpoint(const std::string& path, const std::string& expected_config = "",
                           bool allow_mismatch = false);

struct SynthConfig {
    int vocab_size = 5;
    int dim = 8;
    int dur_min = 4;
    int dur_max = 6;
    double sigma = 0.3;
    int j_min = 3;
    int j_max = 10;
    int n_train = 200;
    int n_valid = 50;
    uint64_t seed = 1;
    double frame_period_ms = 10.0;

    void validate() const;
};

struct SynthCorpus {
    std::string vocab_path;
    std::string train_manifest;
    std::string valid_manifest;
};

// Deterministic synthetic corpus: labels drawn uniformly, durations uniform
// in [dur_min, dur_max], frames = per-label mean + Gaussian noise. True
// segmentations go to segments.tsv for diagnostics only.
SynthCorpus gen_synthetic(const SynthConfig& cfg, const std::string& out_dir);

// Levenshtein distance with unit costs.
int edit_distance(const std::vector<int>& hyp, const std::vector<int>& ref);
int edit_distance(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);
// Distance divided by reference length; reference must be non-empty.
double per(const LabelSequence& hyp, const LabelSequence& ref);

}  // namespace srnn

#endif
