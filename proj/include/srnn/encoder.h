#ifndef SRNN_ENCODER_H
#define SRNN_ENCODER_H

#include <optional>
#include <span>
#include <vector>

#include "srnn/autodiff.h"
#include "srnn/lattice.h"
#include "srnn/rng.h"

namespace srnn {

// Fused-gate LSTM parameters; gate blocks ordered [input, forget, cell, output].
struct LstmParams {
    ad::Tensor wx;  // 4H x Din
    ad::Tensor wh;  // 4H x H
    ad::Tensor b;   // 4H

    int hidden() const { return b.numel() / 4; }
    int input_dim() const { return wx.cols(); }
};

struct LstmVars {
    ad::VarId wx, wh, b;
};

LstmVars bind(ad::Tape& tape, const LstmParams& p);

struct LstmState {
    ad::VarId h, c;
};

// Runs the gated recurrence over the inputs; h0 and c0 are zero vectors
// unless an initial state is supplied. Output length equals input length.
std::vector<ad::VarId> lstm_forward(ad::Tape& tape, const LstmVars& p, int hidden,
                                    std::span<const ad::VarId> inputs,
                                    std::optional<LstmState> initial = std::nullopt);

// Position t holds [forward state at t ; backward state at t].
std::vector<ad::VarId> bidirectional(ad::Tape& tape, const LstmVars& fwd,
                                     const LstmVars& bwd, int hidden,
                                     std::span<const ad::VarId> inputs);

enum class SubsampleMode { kSkip, kConcat, kAdd };

// Non-overlapping windows; output length = ceil(len / window). skip keeps the
// last state of each window; add sums; concat concatenates. An incomplete
// final window repeats its last available state.
std::vector<ad::VarId> subsample(ad::Tape& tape, std::span<const ad::VarId> states,
                                 int window, SubsampleMode mode);

struct EncoderConfig {
    int num_layers = 3;
    int hidden = 128;
    std::vector<int> subsample_after;  // 1-based layer indices, subset of 1..num_layers-1
    SubsampleMode mode = SubsampleMode::kSkip;
    int window = 2;
    double dropout_rate = 0.2;
    int proj = 64;  // dimension of the trained output projection

    int subsample_factor() const;
    // Iterated ceil over the subsampling stages for an input of length T.
    int output_length(int T) const;
    void validate() const;
};

struct EncoderParams {
    std::vector<LstmParams> fwd, bwd;  // one per layer
    ad::Tensor proj_w;                 // proj x 2H
    ad::Tensor proj_b;                 // proj
};

struct EncoderVars {
    std::vector<LstmVars> fwd, bwd;
    ad::VarId proj_w, proj_b;
};

EncoderVars bind(ad::Tape& tape, const EncoderParams& p);

enum class RunMode { kTrain, kEval };

struct EncodeResult {
    std::vector<ad::VarId> states;  // H': projected top-layer outputs
    int factor = 1;
};

// Stacked bidirectional layers with subsampling after the configured layers
// and a linear projection on top. Dropout masks are applied to the inputs of
// layers 2..N (non-recurrent connections) in train mode, sampled from
// dropout_seed.
EncodeResult encode(ad::Tape& tape, const FrameSequence& x, const EncoderConfig& cfg,
                    const EncoderVars& params, RunMode mode, uint64_t dropout_seed);

}  // namespace srnn

#endif
