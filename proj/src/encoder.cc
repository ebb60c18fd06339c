#include "srnn/encoder.h"

#include <algorithm>
#include <cassert>

namespace srnn {

LstmVars bind(ad::Tape& tape, const LstmParams& p) {
    return {tape.input(p.wx), tape.input(p.wh), tape.input(p.b)};
}

std::vector<ad::VarId> lstm_forward(ad::Tape& tape, const LstmVars& p, int hidden,
                                    std::span<const ad::VarId> inputs,
                                    std::optional<LstmState> initial) {
    if (inputs.empty()) throw Error("lstm_forward: empty input sequence");
    const int H = hidden;
    ad::VarId h, c;
    if (initial) {
        h = initial->h;
        c = initial->c;
    } else {
        h = tape.input(ad::Tensor::zeros({H}));
        c = tape.input(ad::Tensor::zeros({H}));
    }
    std::vector<ad::VarId> out;
    out.reserve(inputs.size());
    for (ad::VarId x : inputs) {
        ad::VarId pre = tape.add(tape.add(tape.matvec(p.wx, x), tape.matvec(p.wh, h)), p.b);
        ad::VarId gi = tape.sigmoid(tape.slice(pre, 0, H));
        ad::VarId gf = tape.sigmoid(tape.slice(pre, H, H));
        ad::VarId gg = tape.tanh(tape.slice(pre, 2 * H, H));
        ad::VarId go = tape.sigmoid(tape.slice(pre, 3 * H, H));
        c = tape.add(tape.emul(gf, c), tape.emul(gi, gg));
        h = tape.emul(go, tape.tanh(c));
        out.push_back(h);
    }
    return out;
}

std::vector<ad::VarId> bidirectional(ad::Tape& tape, const LstmVars& fwd,
                                     const LstmVars& bwd, int hidden,
                                     std::span<const ad::VarId> inputs) {
    std::vector<ad::VarId> reversed(inputs.rbegin(), inputs.rend());
    std::vector<ad::VarId> f = lstm_forward(tape, fwd, hidden, inputs);
    std::vector<ad::VarId> b = lstm_forward(tape, bwd, hidden, reversed);
    std::reverse(b.begin(), b.end());
    std::vector<ad::VarId> out;
    out.reserve(inputs.size());
    for (size_t t = 0; t < inputs.size(); ++t) {
        ad::VarId parts[2] = {f[t], b[t]};
        out.push_back(tape.concat(parts));
    }
    return out;
}

std::vector<ad::VarId> subsample(ad::Tape& tape, std::span<const ad::VarId> states,
                                 int window, SubsampleMode mode) {
    if (states.empty()) throw Error("subsample: empty input");
    if (window < 2) throw Error("subsample: window must be >= 2");
    const int n = static_cast<int>(states.size());
    std::vector<ad::VarId> out;
    out.reserve((n + window - 1) / window);
    for (int s = 0; s < n; s += window) {
        if (mode == SubsampleMode::kSkip) {
            out.push_back(states[std::min(s + window - 1, n - 1)]);
            continue;
        }
        // Incomplete final window: repeat its last available state.
        std::vector<ad::VarId> win(window);
        for (int j = 0; j < window; ++j) win[j] = states[std::min(s + j, n - 1)];
        if (mode == SubsampleMode::kAdd) {
            ad::VarId acc = win[0];
            for (int j = 1; j < window; ++j) acc = tape.add(acc, win[j]);
            out.push_back(acc);
        } else {
            out.push_back(tape.concat(win));
        }
    }
    return out;
}

int EncoderConfig::subsample_factor() const {
    int f = 1;
    for (size_t i = 0; i < subsample_after.size(); ++i) f *= window;
    return f;
}

int EncoderConfig::output_length(int T) const {
    int len = T;
    for (size_t i = 0; i < subsample_after.size(); ++i) len = (len + window - 1) / window;
    return len;
}

void EncoderConfig::validate() const {
    if (num_layers < 1) throw Error("encoder: num_layers must be >= 1");
    if (hidden < 1) throw Error("encoder: hidden must be >= 1");
    if (proj < 1) throw Error("encoder: proj must be >= 1");
    if (window < 2) throw Error("encoder: window must be >= 2");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw Error("encoder: dropout_rate must lie in [0, 1)");
    for (int s : subsample_after)
        if (s < 1 || s > num_layers - 1)
            throw Error("encoder: subsample_after indices must lie in 1..num_layers-1");
}

EncoderVars bind(ad::Tape& tape, const EncoderParams& p) {
    EncoderVars v;
    for (const auto& l : p.fwd) v.fwd.push_back(bind(tape, l));
    for (const auto& l : p.bwd) v.bwd.push_back(bind(tape, l));
    v.proj_w = tape.input(p.proj_w);
    v.proj_b = tape.input(p.proj_b);
    return v;
}

EncodeResult encode(ad::Tape& tape, const FrameSequence& x, const EncoderConfig& cfg,
                    const EncoderVars& params, RunMode mode, uint64_t dropout_seed) {
    cfg.validate();
    x.validate();
    if (static_cast<int>(params.fwd.size()) != cfg.num_layers)
        throw Error("encode: parameter layer count does not match config");

    std::vector<ad::VarId> seq;
    seq.reserve(x.T);
    for (int t = 0; t < x.T; ++t) {
        std::vector<double> row(x.data.begin() + static_cast<size_t>(t) * x.D,
                                x.data.begin() + static_cast<size_t>(t + 1) * x.D);
        seq.push_back(tape.input(ad::Tensor::vector(std::move(row))));
    }

    const bool use_dropout = mode == RunMode::kTrain && cfg.dropout_rate > 0.0;
    Rng drop_rng(mix_seed(dropout_seed, 0x64726f70ull));
    const double keep = 1.0 - cfg.dropout_rate;

    for (int layer = 0; layer < cfg.num_layers; ++layer) {
        if (layer > 0 && use_dropout) {
            for (auto& s : seq) {
                ad::Tensor mask = tape.value(s);
                for (double& m : mask.v) m = drop_rng.uniform() < keep ? 1.0 / keep : 0.0;
                s = tape.dropout(s, std::move(mask));
            }
        }
        seq = bidirectional(tape, params.fwd[layer], params.bwd[layer], cfg.hidden, seq);
        if (std::find(cfg.subsample_after.begin(), cfg.subsample_after.end(), layer + 1) !=
            cfg.subsample_after.end()) {
            seq = subsample(tape, seq, cfg.window, cfg.mode);
        }
    }

    EncodeResult res;
    res.factor = cfg.subsample_factor();
    res.states.reserve(seq.size());
    for (ad::VarId s : seq)
        res.states.push_back(tape.add(tape.matvec(params.proj_w, s), params.proj_b));
    return res;
}

}  // namespace srnn
