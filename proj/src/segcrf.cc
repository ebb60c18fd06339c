#include "srnn/segcrf.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace srnn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Same max-shifted accumulation as Tape::logsumexp so the numeric DPs and
// the tape DPs produce identical results.
double lse(const std::vector<double>& xs) {
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace

SegmentFeatureVars bind(ad::Tape& tape, const SegmentFeatureParams& p) {
    SegmentFeatureVars v;
    v.label_embed = tape.input(p.label_embed);
    v.seg = bind(tape, p.seg);
    v.dur_embed = tape.input(p.dur_embed);
    v.g_wu = tape.input(p.g_wu);
    v.g_wh = tape.input(p.g_wh);
    v.g_wd = tape.input(p.g_wd);
    v.g_b1 = tape.input(p.g_b1);
    v.g_w2 = tape.input(p.g_w2);
    v.g_b2 = tape.input(p.g_b2);
    v.w = tape.input(p.w);
    v.use_duration = p.use_duration;
    return v;
}

LatticeNodes build_score_lattice(ad::Tape& tape, std::span<const ad::VarId> enc,
                                 const SegmentFeatureVars& params, int vocab_size,
                                 const ClampConfig& clamp) {
    clamp.validate();
    const int T = static_cast<int>(enc.size());
    const int L = clamp.max_duration;
    const int V = vocab_size;
    if (T < 1) throw Error("build_score_lattice: empty encoder output");

    LatticeNodes out;
    out.values = ScoreLattice(T, L, V);
    out.pair_scores.assign(out.values.num_pairs(), -1);

    // Shared per-utterance pieces: label rows through the first g layer, and
    // the final layer folded into a single vector (w . (W2 a + b2) =
    // (W2^T w) . a + w . b2).
    ad::VarId uw = tape.matmul(params.label_embed, params.g_wu);  // V x dw
    ad::VarId vv = tape.matvec(tape.transpose(params.g_w2), params.w);
    ad::VarId c0 = tape.dot(params.w, params.g_b2);

    const int dh = tape.value(params.g_wh).cols();
    const int ddur = tape.value(params.g_wd).cols();

    for (int k = 0; k < T; ++k) {
        // One recurrence pass covers all segments starting at k.
        ad::VarId h = tape.input(ad::Tensor::zeros({dh}));
        ad::VarId c = tape.input(ad::Tensor::zeros({dh}));
        const int t_max = std::min(k + L, T);
        for (int t = k + 1; t <= t_max; ++t) {
            ad::VarId x = enc[t - 1];
            ad::VarId pre = tape.add(
                tape.add(tape.matvec(params.seg.wx, x), tape.matvec(params.seg.wh, h)),
                params.seg.b);
            ad::VarId gi = tape.sigmoid(tape.slice(pre, 0, dh));
            ad::VarId gf = tape.sigmoid(tape.slice(pre, dh, dh));
            ad::VarId gg = tape.tanh(tape.slice(pre, 2 * dh, dh));
            ad::VarId go = tape.sigmoid(tape.slice(pre, 3 * dh, dh));
            c = tape.add(tape.emul(gf, c), tape.emul(gi, gg));
            h = tape.emul(go, tape.tanh(c));

            ad::VarId s = tape.add(tape.matvec(params.g_wh, h), params.g_b1);
            if (params.use_duration) {
                int d = t - k;
                ad::VarId dur = tape.slice(params.dur_embed, d * ddur, ddur);
                s = tape.add(s, tape.matvec(params.g_wd, dur));
            }
            ad::VarId a = tape.tanh(tape.row_broadcast_add(uw, s));  // V x dw
            ad::VarId f = tape.broadcast_add(c0, tape.matvec(a, vv));  // V

            int pair = out.values.pair_index(k, t);
            out.pair_scores[pair] = f;
            const ad::Tensor& fv = tape.value(f);
            for (int y = 0; y < V; ++y) out.values.at(k, t, y) = fv[y];
        }
    }
    return out;
}

ad::Tensor segment_embedding(std::span<const ad::Tensor> enc,
                             const SegmentFeatureParams& params, int k, int t) {
    if (!(0 <= k && k < t && t <= static_cast<int>(enc.size())))
        throw Error("segment_embedding: invalid interval");
    ad::Tape tape;
    LstmVars seg = bind(tape, params.seg);
    std::vector<ad::VarId> inputs;
    for (int i = k; i < t; ++i) inputs.push_back(tape.input(enc[i]));
    auto states = lstm_forward(tape, seg, params.seg.hidden(), inputs);
    return tape.value(states.back());
}

double score_segment(std::span<const ad::Tensor> enc, const SegmentFeatureParams& params,
                     int y, int k, int t, int clamp_L) {
    if (!(0 <= k && k < t && t <= static_cast<int>(enc.size()) && t - k <= clamp_L))
        throw Error("score_segment: inadmissible segment");
    ad::Tape tape;
    SegmentFeatureVars vars = bind(tape, params);
    std::vector<ad::VarId> inputs;
    for (const auto& e : enc) inputs.push_back(tape.input(e));
    LatticeNodes lat = build_score_lattice(tape, inputs, vars, params.label_embed.rows(),
                                           ClampConfig{clamp_L});
    return lat.values.at(k, t, y);
}

double log_partition(const ScoreLattice& lat) {
    const int T = lat.T(), L = lat.L(), V = lat.V();
    std::vector<double> alpha(T + 1, 0.0);  // log domain; alpha[0] = log 1
    std::vector<double> terms;
    for (int t = 1; t <= T; ++t) {
        terms.clear();
        for (int k = lat.min_start(t); k < t; ++k)
            for (int y = 0; y < V; ++y) terms.push_back(alpha[k] + lat.at(k, t, y));
        alpha[t] = lse(terms);
    }
    (void)L;
    return alpha[T];
}

ClampedSum log_clamped(const ScoreLattice& lat, const LabelSequence& y) {
    const int T = lat.T(), J = y.size();
    for (int label : y.labels)
        if (label < 0 || label >= lat.V())
            throw Error("log_clamped: label index outside vocabulary");
    // beta[j][t] exists only when t frames can form exactly j segments.
    std::vector<std::vector<double>> beta(J + 1, std::vector<double>(T + 1, kNegInf));
    std::vector<std::vector<bool>> live(J + 1, std::vector<bool>(T + 1, false));
    beta[0][0] = 0.0;
    live[0][0] = true;
    std::vector<double> terms;
    for (int j = 1; j <= J; ++j) {
        for (int t = j; t <= T; ++t) {
            terms.clear();
            for (int k = lat.min_start(t); k < t; ++k)
                if (live[j - 1][k]) terms.push_back(beta[j - 1][k] + lat.at(k, t, y.labels[j - 1]));
            if (!terms.empty()) {
                beta[j][t] = lse(terms);
                live[j][t] = true;
            }
        }
    }
    if (!live[J][T]) return {kNegInf, false};
    return {beta[J][T], true};
}

bool clamp_feasible(int T, int J, int L) {
    return J >= 1 && J <= T && static_cast<int64_t>(J) * L >= T;
}

ad::VarId log_partition_nodes(ad::Tape& tape, const LatticeNodes& lat) {
    const int T = lat.values.T();
    std::vector<ad::VarId> alpha(T + 1);
    alpha[0] = tape.input(ad::Tensor::scalar(0.0));
    std::vector<ad::VarId> parts;
    for (int t = 1; t <= T; ++t) {
        parts.clear();
        for (int k = lat.values.min_start(t); k < t; ++k)
            parts.push_back(tape.broadcast_add(alpha[k], lat.node(k, t)));
        alpha[t] = tape.logsumexp(tape.concat(parts));
    }
    return alpha[T];
}

ad::VarId log_clamped_nodes(ad::Tape& tape, const LatticeNodes& lat, const LabelSequence& y) {
    const int T = lat.values.T(), J = y.size(), V = lat.values.V();
    for (int label : y.labels)
        if (label < 0 || label >= V) throw Error("log_clamped: label index outside vocabulary");
    if (!clamp_feasible(T, J, lat.values.L()))
        throw Error("log_clamped: label sequence structurally infeasible (J=" +
                    std::to_string(J) + ", T'=" + std::to_string(T) + ")");
    std::vector<std::vector<ad::VarId>> beta(J + 1, std::vector<ad::VarId>(T + 1, -1));
    beta[0][0] = tape.input(ad::Tensor::scalar(0.0));
    std::vector<ad::VarId> parts;
    for (int j = 1; j <= J; ++j) {
        for (int t = j; t <= T; ++t) {
            parts.clear();
            for (int k = lat.values.min_start(t); k < t; ++k) {
                if (beta[j - 1][k] < 0) continue;
                ad::VarId f = tape.slice(lat.node(k, t), y.labels[j - 1], 1);
                parts.push_back(tape.broadcast_add(beta[j - 1][k], f));
            }
            if (!parts.empty()) beta[j][t] = tape.logsumexp(tape.concat(parts));
        }
    }
    if (beta[J][T] < 0)
        throw Error("log_clamped: label sequence structurally infeasible under clamp");
    return beta[J][T];
}

LossNodes nll_loss(ad::Tape& tape, const LatticeNodes& lat, const LabelSequence& y) {
    LossNodes out;
    out.log_z = log_partition_nodes(tape, lat);
    out.log_z_clamped = log_clamped_nodes(tape, lat, y);
    out.loss = tape.sub(out.log_z, out.log_z_clamped);
    return out;
}

}  // namespace srnn
