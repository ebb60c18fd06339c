#ifndef SRNN_SEGCRF_H
#define SRNN_SEGCRF_H

#include <span>
#include <vector>

#include "srnn/autodiff.h"
#include "srnn/encoder.h"
#include "srnn/lattice.h"

namespace srnn {

struct ClampConfig {
    int max_duration = 1;  // L, in the same time base as the lattice

    void validate() const {
        if (max_duration < 1) throw Error("clamp: max segment duration must be >= 1");
    }
};

// Parameters of the joint feature function: label embedding, segment-level
// recurrence, duration embedding, one tanh hidden layer g, and the final
// weight vector w. f(y, <k,t>) = w . (W2 tanh(Wu u_y + Wh h_seg + Wd dur + b1) + b2).
struct SegmentFeatureParams {
    ad::Tensor label_embed;  // V x E
    LstmParams seg;          // over encoder outputs within a segment; hidden dh
    ad::Tensor dur_embed;    // (L+1) x ddur, rows 1..L used
    ad::Tensor g_wu;         // E x dw (applied as matmul(label_embed, g_wu))
    ad::Tensor g_wh;         // dw x dh
    ad::Tensor g_wd;         // dw x ddur
    ad::Tensor g_b1;         // dw
    ad::Tensor g_w2;         // dw x dw
    ad::Tensor g_b2;         // dw
    ad::Tensor w;            // dw
    bool use_duration = true;
};

struct SegmentFeatureVars {
    ad::VarId label_embed;
    LstmVars seg;
    ad::VarId dur_embed, g_wu, g_wh, g_wd, g_b1, g_w2, g_b2, w;
    bool use_duration = true;
};

SegmentFeatureVars bind(ad::Tape& tape, const SegmentFeatureParams& p);

// Score lattice on the tape plus a plain-value copy for decoding and tests.
struct LatticeNodes {
    ScoreLattice values;
    std::vector<ad::VarId> pair_scores;  // per (k, t) pair: V-vector node

    ad::VarId node(int k, int t) const { return pair_scores[values.pair_index(k, t)]; }
};

// Fills every admissible (k, t, y). Segment embeddings for a fixed start k
// share one left-to-right recurrence pass, so recurrence steps are O(L*T').
LatticeNodes build_score_lattice(ad::Tape& tape, std::span<const ad::VarId> enc,
                                 const SegmentFeatureVars& params, int vocab_size,
                                 const ClampConfig& clamp);

// Final hidden state of the segment recurrence over enc[k..t-1] (plain
// values; convenience for tests and single-segment scoring).
ad::Tensor segment_embedding(std::span<const ad::Tensor> enc,
                             const SegmentFeatureParams& params, int k, int t);
double score_segment(std::span<const ad::Tensor> enc, const SegmentFeatureParams& params,
                     int y, int k, int t, int clamp_L);

// log Z(X): log-domain forward recursion over the lattice.
double log_partition(const ScoreLattice& lat);

struct ClampedSum {
    double log_z = 0.0;
    bool feasible = true;  // false => log_z is -inf (structural error sentinel)
};
// log Z(X, y): same recursion with labels observed.
ClampedSum log_clamped(const ScoreLattice& lat, const LabelSequence& y);

// Tape variants used for training; element order matches the numeric DPs.
ad::VarId log_partition_nodes(ad::Tape& tape, const LatticeNodes& lat);
ad::VarId log_clamped_nodes(ad::Tape& tape, const LatticeNodes& lat, const LabelSequence& y);

bool clamp_feasible(int T, int J, int L);

struct LossNodes {
    ad::VarId loss;       // scalar, >= 0
    ad::VarId log_z;
    ad::VarId log_z_clamped;
};
// Marginal negative log-likelihood log Z(X) - log Z(X, y) on the tape.
// Throws Error when y is structurally infeasible (J > T' or J*L < T').
LossNodes nll_loss(ad::Tape& tape, const LatticeNodes& lat, const LabelSequence& y);

}  // namespace srnn

#endif
