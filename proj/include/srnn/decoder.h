#ifndef SRNN_DECODER_H
#define SRNN_DECODER_H

#include <optional>

#include "srnn/lattice.h"

namespace srnn {

enum class DecodeMode { kJoint, kMarginalHybrid };

struct DecodeResult {
    LabelSequence labels;
    std::optional<Segmentation> segmentation;
    double score = 0.0;  // log domain
    DecodeMode mode = DecodeMode::kJoint;
};

// Exact max-tropical DP over labels and segmentations (zeroth-order model).
// Ties prefer the shorter segment (larger predecessor k), then the smaller
// label index.
DecodeResult decode_joint(const ScoreLattice& lat);

// Sum over segmentations of the per-segment best label, with the label
// sequence recovered by backtracking along maximal summands. The labels are
// a heuristic readout, flagged by mode.
DecodeResult decode_marginal_hybrid(const ScoreLattice& lat);

}  // namespace srnn

#endif
