#ifndef SRNN_GRADCHECK_H
#define SRNN_GRADCHECK_H

#include <string>

#include "srnn/model.h"

namespace srnn {

struct GradcheckResult {
    double max_rel_err = 0.0;
    std::string worst_tensor;
    int64_t params_checked = 0;
    bool pass = false;
};

// Builds a random model and utterance ("small": T'=5, V=2; "medium": T'=8,
// V=3 with one subsampling layer) and compares backward() against central
// finite differences (h = 1e-4) for every element of every parameter tensor.
GradcheckResult run_gradcheck(const std::string& size, uint64_t seed,
                              double tolerance = 1e-4);

// The end-to-end nll of one utterance in eval mode; shared by the gradient
// checker and the cold-start tests.
double pipeline_loss(const Model& m, const FrameSequence& x, const LabelSequence& y);

}  // namespace srnn

#endif
